#include "plaid/rng.hpp"

#include <cmath>
#include <numbers>

namespace plaid {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

} // namespace

RngHandle::RngHandle(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id) {
    // Mix seed and stream through two splitmix rounds so nearby ids give
    // unrelated engine states.
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ splitmix64(stream_id * 0xD1B54A32D192ED03ull + 1));
    engine_.seed(s);
}

RngHandle RngHandle::split(std::uint64_t substream) const {
    return RngHandle(splitmix64(seed_ ^ splitmix64(stream_ + 0x632BE59BD9B4E019ull)),
                     substream);
}

std::uint64_t RngHandle::next_u64() { return engine_(); }

double RngHandle::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngHandle::uniform_open() {
    return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
}

double RngHandle::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double RngHandle::normal() {
    // Box-Muller without a cached spare: stateless across calls, so the
    // variate sequence is a pure function of the engine state.
    double u1 = uniform_open();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

double RngHandle::exponential() { return -std::log(uniform_open()); }

} // namespace plaid
