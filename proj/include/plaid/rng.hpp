#pragma once

#include <cstdint>
#include <random>

namespace plaid {

// Deterministic stream family over a single base seed.  Each (seed, stream_id)
// pair owns an independent engine, so per-group updates can be reordered or
// parallelized without changing the variates any single site consumes.
// All variate algorithms in this library are hand-rolled on top of next_u64(),
// never std::*_distribution, so a (seed, stream_id) pair yields the same
// sequence on every platform and in every run.
class RngHandle {
public:
    explicit RngHandle(std::uint64_t seed, std::uint64_t stream_id = 0);

    // Child stream derived from this handle's identity; deterministic.
    RngHandle split(std::uint64_t substream) const;

    std::uint64_t next_u64();

    double uniform();                       // [0, 1), 53-bit resolution
    double uniform_open();                  // (0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    double normal();                        // N(0, 1)
    double exponential();                   // rate 1

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::mt19937_64 engine_;
};

} // namespace plaid
