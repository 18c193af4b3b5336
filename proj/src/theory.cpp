#include "plaid/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "plaid/distributions.hpp"

namespace plaid {

namespace {

using rat = boost::multiprecision::cpp_rational;
using bigint = boost::multiprecision::cpp_int;

rat rat_pow(const rat& base, long long e) {
    rat result = 1;
    rat b = base;
    long long n = e;
    while (n > 0) {
        if (n & 1) result *= b;
        b *= b;
        n >>= 1;
    }
    return result;
}

bigint binomial(long long n, long long k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    bigint r = 1;
    for (long long l = 1; l <= k; ++l) {
        r *= (n - k + l);
        r /= l;  // exact: r is C(n-k+l, l) after this step
    }
    return r;
}

bigint factorial(long long n) {
    bigint r = 1;
    for (long long l = 2; l <= n; ++l) r *= l;
    return r;
}

// Terminating Gauss series F(-m, b; c; z) with m a nonnegative integer,
// evaluated exactly.
rat hyp2f1_rat(long long m, const rat& b, const rat& c, const rat& z) {
    rat sum = 1;
    rat term = 1;
    for (long long l = 0; l < m; ++l) {
        term *= (rat(-m + l) * (b + l) * z) / ((c + l) * (l + 1));
        sum += term;
    }
    return sum;
}

// Probability that observation i opens a new cluster, exact in the
// parameters (every double is a binary rational, so this is the exact value
// of the alternating sum at the given inputs).
rat lemma1_rat(int i, const rat& p, const rat& g) {
    rat sum = 0;
    for (int k = 2; k <= i; ++k) {
        rat denom = 1;
        for (int l = 1; l <= k; ++l) denom *= (g + l);
        rat coef = rat(binomial(i - 1, k - 1)) * rat(factorial(k - 1)) / denom;
        rat f = hyp2f1_rat(k - 1, 1, g + 2, p);
        rat term = coef * (g + 1) * rat_pow(p, k - 1) / f;
        if (k % 2 == 0)
            sum += term;
        else
            sum -= term;
    }
    return 1 - sum;
}

void check_fsbp_params(const FsbpParams& params) {
    if (!(params.p > 0.0) || params.p > 1.0)
        throw std::invalid_argument("fsbp: p must lie in (0, 1]");
    if (!(params.gamma > 0.0))
        throw std::invalid_argument("fsbp: gamma must be positive");
}

}  // namespace

int Partition::n() const {
    int total = 0;
    for (const auto& block : blocks) total += static_cast<int>(block.size());
    return total;
}

std::vector<int> Partition::block_sizes() const {
    std::vector<int> sizes;
    sizes.reserve(blocks.size());
    for (const auto& block : blocks) sizes.push_back(static_cast<int>(block.size()));
    return sizes;
}

void Partition::canonicalize() {
    for (auto& block : blocks) std::sort(block.begin(), block.end());
    blocks.erase(std::remove_if(blocks.begin(), blocks.end(),
                                [](const auto& b) { return b.empty(); }),
                 blocks.end());
    std::sort(blocks.begin(), blocks.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
}

Partition Partition::from_labels(const std::vector<int>& labels) {
    Partition result;
    std::map<int, int> index_of;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
        auto [it, inserted] =
            index_of.try_emplace(labels[i], static_cast<int>(result.blocks.size()));
        if (inserted) result.blocks.emplace_back();
        result.blocks[it->second].push_back(i);
    }
    result.canonicalize();
    return result;
}

std::vector<int> Partition::to_labels() const {
    std::vector<int> labels(n(), -1);
    for (int b = 0; b < n_blocks(); ++b)
        for (int i : blocks[b]) {
            if (i < 0 || i >= static_cast<int>(labels.size()) || labels[i] != -1)
                throw std::invalid_argument(
                    "Partition: blocks must partition {0, ..., n-1}");
            labels[i] = b;
        }
    return labels;
}

std::vector<Partition> all_partitions(int n) {
    if (n < 1 || n > 12)
        throw std::invalid_argument("all_partitions: n must lie in [1, 12]");
    std::vector<Partition> result;
    Partition current;
    auto recurse = [&](auto&& self, int i) -> void {
        if (i == n) {
            result.push_back(current);
            return;
        }
        for (std::size_t b = 0; b < current.blocks.size(); ++b) {
            current.blocks[b].push_back(i);
            self(self, i + 1);
            current.blocks[b].pop_back();
        }
        current.blocks.push_back({i});
        self(self, i + 1);
        current.blocks.pop_back();
    };
    recurse(recurse, 0);
    return result;
}

double expected_pam_weight(int k, double gamma, double a, double b) {
    if (k < 1) throw std::invalid_argument("expected_pam_weight: k must be >= 1");
    if (!(gamma > 0.0))
        throw std::invalid_argument("expected_pam_weight: gamma must be positive");
    if (!(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("expected_pam_weight: a, b must be positive");
    const double p_bar = a / (a + b);
    const double gamma_prime = (1.0 + gamma - p_bar) / p_bar;
    return (1.0 / (1.0 + gamma_prime)) *
           std::pow(gamma_prime / (1.0 + gamma_prime), k - 1);
}

double conditional_mean_weight(int k, const std::vector<double>& beta_prime,
                               double p) {
    if (k < 1 || k > static_cast<int>(beta_prime.size()))
        throw std::invalid_argument(
            "conditional_mean_weight: k must lie in [1, beta_prime.size()]");
    if (!(p > 0.0) || p > 1.0)
        throw std::invalid_argument("conditional_mean_weight: p must lie in (0, 1]");
    for (double bp : beta_prime)
        if (!(bp > 0.0) || !(bp < 1.0))
            throw std::invalid_argument(
                "conditional_mean_weight: stick fractions must lie in (0, 1)");
    double result = p * beta_prime[k - 1];
    for (int l = 0; l < k - 1; ++l) result *= 1.0 - p * beta_prime[l];
    return result;
}

std::pair<double, double> fsbp_mean_and_variance(double h_a,
                                                 const FsbpParams& params) {
    check_fsbp_params(params);
    if (h_a < 0.0 || h_a > 1.0)
        throw std::invalid_argument("fsbp_mean_and_variance: h_a must lie in [0, 1]");
    const double v =
        (1.0 + params.gamma) / params.p + (1.0 - params.p) / params.p;
    return {h_a, h_a * (1.0 - h_a) / v};
}

double fsbp_new_cluster_prob(int i, const FsbpParams& params) {
    check_fsbp_params(params);
    if (i < 1) throw std::invalid_argument("fsbp_new_cluster_prob: i must be >= 1");
    if (i == 1) return 1.0;
    return static_cast<double>(lemma1_rat(i, rat(params.p), rat(params.gamma)));
}

double fsbp_expected_clusters(int n, const FsbpParams& params) {
    check_fsbp_params(params);
    if (n < 1) throw std::invalid_argument("fsbp_expected_clusters: n must be >= 1");
    if (n > 500)
        throw std::length_error(
            "fsbp_expected_clusters: n > 500 exceeds the exact-arithmetic budget");
    const rat p(params.p), g(params.gamma);
    double total = 1.0;
    for (int i = 2; i <= n; ++i)
        total += static_cast<double>(lemma1_rat(i, p, g));
    return total;
}

double dp_expected_clusters(int n, double gamma) {
    if (n < 1) throw std::invalid_argument("dp_expected_clusters: n must be >= 1");
    if (!(gamma > 0.0))
        throw std::invalid_argument("dp_expected_clusters: gamma must be positive");
    double total = 0.0;
    for (int i = 1; i <= n; ++i) total += gamma / (gamma + i - 1);
    return total;
}

double fsbp_eppf(const Partition& partition, const FsbpParams& params,
                 EppfForm form) {
    check_fsbp_params(params);
    std::vector<int> sizes = partition.block_sizes();
    const int K = static_cast<int>(sizes.size());
    if (K == 0) throw std::invalid_argument("fsbp_eppf: partition is empty");
    for (int s : sizes)
        if (s < 1) throw std::invalid_argument("fsbp_eppf: empty block");
    if (K > 10)
        throw std::length_error(
            "fsbp_eppf: more than 10 blocks exceeds the permutation-sum budget");
    partition.to_labels();  // validates the index structure

    const rat p(params.p), g(params.gamma);

    // Per-block prefactor: p^{|c|} |c|! / prod_{l=1}^{|c|} (gamma + l); the
    // gamma-function ratio collapses to the falling product because |c| is an
    // integer.
    rat prefactor = 1;
    for (int s : sizes) {
        rat denom = 1;
        for (int l = 1; l <= s; ++l) denom *= (g + l);
        prefactor *= rat_pow(p, s) * rat(factorial(s)) / denom;
    }

    // A block assigned to a stick preceded by d >= 0 skipped sticks
    // contributes occ * skip^d; summing the geometric series over d gives
    // occ / (1 - skip). occ depends on the block size and the total size of
    // the blocks placed after it; skip depends on the total size including
    // the block itself.
    std::map<long long, rat> skip_cache;                        // key: tail size
    std::map<std::pair<long long, long long>, rat> occ_cache;   // (tail_after, size)
    auto skip_factor = [&](long long tail) -> const rat& {
        auto it = skip_cache.find(tail);
        if (it == skip_cache.end())
            it = skip_cache.emplace(tail, hyp2f1_rat(tail, 1, g + 1, p)).first;
        return it->second;
    };
    auto occ_factor = [&](long long tail_after, long long size) -> const rat& {
        const auto key = std::make_pair(tail_after, size);
        auto it = occ_cache.find(key);
        if (it == occ_cache.end())
            it = occ_cache
                     .emplace(key, hyp2f1_rat(tail_after, rat(size + 1),
                                              g + size + 1, p))
                     .first;
        return it->second;
    };

    std::vector<int> order(K);
    for (int k = 0; k < K; ++k) order[k] = k;
    std::sort(order.begin(), order.end());

    if (form == EppfForm::literal_ratio) {
        // The compact published ratio multiplies F / (1 - F) with the same
        // occupied-stick factor in both places; the final stick of every
        // ordering has F = 1, so the value is a division by zero. Evaluated
        // in floating point for demonstration, not for use.
        double total = 0.0;
        do {
            double prod = 1.0;
            long long tail_after = 0;
            for (int k = K - 1; k >= 0; --k) {
                const double f = static_cast<double>(
                    occ_factor(tail_after, sizes[order[k]]));
                prod *= f / (1.0 - f);
                tail_after += sizes[order[k]];
            }
            total += prod;
        } while (std::next_permutation(order.begin(), order.end()));
        return static_cast<double>(prefactor) * total;
    }

    rat total = 0;
    do {
        rat prod = 1;
        long long tail_after = 0;
        for (int k = K - 1; k >= 0; --k) {
            const long long size = sizes[order[k]];
            prod *= occ_factor(tail_after, size) /
                    (1 - skip_factor(tail_after + size));
            tail_after += size;
        }
        total += prod;
    } while (std::next_permutation(order.begin(), order.end()));
    return static_cast<double>(prefactor * total);
}

double dp_eppf(const Partition& partition, double gamma) {
    if (!(gamma > 0.0))
        throw std::invalid_argument("dp_eppf: gamma must be positive");
    std::vector<int> sizes = partition.block_sizes();
    if (sizes.empty()) throw std::invalid_argument("dp_eppf: partition is empty");
    partition.to_labels();
    const int n = partition.n();
    double log_value = sizes.size() * std::log(gamma) + std::lgamma(gamma) -
                       std::lgamma(n + gamma);
    for (int s : sizes) log_value += std::lgamma(static_cast<double>(s));
    return std::exp(log_value);
}

std::map<Partition, double> eppf_mc_oracle(int n, const FsbpParams& params,
                                           long long n_sims, RngHandle& rng) {
    check_fsbp_params(params);
    if (n < 1) throw std::invalid_argument("eppf_mc_oracle: n must be >= 1");
    if (n_sims < 1)
        throw std::invalid_argument("eppf_mc_oracle: n_sims must be >= 1");
    std::map<Partition, long long> counts;
    std::vector<double> weights;
    std::vector<int> labels(n);
    for (long long sim = 0; sim < n_sims; ++sim) {
        weights.clear();
        double remaining = 1.0;  // mass beyond the sticks drawn so far
        double cum = 0.0;
        for (int i = 0; i < n; ++i) {
            const double u = rng.uniform();
            while (cum <= u) {
                if (weights.size() > 100000)
                    throw std::runtime_error(
                        "eppf_mc_oracle: stick extension failed to cover u");
                const double frac =
                    params.p * sample_beta(1.0, params.gamma, rng);
                const double w = remaining * frac;
                weights.push_back(w);
                remaining -= w;
                cum += w;
            }
            double acc = 0.0;
            int k = 0;
            for (; k < static_cast<int>(weights.size()); ++k) {
                acc += weights[k];
                if (u < acc) break;
            }
            labels[i] = std::min(k, static_cast<int>(weights.size()) - 1);
        }
        counts[Partition::from_labels(labels)] += 1;
    }
    std::map<Partition, double> freq;
    for (const auto& [part, count] : counts)
        freq[part] = static_cast<double>(count) / static_cast<double>(n_sims);
    return freq;
}

double new_cluster_mc_oracle(int i, const FsbpParams& params, long long n_sims,
                             RngHandle& rng) {
    check_fsbp_params(params);
    if (i < 1) throw std::invalid_argument("new_cluster_mc_oracle: i must be >= 1");
    if (n_sims < 1)
        throw std::invalid_argument("new_cluster_mc_oracle: n_sims must be >= 1");
    long long hits = 0;
    std::vector<double> weights;
    std::vector<char> seen;
    for (long long sim = 0; sim < n_sims; ++sim) {
        weights.clear();
        seen.clear();
        double remaining = 1.0;
        double cum = 0.0;
        int last_label = -1;
        for (int draw = 0; draw < i; ++draw) {
            const double u = rng.uniform();
            while (cum <= u) {
                if (weights.size() > 100000)
                    throw std::runtime_error(
                        "new_cluster_mc_oracle: stick extension failed to cover u");
                const double frac =
                    params.p * sample_beta(1.0, params.gamma, rng);
                const double w = remaining * frac;
                weights.push_back(w);
                seen.push_back(0);
                remaining -= w;
                cum += w;
            }
            double acc = 0.0;
            int k = 0;
            for (; k < static_cast<int>(weights.size()); ++k) {
                acc += weights[k];
                if (u < acc) break;
            }
            last_label = std::min(k, static_cast<int>(weights.size()) - 1);
            if (draw + 1 < i) seen[last_label] = 1;
        }
        if (!seen[last_label]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n_sims);
}

MomentOracleResult fsbp_moment_mc_oracle(double h_a, const FsbpParams& params,
                                         long long n_sims, RngHandle& rng) {
    check_fsbp_params(params);
    if (h_a < 0.0 || h_a > 1.0)
        throw std::invalid_argument("fsbp_moment_mc_oracle: H(A) must be in [0,1]");
    if (n_sims < 2)
        throw std::invalid_argument("fsbp_moment_mc_oracle: n_sims must be >= 2");
    std::vector<double> masses(static_cast<std::size_t>(n_sims));
    for (auto& mass : masses) {
        double remaining = 1.0;
        mass = 0.0;
        int k = 0;
        while (remaining > 1e-12) {
            if (++k > 100000) break;
            const double w = remaining * params.p * sample_beta(1.0, params.gamma, rng);
            if (rng.uniform() < h_a) mass += w;
            remaining -= w;
        }
        // unbroken tail assigned by the base measure in expectation
        mass += remaining * h_a;
    }
    const double n = static_cast<double>(n_sims);
    MomentOracleResult out;
    for (double m : masses) out.mean += m;
    out.mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double m : masses) {
        const double d = m - out.mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    out.var = m2 * n / (n - 1.0);
    out.se_mean = std::sqrt(m2 / (n - 1.0));
    // large-sample variance of the sample variance
    const double var_of_var = (m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n;
    out.se_var = std::sqrt(std::max(0.0, var_of_var));
    return out;
}

}  // namespace plaid
