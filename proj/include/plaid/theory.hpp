#pragma once

#include <map>
#include <utility>
#include <vector>

#include "plaid/rng.hpp"

namespace plaid {

// A set partition of {0, ..., n-1} in canonical form: indices sorted within
// each block, blocks ordered by their smallest element.
struct Partition {
    std::vector<std::vector<int>> blocks;

    int n() const;
    int n_blocks() const { return static_cast<int>(blocks.size()); }
    std::vector<int> block_sizes() const;

    // Restores canonical form after arbitrary edits.
    void canonicalize();

    // Builds the partition induced by an arbitrary label vector; labels need
    // not be contiguous or start at zero.
    static Partition from_labels(const std::vector<int>& labels);

    // Canonical labels: block index (by order of first appearance) per item.
    std::vector<int> to_labels() const;

    bool operator==(const Partition& other) const { return blocks == other.blocks; }
    bool operator<(const Partition& other) const { return blocks < other.blocks; }
};

// All set partitions of {0, ..., n-1} in canonical form. Bell(n) grows fast;
// n is capped at 12 to keep the enumeration tractable.
std::vector<Partition> all_partitions(int n);

struct FsbpParams {
    double p = 0.5;
    double gamma = 1.0;
};

// Marginal prior mean of the k-th (1-based) group-level weight under the
// atom-skipping prior with keep probability drawn from Beta(a, b).
double expected_pam_weight(int k, double gamma, double a, double b);

// Mean of the k-th (1-based) weight given the shared stick fractions and a
// fixed keep probability: p * beta'_k * prod_{l<k} (1 - p * beta'_l).
double conditional_mean_weight(int k, const std::vector<double>& beta_prime,
                               double p);

// Mean and variance of a fractional-stick-broken random probability H(A),
// where h_a is the base-measure mass of the set A. The mean is h_a itself;
// the variance is h_a (1 - h_a) / v with v = (1 + gamma) / p + (1 - p) / p.
std::pair<double, double> fsbp_mean_and_variance(double h_a,
                                                 const FsbpParams& params);

// Probability that the i-th observation (1-based) opens a new cluster under
// the fractional stick-breaking prior. Evaluated in exact rational
// arithmetic: the alternating sum suffers catastrophic cancellation in
// floating point for moderate i.
double fsbp_new_cluster_prob(int i, const FsbpParams& params);

// Expected number of occupied clusters among n observations:
// 1 + sum_{i=2}^n fsbp_new_cluster_prob(i).
double fsbp_expected_clusters(int n, const FsbpParams& params);

// Dirichlet-process counterpart: sum_{i=1}^n gamma / (gamma + i - 1).
double dp_expected_clusters(int n, double gamma);

// Which algebraic form of the partition probability to evaluate.
//   block_decomposition - per-permutation product of occupied-stick factors
//     over geometric sums of skipped-stick factors; finite everywhere.
//   literal_ratio - the compact published ratio form, which divides by zero
//     at the final stick of every permutation; kept only for comparison.
enum class EppfForm { block_decomposition, literal_ratio };

// Exchangeable partition probability function of the fractional
// stick-breaking process. Sums over all orderings of the blocks onto sticks,
// so the number of blocks is capped at 10.
double fsbp_eppf(const Partition& partition, const FsbpParams& params,
                 EppfForm form = EppfForm::block_decomposition);

// Dirichlet-process EPPF: gamma^K Gamma(gamma) / Gamma(n + gamma) *
// prod_k Gamma(|c_k|).
double dp_eppf(const Partition& partition, double gamma);

// Monte Carlo estimate of the partition distribution of n draws from a
// fractional stick-breaking process, as a map from canonical partition to
// relative frequency. Stick weights are extended lazily per draw, so there
// is no truncation error.
std::map<Partition, double> eppf_mc_oracle(int n, const FsbpParams& params,
                                           long long n_sims, RngHandle& rng);

// Monte Carlo estimate of Pr(draw i opens a new cluster) under sequential
// sampling from one fractional stick-breaking draw; validates the
// closed-form new-cluster probability.
double new_cluster_mc_oracle(int i, const FsbpParams& params, long long n_sims,
                             RngHandle& rng);

// Monte Carlo moments of P(A) for a set with H(A) = h_a under the
// fractional stick-breaking prior, with standard errors of both estimates;
// validates the closed-form moments.
struct MomentOracleResult {
    double mean = 0.0;
    double var = 0.0;
    double se_mean = 0.0;
    double se_var = 0.0;
};

MomentOracleResult fsbp_moment_mc_oracle(double h_a, const FsbpParams& params,
                                         long long n_sims, RngHandle& rng);

}  // namespace plaid
