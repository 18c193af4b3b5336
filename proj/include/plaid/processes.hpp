#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "plaid/rng.hpp"

namespace plaid {

// Floor for Beta parameters; absorbs floating-point undershoot near full
// stick consumption and deep-tail underflow of top-level weights.
inline constexpr double kBetaParamFloor = 1e-12;

// Keeps a non-skipped weight strictly positive even when a stick product
// underflows, preserving "exact zero <=> skipped atom" bitwise.
double positive_weight(double w);

// sample_beta with both parameters floored at kBetaParamFloor.
double clamped_beta(double a, double b, RngHandle& rng);

// Cut points for an over-split initial labeling: midpoints of the k - 1
// widest gaps in a sorted value list, ascending. Cuts fall between modes or
// at sparse tails, never through the middle of a mode, so the surplus
// clusters they create merge quickly under Gibbs sweeps. Fewer edges come
// back when the list has fewer than k - 1 positive gaps.
std::vector<double> largest_gap_edges(const std::vector<double>& sorted_values,
                                      int k);

// Atom values drawn from the base measure; cluster identity is the index, so
// simulators only need a univariate draw function.
using BaseMeasure = std::function<double(RngHandle&)>;

BaseMeasure standard_normal_base();

struct TruncationConfig {
    int n_atoms = 1000;
    int n_groups = 1;
    int n_obs_per_group = 1000;
};

struct ProcessDraw {
    std::vector<double> atoms;                        // length K
    std::vector<std::vector<double>> group_weights;   // J x K, rows sum <= 1
    std::vector<std::vector<std::uint8_t>> skip_mask; // J x K, true iff weight == 0
};

struct ClusterStats {
    std::vector<int> per_group_counts;
    int total_count = 0;
    std::map<int, double> overall_relative_sizes;               // atom index -> share
    std::vector<std::map<int, double>> per_group_relative_sizes;
};

// Stick-breaking weights with fractions Beta(1, gamma), truncated at K.
std::vector<double> sample_gem(double gamma, int K, RngHandle& rng);

ProcessDraw simulate_hdp(double alpha0, double gamma, const TruncationConfig& cfg,
                         const BaseMeasure& H, RngHandle& rng);

ProcessDraw simulate_cam(double alpha0, double gamma, const TruncationConfig& cfg,
                         const BaseMeasure& H, RngHandle& rng);

// Single-group draw conditioned on top-level weights beta: each stick fraction
// is exactly 0 with probability 1-p, else Beta(alpha0*beta_k, alpha0*(1-sum)).
ProcessDraw simulate_asp(double p, double alpha0, const std::vector<double>& beta,
                         const std::vector<double>& atoms, RngHandle& rng);

// Group skip probabilities: every group fixed to p_fixed[j] when nonempty,
// otherwise p_j ~ Beta(a, b) independently.
struct PamPriorSpec {
    std::vector<double> p_fixed;
    double a = 0.5;
    double b = 0.5;
};

ProcessDraw simulate_pam(const PamPriorSpec& p_spec, double alpha0, double gamma,
                         const TruncationConfig& cfg, const BaseMeasure& H,
                         RngHandle& rng);

// pi_k = p pi'_k prod_{l<k}(1 - p pi'_l), pi'_k ~ Beta(1, gamma); J=1.
ProcessDraw simulate_fsbp(double p, double gamma, int K, const BaseMeasure& H,
                          RngHandle& rng);

// Labels sampled per group from its weight row; residual-mass hits are
// redrawn (probability < 1e-6 at the default truncation).
ClusterStats cluster_stats(const ProcessDraw& draw, int n_obs, RngHandle& rng);

// MC estimate of Pr(theta_1 = theta_2) for one observation from each of the
// first two groups, cycling over the supplied draws.
double cross_group_coincidence(const std::vector<ProcessDraw>& draws, int n_pairs,
                               RngHandle& rng);

} // namespace plaid
