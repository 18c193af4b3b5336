#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plaid/dataset.hpp"
#include "plaid/distributions.hpp"
#include "plaid/rng.hpp"

namespace plaid {

enum class KernelType { univariate, multivariate, count };

struct PamConfig {
    KernelType kernel = KernelType::univariate;
    NigParams nig{0.0, 0.1, 3.0, 1.0};  // univariate and count base measure
    NiwParams niw;                      // multivariate base measure
    double p_a = 0.5, p_b = 0.5;        // Beta prior on the keep probabilities
    double alpha0_shape = 3.0, alpha0_rate = 3.0;
    double gamma_shape = 3.0, gamma_rate = 3.0;
    double zeta = 0.5;                  // deterministic slice decay rate
    double mh_eps = 0.1;                // reflected-uniform proposal half-width
    int burn_in = 2000;
    int n_keep = 2000;
    int thin = 1;
    std::uint64_t seed = 1;
    std::vector<double> eta;      // count kernel group scales; empty = all 1
    std::vector<double> p_fixed;  // fixed per-group keep probs; empty = sampled
    bool fixed_concentrations = false;
    double alpha0_init = 1.0;
    double gamma_init = 1.0;
};

struct UnivariateAtom {
    double mean = 0.0;
    double var = 1.0;
};

struct MultivariateAtom {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// Active atom parameters; scalar is used by the univariate and count
// kernels, vec by the multivariate kernel.
struct AtomSet {
    KernelType kernel = KernelType::univariate;
    std::vector<UnivariateAtom> scalar;
    std::vector<MultivariateAtom> vec;

    int size() const {
        return static_cast<int>(kernel == KernelType::multivariate ? vec.size()
                                                                   : scalar.size());
    }
};

struct PamState {
    int K_active = 1;
    std::vector<double> beta_prime;             // shared stick fractions
    std::vector<std::vector<double>> pi_prime;  // J x K_active, exact zeros
    std::vector<double> p;                      // per-group keep probability
    double alpha0 = 1.0;
    double gamma_conc = 1.0;
    std::vector<std::vector<int>> z;       // 0-based labels per (group, obs)
    std::vector<std::vector<double>> u;    // slice variables per (group, obs)
    AtomSet atoms;
    std::vector<std::vector<double>> latent_y;        // count kernel only
    std::vector<std::vector<long long>> table_counts; // concentration auxiliaries
};

struct IterationRecord {
    std::vector<std::vector<int>> z;
    std::vector<std::vector<double>> weights;  // J x K_active, exact zeros
    AtomSet atoms;
    std::vector<double> p;
    double alpha0 = 1.0;
    double gamma_conc = 1.0;
    double log_joint = 0.0;
};

struct ChainTrace {
    KernelType kernel = KernelType::univariate;
    int n_groups = 0;
    int dim = 1;
    std::vector<std::string> group_ids;
    std::vector<IterationRecord> iterations;
};

// Slice sampler with deterministic slice thresholds xi_k = (1-zeta) zeta^{k-1}
// and stochastic truncation. Step methods are exposed individually so single
// full conditionals can be exercised; iterate() runs one full sweep in the
// sampler's order (u / shared sticks / group sticks / keep probs / [latent
// counts] / labels / atoms / concentrations).
//
// Group-indexed updates draw from per-group RNG streams, so a by-group
// parallel schedule would reproduce the sequential chain exactly.
class PamSampler {
public:
    // data must outlive the sampler.
    PamSampler(const GroupedDataset& data, const PamConfig& cfg);

    void step_slice_u();
    void step_beta_prime();
    void step_pi_prime();
    void step_p();
    void step_z();
    void step_atoms();
    void step_concentrations();
    void step_latent_counts();
    void iterate();

    double log_joint() const;
    IterationRecord snapshot() const;

    // Composed group weights pi_{jk} = pi'_{jk} prod_{l<k} (1 - pi'_{jl});
    // exactly zero wherever pi'_{jk} is zero.
    std::vector<double> pi_row(int j) const;

    // Slice threshold for 0-based stick index k.
    double xi(int k) const;

    PamState& state() { return state_; }
    const PamState& state() const { return state_; }
    const PamConfig& config() const { return cfg_; }
    const std::vector<double>& eta() const { return eta_; }

    // Fraction of shared-stick MH proposals accepted so far.
    double beta_prime_acceptance() const {
        return beta_prime_proposals_ == 0
                   ? 0.0
                   : static_cast<double>(beta_prime_accepts_) / beta_prime_proposals_;
    }

private:
    std::vector<double> beta_from_prime() const;
    std::vector<double> remainder_from_prime() const;
    std::vector<int> occupancy(int j) const;
    void grow_to(int k_new);
    void shrink_to(int k_new);
    void build_mvn_caches(std::vector<double>& logdet,
                          std::vector<Eigen::LLT<Eigen::MatrixXd>>& llt) const;
    double log_lik(int j, int i, int k,
                   const std::vector<double>& mvn_logdet,
                   const std::vector<Eigen::LLT<Eigen::MatrixXd>>& mvn_llt) const;
    double log_target_beta_prime(int k, double value, double rem_before) const;

    const GroupedDataset* data_;
    PamConfig cfg_;
    int J_;
    std::vector<double> eta_;
    RngHandle rng_;                       // global stream
    std::vector<RngHandle> group_rng_;    // one stream per group
    PamState state_;
    long long beta_prime_proposals_ = 0;
    long long beta_prime_accepts_ = 0;
};

// Runs burn_in + n_keep sweeps and records every thin-th post-burn-in state.
ChainTrace run_chain(const GroupedDataset& data, const PamConfig& cfg);

// Bin edges for the rounded-Gaussian count kernel: count 0 covers (-inf, 0),
// count x >= 1 covers [x-1, x).
double count_bin_lo(long long x);
double count_bin_hi(long long x);

}  // namespace plaid
