#pragma once

#include <cstdint>
#include <vector>

#include "plaid/dataset.hpp"
#include "plaid/distributions.hpp"
#include "plaid/pam_sampler.hpp"
#include "plaid/rng.hpp"

namespace plaid {

struct FsbpConfig {
    NigParams nig{0.0, 0.1, 3.0, 1.0};
    double p_a = 0.5, p_b = 0.5;  // Beta prior on the stick fraction p
    double gamma_shape = 3.0, gamma_rate = 3.0;
    double zeta = 0.5;
    double mh_eps = 0.1;
    int burn_in = 2000;
    int n_keep = 2000;
    int thin = 1;
    std::uint64_t seed = 1;
    double p_fixed = 0.0;  // > 0 fixes p at that value (1 = Dirichlet process)
    bool fixed_gamma = false;
    double gamma_init = 1.0;
    double p_init = 0.5;
};

struct FsbpChainState {
    int K_active = 1;
    std::vector<double> pi_prime;  // strictly inside (0,1); no exact zeros
    double p = 0.5;
    double gamma_conc = 1.0;
    std::vector<int> z;
    std::vector<double> u;
    AtomSet atoms;
};

// Slice sampler for a single-group fractional stick-breaking mixture of
// univariate Gaussians. Skipping is fractional here: every stick keeps the
// share p of what a plain stick-breaking draw would take, so composed
// weights are p * pi'_k * prod_{l<k} (1 - p * pi'_l) and never exactly zero.
class FsbpSampler {
public:
    // data must be univariate with exactly one group and outlive the sampler.
    FsbpSampler(const GroupedDataset& data, const FsbpConfig& cfg);

    void step_slice_u();
    void step_fsbp_pi_prime();
    void step_fsbp_p();
    void step_z();
    void step_merge_split();
    void step_atoms();
    void step_gamma();
    void iterate();

    // Exact conjugate stick redraw pi'_k ~ Beta(1 + m_k, gamma + sum_{s>k}
    // m_s); the Dirichlet-process conditional, valid only with p fixed at 1.
    void step_pi_prime_conjugate();

    double log_joint() const;
    IterationRecord snapshot() const;
    std::vector<double> pi_weights() const;  // composed weights, length K_active
    double xi(int k) const;                  // 0-based stick index

    FsbpChainState& state() { return state_; }
    const FsbpChainState& state() const { return state_; }
    const FsbpConfig& config() const { return cfg_; }

    double pi_prime_acceptance() const;
    double p_acceptance() const;
    double merge_split_acceptance() const;

private:
    void grow_to(int k_new);
    void shrink_to(int k_new);
    std::vector<int> occupancy() const;
    void attempt_merge();
    void attempt_split();

    const GroupedDataset* data_;
    FsbpConfig cfg_;
    RngHandle rng_;
    FsbpChainState state_;
    long long pi_accepts_ = 0, pi_proposals_ = 0;
    long long p_accepts_ = 0, p_proposals_ = 0;
    long long ms_accepts_ = 0, ms_proposals_ = 0;
    double ms_tau2_ = 1.0;  // squared length scale for merge pair selection
};

ChainTrace run_fsbp_chain(const GroupedDataset& data, const FsbpConfig& cfg);

// Reference Dirichlet-process slice sampler with conjugate stick redraws
// pi'_k ~ Beta(1 + m_k, gamma + sum_{s>k} m_s) in place of the MH move and p
// pinned at 1; everything else matches FsbpSampler. Baseline for reduction
// comparisons.
ChainTrace run_dp_slice_chain(const GroupedDataset& data, const FsbpConfig& cfg);

}  // namespace plaid
