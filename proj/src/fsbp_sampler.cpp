#include "plaid/fsbp_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "plaid/processes.hpp"
#include "plaid/special.hpp"

namespace plaid {

std::FILE* g_ms_dump = nullptr;  // TEMP DEBUG: dump merge-split attempts

namespace {

double reflect_unit(double raw) {
    if (raw < 0.0) raw = -raw;
    if (raw > 1.0) raw = 2.0 - raw;
    return std::clamp(raw, std::numeric_limits<double>::min(),
                      1.0 - std::numeric_limits<double>::epsilon() / 2);
}

// Merge-split proposals attempted per sweep.  One-at-a-time allocation
// moves cannot cross the likelihood valley between two tight clusters
// fitted to halves of one mode; pairwise proposals let such pairs
// coalesce.  Attempts cost O(n) against the O(n K) allocation sweep, so
// a batch per sweep is cheap.
constexpr int kMergeSplitAttempts = 10;

// A split may target empty sticks up to this far past the deepest
// occupied one; a merge whose reverse split would need more reach is
// rejected.  The window must be derived from the allocations, never
// from the slice truncation (see step_merge_split).
constexpr int kMergeSplitDepth = 4;

double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

int pick_index(RngHandle& rng, int count) {
    return std::min(static_cast<int>(rng.uniform() * count), count - 1);
}

}  // namespace

double FsbpSampler::xi(int k) const {
    return (1.0 - cfg_.zeta) * std::pow(cfg_.zeta, k);
}

FsbpSampler::FsbpSampler(const GroupedDataset& data, const FsbpConfig& cfg)
    : data_(&data), cfg_(cfg), rng_(cfg.seed, 0) {
    data.validate();
    if (data.kind != DataKind::univariate)
        throw std::invalid_argument("FsbpSampler: univariate data required");
    if (data.n_groups() != 1)
        throw std::invalid_argument("FsbpSampler: exactly one group required");
    if (!(cfg.zeta > 0.0 && cfg.zeta < 1.0))
        throw std::invalid_argument("FsbpSampler: zeta must lie in (0, 1)");
    if (!(cfg.mh_eps > 0.0 && cfg.mh_eps < 1.0))
        throw std::invalid_argument("FsbpSampler: mh_eps must lie in (0, 1)");
    if (cfg.burn_in < 0 || cfg.n_keep < 0 || cfg.thin < 1)
        throw std::invalid_argument("FsbpSampler: bad iteration counts");
    if (!(cfg.p_a > 0.0 && cfg.p_b > 0.0))
        throw std::invalid_argument("FsbpSampler: p prior must be positive");
    if (!(cfg.gamma_shape > 0.0 && cfg.gamma_rate > 0.0))
        throw std::invalid_argument("FsbpSampler: gamma prior must be positive");
    if (!(cfg.gamma_init > 0.0))
        throw std::invalid_argument("FsbpSampler: gamma_init must be positive");
    if (cfg.p_fixed != 0.0 && (!(cfg.p_fixed > 0.0) || cfg.p_fixed > 1.0))
        throw std::invalid_argument("FsbpSampler: fixed p must lie in (0, 1]");
    if (!(cfg.p_init > 0.0 && cfg.p_init < 1.0))
        throw std::invalid_argument("FsbpSampler: p_init must lie in (0, 1)");
    if (!(cfg.nig.k0 > 0.0 && cfg.nig.a_sig > 0.0 && cfg.nig.b_sig > 0.0))
        throw std::invalid_argument("FsbpSampler: invalid NIG hyperparameters");

    state_.gamma_conc = cfg.gamma_init;
    state_.p = cfg.p_fixed > 0.0 ? cfg.p_fixed : cfg.p_init;
    state_.atoms.kernel = KernelType::univariate;
    state_.K_active = 0;

    const int n = data.n_obs(0);
    if (n > 1) {
        // Length scale for merge pair selection: a quarter of the data
        // spread, so same-mode cluster pairs dominate the choice while
        // distinct modes stay reachable.  A constant of the data, never
        // of the chain state.
        double mean = 0.0, ssq = 0.0;
        for (double y : data.values[0]) mean += y;
        mean /= n;
        for (double y : data.values[0]) ssq += (y - mean) * (y - mean);
        ms_tau2_ = std::max(ssq / (n - 1), 1e-12) / 16.0;
    }
    const int k_init = n > 0 ? std::min(12, n) : 1;
    grow_to(k_init);
    state_.z.resize(n);
    state_.u.resize(n);
    if (n > 0) {
        // Start over-split and location-coherent: cut at the largest value
        // gaps, so early sweeps only merge surplus clusters (fast under
        // Gibbs) instead of nucleating splits (which stalls).
        std::vector<double> sorted(data.values[0]);
        std::sort(sorted.begin(), sorted.end());
        const std::vector<double> edges = largest_gap_edges(sorted, k_init);
        for (int i = 0; i < n; ++i) {
            const int k = static_cast<int>(
                std::upper_bound(edges.begin(), edges.end(), data.values[0][i]) -
                edges.begin());
            state_.z[i] = k;
            state_.u[i] = xi(k) * rng_.uniform_open();
        }
        // Atoms from grow_to came from the base measure; redraw from their
        // conditionals so the first sweep sees the initial locations.
        step_atoms();
    }
}

void FsbpSampler::grow_to(int k_new) {
    const int k_old = static_cast<int>(state_.pi_prime.size());
    if (k_new <= k_old) {
        state_.K_active = std::max(state_.K_active, k_new);
        return;
    }
    for (int k = k_old; k < k_new; ++k) {
        state_.pi_prime.push_back(clamped_beta(1.0, state_.gamma_conc, rng_));
        const NigDraw d = sample_nig_posterior(cfg_.nig, {}, rng_);
        state_.atoms.scalar.push_back({d.mean, d.var});
    }
    state_.K_active = k_new;
}

void FsbpSampler::shrink_to(int k_new) {
    if (k_new >= static_cast<int>(state_.pi_prime.size())) {
        state_.K_active = k_new;
        return;
    }
    state_.pi_prime.resize(k_new);
    state_.atoms.scalar.resize(k_new);
    state_.K_active = k_new;
}

std::vector<int> FsbpSampler::occupancy() const {
    std::vector<int> m(state_.K_active, 0);
    for (int k : state_.z) ++m[k];
    return m;
}

std::vector<double> FsbpSampler::pi_weights() const {
    std::vector<double> pi(state_.pi_prime.size());
    double stick = 1.0;
    for (std::size_t k = 0; k < pi.size(); ++k) {
        const double frac = state_.p * state_.pi_prime[k];
        pi[k] = positive_weight(frac * stick);
        stick *= 1.0 - frac;
    }
    return pi;
}

void FsbpSampler::step_slice_u() {
    const int n = static_cast<int>(state_.z.size());
    if (n == 0) {
        shrink_to(1);
        return;
    }
    double min_u = std::numeric_limits<double>::infinity();
    int max_z = -1;
    for (int i = 0; i < n; ++i) {
        const int k = state_.z[i];
        state_.u[i] = xi(k) * rng_.uniform_open();
        min_u = std::min(min_u, state_.u[i]);
        max_z = std::max(max_z, k);
    }
    int k_new = static_cast<int>(std::floor(std::log(min_u / (1.0 - cfg_.zeta)) /
                                            std::log(cfg_.zeta))) + 1;
    k_new = std::max(k_new, 1);
    while (xi(k_new) > min_u) ++k_new;
    while (k_new > 1 && xi(k_new - 1) <= min_u) --k_new;
    k_new = std::max(k_new, max_z + 1);
    if (k_new > state_.K_active)
        grow_to(k_new);
    else if (k_new < state_.K_active)
        shrink_to(k_new);
}

void FsbpSampler::step_fsbp_pi_prime() {
    const int K = state_.K_active;
    const std::vector<int> m = occupancy();
    std::vector<long long> suffix(K + 1, 0);
    for (int k = K - 1; k >= 0; --k) suffix[k] = suffix[k + 1] + m[k];
    const double g = state_.gamma_conc;
    const double p = state_.p;
    for (int k = 0; k < K; ++k) {
        const auto later = static_cast<double>(suffix[k + 1]);
        auto log_target = [&](double v) {
            return m[k] * std::log(v) + later * std::log1p(-p * v) +
                   (g - 1.0) * std::log1p(-v);
        };
        const double cur = state_.pi_prime[k];
        const double prop =
            reflect_unit(cur + cfg_.mh_eps * (2.0 * rng_.uniform() - 1.0));
        ++pi_proposals_;
        if (std::log(rng_.uniform_open()) < log_target(prop) - log_target(cur)) {
            state_.pi_prime[k] = prop;
            ++pi_accepts_;
        }
    }
}

void FsbpSampler::step_fsbp_p() {
    if (cfg_.p_fixed > 0.0) return;
    const int K = state_.K_active;
    const std::vector<int> m = occupancy();
    std::vector<long long> suffix(K + 1, 0);
    for (int k = K - 1; k >= 0; --k) suffix[k] = suffix[k + 1] + m[k];
    const auto n_total = static_cast<double>(suffix[0]);
    auto log_target = [&](double v) {
        double lt = (n_total + cfg_.p_a - 1.0) * std::log(v) +
                    (cfg_.p_b - 1.0) * std::log1p(-v);
        for (int k = 0; k < K; ++k)
            if (suffix[k + 1] > 0)
                lt += static_cast<double>(suffix[k + 1]) *
                      std::log1p(-v * state_.pi_prime[k]);
        return lt;
    };
    const double cur = state_.p;
    const double prop =
        reflect_unit(cur + cfg_.mh_eps * (2.0 * rng_.uniform() - 1.0));
    ++p_proposals_;
    if (std::log(rng_.uniform_open()) < log_target(prop) - log_target(cur)) {
        state_.p = prop;
        ++p_accepts_;
    }
}

void FsbpSampler::step_pi_prime_conjugate() {
    if (state_.p != 1.0)
        throw std::logic_error(
            "step_pi_prime_conjugate: requires p fixed at 1");
    const int K = state_.K_active;
    const std::vector<int> m = occupancy();
    std::vector<long long> suffix(K + 1, 0);
    for (int k = K - 1; k >= 0; --k) suffix[k] = suffix[k + 1] + m[k];
    for (int k = 0; k < K; ++k)
        state_.pi_prime[k] = sample_beta(
            1.0 + m[k],
            state_.gamma_conc + static_cast<double>(suffix[k + 1]), rng_);
}

void FsbpSampler::step_z() {
    const std::vector<double> pi = pi_weights();
    const int n = static_cast<int>(state_.z.size());
    std::vector<double> lw, w;
    for (int i = 0; i < n; ++i) {
        const double ui = state_.u[i];
        lw.clear();
        double max_lw = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < state_.K_active && xi(k) > ui; ++k) {
            const auto& atom = state_.atoms.scalar[k];
            const double v = std::log(pi[k]) - std::log(xi(k)) +
                             log_normal_pdf(data_->values[0][i], atom.mean,
                                            atom.var);
            lw.push_back(v);
            max_lw = std::max(max_lw, v);
        }
        if (lw.empty())
            throw std::runtime_error("step_z: empty slice support");
        w.resize(lw.size());
        for (std::size_t k = 0; k < lw.size(); ++k)
            w[k] = std::exp(lw[k] - max_lw);
        state_.z[i] = sample_categorical(w, rng_);
    }
}

// Metropolis-Hastings merge-split on the allocations.  One-at-a-time
// moves cannot cross the likelihood valley between two tight clusters
// fitted to halves of one mode, so pairs of sticks are rearranged
// jointly.  A merge folds a deeper occupied stick s into a shallower
// occupied d; a split re-allocates the members of d between d and an
// empty deeper stick.  Both directions price the allocation by the same
// sequential rule - walk the pooled members in data order and score each
// side by its posterior predictive given the members already placed
// there - so the reverse-move probability is an explicit product.
//
// Validity hinges on five points.
//  - Atoms: the affected pair's atoms are integrated out (marginal
//    likelihoods), legitimate because nothing reads an atom between this
//    step and step_atoms, which redraws every atom from its full
//    conditional.
//  - Pair choice: a merge picks its pair with probability proportional
//    to a Gaussian kernel in the clusters' empirical-mean distance
//    (almost all far-pair merges die in the likelihood ratio, so the
//    attempts go where they can succeed).  The choice probability is
//    state-dependent, so it is priced in the ratio: evaluated at the
//    pre-move state for the forward density and at the post-split state
//    for a split's reverse merge.
//  - Slice variables: the proposal redraws the whole u vector under the
//    proposed allocations, so every 1/xi density cancels against the
//    matching stationary factor and the acceptance ratio is u-free.
//    The refresh also keeps u_i < xi(z_i) for the next sweep.
//  - Stick fractions: the pair's fractions are re-proposed from Betas
//    matched to the post-move occupancy, cancelling the stationary stick
//    factors exactly at p = 1; the leftover is part of the ratio.
//  - Truncation: every selection set is derived from the allocations
//    alone.  A split targets empty sticks within kMergeSplitDepth of the
//    deepest occupied one, instantiating them on demand (a fresh
//    Beta(1, gamma) draw is exactly such a stick's conditional), and a
//    merge whose reverse split could not reach s again is rejected
//    outright.  Deriving the windows from the slice truncation instead
//    would bias the chain: that truncation is a function of u, the move
//    changes u, and the reverse move would then be priced at a window
//    the chain never actually uses.
void FsbpSampler::step_merge_split() {
    if (state_.z.empty()) return;
    for (int attempt = 0; attempt < kMergeSplitAttempts; ++attempt) {
        if (rng_.uniform() < 0.5)
            attempt_merge();
        else
            attempt_split();
    }
}

void FsbpSampler::attempt_merge() {
    const int K = state_.K_active;
    const std::vector<int> m = occupancy();
    std::vector<int> occ;
    for (int k = 0; k < K; ++k)
        if (m[k] > 0) occ.push_back(k);
    const int no = static_cast<int>(occ.size());
    if (no < 2) return;
    const std::vector<double>& ys = data_->values[0];
    std::vector<double> csum(K, 0.0);
    for (int i = 0; i < static_cast<int>(state_.z.size()); ++i)
        csum[state_.z[i]] += ys[i];
    // Pick the pair by mean proximity; scores are shifted by their max so
    // the normalizer stays representable however far apart clusters sit.
    std::vector<double> score(static_cast<std::size_t>(no) * (no - 1) / 2);
    double smax = -std::numeric_limits<double>::infinity();
    for (int a = 0, idx = 0; a < no; ++a)
        for (int b = a + 1; b < no; ++b, ++idx) {
            const double diff =
                csum[occ[a]] / m[occ[a]] - csum[occ[b]] / m[occ[b]];
            score[idx] = -diff * diff / (2.0 * ms_tau2_);
            smax = std::max(smax, score[idx]);
        }
    double wsum = 0.0;
    for (double sc : score) wsum += std::exp(sc - smax);
    double r = rng_.uniform() * wsum;
    int pick = 0;
    for (; pick < static_cast<int>(score.size()) - 1; ++pick) {
        r -= std::exp(score[pick] - smax);
        if (r < 0.0) break;
    }
    const double log_q_pair = score[pick] - smax - std::log(wsum);
    int ia = 0;
    while (pick >= no - 1 - ia) {
        pick -= no - 1 - ia;
        ++ia;
    }
    const int d = occ[ia];
    const int s = occ[ia + 1 + pick];
    // The reverse split targets empties within kMergeSplitDepth of the
    // deepest stick still occupied after the merge; if it cannot reach
    // s, the move is unreversible and dies here.
    int max_z_post = d;
    for (int k : occ)
        if (k != s) max_z_post = std::max(max_z_post, k);
    const int window_post = max_z_post + kMergeSplitDepth;
    if (s > window_post) return;

    NigParams post_d = cfg_.nig;
    NigParams post_s = cfg_.nig;
    NigParams post_m = cfg_.nig;
    double log_split = 0.0;     // marginal likelihood of the current split
    double log_merged = 0.0;    // marginal likelihood of the pooled members
    double log_qr_alloc = 0.0;  // reverse split recreating the current split
    for (int i = 0; i < static_cast<int>(state_.z.size()); ++i) {
        const int zi = state_.z[i];
        if (zi != d && zi != s) continue;
        const double y = data_->values[0][i];
        const std::span<const double> one(&y, 1);
        const double pred_d = nig_log_predictive(post_d, y);
        const double pred_s = nig_log_predictive(post_s, y);
        const double denom = log_add(pred_d, pred_s);
        if (zi == s) {
            log_qr_alloc += pred_s - denom;
            log_split += pred_s;
            post_s = nig_posterior_params(post_s, one);
        } else {
            log_qr_alloc += pred_d - denom;
            log_split += pred_d;
            post_d = nig_posterior_params(post_d, one);
        }
        log_merged += nig_log_predictive(post_m, y);
        post_m = nig_posterior_params(post_m, one);
    }

    std::vector<long long> suffix(K + 1, 0);
    for (int k = K - 1; k >= 0; --k) suffix[k] = suffix[k + 1] + m[k];
    const double g = state_.gamma_conc;
    const double p = state_.p;
    const int n_s = m[s];
    const int n_tot = m[d] + m[s];
    const auto s_d = static_cast<double>(suffix[d + 1]);
    const auto s_s = static_cast<double>(suffix[s + 1]);
    // Stationary factor a stick contributes through its fraction v:
    // Beta(1, gamma) prior, own-count powers of p v, and deeper-count
    // powers of 1 - p v.
    auto stick_term = [&](double v, double count, double deeper) {
        return log_beta_pdf(v, 1.0, g) + count * std::log(p * v) +
               deeper * std::log1p(-p * v);
    };
    const double vd_old = state_.pi_prime[d];
    const double vs_old = state_.pi_prime[s];
    const double vd_new = sample_beta(1.0 + n_tot, g + s_d - n_s, rng_);
    const double vs_new = sample_beta(1.0, g + s_s, rng_);
    // Sticks strictly between d and s see their deeper-count drop by
    // n_s when the members land at d.
    double inter = 0.0;
    for (int k = d + 1; k < s; ++k)
        inter -= n_s * std::log1p(-p * state_.pi_prime[k]);
    // Empties the reverse split could target: s once vacated, the
    // instantiated empties inside its window, and the conceptual sticks
    // past the truncation (all empty) that the window may cover.
    int n_empty = std::max(0, window_post - (K - 1));
    for (int k = d + 1; k <= std::min(window_post, K - 1); ++k)
        if (m[k] == 0 || k == s) ++n_empty;
    ++ms_proposals_;
    const double log_alpha =
        log_merged - log_split + log_qr_alloc + inter +
        stick_term(vd_new, n_tot, s_d - n_s) - stick_term(vd_old, m[d], s_d) +
        stick_term(vs_new, 0.0, s_s) - stick_term(vs_old, n_s, s_s) +
        log_beta_pdf(vd_old, 1.0 + m[d], g + s_d) +
        log_beta_pdf(vs_old, 1.0 + n_s, g + s_s) -
        log_beta_pdf(vd_new, 1.0 + n_tot, g + s_d - n_s) -
        log_beta_pdf(vs_new, 1.0, g + s_s) -
        std::log(no - 1.0) - std::log(static_cast<double>(n_empty)) -
        log_q_pair;
    if (g_ms_dump) {
        std::fprintf(g_ms_dump, "M %d %d %d %.17g %.17g %.17g %.17g %.17g %.17g %.17g",
                     d, s, K, g, p, vd_old, vs_old, vd_new, vs_new, log_alpha);
        std::fprintf(g_ms_dump, " z");
        for (int zi : state_.z) std::fprintf(g_ms_dump, " %d", zi);
        std::fprintf(g_ms_dump, " v");
        for (int k = 0; k < K; ++k)
            std::fprintf(g_ms_dump, " %.17g", state_.pi_prime[k]);
        std::fprintf(g_ms_dump, "\n");
    }
    if (std::log(rng_.uniform_open()) < log_alpha) {
        for (int i = 0; i < static_cast<int>(state_.z.size()); ++i) {
            if (state_.z[i] == s) state_.z[i] = d;
            state_.u[i] = xi(state_.z[i]) * rng_.uniform_open();
        }
        state_.pi_prime[d] = vd_new;
        state_.pi_prime[s] = vs_new;
        ++ms_accepts_;
    }
}

void FsbpSampler::attempt_split() {
    int max_z = 0;
    for (int zi : state_.z) max_z = std::max(max_z, zi);
    const int window = max_z + kMergeSplitDepth;
    grow_to(window + 1);
    const int K = state_.K_active;
    const std::vector<int> m = occupancy();
    std::vector<int> occ;
    for (int k = 0; k < K; ++k)
        if (m[k] > 0) occ.push_back(k);
    const int no = static_cast<int>(occ.size());
    const int d = occ[pick_index(rng_, no)];
    // Nonempty by construction: the window reaches past max_z >= d.
    std::vector<int> empties;
    for (int k = d + 1; k <= window; ++k)
        if (m[k] == 0) empties.push_back(k);
    const int s = empties[pick_index(rng_, static_cast<int>(empties.size()))];

    const std::vector<double>& ys = data_->values[0];
    std::vector<double> csum(K, 0.0);
    for (int i = 0; i < static_cast<int>(state_.z.size()); ++i)
        csum[state_.z[i]] += ys[i];

    NigParams post_d = cfg_.nig;
    NigParams post_s = cfg_.nig;
    NigParams post_m = cfg_.nig;
    double log_split = 0.0;
    double log_merged = 0.0;
    double log_q_alloc = 0.0;
    double moved_sum = 0.0;
    std::vector<int> moved;
    int n_members = 0;
    for (int i = 0; i < static_cast<int>(state_.z.size()); ++i) {
        if (state_.z[i] != d) continue;
        ++n_members;
        const double y = ys[i];
        const std::span<const double> one(&y, 1);
        log_merged += nig_log_predictive(post_m, y);
        post_m = nig_posterior_params(post_m, one);
        const double pred_d = nig_log_predictive(post_d, y);
        const double pred_s = nig_log_predictive(post_s, y);
        const double denom = log_add(pred_d, pred_s);
        if (rng_.uniform() < std::exp(pred_s - denom)) {
            moved.push_back(i);
            moved_sum += y;
            log_q_alloc += pred_s - denom;
            log_split += pred_s;
            post_s = nig_posterior_params(post_s, one);
        } else {
            log_q_alloc += pred_d - denom;
            log_split += pred_d;
            post_d = nig_posterior_params(post_d, one);
        }
    }
    // A no-op allocation proposes the current state; moving every member
    // would leave d empty, so no merge could reverse it.  Both die here.
    if (moved.empty() || static_cast<int>(moved.size()) == n_members) return;

    // Reverse-merge pair choice, priced at the post-split state: the
    // post-move means of every occupied stick with s slotted in.
    const double d_mean_post =
        (csum[d] - moved_sum) / (n_members - static_cast<int>(moved.size()));
    const double s_mean_post = moved_sum / static_cast<int>(moved.size());
    std::vector<double> pmeans;
    pmeans.reserve(no + 1);
    int pos_d = -1, pos_s = -1;
    for (int k : occ) {
        if (pos_s < 0 && s < k) {
            pos_s = static_cast<int>(pmeans.size());
            pmeans.push_back(s_mean_post);
        }
        if (k == d) {
            pos_d = static_cast<int>(pmeans.size());
            pmeans.push_back(d_mean_post);
        } else {
            pmeans.push_back(csum[k] / m[k]);
        }
    }
    if (pos_s < 0) {
        pos_s = static_cast<int>(pmeans.size());
        pmeans.push_back(s_mean_post);
    }
    const int np = static_cast<int>(pmeans.size());
    double smax = -std::numeric_limits<double>::infinity();
    double score_ds = 0.0;
    std::vector<double> score(static_cast<std::size_t>(np) * (np - 1) / 2);
    for (int a = 0, idx = 0; a < np; ++a)
        for (int b = a + 1; b < np; ++b, ++idx) {
            const double diff = pmeans[a] - pmeans[b];
            score[idx] = -diff * diff / (2.0 * ms_tau2_);
            smax = std::max(smax, score[idx]);
            if ((a == pos_d && b == pos_s) || (a == pos_s && b == pos_d))
                score_ds = score[idx];
        }
    double wsum = 0.0;
    for (double sc : score) wsum += std::exp(sc - smax);
    const double log_q_pair_rev = score_ds - smax - std::log(wsum);

    std::vector<long long> suffix(K + 1, 0);
    for (int k = K - 1; k >= 0; --k) suffix[k] = suffix[k + 1] + m[k];
    const double g = state_.gamma_conc;
    const double p = state_.p;
    const int n_mv = static_cast<int>(moved.size());
    const int n_tot = m[d];
    const auto s_d = static_cast<double>(suffix[d + 1]);
    const auto s_s = static_cast<double>(suffix[s + 1]);
    auto stick_term = [&](double v, double count, double deeper) {
        return log_beta_pdf(v, 1.0, g) + count * std::log(p * v) +
               deeper * std::log1p(-p * v);
    };
    const double vd_old = state_.pi_prime[d];
    const double vs_old = state_.pi_prime[s];
    const double vd_new = sample_beta(1.0 + n_tot - n_mv, g + s_d + n_mv, rng_);
    const double vs_new = sample_beta(1.0 + n_mv, g + s_s, rng_);
    double inter = 0.0;
    for (int k = d + 1; k < s; ++k)
        inter += n_mv * std::log1p(-p * state_.pi_prime[k]);
    ++ms_proposals_;
    const double log_alpha =
        log_split - log_merged + inter +
        stick_term(vd_new, n_tot - n_mv, s_d + n_mv) -
        stick_term(vd_old, n_tot, s_d) +
        stick_term(vs_new, n_mv, s_s) - stick_term(vs_old, 0.0, s_s) +
        log_beta_pdf(vd_old, 1.0 + n_tot, g + s_d) +
        log_beta_pdf(vs_old, 1.0, g + s_s) -
        log_beta_pdf(vd_new, 1.0 + n_tot - n_mv, g + s_d + n_mv) -
        log_beta_pdf(vs_new, 1.0 + n_mv, g + s_s) +
        log_q_pair_rev + std::log(static_cast<double>(no)) +
        std::log(static_cast<double>(empties.size())) - log_q_alloc;
    if (g_ms_dump) {
        std::fprintf(g_ms_dump, "S %d %d %d %.17g %.17g %.17g %.17g %.17g %.17g %.17g",
                     d, s, K, g, p, vd_old, vs_old, vd_new, vs_new, log_alpha);
        std::fprintf(g_ms_dump, " z");
        for (int zi : state_.z) std::fprintf(g_ms_dump, " %d", zi);
        std::fprintf(g_ms_dump, " v");
        for (int k = 0; k < K; ++k)
            std::fprintf(g_ms_dump, " %.17g", state_.pi_prime[k]);
        std::fprintf(g_ms_dump, " mv");
        for (int i : moved) std::fprintf(g_ms_dump, " %d", i);
        std::fprintf(g_ms_dump, "\n");
    }
    if (std::log(rng_.uniform_open()) < log_alpha) {
        for (int i : moved) state_.z[i] = s;
        for (int i = 0; i < static_cast<int>(state_.z.size()); ++i)
            state_.u[i] = xi(state_.z[i]) * rng_.uniform_open();
        state_.pi_prime[d] = vd_new;
        state_.pi_prime[s] = vs_new;
        ++ms_accepts_;
    }
}

void FsbpSampler::step_atoms() {
    const int K = state_.K_active;
    std::vector<std::vector<double>> members(K);
    for (int i = 0; i < static_cast<int>(state_.z.size()); ++i)
        members[state_.z[i]].push_back(data_->values[0][i]);
    for (int k = 0; k < K; ++k) {
        const NigDraw d = sample_nig_posterior(cfg_.nig, members[k], rng_);
        state_.atoms.scalar[k] = {d.mean, d.var};
    }
}

void FsbpSampler::step_gamma() {
    if (cfg_.fixed_gamma) return;
    const auto n = static_cast<double>(state_.z.size());
    if (n == 0.0) {
        state_.gamma_conc = sample_gamma(cfg_.gamma_shape, cfg_.gamma_rate, rng_);
        return;
    }
    const std::vector<int> m = occupancy();
    const int k_occ = static_cast<int>(
        std::count_if(m.begin(), m.end(), [](int c) { return c > 0; }));
    const double aux = sample_beta(state_.gamma_conc + 1.0, n, rng_);
    const double rate = cfg_.gamma_rate - std::log(aux);
    const double odds = (cfg_.gamma_shape + k_occ - 1.0) / (n * rate);
    const double shape = cfg_.gamma_shape + k_occ -
                         (rng_.uniform() < odds / (1.0 + odds) ? 0.0 : 1.0);
    state_.gamma_conc = sample_gamma(shape, rate, rng_);
}

void FsbpSampler::iterate() {
    step_slice_u();
    step_fsbp_pi_prime();
    step_fsbp_p();
    step_z();
    step_merge_split();
    step_atoms();
    step_gamma();
}

double FsbpSampler::log_joint() const {
    const int K = state_.K_active;
    const double g = state_.gamma_conc;
    double lj = 0.0;
    for (int k = 0; k < K; ++k)
        lj += std::log(g) + (g - 1.0) * std::log1p(-state_.pi_prime[k]);
    if (cfg_.p_fixed == 0.0)
        lj += log_beta_pdf(state_.p, cfg_.p_a, cfg_.p_b);
    const std::vector<double> pi = pi_weights();
    for (int i = 0; i < static_cast<int>(state_.z.size()); ++i) {
        const auto& atom = state_.atoms.scalar[state_.z[i]];
        lj += std::log(pi[state_.z[i]]) +
              log_normal_pdf(data_->values[0][i], atom.mean, atom.var);
    }
    if (!cfg_.fixed_gamma)
        lj += log_gamma_pdf(g, cfg_.gamma_shape, cfg_.gamma_rate);
    return lj;
}

IterationRecord FsbpSampler::snapshot() const {
    IterationRecord rec;
    rec.z = {state_.z};
    rec.weights = {pi_weights()};
    rec.atoms = state_.atoms;
    rec.p = {state_.p};
    rec.alpha0 = std::numeric_limits<double>::quiet_NaN();  // no group level
    rec.gamma_conc = state_.gamma_conc;
    rec.log_joint = log_joint();
    return rec;
}

double FsbpSampler::pi_prime_acceptance() const {
    return pi_proposals_ == 0
               ? 0.0
               : static_cast<double>(pi_accepts_) /
                     static_cast<double>(pi_proposals_);
}

double FsbpSampler::p_acceptance() const {
    return p_proposals_ == 0 ? 0.0
                             : static_cast<double>(p_accepts_) /
                                   static_cast<double>(p_proposals_);
}

double FsbpSampler::merge_split_acceptance() const {
    return ms_proposals_ == 0 ? 0.0
                              : static_cast<double>(ms_accepts_) /
                                    static_cast<double>(ms_proposals_);
}

ChainTrace run_fsbp_chain(const GroupedDataset& data, const FsbpConfig& cfg) {
    FsbpSampler sampler(data, cfg);
    ChainTrace trace;
    trace.kernel = KernelType::univariate;
    trace.n_groups = 1;
    trace.dim = 1;
    trace.group_ids = data.group_ids;
    for (int it = 0; it < cfg.burn_in; ++it) sampler.iterate();
    trace.iterations.reserve(cfg.n_keep / cfg.thin);
    for (int it = 1; it <= cfg.n_keep; ++it) {
        sampler.iterate();
        if (it % cfg.thin == 0) trace.iterations.push_back(sampler.snapshot());
    }
    return trace;
}

ChainTrace run_dp_slice_chain(const GroupedDataset& data, const FsbpConfig& cfg) {
    FsbpConfig dp_cfg = cfg;
    dp_cfg.p_fixed = 1.0;
    FsbpSampler sampler(data, dp_cfg);
    auto sweep = [&sampler] {
        sampler.step_slice_u();
        sampler.step_pi_prime_conjugate();
        sampler.step_z();
        sampler.step_merge_split();
        sampler.step_atoms();
        sampler.step_gamma();
    };
    ChainTrace trace;
    trace.kernel = KernelType::univariate;
    trace.n_groups = 1;
    trace.dim = 1;
    trace.group_ids = data.group_ids;
    for (int it = 0; it < cfg.burn_in; ++it) sweep();
    trace.iterations.reserve(cfg.n_keep / cfg.thin);
    for (int it = 1; it <= cfg.n_keep; ++it) {
        sweep();
        if (it % cfg.thin == 0) trace.iterations.push_back(sampler.snapshot());
    }
    return trace;
}

}  // namespace plaid
