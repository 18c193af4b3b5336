#include "plaid/pam_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "plaid/processes.hpp"
#include "plaid/special.hpp"

namespace plaid {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

DataKind kind_for(KernelType k) {
    switch (k) {
        case KernelType::univariate: return DataKind::univariate;
        case KernelType::multivariate: return DataKind::multivariate;
        case KernelType::count: return DataKind::count;
    }
    return DataKind::univariate;
}

}  // namespace

double count_bin_lo(long long x) {
    return x == 0 ? -std::numeric_limits<double>::infinity()
                  : static_cast<double>(x - 1);
}

double count_bin_hi(long long x) { return static_cast<double>(x); }

double PamSampler::xi(int k) const {
    return (1.0 - cfg_.zeta) * std::pow(cfg_.zeta, k);
}

PamSampler::PamSampler(const GroupedDataset& data, const PamConfig& cfg)
    : data_(&data), cfg_(cfg), rng_(cfg.seed, 0) {
    data.validate();
    if (kind_for(cfg.kernel) != data.kind)
        throw std::invalid_argument("PamSampler: kernel does not match data kind");
    if (!(cfg.zeta > 0.0 && cfg.zeta < 1.0))
        throw std::invalid_argument("PamSampler: zeta must lie in (0, 1)");
    if (!(cfg.mh_eps > 0.0 && cfg.mh_eps < 1.0))
        throw std::invalid_argument("PamSampler: mh_eps must lie in (0, 1)");
    if (cfg.burn_in < 0 || cfg.n_keep < 0 || cfg.thin < 1)
        throw std::invalid_argument("PamSampler: bad iteration counts");
    if (!(cfg.p_a > 0.0 && cfg.p_b > 0.0))
        throw std::invalid_argument("PamSampler: keep-probability prior must be positive");
    if (!(cfg.alpha0_shape > 0.0 && cfg.alpha0_rate > 0.0 &&
          cfg.gamma_shape > 0.0 && cfg.gamma_rate > 0.0))
        throw std::invalid_argument("PamSampler: concentration priors must be positive");
    if (!(cfg.alpha0_init > 0.0 && cfg.gamma_init > 0.0))
        throw std::invalid_argument("PamSampler: concentration inits must be positive");
    J_ = data.n_groups();
    if (cfg.kernel == KernelType::count) {
        if (cfg.eta.empty())
            eta_.assign(J_, 1.0);
        else if (static_cast<int>(cfg.eta.size()) == J_)
            eta_ = cfg.eta;
        else
            throw std::invalid_argument("PamSampler: eta needs one entry per group");
        for (double e : eta_)
            if (!(e > 0.0))
                throw std::invalid_argument("PamSampler: eta must be positive");
    } else if (!cfg.eta.empty()) {
        throw std::invalid_argument("PamSampler: eta is a count-kernel option");
    }
    if (!cfg.p_fixed.empty()) {
        if (static_cast<int>(cfg.p_fixed.size()) != J_)
            throw std::invalid_argument("PamSampler: p_fixed needs one entry per group");
        for (double pj : cfg.p_fixed)
            if (!(pj > 0.0) || pj > 1.0)
                throw std::invalid_argument("PamSampler: fixed p must lie in (0, 1]");
    }
    if (cfg.kernel == KernelType::multivariate) {
        if (cfg.niw.m0.size() != data.dim || cfg.niw.psi.rows() != data.dim ||
            cfg.niw.psi.cols() != data.dim)
            throw std::invalid_argument("PamSampler: NIW dimension mismatch");
        if (!(cfg.niw.nu > data.dim - 1.0) || !(cfg.niw.k0 > 0.0))
            throw std::invalid_argument("PamSampler: invalid NIW hyperparameters");
    } else {
        if (!(cfg.nig.k0 > 0.0 && cfg.nig.a_sig > 0.0 && cfg.nig.b_sig > 0.0))
            throw std::invalid_argument("PamSampler: invalid NIG hyperparameters");
    }

    group_rng_.reserve(J_);
    for (int j = 0; j < J_; ++j) group_rng_.emplace_back(cfg.seed, j + 1);

    state_.alpha0 = cfg.alpha0_init;
    state_.gamma_conc = cfg.gamma_init;
    state_.p = cfg.p_fixed.empty() ? std::vector<double>(J_, 0.5) : cfg.p_fixed;
    state_.pi_prime.assign(J_, {});
    state_.atoms.kernel = cfg.kernel;
    state_.z.assign(J_, {});
    state_.u.assign(J_, {});
    state_.latent_y.assign(J_, {});
    state_.table_counts.assign(J_, {});
    state_.K_active = 0;

    const bool has_obs = data.total_obs() > 0;
    const int k_init = has_obs ? std::min(12, data.total_obs()) : 1;
    grow_to(k_init);
    if (has_obs) {
        // Initial labels must land on positive-weight atoms, so undo any
        // skips the prior growth introduced.
        const std::vector<double> beta = beta_from_prime();
        const std::vector<double> rem = remainder_from_prime();
        for (int j = 0; j < J_; ++j)
            for (int k = 0; k < k_init; ++k)
                if (state_.pi_prime[j][k] == 0.0)
                    state_.pi_prime[j][k] = clamped_beta(
                        state_.alpha0 * beta[k], state_.alpha0 * rem[k],
                        group_rng_[j]);
        // Start over-split and location-coherent: cut the pooled values at
        // their largest gaps. Early sweeps then only need to merge surplus
        // clusters (fast under Gibbs) instead of nucleating splits (which
        // stalls); gap cuts fall between modes or at sparse tails, never
        // through the middle of a mode where the halves could deadlock.
        const auto position = [&data](int j, int i) {
            switch (data.kind) {
                case DataKind::univariate: return data.values[j][i];
                case DataKind::multivariate: return data.vectors[j][i](0);
                case DataKind::count:
                    return static_cast<double>(data.counts[j][i]);
            }
            return 0.0;
        };
        std::vector<double> pooled;
        pooled.reserve(data.total_obs());
        for (int j = 0; j < J_; ++j)
            for (int i = 0; i < data.n_obs(j); ++i)
                pooled.push_back(position(j, i));
        std::sort(pooled.begin(), pooled.end());
        const std::vector<double> edges = largest_gap_edges(pooled, k_init);
        for (int j = 0; j < J_; ++j) {
            const int n = data.n_obs(j);
            state_.z[j].resize(n);
            state_.u[j].resize(n);
            for (int i = 0; i < n; ++i) {
                const int k = static_cast<int>(
                    std::upper_bound(edges.begin(), edges.end(), position(j, i)) -
                    edges.begin());
                state_.z[j][i] = k;
                state_.u[j][i] = xi(k) * group_rng_[j].uniform_open();
            }
        }
    }
    if (cfg.kernel == KernelType::count)
        for (int j = 0; j < J_; ++j) {
            const int n = data.n_obs(j);
            state_.latent_y[j].resize(n);
            for (int i = 0; i < n; ++i) {
                const long long x = data.counts[j][i];
                state_.latent_y[j][i] = x == 0 ? -0.5 : static_cast<double>(x) - 0.5;
            }
        }
    // Atoms drawn by grow_to came from the base measure; redraw them from
    // their conditionals so the first allocation sweep sees the initial
    // cluster locations rather than prior noise.
    if (has_obs) step_atoms();
}

std::vector<double> PamSampler::beta_from_prime() const {
    std::vector<double> beta(state_.beta_prime.size());
    double stick = 1.0;
    for (std::size_t k = 0; k < beta.size(); ++k) {
        beta[k] = state_.beta_prime[k] * stick;
        stick *= 1.0 - state_.beta_prime[k];
    }
    return beta;
}

std::vector<double> PamSampler::remainder_from_prime() const {
    std::vector<double> rem(state_.beta_prime.size());
    double stick = 1.0;
    for (std::size_t k = 0; k < rem.size(); ++k) {
        stick *= 1.0 - state_.beta_prime[k];
        rem[k] = stick;
    }
    return rem;
}

std::vector<int> PamSampler::occupancy(int j) const {
    std::vector<int> m(state_.K_active, 0);
    for (int k : state_.z[j]) ++m[k];
    return m;
}

void PamSampler::grow_to(int k_new) {
    const int k_old = static_cast<int>(state_.beta_prime.size());
    if (k_new <= k_old) {
        state_.K_active = std::max(state_.K_active, k_new);
        return;
    }
    double stick = 1.0;
    for (double bp : state_.beta_prime) stick *= 1.0 - bp;
    std::vector<double> new_beta(k_new - k_old), new_rem(k_new - k_old);
    for (int k = k_old; k < k_new; ++k) {
        const double bp = clamped_beta(1.0, state_.gamma_conc, rng_);
        state_.beta_prime.push_back(bp);
        new_beta[k - k_old] = bp * stick;
        stick *= 1.0 - bp;
        new_rem[k - k_old] = stick;
        if (cfg_.kernel == KernelType::multivariate) {
            const NiwDraw d = sample_niw_posterior(
                cfg_.niw, Eigen::MatrixXd(0, data_->dim), rng_);
            state_.atoms.vec.push_back({d.mean, d.cov});
        } else {
            const NigDraw d = sample_nig_posterior(cfg_.nig, {}, rng_);
            state_.atoms.scalar.push_back({d.mean, d.var});
        }
    }
    for (int j = 0; j < J_; ++j) {
        auto& row = state_.pi_prime[j];
        for (int k = k_old; k < k_new; ++k) {
            const double a = state_.alpha0 * new_beta[k - k_old];
            const double b = state_.alpha0 * new_rem[k - k_old];
            if (group_rng_[j].uniform() < state_.p[j])
                row.push_back(clamped_beta(a, b, group_rng_[j]));
            else
                row.push_back(0.0);
        }
    }
    state_.K_active = k_new;
}

void PamSampler::shrink_to(int k_new) {
    if (k_new >= static_cast<int>(state_.beta_prime.size())) {
        state_.K_active = k_new;
        return;
    }
    state_.beta_prime.resize(k_new);
    for (auto& row : state_.pi_prime) row.resize(k_new);
    if (cfg_.kernel == KernelType::multivariate)
        state_.atoms.vec.resize(k_new);
    else
        state_.atoms.scalar.resize(k_new);
    state_.K_active = k_new;
}

void PamSampler::step_slice_u() {
    double min_u = std::numeric_limits<double>::infinity();
    int max_z = -1;
    for (int j = 0; j < J_; ++j) {
        const int n = data_->n_obs(j);
        for (int i = 0; i < n; ++i) {
            const int k = state_.z[j][i];
            const double v = xi(k) * group_rng_[j].uniform_open();
            state_.u[j][i] = v;
            min_u = std::min(min_u, v);
            max_z = std::max(max_z, k);
        }
    }
    if (max_z < 0) {  // no observations: keep a single active stick
        shrink_to(1);
        return;
    }
    // Closed-form candidate for max{k : xi_k > min_u}, then an exact fix-up
    // against the threshold sequence (the bare floor can undercount).
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

double PamSampler::log_target_beta_prime(int k, double value,
                                         double rem_before) const {
    const int K = state_.K_active;
    double lt = (state_.gamma_conc - 1.0) * std::log1p(-value);
    double stick = rem_before;
    for (int l = k; l < K; ++l) {
        const double frac = l == k ? value : state_.beta_prime[l];
        const double beta_l = frac * stick;
        stick *= 1.0 - frac;
        const double a = std::max(state_.alpha0 * beta_l, kBetaParamFloor);
        const double b = std::max(state_.alpha0 * stick, kBetaParamFloor);
        for (int j = 0; j < J_; ++j) {
            const double pp = state_.pi_prime[j][l];
            if (pp > 0.0) lt += log_beta_pdf(pp, a, b);
        }
    }
    return lt;
}

void PamSampler::step_beta_prime() {
    const int K = state_.K_active;
    double rem_before = 1.0;
    for (int k = 0; k < K; ++k) {
        const double cur = state_.beta_prime[k];
        double prop = cur + cfg_.mh_eps * (2.0 * rng_.uniform() - 1.0);
        if (prop < 0.0) prop = -prop;
        if (prop > 1.0) prop = 2.0 - prop;
        prop = std::clamp(prop, std::numeric_limits<double>::min(),
                          1.0 - std::numeric_limits<double>::epsilon() / 2);
        const double delta = log_target_beta_prime(k, prop, rem_before) -
                             log_target_beta_prime(k, cur, rem_before);
        ++beta_prime_proposals_;
        if (std::log(rng_.uniform_open()) < delta) {
            state_.beta_prime[k] = prop;
            ++beta_prime_accepts_;
        }
        rem_before *= 1.0 - state_.beta_prime[k];
    }
}

void PamSampler::step_pi_prime() {
    const int K = state_.K_active;
    const std::vector<double> beta = beta_from_prime();
    const std::vector<double> rem = remainder_from_prime();
    for (int j = 0; j < J_; ++j) {
        const std::vector<int> m = occupancy(j);
        std::vector<long long> suffix(K + 1, 0);
        for (int k = K - 1; k >= 0; --k) suffix[k] = suffix[k + 1] + m[k];
        auto& row = state_.pi_prime[j];
        const double pj = state_.p[j];
        for (int k = 0; k < K; ++k) {
            if (m[k] > 0 && row[k] == 0.0)
                throw std::logic_error(
                    "step_pi_prime: occupied atom carries zero weight");
            const double a = std::max(state_.alpha0 * beta[k], kBetaParamFloor);
            const double b0 = std::max(state_.alpha0 * rem[k], kBetaParamFloor);
            const double later = static_cast<double>(suffix[k + 1]);
            if (m[k] > 0) {
                row[k] = sample_beta(a + m[k], b0 + later, group_rng_[j]);
            } else {
                double keep = 1.0;
                if (pj < 1.0) {
                    // log of B(a, b0) / B(a, b0 + later); the posterior keep
                    // probability shrinks when later sticks hold many members
                    const double lr = log_beta(a, b0) - log_beta(a, b0 + later);
                    const double logit = std::log(pj) - std::log1p(-pj) - lr;
                    keep = 1.0 / (1.0 + std::exp(-logit));
                }
                if (group_rng_[j].uniform() < keep)
                    row[k] = sample_beta(a, b0 + later, group_rng_[j]);
                else
                    row[k] = 0.0;
            }
        }
    }
}

void PamSampler::step_p() {
    if (!cfg_.p_fixed.empty()) return;
    const int K = state_.K_active;
    for (int j = 0; j < J_; ++j) {
        const auto& row = state_.pi_prime[j];
        const auto zeros = static_cast<double>(
            std::count(row.begin(), row.end(), 0.0));
        state_.p[j] = sample_beta(cfg_.p_a + (K - zeros), cfg_.p_b + zeros,
                                  group_rng_[j]);
    }
}

std::vector<double> PamSampler::pi_row(int j) const {
    const auto& row = state_.pi_prime[j];
    std::vector<double> pi(row.size(), 0.0);
    double stick = 1.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (row[k] == 0.0) continue;
        pi[k] = positive_weight(row[k] * stick);
        stick *= 1.0 - row[k];
    }
    return pi;
}

void PamSampler::build_mvn_caches(
    std::vector<double>& logdet,
    std::vector<Eigen::LLT<Eigen::MatrixXd>>& llt) const {
    const auto& atoms = state_.atoms.vec;
    logdet.resize(atoms.size());
    llt.resize(atoms.size());
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        llt[k].compute(atoms[k].cov);
        if (llt[k].info() != Eigen::Success)
            throw std::runtime_error("step_z: atom covariance not positive definite");
        logdet[k] = 2.0 * Eigen::MatrixXd(llt[k].matrixL())
                              .diagonal()
                              .array()
                              .log()
                              .sum();
    }
}

double PamSampler::log_lik(
    int j, int i, int k, const std::vector<double>& mvn_logdet,
    const std::vector<Eigen::LLT<Eigen::MatrixXd>>& mvn_llt) const {
    switch (cfg_.kernel) {
        case KernelType::univariate: {
            const auto& atom = state_.atoms.scalar[k];
            return log_normal_pdf(data_->values[j][i], atom.mean, atom.var);
        }
        case KernelType::multivariate: {
            const auto& atom = state_.atoms.vec[k];
            const Eigen::VectorXd d = data_->vectors[j][i] - atom.mean;
            const double quad =
                mvn_llt[k].matrixL().solve(d).squaredNorm();
            return -0.5 * (data_->dim * kLogTwoPi + mvn_logdet[k] + quad);
        }
        case KernelType::count: {
            const auto& atom = state_.atoms.scalar[k];
            const long long x = data_->counts[j][i];
            return log_normal_interval(count_bin_lo(x), count_bin_hi(x),
                                       eta_[j] * atom.mean,
                                       eta_[j] * std::sqrt(atom.var));
        }
    }
    return 0.0;
}

void PamSampler::step_z() {
    std::vector<double> mvn_logdet;
    std::vector<Eigen::LLT<Eigen::MatrixXd>> mvn_llt;
    if (cfg_.kernel == KernelType::multivariate)
        build_mvn_caches(mvn_logdet, mvn_llt);
    std::vector<double> lw, w;
    for (int j = 0; j < J_; ++j) {
        std::vector<double> pi = pi_row(j);
        const int n = data_->n_obs(j);
        for (int i = 0; i < n; ++i) {
            int attempts = 0;
            for (;;) {
                const double uij = state_.u[j][i];
                lw.clear();
                double max_lw = -std::numeric_limits<double>::infinity();
                for (int k = 0;
                     k < state_.K_active && xi(k) > uij; ++k) {
                    double v = -std::numeric_limits<double>::infinity();
                    if (pi[k] > 0.0)
                        v = std::log(pi[k]) - std::log(xi(k)) +
                            log_lik(j, i, k, mvn_logdet, mvn_llt);
                    lw.push_back(v);
                    max_lw = std::max(max_lw, v);
                }
                if (std::isfinite(max_lw)) {
                    w.resize(lw.size());
                    for (std::size_t k = 0; k < lw.size(); ++k)
                        w[k] = std::exp(lw[k] - max_lw);
                    state_.z[j][i] = sample_categorical(w, group_rng_[j]);
                    break;
                }
                // Transient empty slice support: resample u once, then widen
                // the truncation one stick at a time.
                if (++attempts > 100)
                    throw std::runtime_error(
                        "step_z: persistent empty label support");
                if (attempts == 1) {
                    state_.u[j][i] =
                        xi(state_.z[j][i]) * group_rng_[j].uniform_open();
                } else {
                    grow_to(state_.K_active + 1);
                    pi = pi_row(j);
                    if (cfg_.kernel == KernelType::multivariate)
                        build_mvn_caches(mvn_logdet, mvn_llt);
                }
            }
        }
    }
}

void PamSampler::step_atoms() {
    const int K = state_.K_active;
    if (cfg_.kernel == KernelType::multivariate) {
        std::vector<int> count(K, 0);
        for (int j = 0; j < J_; ++j)
            for (int k : state_.z[j]) ++count[k];
        std::vector<Eigen::MatrixXd> members(K);
        for (int k = 0; k < K; ++k) members[k].resize(count[k], data_->dim);
        std::vector<int> fill(K, 0);
        for (int j = 0; j < J_; ++j)
            for (int i = 0; i < data_->n_obs(j); ++i) {
                const int k = state_.z[j][i];
                members[k].row(fill[k]++) = data_->vectors[j][i].transpose();
            }
        for (int k = 0; k < K; ++k) {
            const NiwDraw d = sample_niw_posterior(cfg_.niw, members[k], rng_);
            state_.atoms.vec[k] = {d.mean, d.cov};
        }
        return;
    }
    std::vector<std::vector<double>> members(K);
    for (int j = 0; j < J_; ++j)
        for (int i = 0; i < data_->n_obs(j); ++i) {
            const double y = cfg_.kernel == KernelType::count
                                 ? state_.latent_y[j][i] / eta_[j]
                                 : data_->values[j][i];
            members[state_.z[j][i]].push_back(y);
        }
    for (int k = 0; k < K; ++k) {
        const NigDraw d = sample_nig_posterior(cfg_.nig, members[k], rng_);
        state_.atoms.scalar[k] = {d.mean, d.var};
    }
}

void PamSampler::step_concentrations() {
    if (cfg_.fixed_concentrations) return;
    const int K = state_.K_active;
    const std::vector<double> beta = beta_from_prime();
    long long total_tables = 0;
    std::vector<char> dish_occupied(K, 0);
    for (int j = 0; j < J_; ++j) {
        const std::vector<int> m = occupancy(j);
        auto& tables = state_.table_counts[j];
        tables.assign(K, 0);
        for (int k = 0; k < K; ++k) {
            const double ab = std::max(state_.alpha0 * beta[k], kBetaParamFloor);
            long long w = 0;
            for (int t = 1; t <= m[k]; ++t)
                if (group_rng_[j].uniform() < ab / (ab + t - 1)) ++w;
            tables[k] = w;
            total_tables += w;
            if (m[k] > 0) dish_occupied[k] = 1;
        }
    }
    // Top-level concentration via the auxiliary Beta/mixture-of-gammas move;
    // with no tables the conditional is the prior.
    if (total_tables == 0) {
        state_.gamma_conc = sample_gamma(cfg_.gamma_shape, cfg_.gamma_rate, rng_);
    } else {
        const int k_occ = static_cast<int>(
            std::count(dish_occupied.begin(), dish_occupied.end(), 1));
        const double aux = sample_beta(
            state_.gamma_conc + 1.0, static_cast<double>(total_tables), rng_);
        const double rate = cfg_.gamma_rate - std::log(aux);
        const double odds = (cfg_.gamma_shape + k_occ - 1.0) /
                            (static_cast<double>(total_tables) * rate);
        const double shape =
            cfg_.gamma_shape + k_occ -
            (rng_.uniform() < odds / (1.0 + odds) ? 0.0 : 1.0);
        state_.gamma_conc = sample_gamma(shape, rate, rng_);
    }
    // Group-level concentration: one auxiliary pair per nonempty group.
    bool any_obs = false;
    double s_sum = 0.0, log_w_sum = 0.0;
    for (int j = 0; j < J_; ++j) {
        const auto nj = static_cast<double>(data_->n_obs(j));
        if (nj < 1.0) continue;
        any_obs = true;
        const double aux_w = sample_beta(state_.alpha0 + 1.0, nj, rng_);
        log_w_sum += std::log(aux_w);
        if (rng_.uniform() < nj / (nj + state_.alpha0)) s_sum += 1.0;
    }
    if (!any_obs)
        state_.alpha0 = sample_gamma(cfg_.alpha0_shape, cfg_.alpha0_rate, rng_);
    else
        state_.alpha0 =
            sample_gamma(cfg_.alpha0_shape + total_tables - s_sum,
                         cfg_.alpha0_rate - log_w_sum, rng_);
}

void PamSampler::step_latent_counts() {
    if (cfg_.kernel != KernelType::count)
        throw std::invalid_argument("step_latent_counts: count kernel only");
    for (int j = 0; j < J_; ++j) {
        const double e = eta_[j];
        for (int i = 0; i < data_->n_obs(j); ++i) {
            const long long x = data_->counts[j][i];
            const auto& atom = state_.atoms.scalar[state_.z[j][i]];
            state_.latent_y[j][i] = sample_truncated_normal(
                e * atom.mean, e * e * atom.var, count_bin_lo(x),
                count_bin_hi(x), group_rng_[j]);
        }
    }
}

void PamSampler::iterate() {
    step_slice_u();
    step_beta_prime();
    step_pi_prime();
    step_p();
    if (cfg_.kernel == KernelType::count) step_latent_counts();
    step_z();
    step_atoms();
    step_concentrations();
}

double PamSampler::log_joint() const {
    const int K = state_.K_active;
    const std::vector<double> beta = beta_from_prime();
    const std::vector<double> rem = remainder_from_prime();
    const double g = state_.gamma_conc;
    double lj = 0.0;
    for (int k = 0; k < K; ++k)
        lj += std::log(g) + (g - 1.0) * std::log1p(-state_.beta_prime[k]);
    std::vector<double> mvn_logdet;
    std::vector<Eigen::LLT<Eigen::MatrixXd>> mvn_llt;
    if (cfg_.kernel == KernelType::multivariate)
        build_mvn_caches(mvn_logdet, mvn_llt);
    for (int j = 0; j < J_; ++j) {
        const double pj = state_.p[j];
        const auto& row = state_.pi_prime[j];
        for (int k = 0; k < K; ++k) {
            const double a = std::max(state_.alpha0 * beta[k], kBetaParamFloor);
            const double b = std::max(state_.alpha0 * rem[k], kBetaParamFloor);
            if (row[k] == 0.0)
                lj += std::log1p(-pj);
            else
                lj += std::log(pj) + log_beta_pdf(row[k], a, b);
        }
        if (cfg_.p_fixed.empty())
            lj += log_beta_pdf(pj, cfg_.p_a, cfg_.p_b);
        const std::vector<double> pi = pi_row(j);
        for (int i = 0; i < data_->n_obs(j); ++i) {
            const int k = state_.z[j][i];
            lj += std::log(pi[k]) + log_lik(j, i, k, mvn_logdet, mvn_llt);
        }
    }
    if (!cfg_.fixed_concentrations) {
        lj += log_gamma_pdf(state_.alpha0, cfg_.alpha0_shape, cfg_.alpha0_rate);
        lj += log_gamma_pdf(g, cfg_.gamma_shape, cfg_.gamma_rate);
    }
    return lj;
}

IterationRecord PamSampler::snapshot() const {
    IterationRecord rec;
    rec.z = state_.z;
    rec.weights.reserve(J_);
    for (int j = 0; j < J_; ++j) rec.weights.push_back(pi_row(j));
    rec.atoms = state_.atoms;
    rec.p = state_.p;
    rec.alpha0 = state_.alpha0;
    rec.gamma_conc = state_.gamma_conc;
    rec.log_joint = log_joint();
    return rec;
}

ChainTrace run_chain(const GroupedDataset& data, const PamConfig& cfg) {
    PamSampler sampler(data, cfg);
    ChainTrace trace;
    trace.kernel = cfg.kernel;
    trace.n_groups = data.n_groups();
    trace.dim = data.dim;
    trace.group_ids = data.group_ids;
    for (int it = 0; it < cfg.burn_in; ++it) sampler.iterate();
    trace.iterations.reserve(cfg.n_keep / cfg.thin);
    for (int it = 1; it <= cfg.n_keep; ++it) {
        sampler.iterate();
        if (it % cfg.thin == 0) trace.iterations.push_back(sampler.snapshot());
    }
    return trace;
}

}  // namespace plaid
