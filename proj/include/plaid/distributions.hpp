#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "plaid/rng.hpp"

namespace plaid {

// Gamma(shape, rate), mean shape/rate.  Marsaglia-Tsang; shape < 1 handled by
// boosting, which can underflow to exactly 0 for extreme shapes.
double sample_gamma(double shape, double rate, RngHandle& rng);

// Beta(a, b) via two gammas; the return value is clamped into the open
// interval (0, 1) so stick-breaking products never pick up spurious exact
// zeros or ones from underflow.
double sample_beta(double a, double b, RngHandle& rng);

// Draw from N(mean, var) restricted to [lo, hi); either bound may be
// infinite.  Windows starting >= 4 sd into a tail use the shifted-exponential
// rejection scheme; a bisection inverse-CDF fallback guarantees termination.
double sample_truncated_normal(double mean, double var, double lo, double hi,
                               RngHandle& rng);

// Normal-inverse-gamma: var ~ IG(a_sig, b_sig), mean | var ~ N(m0, var/k0).
struct NigParams {
    double m0 = 0.0;
    double k0 = 1.0;
    double a_sig = 1.0;
    double b_sig = 1.0;
};

struct NigDraw {
    double mean = 0.0;
    double var = 1.0;
};

// Conjugate posterior parameters given iid normal observations.
NigParams nig_posterior_params(const NigParams& prior, std::span<const double> data);
NigDraw sample_nig_posterior(const NigParams& prior, std::span<const double> data,
                             RngHandle& rng);

// Log density of one further observation under NIG hyperparameters `hyp`
// with the atom integrated out: Student-t with 2 a_sig degrees of freedom,
// location m0, squared scale b_sig (k0 + 1) / (a_sig k0).  Chaining this
// with nig_posterior_params one observation at a time yields the marginal
// likelihood of a set.
double nig_log_predictive(const NigParams& hyp, double y);

// Normal-inverse-Wishart: cov ~ IW(nu, psi), mean | cov ~ N(m0, cov/k0).
struct NiwParams {
    Eigen::VectorXd m0;
    double k0 = 1.0;
    double nu = 2.0;
    Eigen::MatrixXd psi;
};

struct NiwDraw {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// Observations are rows of `data` (n x q); n may be 0 for a prior draw.
NiwParams niw_posterior_params(const NiwParams& prior, const Eigen::MatrixXd& data);
NiwDraw sample_niw_posterior(const NiwParams& prior, const Eigen::MatrixXd& data,
                             RngHandle& rng);

Eigen::MatrixXd sample_inverse_wishart(double nu, const Eigen::MatrixXd& psi,
                                       RngHandle& rng);

// Index draw from unnormalized weights w (all >= 0, positive total).
int sample_categorical(std::span<const double> w, RngHandle& rng);

} // namespace plaid
