#include "plaid/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "plaid/special.hpp"

namespace plaid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailZ = 4.0;  // standardized distance that switches to the tail scheme

double gamma_shape_ge1(double shape, RngHandle& rng) {
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = rng.normal();
        double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        double v = t * t * t;
        double u = rng.uniform_open();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
}

// Standardized truncated normal on [a, b), a < b, via rejection.
double truncated_std_normal(double a, double b, RngHandle& rng) {
    if (a >= kTailZ) {
        // Shifted-exponential proposal with optimal rate, window cut at b.
        double lam = 0.5 * (a + std::sqrt(a * a + 4.0));
        for (int tries = 0; tries < 1000; ++tries) {
            double z = a + rng.exponential() / lam;
            if (z >= b) continue;
            double d = z - lam;
            if (std::log(rng.uniform_open()) <= -0.5 * d * d) return z;
        }
    } else {
        double mass = (b == kInf ? 1.0 : normal_cdf(b)) -
                      (a == -kInf ? 0.0 : normal_cdf(a));
        if (mass >= 0.1) {
            for (int tries = 0; tries < 1000; ++tries) {
                double z = rng.normal();
                if (z >= a && z < b) return z;
            }
        } else {
            // Narrow window inside the body: uniform proposal, bound at the
            // point of the window closest to the mode.
            double m = std::min(std::max(0.0, a), b);
            for (int tries = 0; tries < 1000; ++tries) {
                double z = rng.uniform(a, b);
                if (std::log(rng.uniform_open()) <= 0.5 * (m * m - z * z)) return z;
            }
        }
    }
    // Bisection on the survival function; always terminates.
    double lsf_a = a == -kInf ? 0.0 : log_normal_sf(a);
    double lsf_b = b == kInf ? -kInf : log_normal_sf(b);
    double u = rng.uniform_open();
    // target survival: sf(a) - u * (sf(a) - sf(b)), in log space
    double target = log_sub_exp(lsf_a, std::log(u) + log_sub_exp(lsf_a, lsf_b));
    double lo = a == -kInf ? -40.0 : a;
    double hi = b == kInf ? 40.0 : b;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (log_normal_sf(mid) > target) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

double sample_gamma(double shape, double rate, RngHandle& rng) {
    if (!(shape > 0.0) || !(rate > 0.0))
        throw std::invalid_argument("sample_gamma: shape and rate must be > 0");
    if (shape >= 1.0) return gamma_shape_ge1(shape, rng) / rate;
    double g = gamma_shape_ge1(shape + 1.0, rng);
    double u = rng.uniform_open();
    return g * std::exp(std::log(u) / shape) / rate;
}

double sample_beta(double a, double b, RngHandle& rng) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("sample_beta: parameters must be > 0");
    double x = sample_gamma(a, 1.0, rng);
    double y = sample_gamma(b, 1.0, rng);
    double r;
    if (x == 0.0 && y == 0.0)
        r = rng.uniform() < a / (a + b) ? 1.0 : 0.0;
    else
        r = x / (x + y);
    constexpr double lo = std::numeric_limits<double>::min();
    const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    return std::min(std::max(r, lo), hi);
}

double sample_truncated_normal(double mean, double var, double lo, double hi,
                               RngHandle& rng) {
    if (!(var > 0.0)) throw std::invalid_argument("sample_truncated_normal: var must be > 0");
    if (!(lo < hi)) throw std::invalid_argument("sample_truncated_normal: need lo < hi");
    double sd = std::sqrt(var);
    double a = (lo == -kInf) ? -kInf : (lo - mean) / sd;
    double b = (hi == kInf) ? kInf : (hi - mean) / sd;
    double z;
    if (b != kInf && b <= -kTailZ)
        z = -truncated_std_normal(-b, a == -kInf ? kInf : -a, rng);
    else
        z = truncated_std_normal(a, b, rng);
    double x = mean + sd * z;
    if (x < lo) x = lo;
    if (x >= hi) x = std::nextafter(hi, lo);
    return x;
}

NigParams nig_posterior_params(const NigParams& prior, std::span<const double> data) {
    if (!(prior.k0 > 0.0) || !(prior.a_sig > 0.0) || !(prior.b_sig > 0.0))
        throw std::invalid_argument("nig_posterior_params: k0, a_sig, b_sig must be > 0");
    auto n = static_cast<double>(data.size());
    if (data.empty()) return prior;
    double ybar = 0.0;
    for (double y : data) ybar += y;
    ybar /= n;
    double ss = 0.0;
    for (double y : data) ss += (y - ybar) * (y - ybar);
    NigParams post;
    post.k0 = prior.k0 + n;
    post.m0 = (prior.k0 * prior.m0 + n * ybar) / post.k0;
    post.a_sig = prior.a_sig + 0.5 * n;
    double d = ybar - prior.m0;
    post.b_sig = prior.b_sig + 0.5 * ss + 0.5 * prior.k0 * n * d * d / post.k0;
    return post;
}

NigDraw sample_nig_posterior(const NigParams& prior, std::span<const double> data,
                             RngHandle& rng) {
    NigParams post = nig_posterior_params(prior, data);
    NigDraw draw;
    draw.var = 1.0 / sample_gamma(post.a_sig, post.b_sig, rng);
    draw.mean = post.m0 + rng.normal() * std::sqrt(draw.var / post.k0);
    return draw;
}

double nig_log_predictive(const NigParams& hyp, double y) {
    const double resid = y - hyp.m0;
    const double two_b_scale = 2.0 * hyp.b_sig * (hyp.k0 + 1.0);
    return std::lgamma(hyp.a_sig + 0.5) - std::lgamma(hyp.a_sig) -
           0.5 * std::log(M_PI * two_b_scale / hyp.k0) -
           (hyp.a_sig + 0.5) * std::log1p(hyp.k0 * resid * resid / two_b_scale);
}

NiwParams niw_posterior_params(const NiwParams& prior, const Eigen::MatrixXd& data) {
    auto q = prior.m0.size();
    if (prior.psi.rows() != q || prior.psi.cols() != q)
        throw std::invalid_argument("niw_posterior_params: psi dimension mismatch");
    if (!(prior.nu > static_cast<double>(q) - 1.0))
        throw std::invalid_argument("niw_posterior_params: need nu > q - 1");
    if (data.rows() > 0 && data.cols() != q)
        throw std::invalid_argument("niw_posterior_params: data dimension mismatch");
    if (data.rows() == 0) return prior;
    auto n = static_cast<double>(data.rows());
    Eigen::VectorXd ybar = data.colwise().mean();
    Eigen::MatrixXd centered = data.rowwise() - ybar.transpose();
    Eigen::MatrixXd s = centered.transpose() * centered;
    NiwParams post;
    post.k0 = prior.k0 + n;
    post.m0 = (prior.k0 * prior.m0 + n * ybar) / post.k0;
    post.nu = prior.nu + n;
    Eigen::VectorXd d = ybar - prior.m0;
    post.psi = prior.psi + s + (prior.k0 * n / post.k0) * d * d.transpose();
    return post;
}

Eigen::MatrixXd sample_inverse_wishart(double nu, const Eigen::MatrixXd& psi,
                                       RngHandle& rng) {
    auto q = psi.rows();
    if (!(nu > static_cast<double>(q) - 1.0))
        throw std::invalid_argument("sample_inverse_wishart: need nu > q - 1");
    // Bartlett factor for Wishart(nu, I)
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(q, q);
    for (Eigen::Index i = 0; i < q; ++i) {
        double chi2 = sample_gamma(0.5 * (nu - static_cast<double>(i)), 0.5, rng);
        a(i, i) = std::sqrt(chi2);
        for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
    }
    // W = M A A^T M^T with M M^T = psi^{-1}; M = C^{-T} from psi = C C^T.
    Eigen::LLT<Eigen::MatrixXd> llt(psi);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("sample_inverse_wishart: psi not positive definite");
    Eigen::MatrixXd ma = llt.matrixL().transpose().solve(a);
    Eigen::MatrixXd w = ma * ma.transpose();
    Eigen::MatrixXd sigma =
        w.llt().solve(Eigen::MatrixXd::Identity(q, q));
    return 0.5 * (sigma + sigma.transpose());
}

NiwDraw sample_niw_posterior(const NiwParams& prior, const Eigen::MatrixXd& data,
                             RngHandle& rng) {
    NiwParams post = niw_posterior_params(prior, data);
    NiwDraw draw;
    draw.cov = sample_inverse_wishart(post.nu, post.psi, rng);
    Eigen::LLT<Eigen::MatrixXd> llt(draw.cov / post.k0);
    Eigen::VectorXd z(prior.m0.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    draw.mean = post.m0 + llt.matrixL() * z;
    return draw;
}

int sample_categorical(std::span<const double> w, RngHandle& rng) {
    double total = 0.0;
    for (double x : w) {
        if (x < 0.0 || !std::isfinite(x))
            throw std::invalid_argument("sample_categorical: weights must be finite and >= 0");
        total += x;
    }
    if (!(total > 0.0))
        throw std::invalid_argument("sample_categorical: total weight must be > 0");
    double u = rng.uniform() * total;
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        acc += w[k];
        if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(w.size()) - 1;
}

} // namespace plaid
