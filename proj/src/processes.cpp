#include "plaid/processes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "plaid/distributions.hpp"

namespace plaid {

double positive_weight(double w) {
    return std::max(w, std::numeric_limits<double>::denorm_min());
}

std::vector<double> largest_gap_edges(const std::vector<double>& sorted_values,
                                      int k) {
    const std::size_t n = sorted_values.size();
    std::vector<std::pair<double, std::size_t>> gaps;  // width, left index
    gaps.reserve(n > 0 ? n - 1 : 0);
    for (std::size_t t = 0; t + 1 < n; ++t) {
        const double g = sorted_values[t + 1] - sorted_values[t];
        if (g > 0.0) gaps.emplace_back(g, t);
    }
    const std::size_t n_cuts =
        std::min<std::size_t>(k > 0 ? static_cast<std::size_t>(k - 1) : 0,
                              gaps.size());
    std::partial_sort(gaps.begin(),
                      gaps.begin() + static_cast<std::ptrdiff_t>(n_cuts),
                      gaps.end(), [](const auto& a, const auto& b) {
                          return a.first != b.first ? a.first > b.first
                                                    : a.second < b.second;
                      });
    std::vector<double> edges(n_cuts);
    for (std::size_t t = 0; t < n_cuts; ++t) {
        const std::size_t left = gaps[t].second;
        edges[t] = sorted_values[left] +
                   0.5 * (sorted_values[left + 1] - sorted_values[left]);
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

double clamped_beta(double a, double b, RngHandle& rng) {
    return sample_beta(std::max(a, kBetaParamFloor),
                       std::max(b, kBetaParamFloor), rng);
}

namespace {

void validate_cfg(const TruncationConfig& cfg) {
    if (cfg.n_atoms < 1 || cfg.n_groups < 1 || cfg.n_obs_per_group < 1)
        throw std::invalid_argument("TruncationConfig: all fields must be >= 1");
}

std::vector<double> draw_atoms(int K, const BaseMeasure& H, RngHandle& rng) {
    std::vector<double> atoms(K);
    for (auto& a : atoms) a = H(rng);
    return atoms;
}

// One HDP group row given top-level beta; also used by ASP for kept sticks.
std::vector<double> hdp_group_row(double alpha0, const std::vector<double>& beta,
                                  RngHandle& rng) {
    std::vector<double> w(beta.size());
    double cum = 0.0, stick = 1.0;
    for (std::size_t k = 0; k < beta.size(); ++k) {
        cum += beta[k];
        double frac = clamped_beta(alpha0 * beta[k], alpha0 * (1.0 - cum), rng);
        w[k] = positive_weight(frac * stick);
        stick *= 1.0 - frac;
    }
    return w;
}

} // namespace

BaseMeasure standard_normal_base() {
    return [](RngHandle& rng) { return rng.normal(); };
}

std::vector<double> sample_gem(double gamma, int K, RngHandle& rng) {
    if (!(gamma > 0.0)) throw std::invalid_argument("sample_gem: gamma must be > 0");
    if (K < 1) throw std::invalid_argument("sample_gem: K must be >= 1");
    std::vector<double> w(K);
    double stick = 1.0;
    for (int k = 0; k < K; ++k) {
        double frac = sample_beta(1.0, gamma, rng);
        w[k] = positive_weight(frac * stick);
        stick *= 1.0 - frac;
    }
    return w;
}

ProcessDraw simulate_hdp(double alpha0, double gamma, const TruncationConfig& cfg,
                         const BaseMeasure& H, RngHandle& rng) {
    if (!(alpha0 > 0.0) || !(gamma > 0.0))
        throw std::invalid_argument("simulate_hdp: concentrations must be > 0");
    validate_cfg(cfg);
    ProcessDraw draw;
    draw.atoms = draw_atoms(cfg.n_atoms, H, rng);
    std::vector<double> beta = sample_gem(gamma, cfg.n_atoms, rng);
    draw.group_weights.reserve(cfg.n_groups);
    for (int j = 0; j < cfg.n_groups; ++j) {
        draw.group_weights.push_back(hdp_group_row(alpha0, beta, rng));
        draw.skip_mask.emplace_back(cfg.n_atoms, std::uint8_t{0});
    }
    return draw;
}

ProcessDraw simulate_cam(double alpha0, double gamma, const TruncationConfig& cfg,
                         const BaseMeasure& H, RngHandle& rng) {
    if (!(alpha0 > 0.0) || !(gamma > 0.0))
        throw std::invalid_argument("simulate_cam: concentrations must be > 0");
    validate_cfg(cfg);
    ProcessDraw draw;
    draw.atoms = draw_atoms(cfg.n_atoms, H, rng);

    // Distributional cluster per group, sampled lazily from GEM(alpha0) so no
    // truncation error enters the assignment.
    std::vector<double> frac;     // stick fractions
    std::vector<double> weight;   // derived stick weights
    double residual = 1.0;
    auto assign = [&]() {
        double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t t = 0; t < weight.size(); ++t) {
            acc += weight[t];
            if (u < acc) return static_cast<int>(t);
        }
        for (;;) {
            double f = sample_beta(1.0, alpha0, rng);
            frac.push_back(f);
            weight.push_back(positive_weight(f * residual));
            residual *= 1.0 - f;
            acc += weight.back();
            if (u < acc) return static_cast<int>(weight.size()) - 1;
        }
    };

    std::vector<int> cluster_of_group(cfg.n_groups);
    int max_cluster = -1;
    for (int j = 0; j < cfg.n_groups; ++j) {
        cluster_of_group[j] = assign();
        max_cluster = std::max(max_cluster, cluster_of_group[j]);
    }
    // One GEM(gamma) row over the shared atoms per realized distributional
    // cluster; groups in the same cluster share the row verbatim.
    std::vector<std::vector<double>> rows(max_cluster + 1);
    for (auto& r : rows) r = sample_gem(gamma, cfg.n_atoms, rng);
    for (int j = 0; j < cfg.n_groups; ++j) {
        draw.group_weights.push_back(rows[cluster_of_group[j]]);
        draw.skip_mask.emplace_back(cfg.n_atoms, std::uint8_t{0});
    }
    return draw;
}

ProcessDraw simulate_asp(double p, double alpha0, const std::vector<double>& beta,
                         const std::vector<double>& atoms, RngHandle& rng) {
    if (!(p > 0.0) || p > 1.0)
        throw std::invalid_argument("simulate_asp: p must lie in (0, 1]");
    if (!(alpha0 > 0.0)) throw std::invalid_argument("simulate_asp: alpha0 must be > 0");
    if (beta.empty() || beta.size() != atoms.size())
        throw std::invalid_argument("simulate_asp: beta and atoms must be same nonempty length");
    ProcessDraw draw;
    draw.atoms = atoms;
    std::vector<double> w(beta.size());
    std::vector<std::uint8_t> skip(beta.size());
    double cum = 0.0, stick = 1.0;
    for (std::size_t k = 0; k < beta.size(); ++k) {
        cum += beta[k];
        bool keep = rng.uniform() < p;
        if (keep) {
            double frac = clamped_beta(alpha0 * beta[k], alpha0 * (1.0 - cum), rng);
            w[k] = positive_weight(frac * stick);
            stick *= 1.0 - frac;
            skip[k] = 0;
        } else {
            w[k] = 0.0;
            skip[k] = 1;
        }
    }
    draw.group_weights.push_back(std::move(w));
    draw.skip_mask.push_back(std::move(skip));
    return draw;
}

ProcessDraw simulate_pam(const PamPriorSpec& p_spec, double alpha0, double gamma,
                         const TruncationConfig& cfg, const BaseMeasure& H,
                         RngHandle& rng) {
    if (!(alpha0 > 0.0) || !(gamma > 0.0))
        throw std::invalid_argument("simulate_pam: concentrations must be > 0");
    validate_cfg(cfg);
    if (!p_spec.p_fixed.empty() &&
        p_spec.p_fixed.size() != static_cast<std::size_t>(cfg.n_groups))
        throw std::invalid_argument("simulate_pam: p_fixed length must equal n_groups");
    ProcessDraw draw;
    draw.atoms = draw_atoms(cfg.n_atoms, H, rng);
    std::vector<double> beta = sample_gem(gamma, cfg.n_atoms, rng);
    for (int j = 0; j < cfg.n_groups; ++j) {
        double p = p_spec.p_fixed.empty() ? sample_beta(p_spec.a, p_spec.b, rng)
                                          : p_spec.p_fixed[j];
        ProcessDraw g = simulate_asp(p, alpha0, beta, draw.atoms, rng);
        draw.group_weights.push_back(std::move(g.group_weights[0]));
        draw.skip_mask.push_back(std::move(g.skip_mask[0]));
    }
    return draw;
}

ProcessDraw simulate_fsbp(double p, double gamma, int K, const BaseMeasure& H,
                          RngHandle& rng) {
    if (!(p > 0.0) || p > 1.0)
        throw std::invalid_argument("simulate_fsbp: p must lie in (0, 1]");
    if (!(gamma > 0.0)) throw std::invalid_argument("simulate_fsbp: gamma must be > 0");
    if (K < 1) throw std::invalid_argument("simulate_fsbp: K must be >= 1");
    ProcessDraw draw;
    draw.atoms = draw_atoms(K, H, rng);
    std::vector<double> w(K);
    double stick = 1.0;
    for (int k = 0; k < K; ++k) {
        double frac = p * sample_beta(1.0, gamma, rng);
        w[k] = positive_weight(frac * stick);
        stick *= 1.0 - frac;
    }
    draw.group_weights.push_back(std::move(w));
    draw.skip_mask.emplace_back(K, std::uint8_t{0});
    return draw;
}

ClusterStats cluster_stats(const ProcessDraw& draw, int n_obs, RngHandle& rng) {
    if (n_obs < 1) throw std::invalid_argument("cluster_stats: n_obs must be >= 1");
    auto J = draw.group_weights.size();
    auto K = draw.atoms.size();
    ClusterStats stats;
    stats.per_group_counts.resize(J);
    stats.per_group_relative_sizes.resize(J);
    std::map<int, long long> overall;
    long long total_draws = 0;
    for (std::size_t j = 0; j < J; ++j) {
        const auto& row = draw.group_weights[j];
        std::vector<double> cdf(K);
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) { acc += row[k]; cdf[k] = acc; }
        std::map<int, long long> counts;
        for (int i = 0; i < n_obs; ++i) {
            int k = -1;
            for (int tries = 0; tries < 10000; ++tries) {
                double u = rng.uniform();
                if (u >= acc) continue;  // residual mass: redraw
                k = static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u,
                                                      std::less_equal<>()) -
                                     cdf.begin());
                break;
            }
            if (k < 0)
                throw std::runtime_error("cluster_stats: residual mass too large");
            ++counts[k];
        }
        stats.per_group_counts[j] = static_cast<int>(counts.size());
        for (auto& [k, c] : counts) {
            stats.per_group_relative_sizes[j][k] =
                static_cast<double>(c) / static_cast<double>(n_obs);
            overall[k] += c;
        }
        total_draws += n_obs;
    }
    stats.total_count = static_cast<int>(overall.size());
    for (auto& [k, c] : overall)
        stats.overall_relative_sizes[k] =
            static_cast<double>(c) / static_cast<double>(total_draws);
    return stats;
}

double cross_group_coincidence(const std::vector<ProcessDraw>& draws, int n_pairs,
                               RngHandle& rng) {
    if (draws.empty()) throw std::invalid_argument("cross_group_coincidence: no draws");
    if (n_pairs < 1) throw std::invalid_argument("cross_group_coincidence: n_pairs must be >= 1");
    for (const auto& d : draws)
        if (d.group_weights.size() < 2)
            throw std::invalid_argument("cross_group_coincidence: draws need >= 2 groups");
    auto pick = [&](const std::vector<double>& row) {
        double total = 0.0;
        for (double w : row) total += w;
        for (int tries = 0; tries < 10000; ++tries) {
            double u = rng.uniform();
            if (u >= total) continue;
            double acc = 0.0;
            for (std::size_t k = 0; k < row.size(); ++k) {
                acc += row[k];
                if (u < acc) return static_cast<int>(k);
            }
        }
        throw std::runtime_error("cross_group_coincidence: residual mass too large");
    };
    long long hits = 0;
    for (int t = 0; t < n_pairs; ++t) {
        const auto& d = draws[static_cast<std::size_t>(t) % draws.size()];
        if (pick(d.group_weights[0]) == pick(d.group_weights[1])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n_pairs);
}

} // namespace plaid
