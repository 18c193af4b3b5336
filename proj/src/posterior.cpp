#include "plaid/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace plaid {

namespace {

// Minimum-cost assignment on a square matrix (potentials + augmenting
// paths); returns row -> column.
std::vector<int> min_cost_assignment(const std::vector<std::vector<long long>>& cost) {
    const int n = static_cast<int>(cost.size());
    const long long kInf = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> u(n + 1, 0), v(n + 1, 0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<long long> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            long long delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const long long cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> assignment(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] != 0) assignment[p[j] - 1] = j - 1;
    return assignment;
}

int columns_of(const IterationRecord& rec) {
    return rec.weights.empty() ? 0 : static_cast<int>(rec.weights[0].size());
}

bool column_instantiated(const IterationRecord& rec, int k) {
    return k < columns_of(rec) && !std::isnan(rec.weights[0][k]);
}

// Entropy-based distance core over two arbitrary label vectors.
double vi_from_labels(const std::vector<int>& a, const std::vector<int>& b) {
    const auto n = static_cast<double>(a.size());
    std::map<int, int> ca, cb;
    std::map<std::pair<int, int>, int> joint;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++ca[a[i]];
        ++cb[b[i]];
        ++joint[{a[i], b[i]}];
    }
    double h1 = 0.0, h2 = 0.0, mi = 0.0;
    for (const auto& [label, c] : ca) h1 -= c / n * std::log(c / n);
    for (const auto& [label, c] : cb) h2 -= c / n * std::log(c / n);
    for (const auto& [pair, c] : joint) {
        const double pj = c / n;
        mi += pj * std::log(pj * n * n / (ca[pair.first] * static_cast<double>(cb[pair.second])));
    }
    return std::max(0.0, h1 + h2 - 2.0 * mi);
}

}  // namespace

std::vector<int> flatten_labels(const std::vector<std::vector<int>>& z) {
    std::vector<int> flat;
    for (const auto& row : z) flat.insert(flat.end(), row.begin(), row.end());
    return flat;
}

SimilarityMatrix similarity_matrix(const ChainTrace& trace) {
    if (trace.iterations.empty())
        throw std::invalid_argument("similarity_matrix: empty trace");
    const std::vector<int> first = flatten_labels(trace.iterations.front().z);
    const int n = static_cast<int>(first.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (const auto& rec : trace.iterations) {
        const std::vector<int> flat = flatten_labels(rec.z);
        if (static_cast<int>(flat.size()) != n)
            throw std::invalid_argument("similarity_matrix: ragged trace");
        for (int i = 0; i < n; ++i)
            for (int i2 = i + 1; i2 < n; ++i2)
                if (flat[i] == flat[i2]) m(i, i2) += 1.0;
    }
    m /= static_cast<double>(trace.iterations.size());
    for (int i = 0; i < n; ++i) {
        m(i, i) = 1.0;
        for (int i2 = i + 1; i2 < n; ++i2) m(i2, i) = m(i, i2);
    }
    return m;
}

ChainTrace ecr_relabel(const ChainTrace& trace, int reference) {
    if (trace.iterations.empty())
        throw std::invalid_argument("ecr_relabel: empty trace");
    if (reference < 0) {
        reference = 0;
        for (int m = 1; m < static_cast<int>(trace.iterations.size()); ++m)
            if (trace.iterations[m].log_joint >
                trace.iterations[reference].log_joint)
                reference = m;
    }
    if (reference >= static_cast<int>(trace.iterations.size()))
        throw std::invalid_argument("ecr_relabel: reference out of range");
    const std::vector<int> ref_flat =
        flatten_labels(trace.iterations[reference].z);
    const int k_ref = columns_of(trace.iterations[reference]);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    ChainTrace out;
    out.kernel = trace.kernel;
    out.n_groups = trace.n_groups;
    out.dim = trace.dim;
    out.group_ids = trace.group_ids;
    out.iterations.reserve(trace.iterations.size());
    for (const auto& rec : trace.iterations) {
        const std::vector<int> flat = flatten_labels(rec.z);
        if (flat.size() != ref_flat.size())
            throw std::invalid_argument("ecr_relabel: ragged trace");
        const int k_cur = columns_of(rec);
        const int width = std::max(k_cur, k_ref);
        // agreement counts; scaled so agreement dominates the identity bonus
        std::vector<std::vector<long long>> cost(
            width, std::vector<long long>(width, 0));
        for (std::size_t i = 0; i < flat.size(); ++i)
            cost[flat[i]][ref_flat[i]] -= 1;
        const long long scale = width + 1;
        for (int a = 0; a < width; ++a)
            for (int b = 0; b < width; ++b)
                cost[a][b] = cost[a][b] * scale - (a == b ? 1 : 0);
        const std::vector<int> perm = min_cost_assignment(cost);

        IterationRecord next;
        next.p = rec.p;
        next.alpha0 = rec.alpha0;
        next.gamma_conc = rec.gamma_conc;
        next.log_joint = rec.log_joint;
        next.z.resize(rec.z.size());
        for (std::size_t j = 0; j < rec.z.size(); ++j) {
            next.z[j].resize(rec.z[j].size());
            for (std::size_t i = 0; i < rec.z[j].size(); ++i)
                next.z[j][i] = perm[rec.z[j][i]];
        }
        next.weights.assign(rec.weights.size(),
                            std::vector<double>(width, nan));
        for (std::size_t j = 0; j < rec.weights.size(); ++j)
            for (int a = 0; a < k_cur; ++a)
                next.weights[j][perm[a]] = rec.weights[j][a];
        next.atoms.kernel = rec.atoms.kernel;
        if (rec.atoms.kernel == KernelType::multivariate) {
            next.atoms.vec.assign(width, MultivariateAtom{});
            for (int a = 0; a < k_cur; ++a)
                next.atoms.vec[perm[a]] = rec.atoms.vec[a];
        } else {
            next.atoms.scalar.assign(width, UnivariateAtom{nan, nan});
            for (int a = 0; a < k_cur; ++a)
                next.atoms.scalar[perm[a]] = rec.atoms.scalar[a];
        }
        out.iterations.push_back(std::move(next));
    }
    return out;
}

namespace {

int vi_point_iteration_impl(const ChainTrace& trace, const SimilarityMatrix& psm) {
    if (trace.iterations.empty())
        throw std::invalid_argument("vi_point_estimate: empty trace");
    const int n = static_cast<int>(psm.rows());
    if (psm.cols() != n)
        throw std::invalid_argument("vi_point_estimate: similarity matrix not square");
    std::vector<double> row_sum(n);
    for (int i = 0; i < n; ++i) row_sum[i] = psm.row(i).sum();

    // candidate set: distinct sampled partitions, earliest iteration first
    std::map<std::vector<int>, int> first_seen;
    for (int m = 0; m < static_cast<int>(trace.iterations.size()); ++m) {
        std::vector<int> canon =
            Partition::from_labels(flatten_labels(trace.iterations[m].z))
                .to_labels();
        if (static_cast<int>(canon.size()) != n)
            throw std::invalid_argument(
                "vi_point_estimate: trace/similarity size mismatch");
        first_seen.try_emplace(std::move(canon), m);
    }
    std::vector<std::pair<int, const std::vector<int>*>> candidates;
    candidates.reserve(first_seen.size());
    for (const auto& [labels, m] : first_seen) candidates.push_back({m, &labels});
    std::sort(candidates.begin(), candidates.end());

    int best_iter = -1;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [m, labels] : candidates) {
        const int n_blocks =
            1 + *std::max_element(labels->begin(), labels->end());
        std::vector<double> cluster_size(n_blocks, 0.0);
        for (int lab : *labels) cluster_size[lab] += 1.0;
        double bound = 0.0;
        for (int i = 0; i < n; ++i) {
            double within = 0.0;
            for (int i2 = 0; i2 < n; ++i2)
                if ((*labels)[i2] == (*labels)[i]) within += psm(i, i2);
            bound += std::log(cluster_size[(*labels)[i]]) +
                     std::log(row_sum[i]) - 2.0 * std::log(within);
        }
        if (bound < best) {
            best = bound;
            best_iter = m;
        }
    }
    return best_iter;
}

}  // namespace

Partition vi_point_estimate(const ChainTrace& trace, const SimilarityMatrix& psm) {
    const int m = vi_point_iteration_impl(trace, psm);
    return Partition::from_labels(flatten_labels(trace.iterations[m].z));
}

int vi_point_iteration(const ChainTrace& trace, const SimilarityMatrix& psm) {
    return vi_point_iteration_impl(trace, psm);
}

double ari(const Partition& p1, const Partition& p2) {
    if (p1.n() != p2.n())
        throw std::invalid_argument("ari: partitions cover different ground sets");
    const std::vector<int> a = p1.to_labels();
    const std::vector<int> b = p2.to_labels();
    const int n = static_cast<int>(a.size());
    std::map<std::pair<int, int>, long long> joint;
    std::map<int, long long> ca, cb;
    for (int i = 0; i < n; ++i) {
        ++joint[{a[i], b[i]}];
        ++ca[a[i]];
        ++cb[b[i]];
    }
    auto choose2 = [](long long c) { return 0.5 * c * (c - 1); };
    double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& [key, c] : joint) sum_joint += choose2(c);
    for (const auto& [key, c] : ca) sum_a += choose2(c);
    for (const auto& [key, c] : cb) sum_b += choose2(c);
    const double total = choose2(n);
    const double expected = sum_a * sum_b / total;
    const double denom = 0.5 * (sum_a + sum_b) - expected;
    if (denom == 0.0) return 1.0;  // both partitions degenerate and equal
    return (sum_joint - expected) / denom;
}

double nfd(const SimilarityMatrix& a, const SimilarityMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("nfd: dimension mismatch");
    return (a - b).norm() / static_cast<double>(a.rows());
}

double vi_distance(const Partition& p1, const Partition& p2) {
    if (p1.n() != p2.n())
        throw std::invalid_argument("vi_distance: partitions cover different ground sets");
    return vi_from_labels(p1.to_labels(), p2.to_labels());
}

std::vector<LabelRouteIteration> common_unique_from_labels(const ChainTrace& trace) {
    std::vector<LabelRouteIteration> out;
    out.reserve(trace.iterations.size());
    for (const auto& rec : trace.iterations) {
        const int J = static_cast<int>(rec.z.size());
        LabelRouteIteration it;
        it.occupied.resize(J);
        for (int j = 0; j < J; ++j) {
            std::set<int> s(rec.z[j].begin(), rec.z[j].end());
            it.occupied[j].assign(s.begin(), s.end());
        }
        it.shared.assign(J, std::vector<std::vector<int>>(J));
        for (int j = 0; j < J; ++j)
            for (int j2 = 0; j2 < J; ++j2)
                std::set_intersection(
                    it.occupied[j].begin(), it.occupied[j].end(),
                    it.occupied[j2].begin(), it.occupied[j2].end(),
                    std::back_inserter(it.shared[j][j2]));
        it.unique_in_group.resize(J);
        for (int j = 0; j < J; ++j) {
            std::set<int> others;
            for (int j2 = 0; j2 < J; ++j2)
                if (j2 != j)
                    others.insert(it.occupied[j2].begin(), it.occupied[j2].end());
            std::set_difference(it.occupied[j].begin(), it.occupied[j].end(),
                                others.begin(), others.end(),
                                std::back_inserter(it.unique_in_group[j]));
        }
        it.all_common = it.occupied.empty() ? std::vector<int>{} : it.occupied[0];
        for (int j = 1; j < J; ++j) {
            std::vector<int> next;
            std::set_intersection(it.all_common.begin(), it.all_common.end(),
                                  it.occupied[j].begin(), it.occupied[j].end(),
                                  std::back_inserter(next));
            it.all_common = std::move(next);
        }
        out.push_back(std::move(it));
    }
    return out;
}

WeightRouteSummary common_unique_from_weights(const ChainTrace& trace) {
    WeightRouteSummary s;
    const int n_iter = static_cast<int>(trace.iterations.size());
    if (n_iter == 0) return s;
    const int J = static_cast<int>(trace.iterations.front().weights.size());
    int k_total = 0;
    for (const auto& rec : trace.iterations)
        k_total = std::max(k_total, columns_of(rec));

    s.n_common.assign(n_iter, 0);
    s.n_unique.assign(n_iter, std::vector<int>(J, 0));
    s.instantiated.assign(k_total, 0);
    s.p_zero.assign(J, std::vector<double>(k_total, 0.0));
    s.p_unique.assign(J, std::vector<double>(k_total, 0.0));
    for (int j = 0; j < J; ++j)
        for (int j2 = j + 1; j2 < J; ++j2)
            s.p_shared[{j, j2}].assign(k_total, 0.0);

    for (int m = 0; m < n_iter; ++m) {
        const auto& rec = trace.iterations[m];
        if (static_cast<int>(rec.weights.size()) != J)
            throw std::invalid_argument("common_unique_from_weights: ragged groups");
        const int width = columns_of(rec);
        for (int k = 0; k < width; ++k) {
            if (!column_instantiated(rec, k)) continue;
            ++s.instantiated[k];
            int active_count = 0, active_j = -1;
            for (int j = 0; j < J; ++j) {
                const double w = rec.weights[j][k];
                if (w > 0.0) {
                    ++active_count;
                    active_j = j;
                } else {
                    s.p_zero[j][k] += 1.0;
                }
            }
            if (active_count == J) ++s.n_common[m];
            if (active_count == 1) {
                ++s.n_unique[m][active_j];
                s.p_unique[active_j][k] += 1.0;
            }
            for (int j = 0; j < J; ++j)
                for (int j2 = j + 1; j2 < J; ++j2)
                    if (rec.weights[j][k] > 0.0 && rec.weights[j2][k] > 0.0)
                        s.p_shared[{j, j2}][k] += 1.0;
        }
    }
    for (int k = 0; k < k_total; ++k) {
        const double denom = std::max<double>(1.0, s.instantiated[k]);
        for (int j = 0; j < J; ++j) {
            s.p_zero[j][k] /= denom;
            s.p_unique[j][k] /= denom;
        }
        for (auto& [pair, v] : s.p_shared) v[k] /= denom;
    }
    return s;
}

ClusterReport build_cluster_report(
    const ChainTrace& aligned_trace,
    const std::vector<std::vector<int>>& point_labels) {
    if (aligned_trace.iterations.empty())
        throw std::invalid_argument("build_cluster_report: empty trace");
    const int J = aligned_trace.n_groups;
    if (static_cast<int>(point_labels.size()) != J)
        throw std::invalid_argument("build_cluster_report: group count mismatch");
    const WeightRouteSummary wrs = common_unique_from_weights(aligned_trace);

    std::set<int> columns;
    for (const auto& row : point_labels) columns.insert(row.begin(), row.end());

    ClusterReport report;
    report.point_labels = point_labels;
    report.n_common_per_iteration = wrs.n_common;
    report.n_unique_per_iteration = wrs.n_unique;
    const bool multivariate = aligned_trace.kernel == KernelType::multivariate;
    for (int c : columns) {
        ClusterReport::Cluster cl;
        cl.column = c;
        cl.size_by_group.assign(J, 0);
        for (int j = 0; j < J; ++j)
            cl.size_by_group[j] = static_cast<int>(
                std::count(point_labels[j].begin(), point_labels[j].end(), c));
        // Atom locations are averaged over the iterations in which the
        // column is occupied by at least one observation; an unoccupied
        // column's atom is a fresh base-measure draw and would pull the
        // location toward the prior. Weights average over all instantiated
        // iterations, zeros included.
        long long denom = 0, occ_denom = 0;
        double loc = 0.0;
        Eigen::VectorXd vloc = Eigen::VectorXd::Zero(aligned_trace.dim);
        Eigen::VectorXd vloc_occ = Eigen::VectorXd::Zero(aligned_trace.dim);
        double loc_occ = 0.0;
        std::vector<double> wsum(J, 0.0);
        for (const auto& rec : aligned_trace.iterations) {
            if (!column_instantiated(rec, c)) continue;
            ++denom;
            bool occupied = false;
            for (const auto& row : rec.z)
                if (std::find(row.begin(), row.end(), c) != row.end()) {
                    occupied = true;
                    break;
                }
            if (multivariate) {
                vloc += rec.atoms.vec[c].mean;
                if (occupied) vloc_occ += rec.atoms.vec[c].mean;
            } else {
                loc += rec.atoms.scalar[c].mean;
                if (occupied) loc_occ += rec.atoms.scalar[c].mean;
            }
            if (occupied) ++occ_denom;
            for (int j = 0; j < J; ++j) wsum[j] += rec.weights[j][c];
        }
        const double d = std::max<long long>(1, denom);
        const double d_occ = std::max<long long>(1, occ_denom);
        const bool use_occ = occ_denom > 0;
        cl.mean_weight.resize(J);
        for (int j = 0; j < J; ++j) cl.mean_weight[j] = wsum[j] / d;
        if (multivariate) {
            cl.mean_location_vec = use_occ ? (vloc_occ / d_occ).eval()
                                           : (vloc / d).eval();
            cl.mean_location = cl.mean_location_vec.size() > 0
                                   ? cl.mean_location_vec(0)
                                   : 0.0;
        } else {
            cl.mean_location = use_occ ? loc_occ / d_occ : loc / d;
        }
        cl.p_zero.resize(J);
        cl.p_unique.resize(J);
        for (int j = 0; j < J; ++j) {
            cl.p_zero[j] = wrs.p_zero[j][c];
            cl.p_unique[j] = wrs.p_unique[j][c];
        }
        for (const auto& [pair, v] : wrs.p_shared) cl.p_shared[pair] = v[c];
        report.clusters.push_back(std::move(cl));
    }
    std::sort(report.clusters.begin(), report.clusters.end(),
              [](const auto& a, const auto& b) {
                  return a.mean_location < b.mean_location;
              });
    return report;
}

}  // namespace plaid
