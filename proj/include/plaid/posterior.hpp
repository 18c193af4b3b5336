#pragma once

#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "plaid/pam_sampler.hpp"
#include "plaid/theory.hpp"

namespace plaid {

// Pairwise co-clustering frequencies; symmetric with unit diagonal.
using SimilarityMatrix = Eigen::MatrixXd;

// Observations are indexed group-major: group 0's observations first, then
// group 1's, and so on.
std::vector<int> flatten_labels(const std::vector<std::vector<int>>& z);

// Fraction of kept iterations in which each observation pair shares an atom
// column. Throws on an empty trace. Invariant under relabeling.
SimilarityMatrix similarity_matrix(const ChainTrace& trace);

// Aligns every iteration's atom columns to a reference iteration (default:
// the kept iteration with the highest recorded log joint, earliest on ties)
// by the label permutation minimizing allocation disagreement — a
// maximum-agreement assignment on the label contingency table, with ties
// broken toward the identity. The permutation is applied consistently to z,
// weight rows, and atoms. Iterations with fewer columns than the aligned
// width are padded with NaN weights: NaN marks "atom not instantiated here",
// which downstream summaries must not read as a skip.
ChainTrace ecr_relabel(const ChainTrace& trace, int reference = -1);

// The sampled partition minimizing the Jensen lower bound of posterior
// expected variation of information (in nats) against the similarity
// matrix; candidates are the distinct sampled partitions, ties broken by
// earliest iteration.
Partition vi_point_estimate(const ChainTrace& trace, const SimilarityMatrix& psm);

// Index of the kept iteration realizing vi_point_estimate; useful for
// reading the winning allocation back in aligned column ids.
int vi_point_iteration(const ChainTrace& trace, const SimilarityMatrix& psm);

// Hubert-Arabie adjusted Rand index.
double ari(const Partition& p1, const Partition& p2);

// ||A - B||_F / n.
double nfd(const SimilarityMatrix& a, const SimilarityMatrix& b);

// Variation of information H(P1) + H(P2) - 2 I(P1, P2), in nats.
double vi_distance(const Partition& p1, const Partition& p2);

// Occupied-label bookkeeping for one kept iteration.
struct LabelRouteIteration {
    std::vector<std::vector<int>> occupied;       // per group, sorted labels
    // shared[j][j']: labels occupied in both j and j' (shared[j][j] = occupied[j])
    std::vector<std::vector<std::vector<int>>> shared;
    std::vector<std::vector<int>> unique_in_group; // occupied in j and nowhere else
    std::vector<int> all_common;                   // occupied in every group
};

std::vector<LabelRouteIteration> common_unique_from_labels(const ChainTrace& trace);

// Zero/nonzero-weight bookkeeping. Per-column probabilities condition on the
// iterations in which the column is instantiated (present and non-NaN), so
// they are exact Monte-Carlo frequencies on ragged traces; per-cluster
// numbers are only meaningful on an aligned (relabeled) trace.
struct WeightRouteSummary {
    std::vector<int> n_common;                // per iteration: positive in every group
    std::vector<std::vector<int>> n_unique;   // per iteration x group
    std::vector<long long> instantiated;      // per column: conditioning count
    std::vector<std::vector<double>> p_zero;  // group x column: Pr(pi_jk = 0 | Data)
    std::map<std::pair<int, int>, std::vector<double>> p_shared;  // (j<j') x column
    std::vector<std::vector<double>> p_unique;  // group x column
};

WeightRouteSummary common_unique_from_weights(const ChainTrace& trace);

// Posterior summary of the clusters occupied by the point partition,
// ordered by posterior mean location (first coordinate for vector atoms).
struct ClusterReport {
    std::vector<std::vector<int>> point_labels;  // per group, aligned columns
    struct Cluster {
        int column = 0;                   // aligned atom column
        double mean_location = 0.0;       // posterior mean of the atom mean
        Eigen::VectorXd mean_location_vec;  // multivariate kernel only
        std::vector<int> size_by_group;
        std::vector<double> mean_weight;  // per group, zeros included
        std::vector<double> p_zero;       // per group
        std::vector<double> p_unique;     // per group
        std::map<std::pair<int, int>, double> p_shared;  // (j<j')
    };
    std::vector<Cluster> clusters;
    std::vector<int> n_common_per_iteration;
    std::vector<std::vector<int>> n_unique_per_iteration;  // iteration x group
};

// aligned_trace must be ECR-relabeled; point_labels are aligned columns per
// group (e.g. the z rows of the VI-optimal iteration).
ClusterReport build_cluster_report(const ChainTrace& aligned_trace,
                                   const std::vector<std::vector<int>>& point_labels);

}  // namespace plaid
