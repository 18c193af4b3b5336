#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace plaid {

enum class DataKind { univariate, multivariate, count };

// Grouped observations. Exactly one of the three storage members is
// populated, according to kind; the outer index is always the group. Group
// identifiers keep their order of first appearance in the source data.
struct GroupedDataset {
    DataKind kind = DataKind::univariate;
    int dim = 1;  // coordinate count for multivariate data, 1 otherwise
    std::vector<std::string> group_ids;
    std::vector<std::vector<double>> values;
    std::vector<std::vector<Eigen::VectorXd>> vectors;
    std::vector<std::vector<long long>> counts;

    int n_groups() const { return static_cast<int>(group_ids.size()); }
    int n_obs(int j) const;
    int total_obs() const;

    // Throws std::invalid_argument if the populated storage is inconsistent
    // with kind/dim/group_ids or counts are negative.
    void validate() const;

    static GroupedDataset make_univariate(
        std::vector<std::string> ids, std::vector<std::vector<double>> values);
    static GroupedDataset make_multivariate(
        std::vector<std::string> ids,
        std::vector<std::vector<Eigen::VectorXd>> vectors);
    static GroupedDataset make_count(std::vector<std::string> ids,
                                     std::vector<std::vector<long long>> counts);
};

// A dataset paired with its generating truth, for simulation studies.
struct LabeledDataset {
    GroupedDataset data;
    std::vector<std::vector<int>> true_labels;  // per group, per observation
};

}  // namespace plaid
