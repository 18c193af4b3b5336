#include "plaid/simgen.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "plaid/distributions.hpp"

namespace plaid {

namespace {

constexpr double kScenarioVar = 0.6;

std::vector<std::string> numbered_ids(int J) {
    std::vector<std::string> ids;
    for (int j = 1; j <= J; ++j) ids.push_back("G" + std::to_string(j));
    return ids;
}

// One univariate mixture group; labels index the global mean list.
void fill_univariate_group(const std::vector<double>& means,
                           const std::vector<double>& weights, int n,
                           RngHandle& rng, std::vector<double>& out_values,
                           std::vector<int>& out_labels) {
    const double sd = std::sqrt(kScenarioVar);
    for (int i = 0; i < n; ++i) {
        const int c = sample_categorical(weights, rng);
        out_labels.push_back(c);
        out_values.push_back(means[c] + sd * rng.normal());
    }
}

}  // namespace

LabeledDataset gen_s1_case1(int n_per_group, std::uint64_t seed) {
    if (n_per_group <= 0)
        throw std::invalid_argument("gen_s1_case1: n_per_group must be positive");
    const std::vector<std::vector<double>> means = {
        {0.0, 4.0, 8.0, 12.0}, {-16.0, -12.0, -8.0, -4.0}};
    const std::vector<double> weights(4, 0.25);
    LabeledDataset out;
    std::vector<std::vector<double>> values(2);
    out.true_labels.resize(2);
    for (int j = 0; j < 2; ++j) {
        RngHandle rng(seed, static_cast<std::uint64_t>(j) + 1);
        std::vector<int> local;
        fill_univariate_group(means[j], weights, n_per_group, rng, values[j], local);
        // truth labels are global: group 2's clusters are disjoint from group 1's
        for (int lab : local) out.true_labels[j].push_back(lab + 4 * j);
    }
    out.data = GroupedDataset::make_univariate(numbered_ids(2), std::move(values));
    return out;
}

LabeledDataset gen_s1_case2(int n_per_group, std::uint64_t seed) {
    if (n_per_group <= 0)
        throw std::invalid_argument("gen_s1_case2: n_per_group must be positive");
    const std::vector<double> means = {-4.0, -2.0, 0.0, 2.0, 4.0};
    const std::vector<std::vector<double>> weights = {
        {0.0, 0.8, 0.2, 0.0, 0.0},
        {0.3, 0.0, 0.1, 0.6, 0.0},
        {0.0, 0.0, 0.2, 0.0, 0.8}};
    LabeledDataset out;
    std::vector<std::vector<double>> values(3);
    out.true_labels.resize(3);
    for (int j = 0; j < 3; ++j) {
        RngHandle rng(seed, static_cast<std::uint64_t>(j) + 1);
        fill_univariate_group(means, weights[j], n_per_group, rng, values[j],
                              out.true_labels[j]);
    }
    out.data = GroupedDataset::make_univariate(numbered_ids(3), std::move(values));
    return out;
}

LabeledDataset gen_s1_case3(Case3Sizes mode, int size, std::uint64_t seed) {
    if (size <= 0)
        throw std::invalid_argument("gen_s1_case3: size must be positive");
    const std::vector<double> means = {0.0, 5.0, 10.0, 13.0, 16.0, 20.0};
    LabeledDataset out;
    std::vector<std::vector<double>> values(6);
    out.true_labels.resize(6);
    for (int j = 0; j < 6; ++j) {
        const int n_j = mode == Case3Sizes::fixed_per_group ? size : size * (j + 1);
        const std::vector<double> sub(means.begin(), means.begin() + j + 1);
        const std::vector<double> weights(j + 1, 1.0 / (j + 1));
        RngHandle rng(seed, static_cast<std::uint64_t>(j) + 1);
        fill_univariate_group(sub, weights, n_j, rng, values[j],
                              out.true_labels[j]);
    }
    out.data = GroupedDataset::make_univariate(numbered_ids(6), std::move(values));
    return out;
}

LabeledDataset gen_s2(int n_per_group, std::uint64_t seed) {
    if (n_per_group <= 0)
        throw std::invalid_argument("gen_s2: n_per_group must be positive");
    std::vector<Eigen::Vector3d> means = {{-6.0, 4.0, -6.0},
                                          {-3.0, 2.0, -3.0},
                                          {0.0, 0.0, 0.0},
                                          {3.0, -2.0, -3.0},
                                          {6.0, -4.0, -6.0}};
    const std::vector<std::vector<double>> weights = {
        {0.2, 0.2, 0.2, 0.2, 0.2},
        {0.3, 0.0, 0.5, 0.2, 0.0},
        {0.0, 0.6, 0.4, 0.0, 0.0}};
    LabeledDataset out;
    std::vector<std::vector<Eigen::VectorXd>> vectors(3);
    out.true_labels.resize(3);
    for (int j = 0; j < 3; ++j) {
        RngHandle rng(seed, static_cast<std::uint64_t>(j) + 1);
        for (int i = 0; i < n_per_group; ++i) {
            const int c = sample_categorical(weights[j], rng);
            out.true_labels[j].push_back(c);
            Eigen::VectorXd x(3);
            for (int d = 0; d < 3; ++d) x(d) = means[c](d) + rng.normal();
            vectors[j].push_back(std::move(x));
        }
    }
    out.data = GroupedDataset::make_multivariate(numbered_ids(3), std::move(vectors));
    return out;
}

LabeledDataset gen_s3(int n, std::uint64_t seed) {
    if (n <= 0) throw std::invalid_argument("gen_s3: n must be positive");
    const std::vector<double> means = {0.0, 3.0, 6.0, 9.0, 12.0};
    const std::vector<double> weights(5, 0.2);
    LabeledDataset out;
    std::vector<std::vector<double>> values(1);
    out.true_labels.resize(1);
    RngHandle rng(seed, 1);
    fill_univariate_group(means, weights, n, rng, values[0],
                          out.true_labels[0]);
    out.data = GroupedDataset::make_univariate({"G1"}, std::move(values));
    return out;
}

SimilarityMatrix truth_similarity(const std::vector<std::vector<int>>& true_labels) {
    const std::vector<int> flat = flatten_labels(true_labels);
    const int n = static_cast<int>(flat.size());
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int i2 = 0; i2 < n; ++i2)
            m(i, i2) = flat[i] == flat[i2] ? 1.0 : 0.0;
    return m;
}

}  // namespace plaid
