#include "plaid/dataset.hpp"

#include <cmath>
#include <stdexcept>

namespace plaid {

int GroupedDataset::n_obs(int j) const {
    switch (kind) {
        case DataKind::univariate: return static_cast<int>(values[j].size());
        case DataKind::multivariate: return static_cast<int>(vectors[j].size());
        case DataKind::count: return static_cast<int>(counts[j].size());
    }
    return 0;
}

int GroupedDataset::total_obs() const {
    int total = 0;
    for (int j = 0; j < n_groups(); ++j) total += n_obs(j);
    return total;
}

void GroupedDataset::validate() const {
    const std::size_t J = group_ids.size();
    if (J == 0) throw std::invalid_argument("dataset: no groups");
    auto check_sized = [&](std::size_t got, const char* name, bool expected) {
        if (expected && got != J)
            throw std::invalid_argument(std::string("dataset: ") + name +
                                        " must have one entry per group");
        if (!expected && got != 0)
            throw std::invalid_argument(std::string("dataset: ") + name +
                                        " populated for the wrong kind");
    };
    check_sized(values.size(), "values", kind == DataKind::univariate);
    check_sized(vectors.size(), "vectors", kind == DataKind::multivariate);
    check_sized(counts.size(), "counts", kind == DataKind::count);
    if (kind == DataKind::multivariate) {
        if (dim < 1) throw std::invalid_argument("dataset: dim must be >= 1");
        for (const auto& group : vectors)
            for (const auto& v : group)
                if (v.size() != dim)
                    throw std::invalid_argument(
                        "dataset: vector observation has wrong dimension");
    } else if (dim != 1) {
        throw std::invalid_argument("dataset: dim must be 1 for scalar kinds");
    }
    if (kind == DataKind::univariate)
        for (const auto& group : values)
            for (double y : group)
                if (!std::isfinite(y))
                    throw std::invalid_argument("dataset: non-finite value");
    if (kind == DataKind::count)
        for (const auto& group : counts)
            for (long long c : group)
                if (c < 0)
                    throw std::invalid_argument("dataset: negative count");
}

GroupedDataset GroupedDataset::make_univariate(
    std::vector<std::string> ids, std::vector<std::vector<double>> values) {
    GroupedDataset d;
    d.kind = DataKind::univariate;
    d.group_ids = std::move(ids);
    d.values = std::move(values);
    d.validate();
    return d;
}

GroupedDataset GroupedDataset::make_multivariate(
    std::vector<std::string> ids,
    std::vector<std::vector<Eigen::VectorXd>> vectors) {
    GroupedDataset d;
    d.kind = DataKind::multivariate;
    d.group_ids = std::move(ids);
    d.vectors = std::move(vectors);
    d.dim = 1;
    for (const auto& group : d.vectors)
        if (!group.empty()) {
            d.dim = static_cast<int>(group.front().size());
            break;
        }
    d.validate();
    return d;
}

GroupedDataset GroupedDataset::make_count(
    std::vector<std::string> ids, std::vector<std::vector<long long>> counts) {
    GroupedDataset d;
    d.kind = DataKind::count;
    d.group_ids = std::move(ids);
    d.counts = std::move(counts);
    d.validate();
    return d;
}

}  // namespace plaid
