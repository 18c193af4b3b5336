#pragma once

#include <vector>

#include <Eigen/Dense>

#include "plaid/dataset.hpp"
#include "plaid/posterior.hpp"
#include "plaid/rng.hpp"

namespace plaid {

// Simulation scenarios for grouped mixture data. Component labels are drawn
// first and recorded as the truth partition, then observations are drawn
// from the labeled component; mixture weights are normalized exactly.
// All generators are deterministic under their seed.

// Two groups, four well-separated clusters each (no overlap across groups):
// group 1 means {0,4,8,12}, group 2 means {-16,-12,-8,-4}, equal weights,
// variance 0.6.
LabeledDataset gen_s1_case1(int n_per_group = 200, std::uint64_t seed = 1);

// Three groups over means {-4,-2,0,2,4} (variance 0.6) with weights
//   group 1: (0, .8, .2, 0, 0)
//   group 2: (.3, 0, .1, .6, 0)
//   group 3: (0, 0, .2, 0, .8)
// so the mean-0 cluster is the only one shared by all groups.
LabeledDataset gen_s1_case2(int n_per_group = 100, std::uint64_t seed = 1);

enum class Case3Sizes { fixed_per_group, proportional };

// Six groups, nested support: group j mixes the first j of the means
// {0,5,10,13,16,20} with equal weights, variance 0.6. Sizes are either
// n_j = size for all groups (fixed_per_group; size in {50,100,150}) or
// n_j = size * j (proportional; size in {10,20,40}).
LabeledDataset gen_s1_case3(Case3Sizes mode, int size, std::uint64_t seed = 1);

// Three groups of trivariate Gaussians, identity covariance, means
// (-6,4,-6), (-3,2,-3), (0,0,0), (3,-2,-3), (6,-4,-6) and weights
//   group 1: (.2, .2, .2, .2, .2)
//   group 2: (.3, 0, .5, .2, 0)
//   group 3: (0, .6, .4, 0, 0).
LabeledDataset gen_s2(int n_per_group = 100, std::uint64_t seed = 1);

// One group: five Gaussians with means {0,3,6,9,12}, equal weights,
// variance 0.6, n = 300.
LabeledDataset gen_s3(int n = 300, std::uint64_t seed = 1);

// Binary co-clustering matrix of the truth partition (group-major order).
SimilarityMatrix truth_similarity(const std::vector<std::vector<int>>& true_labels);

}  // namespace plaid
