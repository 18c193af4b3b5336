#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plaid/dataset.hpp"
#include "plaid/pam_sampler.hpp"

namespace plaid {

// Recoverable input problems: malformed files, schema mismatches, invalid
// values. The CLI maps these to its validation exit code.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shortest-exact decimal text for a double (up to 17 significant digits);
// exact zero serializes as the literal token "0" so skip events survive a
// round trip bitwise.
std::string format_double(double x);

// Long-format grouped data CSV. Header selects the kind:
//   group,value        univariate
//   group,v1,...,vq    multivariate
//   group,count        counts
// Group ids are arbitrary strings, mapped to groups in order of first
// appearance. read_data_csv throws ValidationError naming the offending row.
void write_data_csv(const std::filesystem::path& path, const GroupedDataset& data);
GroupedDataset read_data_csv(const std::filesystem::path& path);

// Truth labels in data-row order: header group,label.
void write_truth_labels_csv(const std::filesystem::path& path,
                            const std::vector<std::string>& group_ids,
                            const std::vector<std::vector<int>>& labels);
std::vector<std::vector<int>> read_truth_labels_csv(const std::filesystem::path& path);

// Dense numeric matrix, no header.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

// Chain trace persistence: one CSV per artifact, each with a leading `iter`
// column (0-based kept-iteration index). Atom columns are 0-based.
//   labels.csv   iter, one column per observation (header <group>:<i>)
//   weights.csv  iter,group,column,weight (long; exact zeros written as "0")
//   atoms.csv    iter,column,mean,var                  (scalar kernels)
//                iter,column,mean_1..q,cov_1_1..cov_q_q (multivariate)
//   hypers.csv   iter,K,alpha0,gamma,log_joint,p_<group>...
// Numeric fields round-trip bit-exactly.
void write_trace(const std::filesystem::path& dir, const ChainTrace& trace);
ChainTrace read_trace(const std::filesystem::path& dir);

}  // namespace plaid
