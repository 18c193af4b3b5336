#include "plaid/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace plaid {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        rows.push_back(split_csv_line(line));
    }
    if (rows.empty()) throw ValidationError(path.string() + ": empty file");
    return rows;
}

double parse_double(const std::string& s, const std::string& where) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw ValidationError(where + ": cannot parse number '" + s + "'");
    return v;
}

long long parse_int(const std::string& s, const std::string& where) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const long long v = std::strtoll(begin, &end, 10);
    if (end == begin || *end != '\0')
        throw ValidationError(where + ": cannot parse integer '" + s + "'");
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    return out;
}

std::string row_name(const std::filesystem::path& path, std::size_t data_row) {
    // 1-based, counting the header as row 1
    return path.filename().string() + " row " + std::to_string(data_row + 2);
}

}  // namespace

std::string format_double(double x) {
    if (x == 0.0) return "0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_data_csv(const std::filesystem::path& path, const GroupedDataset& data) {
    data.validate();
    std::ofstream out = open_out(path);
    switch (data.kind) {
        case DataKind::univariate: {
            out << "group,value\n";
            for (int j = 0; j < data.n_groups(); ++j)
                for (double v : data.values[j])
                    out << data.group_ids[j] << ',' << format_double(v) << '\n';
            break;
        }
        case DataKind::multivariate: {
            out << "group";
            for (int d = 1; d <= data.dim; ++d) out << ",v" << d;
            out << '\n';
            for (int j = 0; j < data.n_groups(); ++j)
                for (const auto& v : data.vectors[j]) {
                    out << data.group_ids[j];
                    for (int d = 0; d < data.dim; ++d)
                        out << ',' << format_double(v(d));
                    out << '\n';
                }
            break;
        }
        case DataKind::count: {
            out << "group,count\n";
            for (int j = 0; j < data.n_groups(); ++j)
                for (long long c : data.counts[j])
                    out << data.group_ids[j] << ',' << c << '\n';
            break;
        }
    }
}

GroupedDataset read_data_csv(const std::filesystem::path& path) {
    const auto rows = read_csv(path);
    const auto& header = rows.front();
    if (header.size() < 2 || header[0] != "group")
        throw ValidationError(path.string() +
                              ": header must start with 'group'");
    DataKind kind;
    int dim = 1;
    if (header.size() == 2 && header[1] == "value") {
        kind = DataKind::univariate;
    } else if (header.size() == 2 && header[1] == "count") {
        kind = DataKind::count;
    } else {
        kind = DataKind::multivariate;
        dim = static_cast<int>(header.size()) - 1;
        for (int d = 0; d < dim; ++d)
            if (header[d + 1] != "v" + std::to_string(d + 1))
                throw ValidationError(
                    path.string() +
                    ": multivariate header must be group,v1,...,vq");
    }

    std::vector<std::string> ids;
    std::vector<std::vector<double>> values;
    std::vector<std::vector<Eigen::VectorXd>> vectors;
    std::vector<std::vector<long long>> counts;
    auto group_index = [&](const std::string& id) {
        for (std::size_t j = 0; j < ids.size(); ++j)
            if (ids[j] == id) return static_cast<int>(j);
        ids.push_back(id);
        values.emplace_back();
        vectors.emplace_back();
        counts.emplace_back();
        return static_cast<int>(ids.size()) - 1;
    };

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = row_name(path, r - 1);
        if (row.size() != header.size())
            throw ValidationError(where + ": expected " +
                                  std::to_string(header.size()) + " fields, got " +
                                  std::to_string(row.size()));
        if (row[0].empty())
            throw ValidationError(where + ": empty group id");
        const int j = group_index(row[0]);
        switch (kind) {
            case DataKind::univariate: {
                const double v = parse_double(row[1], where);
                if (!std::isfinite(v))
                    throw ValidationError(where + ": non-finite value");
                values[j].push_back(v);
                break;
            }
            case DataKind::multivariate: {
                Eigen::VectorXd v(dim);
                for (int d = 0; d < dim; ++d) {
                    v(d) = parse_double(row[d + 1], where);
                    if (!std::isfinite(v(d)))
                        throw ValidationError(where + ": non-finite value");
                }
                vectors[j].push_back(std::move(v));
                break;
            }
            case DataKind::count: {
                const long long c = parse_int(row[1], where);
                if (c < 0)
                    throw ValidationError(where + ": negative count");
                counts[j].push_back(c);
                break;
            }
        }
    }
    if (ids.empty()) throw ValidationError(path.string() + ": no data rows");
    switch (kind) {
        case DataKind::univariate:
            return GroupedDataset::make_univariate(std::move(ids), std::move(values));
        case DataKind::multivariate:
            return GroupedDataset::make_multivariate(std::move(ids), std::move(vectors));
        default:
            return GroupedDataset::make_count(std::move(ids), std::move(counts));
    }
}

void write_truth_labels_csv(const std::filesystem::path& path,
                            const std::vector<std::string>& group_ids,
                            const std::vector<std::vector<int>>& labels) {
    if (group_ids.size() != labels.size())
        throw ValidationError("write_truth_labels_csv: group count mismatch");
    std::ofstream out = open_out(path);
    out << "group,label\n";
    for (std::size_t j = 0; j < labels.size(); ++j)
        for (int lab : labels[j]) out << group_ids[j] << ',' << lab << '\n';
}

std::vector<std::vector<int>> read_truth_labels_csv(const std::filesystem::path& path) {
    const auto rows = read_csv(path);
    if (rows.front().size() != 2 || rows.front()[0] != "group" ||
        rows.front()[1] != "label")
        throw ValidationError(path.string() + ": header must be group,label");
    std::vector<std::string> ids;
    std::vector<std::vector<int>> labels;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = row_name(path, r - 1);
        if (row.size() != 2)
            throw ValidationError(where + ": expected 2 fields");
        std::size_t j = 0;
        while (j < ids.size() && ids[j] != row[0]) ++j;
        if (j == ids.size()) {
            ids.push_back(row[0]);
            labels.emplace_back();
        }
        labels[j].push_back(static_cast<int>(parse_int(row[1], where)));
    }
    return labels;
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    std::ofstream out = open_out(path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
    const auto rows = read_csv(path);
    const auto n_cols = rows.front().size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(n_cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != n_cols)
            throw ValidationError(path.string() + ": ragged matrix");
        for (std::size_t j = 0; j < n_cols; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                parse_double(rows[i][j], path.string());
    }
    return m;
}

namespace {

const char* kernel_name(KernelType k) {
    switch (k) {
        case KernelType::univariate: return "univariate";
        case KernelType::multivariate: return "multivariate";
        default: return "count";
    }
}

KernelType kernel_from_name(const std::string& s) {
    if (s == "univariate") return KernelType::univariate;
    if (s == "multivariate") return KernelType::multivariate;
    if (s == "count") return KernelType::count;
    throw ValidationError("unknown kernel '" + s + "'");
}

int record_columns(const IterationRecord& rec) {
    return rec.weights.empty() ? 0 : static_cast<int>(rec.weights[0].size());
}

}  // namespace

void write_trace(const std::filesystem::path& dir, const ChainTrace& trace) {
    std::filesystem::create_directories(dir);
    std::vector<int> group_sizes;
    if (!trace.iterations.empty())
        for (const auto& row : trace.iterations.front().z)
            group_sizes.push_back(static_cast<int>(row.size()));

    nlohmann::json meta;
    meta["kernel"] = kernel_name(trace.kernel);
    meta["dim"] = trace.dim;
    meta["group_ids"] = trace.group_ids;
    meta["group_sizes"] = group_sizes;
    meta["n_iterations"] = trace.iterations.size();
    open_out(dir / "meta.json") << meta.dump(2) << '\n';

    std::ofstream labels = open_out(dir / "labels.csv");
    labels << "iter";
    for (std::size_t j = 0; j < trace.group_ids.size(); ++j)
        for (int i = 0; i < group_sizes[j]; ++i)
            labels << ',' << trace.group_ids[j] << ':' << i;
    labels << '\n';

    std::ofstream weights = open_out(dir / "weights.csv");
    weights << "iter,group,column,weight\n";

    std::ofstream atoms = open_out(dir / "atoms.csv");
    if (trace.kernel == KernelType::multivariate) {
        atoms << "iter,column";
        for (int d = 1; d <= trace.dim; ++d) atoms << ",mean_" << d;
        for (int r = 1; r <= trace.dim; ++r)
            for (int c = 1; c <= trace.dim; ++c) atoms << ",cov_" << r << '_' << c;
        atoms << '\n';
    } else {
        atoms << "iter,column,mean,var\n";
    }

    std::ofstream hypers = open_out(dir / "hypers.csv");
    hypers << "iter,K,alpha0,gamma,log_joint";
    for (const auto& gid : trace.group_ids) hypers << ",p_" << gid;
    hypers << '\n';

    for (std::size_t m = 0; m < trace.iterations.size(); ++m) {
        const auto& rec = trace.iterations[m];
        labels << m;
        for (const auto& row : rec.z)
            for (int lab : row) labels << ',' << lab;
        labels << '\n';

        const int K = record_columns(rec);
        for (std::size_t j = 0; j < rec.weights.size(); ++j)
            for (int k = 0; k < K; ++k)
                weights << m << ',' << trace.group_ids[j] << ',' << k << ','
                        << format_double(rec.weights[j][k]) << '\n';

        for (int k = 0; k < K; ++k) {
            atoms << m << ',' << k;
            if (trace.kernel == KernelType::multivariate) {
                const auto& a = rec.atoms.vec[k];
                for (int d = 0; d < trace.dim; ++d)
                    atoms << ',' << format_double(a.mean(d));
                for (int r = 0; r < trace.dim; ++r)
                    for (int c = 0; c < trace.dim; ++c)
                        atoms << ',' << format_double(a.cov(r, c));
            } else {
                atoms << ',' << format_double(rec.atoms.scalar[k].mean) << ','
                      << format_double(rec.atoms.scalar[k].var);
            }
            atoms << '\n';
        }

        hypers << m << ',' << K << ',' << format_double(rec.alpha0) << ','
               << format_double(rec.gamma_conc) << ','
               << format_double(rec.log_joint);
        for (double p : rec.p) hypers << ',' << format_double(p);
        hypers << '\n';
    }
}

ChainTrace read_trace(const std::filesystem::path& dir) {
    std::ifstream meta_in(dir / "meta.json");
    if (!meta_in)
        throw ValidationError("cannot open " + (dir / "meta.json").string());
    nlohmann::json meta;
    try {
        meta_in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError((dir / "meta.json").string() + ": " + e.what());
    }

    ChainTrace trace;
    trace.kernel = kernel_from_name(meta.at("kernel").get<std::string>());
    trace.dim = meta.at("dim").get<int>();
    trace.group_ids = meta.at("group_ids").get<std::vector<std::string>>();
    trace.n_groups = static_cast<int>(trace.group_ids.size());
    const auto group_sizes = meta.at("group_sizes").get<std::vector<int>>();
    const auto n_iter = meta.at("n_iterations").get<std::size_t>();
    if (group_sizes.size() != trace.group_ids.size())
        throw ValidationError((dir / "meta.json").string() +
                              ": group_sizes/group_ids mismatch");
    trace.iterations.resize(n_iter);
    const int J = trace.n_groups;

    const auto hypers = read_csv(dir / "hypers.csv");
    if (hypers.size() != n_iter + 1)
        throw ValidationError("hypers.csv: expected " + std::to_string(n_iter) +
                              " data rows");
    for (std::size_t r = 1; r < hypers.size(); ++r) {
        const auto& row = hypers[r];
        const std::string where = row_name(dir / "hypers.csv", r - 1);
        if (row.size() != 5 + static_cast<std::size_t>(J))
            throw ValidationError(where + ": wrong field count");
        const auto m = static_cast<std::size_t>(parse_int(row[0], where));
        if (m != r - 1) throw ValidationError(where + ": iterations out of order");
        auto& rec = trace.iterations[m];
        const int K = static_cast<int>(parse_int(row[1], where));
        rec.alpha0 = parse_double(row[2], where);
        rec.gamma_conc = parse_double(row[3], where);
        rec.log_joint = parse_double(row[4], where);
        rec.p.resize(J);
        for (int j = 0; j < J; ++j) rec.p[j] = parse_double(row[5 + j], where);
        rec.weights.assign(J, std::vector<double>(K, 0.0));
        rec.atoms.kernel = trace.kernel;
        if (trace.kernel == KernelType::multivariate)
            rec.atoms.vec.resize(K);
        else
            rec.atoms.scalar.resize(K);
        rec.z.resize(J);
        for (int j = 0; j < J; ++j) rec.z[j].resize(group_sizes[j]);
    }

    const auto labels = read_csv(dir / "labels.csv");
    if (labels.size() != n_iter + 1)
        throw ValidationError("labels.csv: wrong row count");
    std::size_t n_total = 0;
    for (int s : group_sizes) n_total += s;
    for (std::size_t r = 1; r < labels.size(); ++r) {
        const auto& row = labels[r];
        const std::string where = row_name(dir / "labels.csv", r - 1);
        if (row.size() != n_total + 1)
            throw ValidationError(where + ": wrong field count");
        const auto m = static_cast<std::size_t>(parse_int(row[0], where));
        if (m >= n_iter) throw ValidationError(where + ": iter out of range");
        auto& rec = trace.iterations[m];
        std::size_t f = 1;
        for (int j = 0; j < J; ++j)
            for (int i = 0; i < group_sizes[j]; ++i)
                rec.z[j][i] = static_cast<int>(parse_int(row[f++], where));
    }

    const auto weights = read_csv(dir / "weights.csv");
    for (std::size_t r = 1; r < weights.size(); ++r) {
        const auto& row = weights[r];
        const std::string where = row_name(dir / "weights.csv", r - 1);
        if (row.size() != 4) throw ValidationError(where + ": wrong field count");
        const auto m = static_cast<std::size_t>(parse_int(row[0], where));
        if (m >= n_iter) throw ValidationError(where + ": iter out of range");
        auto& rec = trace.iterations[m];
        int j = 0;
        while (j < J && trace.group_ids[j] != row[1]) ++j;
        if (j == J) throw ValidationError(where + ": unknown group '" + row[1] + "'");
        const auto k = parse_int(row[2], where);
        if (k < 0 || k >= static_cast<long long>(rec.weights[j].size()))
            throw ValidationError(where + ": column out of range");
        rec.weights[j][k] = parse_double(row[3], where);
    }

    const auto atoms = read_csv(dir / "atoms.csv");
    const std::size_t atom_fields =
        trace.kernel == KernelType::multivariate
            ? 2 + static_cast<std::size_t>(trace.dim) * (1 + trace.dim)
            : 4;
    for (std::size_t r = 1; r < atoms.size(); ++r) {
        const auto& row = atoms[r];
        const std::string where = row_name(dir / "atoms.csv", r - 1);
        if (row.size() != atom_fields)
            throw ValidationError(where + ": wrong field count");
        const auto m = static_cast<std::size_t>(parse_int(row[0], where));
        if (m >= n_iter) throw ValidationError(where + ": iter out of range");
        auto& rec = trace.iterations[m];
        const auto k = parse_int(row[1], where);
        if (k < 0 || k >= record_columns(rec))
            throw ValidationError(where + ": column out of range");
        if (trace.kernel == KernelType::multivariate) {
            auto& a = rec.atoms.vec[k];
            a.mean.resize(trace.dim);
            a.cov.resize(trace.dim, trace.dim);
            std::size_t f = 2;
            for (int d = 0; d < trace.dim; ++d)
                a.mean(d) = parse_double(row[f++], where);
            for (int rr = 0; rr < trace.dim; ++rr)
                for (int cc = 0; cc < trace.dim; ++cc)
                    a.cov(rr, cc) = parse_double(row[f++], where);
        } else {
            rec.atoms.scalar[k].mean = parse_double(row[2], where);
            rec.atoms.scalar[k].var = parse_double(row[3], where);
        }
    }
    return trace;
}

}  // namespace plaid
