// Command-line workbench: data generation, model fitting, posterior
// summaries, prior simulation, and closed-form evaluation with optional
// Monte-Carlo cross-checks.
//
// Exit codes: 0 success, 2 usage error, 3 validation/input error,
// 4 oracle-check failure.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "plaid/dataset.hpp"
#include "plaid/fsbp_sampler.hpp"
#include "plaid/pam_sampler.hpp"
#include "plaid/posterior.hpp"
#include "plaid/processes.hpp"
#include "plaid/simgen.hpp"
#include "plaid/theory.hpp"
#include "plaid/trace_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct OracleFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path default_out_dir() {
    const char* env = std::getenv("PLAID_OUT_DIR");
    return (env != nullptr && *env != '\0') ? fs::path(env) : fs::path(".");
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string strip_quotes(std::string s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

std::string scalar_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
}

// Flat key=value configuration (JSON object or TOML-style lines); keys are
// long option names without the leading dashes.
std::map<std::string, std::string> parse_config_file(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw plaid::ValidationError("cannot open config file " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    std::map<std::string, std::string> out;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw plaid::ValidationError(file.string() + ": " + e.what());
        }
        if (!j.is_object())
            throw plaid::ValidationError(file.string() + ": expected a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (value.is_array()) {
                std::string joined;
                for (const auto& item : value) {
                    if (!joined.empty()) joined += ',';
                    joined += scalar_to_string(item);
                }
                out[key] = joined;
            } else if (value.is_object() || value.is_null()) {
                throw plaid::ValidationError(file.string() + ": key '" + key +
                                             "' must be a flat value");
            } else {
                out[key] = scalar_to_string(value);
            }
        }
        return out;
    }
    std::istringstream lines(text);
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw plaid::ValidationError(file.string() + " line " +
                                         std::to_string(line_no) +
                                         ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = strip_quotes(trim(line.substr(eq + 1)));
        if (key.empty())
            throw plaid::ValidationError(file.string() + " line " +
                                         std::to_string(line_no) + ": empty key");
        out[key] = value;
    }
    return out;
}

// Replaces `--config file` with `--key=value` tokens for every config entry
// whose option was not given explicitly, so command-line flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string file;
        std::size_t consumed = 0;
        if (args[i] == "--config") {
            if (i + 1 >= args.size())
                throw plaid::ValidationError("--config requires a file argument");
            file = args[i + 1];
            consumed = 2;
        } else if (args[i].rfind("--config=", 0) == 0) {
            file = args[i].substr(9);
            consumed = 1;
        } else {
            continue;
        }
        auto entries = parse_config_file(file);
        for (auto it = entries.begin(); it != entries.end();) {
            const std::string flag = "--" + it->first;
            bool given = false;
            for (std::size_t a = 0; a < args.size() && !given; ++a) {
                if (a >= i && a < i + consumed) continue;
                given = args[a] == flag || args[a].rfind(flag + "=", 0) == 0;
            }
            it = given ? entries.erase(it) : std::next(it);
        }
        std::vector<std::string> out(args.begin(),
                                     args.begin() + static_cast<long>(i));
        for (const auto& [key, value] : entries)
            out.push_back("--" + key + "=" + value);
        out.insert(out.end(), args.begin() + static_cast<long>(i + consumed),
                   args.end());
        return out;
    }
    return args;
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataOptions {
    std::string scenario;
    std::uint64_t seed = 1;
    int n = 0;  // 0 = scenario default
    std::string case3_mode = "fixed";
    int case3_size = 100;
    std::string out;
};

int run_gen_data(const GenDataOptions& opt) {
    plaid::LabeledDataset ds;
    if (opt.scenario == "s1c1") {
        ds = plaid::gen_s1_case1(opt.n > 0 ? opt.n : 200, opt.seed);
    } else if (opt.scenario == "s1c2") {
        ds = plaid::gen_s1_case2(opt.n > 0 ? opt.n : 100, opt.seed);
    } else if (opt.scenario == "s1c3") {
        plaid::Case3Sizes mode;
        if (opt.case3_mode == "fixed")
            mode = plaid::Case3Sizes::fixed_per_group;
        else if (opt.case3_mode == "proportional")
            mode = plaid::Case3Sizes::proportional;
        else
            throw plaid::ValidationError(
                "case3-mode must be 'fixed' or 'proportional'");
        ds = plaid::gen_s1_case3(mode, opt.case3_size, opt.seed);
    } else if (opt.scenario == "s2") {
        ds = plaid::gen_s2(opt.n > 0 ? opt.n : 100, opt.seed);
    } else if (opt.scenario == "s3") {
        ds = plaid::gen_s3(opt.n > 0 ? opt.n : 300, opt.seed);
    } else {
        throw CLI::ValidationError(
            "--scenario", "unknown scenario '" + opt.scenario +
                              "' (expected s1c1, s1c2, s1c3, s2, or s3)");
    }
    const fs::path out = opt.out.empty() ? default_out_dir() : fs::path(opt.out);
    fs::create_directories(out);
    plaid::write_data_csv(out / "data.csv", ds.data);
    plaid::write_truth_labels_csv(out / "truth_labels.csv", ds.data.group_ids,
                                  ds.true_labels);
    plaid::write_matrix_csv(out / "truth_psm.csv",
                            plaid::truth_similarity(ds.true_labels));
    std::cout << "wrote " << ds.data.total_obs() << " observations in "
              << ds.data.n_groups() << " groups to " << (out / "data.csv").string()
              << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
    std::string model;
    std::string data;
    std::string out;
    std::string from_manifest;
    int burnin = 2000, keep = 2000, thin = 1, chains = 1;
    std::uint64_t seed = 1;
    double zeta = 0.5, mh_eps = 0.1;
    double p_a = 0.5, p_b = 0.5;
    double alpha0_shape = 3.0, alpha0_rate = 3.0;
    double gamma_shape = 3.0, gamma_rate = 3.0;
    double alpha0_init = 1.0, gamma_init = 1.0;
    bool fixed_concentrations = false;
    std::vector<double> p_fixed;  // empty = sampled; one value broadcasts
    std::string eta;              // "", "from-data", or comma list
    std::vector<double> nig{0.0, 0.1, 3.0, 1.0};
    std::vector<double> niw_mean;  // empty = origin
    double niw_kappa = 0.1;
    double niw_nu = 0.0;  // 0 = dimension + 1
    double niw_psi_scale = 1.0;
    // When no base-measure flags are given, fit centers and scales the base
    // measure on the pooled data (atom-mean prior variance matching the
    // pooled spread); explicit flags disable that.
    bool nig_explicit = false;
    bool niw_explicit = false;
};

bool is_pam_family(const std::string& model) {
    return model == "pam" || model == "dpam" || model == "hdp";
}

std::vector<double> resolve_eta(const FitOptions& opt,
                                const plaid::GroupedDataset& data) {
    if (opt.model != "dpam") {
        if (!opt.eta.empty())
            throw plaid::ValidationError("--eta applies only to model dpam");
        return {};
    }
    const int J = data.n_groups();
    if (opt.eta.empty()) return std::vector<double>(J, 1.0);
    if (opt.eta == "from-data") {
        std::vector<double> eta(J);
        for (int j = 0; j < J; ++j) {
            double sum = 0.0;
            for (long long c : data.counts[j]) sum += static_cast<double>(c);
            eta[j] = sum / static_cast<double>(data.n_obs(j));
            if (!(eta[j] > 0.0))
                throw plaid::ValidationError(
                    "--eta from-data: group " + data.group_ids[j] +
                    " has zero mean count");
        }
        return eta;
    }
    std::vector<double> eta;
    std::istringstream parts(opt.eta);
    std::string tok;
    while (std::getline(parts, tok, ',')) {
        try {
            eta.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw plaid::ValidationError("--eta: cannot parse '" + tok + "'");
        }
    }
    if (eta.size() == 1) eta.assign(J, eta[0]);
    if (static_cast<int>(eta.size()) != J)
        throw plaid::ValidationError("--eta: expected 1 or " + std::to_string(J) +
                                     " values");
    return eta;
}

// Serializes the fully resolved run configuration; a manifest replay reuses
// these values verbatim, so data-derived defaults are frozen at first run.
json fit_config_to_json(const FitOptions& opt, const std::vector<double>& eta,
                        const std::vector<double>& p_fixed,
                        const std::vector<double>& nig,
                        const std::vector<double>& niw_mean, double niw_kappa,
                        double niw_nu, double niw_psi_scale) {
    json cfg;
    cfg["burnin"] = opt.burnin;
    cfg["keep"] = opt.keep;
    cfg["thin"] = opt.thin;
    cfg["zeta"] = opt.zeta;
    cfg["mh-eps"] = opt.mh_eps;
    cfg["p-a"] = opt.p_a;
    cfg["p-b"] = opt.p_b;
    cfg["alpha0-shape"] = opt.alpha0_shape;
    cfg["alpha0-rate"] = opt.alpha0_rate;
    cfg["gamma-shape"] = opt.gamma_shape;
    cfg["gamma-rate"] = opt.gamma_rate;
    cfg["alpha0-init"] = opt.alpha0_init;
    cfg["gamma-init"] = opt.gamma_init;
    cfg["fixed-concentrations"] = opt.fixed_concentrations;
    cfg["p-fixed"] = p_fixed;
    cfg["eta-mode"] = opt.eta;
    cfg["eta"] = eta;
    cfg["nig"] = nig;
    cfg["niw-mean"] = niw_mean;
    cfg["niw-kappa"] = niw_kappa;
    cfg["niw-nu"] = niw_nu;
    cfg["niw-psi-scale"] = niw_psi_scale;
    return cfg;
}

FitOptions fit_options_from_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw plaid::ValidationError("cannot open manifest " + path.string());
    json m;
    try {
        in >> m;
    } catch (const json::exception& e) {
        throw plaid::ValidationError(path.string() + ": " + e.what());
    }
    try {
        FitOptions opt;
        opt.model = m.at("model").get<std::string>();
        opt.data = m.at("data").get<std::string>();
        opt.chains = m.at("chains").get<int>();
        opt.seed = m.at("seed").get<std::uint64_t>();
        const json& cfg = m.at("config");
        opt.burnin = cfg.at("burnin").get<int>();
        opt.keep = cfg.at("keep").get<int>();
        opt.thin = cfg.at("thin").get<int>();
        opt.zeta = cfg.at("zeta").get<double>();
        opt.mh_eps = cfg.at("mh-eps").get<double>();
        opt.p_a = cfg.at("p-a").get<double>();
        opt.p_b = cfg.at("p-b").get<double>();
        opt.alpha0_shape = cfg.at("alpha0-shape").get<double>();
        opt.alpha0_rate = cfg.at("alpha0-rate").get<double>();
        opt.gamma_shape = cfg.at("gamma-shape").get<double>();
        opt.gamma_rate = cfg.at("gamma-rate").get<double>();
        opt.alpha0_init = cfg.at("alpha0-init").get<double>();
        opt.gamma_init = cfg.at("gamma-init").get<double>();
        opt.fixed_concentrations = cfg.at("fixed-concentrations").get<bool>();
        opt.p_fixed = cfg.at("p-fixed").get<std::vector<double>>();
        opt.eta = cfg.at("eta-mode").get<std::string>();
        opt.nig = cfg.at("nig").get<std::vector<double>>();
        opt.niw_mean = cfg.at("niw-mean").get<std::vector<double>>();
        opt.niw_kappa = cfg.at("niw-kappa").get<double>();
        opt.niw_nu = cfg.at("niw-nu").get<double>();
        opt.niw_psi_scale = cfg.at("niw-psi-scale").get<double>();
        // manifests record resolved values; replay must not re-derive them
        opt.nig_explicit = true;
        opt.niw_explicit = true;
        return opt;
    } catch (const json::exception& e) {
        throw plaid::ValidationError(path.string() + ": incomplete manifest: " +
                                     e.what());
    }
}

struct ChainOutcome {
    plaid::ChainTrace trace;
    json acceptance;
    double wall_seconds = 0.0;
};

int run_fit(FitOptions opt) {
    if (!opt.from_manifest.empty()) {
        FitOptions replay = fit_options_from_manifest(opt.from_manifest);
        replay.out = opt.out;
        opt = std::move(replay);
    }
    if (opt.model.empty())
        throw CLI::RequiredError("--model (or --from-manifest)");
    if (opt.data.empty())
        throw CLI::RequiredError("--data (or --from-manifest)");
    const bool pam_family = is_pam_family(opt.model);
    if (!pam_family && opt.model != "fsbp" && opt.model != "dp")
        throw CLI::ValidationError(
            "--model", "unknown model '" + opt.model +
                           "' (expected pam, dpam, hdp, fsbp, or dp)");
    if (opt.chains < 1) throw plaid::ValidationError("--chains must be >= 1");

    const plaid::GroupedDataset data = plaid::read_data_csv(opt.data);
    const int J = data.n_groups();

    // model/data compatibility
    if (opt.model == "dpam" && data.kind != plaid::DataKind::count)
        throw plaid::ValidationError("model dpam requires count data (group,count)");
    if (opt.model != "dpam" && data.kind == plaid::DataKind::count)
        throw plaid::ValidationError("count data requires model dpam");
    if (!pam_family && data.kind != plaid::DataKind::univariate)
        throw plaid::ValidationError("models fsbp/dp require univariate data");
    if (!pam_family && J != 1)
        throw plaid::ValidationError("models fsbp/dp require a single group");

    std::vector<double> p_fixed = opt.p_fixed;
    if (opt.model == "hdp") {
        if (!p_fixed.empty())
            throw plaid::ValidationError("model hdp fixes p = 1; drop --p-fixed");
        p_fixed.assign(J, 1.0);
    } else if (opt.model == "dp") {
        if (!p_fixed.empty())
            throw plaid::ValidationError("model dp fixes p = 1; drop --p-fixed");
        p_fixed.assign(1, 1.0);
    } else if (p_fixed.size() == 1 && J > 1) {
        p_fixed.assign(J, p_fixed[0]);
    }
    if (!p_fixed.empty() && static_cast<int>(p_fixed.size()) != J)
        throw plaid::ValidationError("--p-fixed: expected 1 or " +
                                     std::to_string(J) + " values");
    const std::vector<double> eta = resolve_eta(opt, data);

    if (opt.nig.size() != 4)
        throw plaid::ValidationError("--nig: expected m0,k0,a,b");

    // Resolve the base measure. Without explicit flags it is centered and
    // scaled empirically: atom means get prior variance equal to the pooled
    // data spread, so new clusters are reachable anywhere in the data range.
    std::vector<double> nig = opt.nig;
    std::vector<double> niw_mean = opt.niw_mean;
    double niw_kappa = opt.niw_kappa;
    double niw_nu = opt.niw_nu;
    double niw_psi_scale = opt.niw_psi_scale;
    if (data.kind != plaid::DataKind::multivariate) {
        if (!opt.nig_explicit) {
            std::vector<double> pooled;
            if (data.kind == plaid::DataKind::univariate) {
                for (int j = 0; j < J; ++j)
                    pooled.insert(pooled.end(), data.values[j].begin(),
                                  data.values[j].end());
            } else {
                for (int j = 0; j < J; ++j) {
                    const double scale = eta.empty() ? 1.0 : eta[j];
                    for (long long c : data.counts[j])
                        pooled.push_back(static_cast<double>(c) / scale);
                }
            }
            double mean = 0.0;
            for (double v : pooled) mean += v;
            mean /= static_cast<double>(pooled.size());
            double var = 0.0;
            for (double v : pooled) var += (v - mean) * (v - mean);
            var /= static_cast<double>(pooled.size());
            const double prior_var = nig[3] / (nig[2] - 1.0);
            nig = {mean, prior_var / std::max(var, 1e-12), nig[2], nig[3]};
        }
    } else {
        const int q = data.dim;
        if (!opt.niw_explicit) {
            Eigen::VectorXd mean = Eigen::VectorXd::Zero(q);
            long long n_total = 0;
            for (int j = 0; j < J; ++j)
                for (const auto& v : data.vectors[j]) {
                    mean += v;
                    ++n_total;
                }
            mean /= static_cast<double>(n_total);
            double trace_s = 0.0;
            for (int j = 0; j < J; ++j)
                for (const auto& v : data.vectors[j])
                    trace_s += (v - mean).squaredNorm();
            trace_s /= static_cast<double>(n_total);
            niw_mean.assign(mean.data(), mean.data() + q);
            niw_nu = q + 2.0;  // E[covariance] = psi
            niw_psi_scale = 1.0;
            niw_kappa = static_cast<double>(q) / std::max(trace_s, 1e-12);
        } else if (niw_nu <= 0.0) {
            niw_nu = q + 1.0;
        }
        if (niw_mean.empty()) niw_mean.assign(static_cast<std::size_t>(q), 0.0);
    }

    plaid::PamConfig pam_cfg;
    plaid::FsbpConfig fsbp_cfg;
    if (pam_family) {
        switch (data.kind) {
            case plaid::DataKind::univariate:
                pam_cfg.kernel = plaid::KernelType::univariate;
                break;
            case plaid::DataKind::multivariate:
                pam_cfg.kernel = plaid::KernelType::multivariate;
                break;
            case plaid::DataKind::count:
                pam_cfg.kernel = plaid::KernelType::count;
                break;
        }
        pam_cfg.nig = {nig[0], nig[1], nig[2], nig[3]};
        if (pam_cfg.kernel == plaid::KernelType::multivariate) {
            const int q = data.dim;
            plaid::NiwParams niw;
            if (static_cast<int>(niw_mean.size()) != q)
                throw plaid::ValidationError("--niw-mean: expected " +
                                             std::to_string(q) + " values");
            niw.m0 = Eigen::Map<const Eigen::VectorXd>(niw_mean.data(), q);
            niw.k0 = niw_kappa;
            niw.nu = niw_nu;
            niw.psi = niw_psi_scale * Eigen::MatrixXd::Identity(q, q);
            pam_cfg.niw = niw;
        }
        pam_cfg.p_a = opt.p_a;
        pam_cfg.p_b = opt.p_b;
        pam_cfg.alpha0_shape = opt.alpha0_shape;
        pam_cfg.alpha0_rate = opt.alpha0_rate;
        pam_cfg.gamma_shape = opt.gamma_shape;
        pam_cfg.gamma_rate = opt.gamma_rate;
        pam_cfg.zeta = opt.zeta;
        pam_cfg.mh_eps = opt.mh_eps;
        pam_cfg.burn_in = opt.burnin;
        pam_cfg.n_keep = opt.keep;
        pam_cfg.thin = opt.thin;
        pam_cfg.eta = eta;
        pam_cfg.p_fixed = p_fixed;
        pam_cfg.fixed_concentrations = opt.fixed_concentrations;
        pam_cfg.alpha0_init = opt.alpha0_init;
        pam_cfg.gamma_init = opt.gamma_init;
    } else {
        fsbp_cfg.nig = {nig[0], nig[1], nig[2], nig[3]};
        fsbp_cfg.p_a = opt.p_a;
        fsbp_cfg.p_b = opt.p_b;
        fsbp_cfg.gamma_shape = opt.gamma_shape;
        fsbp_cfg.gamma_rate = opt.gamma_rate;
        fsbp_cfg.zeta = opt.zeta;
        fsbp_cfg.mh_eps = opt.mh_eps;
        fsbp_cfg.burn_in = opt.burnin;
        fsbp_cfg.n_keep = opt.keep;
        fsbp_cfg.thin = opt.thin;
        fsbp_cfg.fixed_gamma = opt.fixed_concentrations;
        fsbp_cfg.gamma_init = opt.gamma_init;
        if (opt.model == "dp")
            fsbp_cfg.p_fixed = 1.0;
        else if (!p_fixed.empty())
            fsbp_cfg.p_fixed = p_fixed[0];
    }

    std::vector<ChainOutcome> outcomes(opt.chains);
    std::vector<std::uint64_t> chain_seeds(opt.chains);
    for (int c = 0; c < opt.chains; ++c)
        chain_seeds[c] = opt.seed + static_cast<std::uint64_t>(c);

    auto run_one = [&](int c) {
        const auto t0 = std::chrono::steady_clock::now();
        ChainOutcome& res = outcomes[c];
        if (pam_family) {
            plaid::PamConfig cfg = pam_cfg;
            cfg.seed = chain_seeds[c];
            plaid::PamSampler sampler(data, cfg);
            plaid::ChainTrace trace;
            trace.kernel = cfg.kernel;
            trace.n_groups = data.n_groups();
            trace.dim = data.dim;
            trace.group_ids = data.group_ids;
            for (int it = 0; it < cfg.burn_in; ++it) sampler.iterate();
            trace.iterations.reserve(cfg.n_keep / cfg.thin);
            for (int it = 1; it <= cfg.n_keep; ++it) {
                sampler.iterate();
                if (it % cfg.thin == 0)
                    trace.iterations.push_back(sampler.snapshot());
            }
            res.trace = std::move(trace);
            res.acceptance = {{"beta-prime", sampler.beta_prime_acceptance()}};
        } else {
            plaid::FsbpConfig cfg = fsbp_cfg;
            cfg.seed = chain_seeds[c];
            if (opt.model == "dp") {
                res.trace = plaid::run_dp_slice_chain(data, cfg);
                res.acceptance = json::object();
            } else {
                plaid::FsbpSampler sampler(data, cfg);
                plaid::ChainTrace trace;
                trace.kernel = plaid::KernelType::univariate;
                trace.n_groups = 1;
                trace.dim = 1;
                trace.group_ids = data.group_ids;
                for (int it = 0; it < cfg.burn_in; ++it) sampler.iterate();
                trace.iterations.reserve(cfg.n_keep / cfg.thin);
                for (int it = 1; it <= cfg.n_keep; ++it) {
                    sampler.iterate();
                    if (it % cfg.thin == 0)
                        trace.iterations.push_back(sampler.snapshot());
                }
                res.trace = std::move(trace);
                res.acceptance = {{"pi-prime", sampler.pi_prime_acceptance()},
                                  {"p", sampler.p_acceptance()}};
            }
        }
        res.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
    };

    const auto t0 = std::chrono::steady_clock::now();
    if (opt.chains == 1) {
        run_one(0);
    } else {
        std::vector<std::thread> threads;
        std::vector<std::exception_ptr> errors(opt.chains);
        for (int c = 0; c < opt.chains; ++c)
            threads.emplace_back([&, c] {
                try {
                    run_one(c);
                } catch (...) {
                    errors[c] = std::current_exception();
                }
            });
        for (auto& t : threads) t.join();
        for (const auto& err : errors)
            if (err) std::rethrow_exception(err);
    }
    const double total_wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    const fs::path out = opt.out.empty() ? default_out_dir() : fs::path(opt.out);
    fs::create_directories(out);
    std::vector<std::string> chain_dirs;
    for (int c = 0; c < opt.chains; ++c) {
        const std::string rel =
            opt.chains == 1 ? "." : "chain_" + std::to_string(c + 1);
        chain_dirs.push_back(rel);
        plaid::write_trace(out / rel, outcomes[c].trace);
    }

    json manifest;
    manifest["command"] = "fit";
    manifest["model"] = opt.model;
    manifest["data"] = fs::absolute(opt.data).string();
    manifest["chains"] = opt.chains;
    manifest["seed"] = opt.seed;
    manifest["chain_seeds"] = chain_seeds;
    manifest["chain_dirs"] = chain_dirs;
    manifest["config"] = fit_config_to_json(opt, eta, p_fixed, nig, niw_mean,
                                            niw_kappa, niw_nu, niw_psi_scale);
    json acc = json::array();
    json walls = json::array();
    for (const auto& res : outcomes) {
        acc.push_back(res.acceptance);
        walls.push_back(res.wall_seconds);
    }
    manifest["acceptance"] = acc;
    manifest["wall_seconds"] = walls;
    manifest["total_wall_seconds"] = total_wall;
    std::ofstream mout(out / "manifest.json");
    if (!mout)
        throw plaid::ValidationError("cannot write " +
                                     (out / "manifest.json").string());
    mout << manifest.dump(2) << '\n';

    std::cout << "fit " << opt.model << ": " << opt.chains << " chain(s), "
              << outcomes[0].trace.iterations.size()
              << " kept iterations each, written to " << out.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// summarize

struct SummarizeOptions {
    std::string fit_dir;
    std::string out;
    std::string truth;
    std::string truth_psm;
    int reference = -1;
};

plaid::ChainTrace load_merged_trace(const fs::path& fit_dir) {
    std::vector<fs::path> dirs;
    if (fs::exists(fit_dir / "manifest.json")) {
        std::ifstream in(fit_dir / "manifest.json");
        json m;
        try {
            in >> m;
        } catch (const json::exception& e) {
            throw plaid::ValidationError((fit_dir / "manifest.json").string() +
                                         ": " + e.what());
        }
        for (const auto& rel : m.at("chain_dirs"))
            dirs.push_back(fit_dir / rel.get<std::string>());
    } else if (fs::exists(fit_dir / "meta.json")) {
        dirs.push_back(fit_dir);
    } else {
        throw plaid::ValidationError(fit_dir.string() +
                                     ": no manifest.json or meta.json found");
    }
    plaid::ChainTrace merged = plaid::read_trace(dirs.front());
    for (std::size_t d = 1; d < dirs.size(); ++d) {
        plaid::ChainTrace next = plaid::read_trace(dirs[d]);
        if (next.group_ids != merged.group_ids ||
            next.kernel != merged.kernel || next.dim != merged.dim)
            throw plaid::ValidationError(
                "summarize: chains disagree on data shape");
        for (auto& rec : next.iterations)
            merged.iterations.push_back(std::move(rec));
    }
    if (merged.iterations.empty())
        throw plaid::ValidationError("summarize: trace has no iterations");
    return merged;
}

void write_clusters_csv(const fs::path& path, const plaid::ClusterReport& report,
                        const std::vector<std::string>& gids) {
    std::ofstream out(path);
    if (!out) throw plaid::ValidationError("cannot write " + path.string());
    out << "column,mean_location";
    for (const auto& g : gids) out << ",size_" << g;
    for (const auto& g : gids) out << ",mean_weight_" << g;
    for (const auto& g : gids) out << ",p_zero_" << g;
    for (const auto& g : gids) out << ",p_unique_" << g;
    for (std::size_t j = 0; j < gids.size(); ++j)
        for (std::size_t j2 = j + 1; j2 < gids.size(); ++j2)
            out << ",p_shared_" << gids[j] << '_' << gids[j2];
    out << '\n';
    for (const auto& cl : report.clusters) {
        out << cl.column << ',' << plaid::format_double(cl.mean_location);
        for (int v : cl.size_by_group) out << ',' << v;
        for (double v : cl.mean_weight) out << ',' << plaid::format_double(v);
        for (double v : cl.p_zero) out << ',' << plaid::format_double(v);
        for (double v : cl.p_unique) out << ',' << plaid::format_double(v);
        for (std::size_t j = 0; j < gids.size(); ++j)
            for (std::size_t j2 = j + 1; j2 < gids.size(); ++j2) {
                const auto it = cl.p_shared.find(
                    {static_cast<int>(j), static_cast<int>(j2)});
                out << ','
                    << plaid::format_double(it == cl.p_shared.end() ? 0.0
                                                                    : it->second);
            }
        out << '\n';
    }
}

int run_summarize(const SummarizeOptions& opt) {
    const plaid::ChainTrace merged = load_merged_trace(opt.fit_dir);
    const int J = merged.n_groups;
    const plaid::SimilarityMatrix psm = plaid::similarity_matrix(merged);
    const plaid::ChainTrace aligned = plaid::ecr_relabel(merged, opt.reference);
    const int win = plaid::vi_point_iteration(aligned, psm);
    const std::vector<std::vector<int>>& point_labels = aligned.iterations[win].z;
    const plaid::ClusterReport report =
        plaid::build_cluster_report(aligned, point_labels);

    // posterior cluster-count summaries from the occupied-label route
    const auto label_route = plaid::common_unique_from_labels(merged);
    const double n_iter = static_cast<double>(label_route.size());
    std::vector<double> group_mean(J, 0.0), group_sq(J, 0.0);
    double total_mean = 0.0, total_sq = 0.0, common_mean = 0.0;
    for (const auto& it : label_route) {
        std::set<int> all;
        for (int j = 0; j < J; ++j) {
            const double c = static_cast<double>(it.occupied[j].size());
            group_mean[j] += c;
            group_sq[j] += c * c;
            all.insert(it.occupied[j].begin(), it.occupied[j].end());
        }
        const double t = static_cast<double>(all.size());
        total_mean += t;
        total_sq += t * t;
        common_mean += static_cast<double>(it.all_common.size());
    }
    for (int j = 0; j < J; ++j) {
        group_mean[j] /= n_iter;
        group_sq[j] = std::sqrt(std::max(0.0, group_sq[j] / n_iter -
                                                  group_mean[j] * group_mean[j]));
    }
    total_mean /= n_iter;
    total_sq = std::sqrt(std::max(0.0, total_sq / n_iter - total_mean * total_mean));
    common_mean /= n_iter;

    json rj;
    rj["n_iterations"] = merged.iterations.size();
    rj["point_estimate_iteration"] = win;
    std::set<int> point_cols;
    json point_counts = json::object();
    for (int j = 0; j < J; ++j) {
        std::set<int> cols(point_labels[j].begin(), point_labels[j].end());
        point_counts[merged.group_ids[j]] = cols.size();
        point_cols.insert(cols.begin(), cols.end());
    }
    rj["point_clusters_by_group"] = point_counts;
    rj["point_clusters_total"] = point_cols.size();
    json posterior = json::object();
    for (int j = 0; j < J; ++j)
        posterior[merged.group_ids[j]] = {{"mean", group_mean[j]},
                                          {"sd", group_sq[j]}};
    rj["posterior_clusters_by_group"] = posterior;
    rj["posterior_clusters_total"] = {{"mean", total_mean}, {"sd", total_sq}};
    rj["posterior_common_clusters_mean"] = common_mean;

    json clusters = json::array();
    for (const auto& cl : report.clusters) {
        json c;
        c["column"] = cl.column;
        c["mean_location"] = cl.mean_location;
        for (int j = 0; j < J; ++j) {
            const auto& g = merged.group_ids[j];
            c["size"][g] = cl.size_by_group[j];
            c["mean_weight"][g] = cl.mean_weight[j];
            c["p_zero"][g] = cl.p_zero[j];
            c["p_unique"][g] = cl.p_unique[j];
        }
        for (const auto& [pair, v] : cl.p_shared)
            c["p_shared"][merged.group_ids[pair.first] + "," +
                          merged.group_ids[pair.second]] = v;
        clusters.push_back(std::move(c));
    }
    rj["clusters"] = std::move(clusters);

    if (!opt.truth.empty()) {
        const auto truth = plaid::read_truth_labels_csv(opt.truth);
        const auto truth_flat = plaid::flatten_labels(truth);
        const auto point_flat = plaid::flatten_labels(point_labels);
        if (truth_flat.size() != point_flat.size())
            throw plaid::ValidationError(
                "summarize: truth labels do not match the fitted data size");
        const auto p_true = plaid::Partition::from_labels(truth_flat);
        const auto p_point = plaid::Partition::from_labels(point_flat);
        rj["ari_vs_truth"] = plaid::ari(p_point, p_true);
        rj["vi_vs_truth"] = plaid::vi_distance(p_point, p_true);
        const plaid::SimilarityMatrix truth_psm =
            opt.truth_psm.empty() ? plaid::truth_similarity(truth)
                                  : plaid::read_matrix_csv(opt.truth_psm);
        if (truth_psm.rows() != psm.rows())
            throw plaid::ValidationError(
                "summarize: truth similarity matrix size mismatch");
        rj["nfd_vs_truth"] = plaid::nfd(psm, truth_psm);
    } else if (!opt.truth_psm.empty()) {
        throw plaid::ValidationError("--truth-psm requires --truth");
    }

    const fs::path out = opt.out.empty() ? default_out_dir() : fs::path(opt.out);
    fs::create_directories(out);
    plaid::write_matrix_csv(out / "psm.csv", psm);
    plaid::write_truth_labels_csv(out / "point_labels.csv", merged.group_ids,
                                  point_labels);
    write_clusters_csv(out / "clusters.csv", report, merged.group_ids);
    std::ofstream rout(out / "report.json");
    if (!rout)
        throw plaid::ValidationError("cannot write " +
                                     (out / "report.json").string());
    rout << rj.dump(2) << '\n';

    std::cout << "point estimate: " << point_cols.size() << " clusters across "
              << J << " group(s); posterior mean total " << total_mean << " (sd "
              << total_sq << ")\n";
    if (rj.contains("ari_vs_truth"))
        std::cout << "vs truth: ARI " << rj["ari_vs_truth"].get<double>()
                  << ", VI " << rj["vi_vs_truth"].get<double>() << ", NFD "
                  << rj["nfd_vs_truth"].get<double>() << '\n';
    std::cout << "report written to " << (out / "report.json").string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// prior-sim

struct PriorSimOptions {
    std::string process;
    int groups = 500;
    int obs = 1000;
    int atoms = 1000;
    double alpha0 = 1.0;
    double gamma = 1.0;
    std::vector<double> p_beta;
    double p = 0.0;  // 0 = not fixed
    int sims = 1;
    std::uint64_t seed = 1;
    std::string out;
};

int run_prior_sim(const PriorSimOptions& opt) {
    if (opt.sims < 1) throw plaid::ValidationError("--sims must be >= 1");
    plaid::TruncationConfig cfg;
    cfg.n_atoms = opt.atoms;
    cfg.n_groups = opt.groups;
    cfg.n_obs_per_group = opt.obs;
    const plaid::BaseMeasure base = plaid::standard_normal_base();

    const fs::path out = opt.out.empty() ? default_out_dir() : fs::path(opt.out);
    fs::create_directories(out);
    std::ofstream csv(out / "counts.csv");
    if (!csv)
        throw plaid::ValidationError("cannot write " +
                                     (out / "counts.csv").string());
    csv << "sim,group,clusters\n";

    double sum_group = 0.0, sum_total = 0.0;
    long long group_cells = 0;
    for (int sim = 0; sim < opt.sims; ++sim) {
        plaid::RngHandle rng(opt.seed, static_cast<std::uint64_t>(sim));
        plaid::ProcessDraw draw;
        if (opt.process == "cam") {
            draw = plaid::simulate_cam(opt.alpha0, opt.gamma, cfg, base, rng);
        } else if (opt.process == "hdp") {
            draw = plaid::simulate_hdp(opt.alpha0, opt.gamma, cfg, base, rng);
        } else if (opt.process == "pam") {
            plaid::PamPriorSpec spec;
            if (!opt.p_beta.empty()) {
                if (opt.p_beta.size() != 2)
                    throw plaid::ValidationError("--p-beta: expected a,b");
                spec.a = opt.p_beta[0];
                spec.b = opt.p_beta[1];
            }
            if (opt.p > 0.0)
                spec.p_fixed.assign(static_cast<std::size_t>(opt.groups), opt.p);
            draw = plaid::simulate_pam(spec, opt.alpha0, opt.gamma, cfg, base, rng);
        } else if (opt.process == "fsbp") {
            if (opt.groups != 1)
                throw plaid::ValidationError("--process fsbp requires --groups 1");
            const double p = opt.p > 0.0 ? opt.p : 0.5;
            draw = plaid::simulate_fsbp(p, opt.gamma, cfg.n_atoms, base, rng);
        } else {
            throw CLI::ValidationError(
                "--process", "unknown process '" + opt.process +
                                 "' (expected cam, hdp, pam, or fsbp)");
        }
        const plaid::ClusterStats stats = plaid::cluster_stats(draw, opt.obs, rng);
        for (std::size_t j = 0; j < stats.per_group_counts.size(); ++j) {
            csv << sim << ',' << j + 1 << ',' << stats.per_group_counts[j] << '\n';
            sum_group += stats.per_group_counts[j];
            ++group_cells;
        }
        csv << sim << ",total," << stats.total_count << '\n';
        sum_total += stats.total_count;
    }
    std::cout << "mean per-group clusters "
              << sum_group / static_cast<double>(group_cells)
              << ", mean total clusters "
              << sum_total / static_cast<double>(opt.sims) << " ("
              << (out / "counts.csv").string() << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// theory

std::string partition_to_string(const plaid::Partition& part) {
    std::string s = "{";
    for (std::size_t b = 0; b < part.blocks.size(); ++b) {
        if (b) s += '|';
        for (std::size_t i = 0; i < part.blocks[b].size(); ++i) {
            if (i) s += ' ';
            s += std::to_string(part.blocks[b][i] + 1);
        }
    }
    return s + "}";
}

struct TheoryCommon {
    double p = 0.5;
    double gamma = 1.0;
    bool check_oracle = false;
    long long sims = 0;  // 0 = per-command default
    std::uint64_t seed = 1;
};

int run_theory_eppf(int n, const TheoryCommon& c) {
    const plaid::FsbpParams params{c.p, c.gamma};
    const auto parts = plaid::all_partitions(n);
    std::map<plaid::Partition, double> closed;
    double sum = 0.0;
    for (const auto& part : parts) {
        closed[part] = plaid::fsbp_eppf(part, params);
        sum += closed[part];
    }
    std::map<plaid::Partition, double> mc;
    const long long sims = c.sims > 0 ? c.sims : 200000;
    if (c.check_oracle) {
        plaid::RngHandle rng(c.seed, 0);
        mc = plaid::eppf_mc_oracle(n, params, sims, rng);
    }
    std::cout << "partition,probability";
    if (c.check_oracle) std::cout << ",mc_estimate";
    std::cout << '\n';
    bool failed = false;
    std::string failure;
    for (const auto& part : parts) {
        std::cout << partition_to_string(part) << ','
                  << plaid::format_double(closed[part]);
        if (c.check_oracle) {
            const double est = mc.count(part) ? mc[part] : 0.0;
            std::cout << ',' << plaid::format_double(est);
            const double se = std::sqrt(
                std::max(closed[part] * (1.0 - closed[part]), 1e-12) /
                static_cast<double>(sims));
            if (std::abs(est - closed[part]) > 4.0 * se) {
                failed = true;
                failure = partition_to_string(part) + ": |" +
                          std::to_string(est) + " - " +
                          std::to_string(closed[part]) + "| > 4 SE";
            }
        }
        std::cout << '\n';
    }
    std::cout << "sum," << plaid::format_double(sum) << '\n';
    if (std::abs(sum - 1.0) > 1e-8)
        throw OracleFailure("eppf: partition probabilities sum to " +
                            std::to_string(sum));
    if (failed) throw OracleFailure("eppf vs Monte Carlo: " + failure);
    return 0;
}

int run_theory_new_cluster(int i, const TheoryCommon& c) {
    const plaid::FsbpParams params{c.p, c.gamma};
    const double closed = plaid::fsbp_new_cluster_prob(i, params);
    std::cout << "new_cluster_prob," << plaid::format_double(closed) << '\n';
    std::cout << "dp_limit,"
              << plaid::format_double(c.gamma / (c.gamma + i - 1.0)) << '\n';
    if (c.check_oracle) {
        const long long sims = c.sims > 0 ? c.sims : 1000000;
        plaid::RngHandle rng(c.seed, 0);
        const double est = plaid::new_cluster_mc_oracle(i, params, sims, rng);
        const double se = std::sqrt(std::max(closed * (1.0 - closed), 1e-12) /
                                    static_cast<double>(sims));
        std::cout << "mc_estimate," << plaid::format_double(est) << '\n';
        if (std::abs(est - closed) > 4.0 * se)
            throw OracleFailure("new-cluster-prob vs Monte Carlo: |" +
                                std::to_string(est) + " - " +
                                std::to_string(closed) + "| > 4 SE");
    }
    return 0;
}

int run_theory_expected_clusters(int n, const TheoryCommon& c) {
    const plaid::FsbpParams params{c.p, c.gamma};
    std::cout << "expected_clusters,"
              << plaid::format_double(plaid::fsbp_expected_clusters(n, params))
              << '\n';
    std::cout << "dp_expected_clusters,"
              << plaid::format_double(plaid::dp_expected_clusters(n, c.gamma))
              << '\n';
    return 0;
}

int run_theory_moments(double h, const TheoryCommon& c) {
    const plaid::FsbpParams params{c.p, c.gamma};
    const auto [mean, var] = plaid::fsbp_mean_and_variance(h, params);
    std::cout << "mean," << plaid::format_double(mean) << '\n';
    std::cout << "variance," << plaid::format_double(var) << '\n';
    if (c.check_oracle) {
        const long long sims = c.sims > 0 ? c.sims : 10000;
        plaid::RngHandle rng(c.seed, 0);
        const auto mc = plaid::fsbp_moment_mc_oracle(h, params, sims, rng);
        std::cout << "mc_mean," << plaid::format_double(mc.mean) << '\n';
        std::cout << "mc_variance," << plaid::format_double(mc.var) << '\n';
        if (std::abs(mc.mean - mean) > 4.0 * mc.se_mean)
            throw OracleFailure("moments vs Monte Carlo: mean off by > 4 SE");
        if (std::abs(mc.var - var) > 4.0 * mc.se_var)
            throw OracleFailure("moments vs Monte Carlo: variance off by > 4 SE");
    }
    return 0;
}

int run_theory_pam_weight(int k, double gamma, double a, double b) {
    std::cout << "expected_weight,"
              << plaid::format_double(plaid::expected_pam_weight(k, gamma, a, b))
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dependent-clustering workbench: plaid-atoms and "
                 "fractional stick-breaking models"};
    app.require_subcommand(1);

    GenDataOptions gen_opt;
    CLI::App* gen = app.add_subcommand(
        "gen-data", "Generate a simulation scenario with ground truth");
    gen->add_option("--scenario", gen_opt.scenario,
                    "Scenario id: s1c1, s1c2, s1c3, s2, s3")
        ->required();
    gen->add_option("--seed", gen_opt.seed, "RNG seed");
    gen->add_option("--n", gen_opt.n, "Observations per group (0 = default)");
    gen->add_option("--case3-mode", gen_opt.case3_mode,
                    "s1c3 sizes: fixed or proportional");
    gen->add_option("--case3-size", gen_opt.case3_size,
                    "s1c3 size parameter (per group, or per-group multiplier)");
    gen->add_option("--out", gen_opt.out, "Output directory");

    FitOptions fit_opt;
    CLI::App* fit = app.add_subcommand("fit", "Run the MCMC sampler on a dataset");
    fit->add_option("--model", fit_opt.model, "pam, dpam, hdp, fsbp, or dp");
    fit->add_option("--data", fit_opt.data, "Input data CSV");
    fit->add_option("--out", fit_opt.out, "Output directory");
    fit->add_option("--from-manifest", fit_opt.from_manifest,
                    "Re-run a previous fit from its manifest");
    fit->add_option("--burnin", fit_opt.burnin, "Burn-in sweeps");
    fit->add_option("--keep", fit_opt.keep, "Post burn-in sweeps");
    fit->add_option("--thin", fit_opt.thin, "Keep every thin-th sweep");
    fit->add_option("--chains", fit_opt.chains, "Independent chains");
    fit->add_option("--seed", fit_opt.seed, "Base seed (chain c uses seed+c-1)");
    fit->add_option("--zeta", fit_opt.zeta, "Slice threshold decay rate");
    fit->add_option("--mh-eps", fit_opt.mh_eps, "MH proposal half-width");
    fit->add_option("--p-a", fit_opt.p_a, "Beta prior a for keep probability");
    fit->add_option("--p-b", fit_opt.p_b, "Beta prior b for keep probability");
    fit->add_option("--alpha0-shape", fit_opt.alpha0_shape);
    fit->add_option("--alpha0-rate", fit_opt.alpha0_rate);
    fit->add_option("--gamma-shape", fit_opt.gamma_shape);
    fit->add_option("--gamma-rate", fit_opt.gamma_rate);
    fit->add_option("--alpha0-init", fit_opt.alpha0_init);
    fit->add_option("--gamma-init", fit_opt.gamma_init);
    fit->add_flag("--fixed-concentrations", fit_opt.fixed_concentrations,
                  "Keep concentration parameters at their initial values");
    fit->add_option("--p-fixed", fit_opt.p_fixed,
                    "Fix keep probabilities (one value or one per group)")
        ->delimiter(',');
    fit->add_option("--eta", fit_opt.eta,
                    "dpam scales: 'from-data' or comma-separated values");
    fit->add_option("--nig", fit_opt.nig, "Base measure m0,k0,a,b")
        ->delimiter(',')
        ->expected(4);
    fit->add_option("--niw-mean", fit_opt.niw_mean,
                    "Multivariate base measure location")
        ->delimiter(',');
    fit->add_option("--niw-kappa", fit_opt.niw_kappa);
    fit->add_option("--niw-nu", fit_opt.niw_nu, "0 = dimension + 1");
    fit->add_option("--niw-psi-scale", fit_opt.niw_psi_scale);

    SummarizeOptions sum_opt;
    CLI::App* summ = app.add_subcommand(
        "summarize", "Posterior summaries and metrics for a fitted trace");
    summ->add_option("--fit", sum_opt.fit_dir, "Directory written by fit")
        ->required();
    summ->add_option("--out", sum_opt.out, "Output directory");
    summ->add_option("--truth", sum_opt.truth, "Truth labels CSV");
    summ->add_option("--truth-psm", sum_opt.truth_psm,
                     "Truth co-clustering CSV (default: built from --truth)");
    summ->add_option("--reference", sum_opt.reference,
                     "Relabeling reference iteration (-1 = best log joint)");

    PriorSimOptions prior_opt;
    CLI::App* prior = app.add_subcommand(
        "prior-sim", "Prior cluster statistics under truncated simulation");
    prior->add_option("--process", prior_opt.process, "cam, hdp, pam, or fsbp")
        ->required();
    prior->add_option("--groups", prior_opt.groups, "Number of groups");
    prior->add_option("--obs", prior_opt.obs, "Observations per group");
    prior->add_option("--atoms", prior_opt.atoms, "Truncation level");
    prior->add_option("--alpha0", prior_opt.alpha0, "Group-level concentration");
    prior->add_option("--gamma", prior_opt.gamma, "Top-level concentration");
    prior->add_option("--p-beta", prior_opt.p_beta,
                      "Keep-probability Beta prior a,b (pam)")
        ->delimiter(',');
    prior->add_option("--p", prior_opt.p, "Fixed keep/stick probability");
    prior->add_option("--sims", prior_opt.sims, "Independent prior draws");
    prior->add_option("--seed", prior_opt.seed, "RNG seed");
    prior->add_option("--out", prior_opt.out, "Output directory");

    CLI::App* theory = app.add_subcommand(
        "theory", "Closed-form quantities with optional Monte-Carlo checks");
    theory->require_subcommand(1);
    TheoryCommon th;
    int th_n = 3, th_i = 2, th_k = 1;
    double th_h = 0.5, th_a = 1.0, th_b = 1.0;

    auto add_common = [&th](CLI::App* cmd, bool oracle) {
        cmd->add_option("--p", th.p, "Stick fraction scale p");
        cmd->add_option("--gamma", th.gamma, "Concentration");
        if (oracle) {
            cmd->add_flag("--check-oracle", th.check_oracle,
                          "Cross-check against Monte Carlo; exit 4 on >4 SE");
            cmd->add_option("--sims", th.sims, "Monte-Carlo draws (0 = default)");
            cmd->add_option("--seed", th.seed, "Oracle RNG seed");
        }
    };
    CLI::App* th_eppf =
        theory->add_subcommand("eppf", "Partition probabilities for n draws");
    th_eppf->add_option("--n", th_n, "Sample size")->check(CLI::Range(1, 8));
    add_common(th_eppf, true);
    CLI::App* th_new = theory->add_subcommand(
        "new-cluster-prob", "Probability draw i opens a new cluster");
    th_new->add_option("--i", th_i, "Draw index")->check(CLI::Range(1, 500));
    add_common(th_new, true);
    CLI::App* th_exp = theory->add_subcommand(
        "expected-clusters", "Expected distinct clusters among n draws");
    th_exp->add_option("--n", th_n, "Sample size")->check(CLI::Range(1, 500));
    add_common(th_exp, false);
    CLI::App* th_mom = theory->add_subcommand(
        "moments", "Mean and variance of P(A) with H(A) = h");
    th_mom->add_option("--h-a", th_h, "Base-measure mass of A");
    add_common(th_mom, true);
    CLI::App* th_pw = theory->add_subcommand(
        "pam-weight", "Expected group weight of atom k under a Beta keep prior");
    th_pw->add_option("--k", th_k, "Atom index (1-based)")->check(CLI::Range(1, 10000));
    th_pw->add_option("--gamma", th.gamma, "Concentration");
    th_pw->add_option("--a", th_a, "Keep-probability Beta a");
    th_pw->add_option("--b", th_b, "Keep-probability Beta b");

    try {
        std::vector<std::string> args =
            expand_config(std::vector<std::string>(argv + 1, argv + argc));
        std::vector<const char*> cargs{argv[0]};
        for (const auto& a : args) cargs.push_back(a.c_str());
        app.parse(static_cast<int>(cargs.size()),
                  const_cast<char**>(cargs.data()));

        if (*gen) return run_gen_data(gen_opt);
        if (*fit) {
            fit_opt.nig_explicit = fit->count("--nig") > 0;
            fit_opt.niw_explicit =
                fit->count("--niw-mean") + fit->count("--niw-kappa") +
                    fit->count("--niw-nu") + fit->count("--niw-psi-scale") >
                0;
            return run_fit(fit_opt);
        }
        if (*summ) return run_summarize(sum_opt);
        if (*prior) return run_prior_sim(prior_opt);
        if (*th_eppf) return run_theory_eppf(th_n, th);
        if (*th_new) return run_theory_new_cluster(th_i, th);
        if (*th_exp) return run_theory_expected_clusters(th_n, th);
        if (*th_mom) return run_theory_moments(th_h, th);
        if (*th_pw) return run_theory_pam_weight(th_k, th.gamma, th_a, th_b);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const OracleFailure& e) {
        std::cerr << "oracle check failed: " << e.what() << '\n';
        return 4;
    } catch (const plaid::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
