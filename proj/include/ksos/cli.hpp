#pragma once

// Command-line front end: flat key = value config files with [section]
// headers, CSV emission with 17 significant digits (round-trip exact for
// doubles), and the five subcommands fit / benchmark / bounds / globalopt /
// ot. Exit codes: 0 success, 1 usage or configuration or I/O error, 2 solver
// nonconvergence.

#include "ksos/bounds.hpp"
#include "ksos/experiments.hpp"
#include "ksos/kernels.hpp"
#include "ksos/solver.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace ksos {

class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

class NotConvergedError : public std::runtime_error {
public:
    explicit NotConvergedError(const std::string& what) : std::runtime_error(what) {}
};

/// Flat `key = value` configuration with `[section]` headers; `#` starts a
/// comment. Unknown keys are ignored, missing keys fall back to defaults.
class Config {
public:
    static Config parse(std::istream& in) {
        Config cfg;
        std::string line, section;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') throw UsageError("config: malformed section header");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw UsageError("config: expected key = value");
            cfg.values_[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
        return cfg;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw UsageError("config: cannot open " + path);
        return parse(in);
    }

    bool has(const std::string& section, const std::string& key) const {
        const auto s = values_.find(section);
        return s != values_.end() && s->second.count(key) > 0;
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
        const auto s = values_.find(section);
        if (s == values_.end()) return fallback;
        const auto k = s->second.find(key);
        return k == s->second.end() ? fallback : k->second;
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const {
        if (!has(section, key)) return fallback;
        try {
            return std::stod(get_string(section, key, ""));
        } catch (const std::exception&) {
            throw UsageError("config: bad numeric value for " + section + "." + key);
        }
    }

    int get_int(const std::string& section, const std::string& key, int fallback) const {
        if (!has(section, key)) return fallback;
        try {
            return std::stoi(get_string(section, key, ""));
        } catch (const std::exception&) {
            throw UsageError("config: bad integer value for " + section + "." + key);
        }
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        const std::string v = get_string(section, key, "");
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw UsageError("config: bad boolean value for " + section + "." + key);
    }

    std::vector<int> get_int_list(const std::string& section, const std::string& key,
                                  std::vector<int> fallback) const {
        if (!has(section, key)) return fallback;
        std::vector<int> out;
        std::stringstream ss(get_string(section, key, ""));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                out.push_back(std::stoi(trim(item)));
            } catch (const std::exception&) {
                throw UsageError("config: bad integer list for " + section + "." + key);
            }
        }
        if (out.empty()) throw UsageError("config: empty list for " + section + "." + key);
        return out;
    }

    std::vector<std::string> get_string_list(const std::string& section, const std::string& key,
                                             std::vector<std::string> fallback) const {
        if (!has(section, key)) return fallback;
        std::vector<std::string> out;
        std::stringstream ss(get_string(section, key, ""));
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(trim(item));
        return out;
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, std::map<std::string, std::string>> values_;
};

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Line-feed terminated CSV with a fixed header row.
class CsvFile {
public:
    CsvFile(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path) {
        if (!out_) throw UsageError("cannot write " + path.string());
        write_row(header);
    }

    void write_row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

struct CliOptions {
    std::string config_path;
    bool has_seed = false;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    bool force = false;
};

namespace cli_detail {

inline std::filesystem::path prepare_output(const CliOptions& opts, const std::string& name) {
    std::filesystem::create_directories(opts.out_dir);
    const std::filesystem::path p = std::filesystem::path(opts.out_dir) / name;
    if (std::filesystem::exists(p) && !opts.force)
        throw UsageError("output file exists (use --force to overwrite): " + p.string());
    return p;
}

inline void require_seed(const CliOptions& opts) {
    if (!opts.has_seed) throw UsageError("this command is stochastic: --seed is required");
}

struct FitSetup {
    std::string mode;
    VectorFieldProblem problem;
    int m = 20;
    HyperParams hyper;
    SolverOptions solver;
    int metric_grid = 100;
    int boundary_per_side = 100;
};

inline SolverOptions solver_options(const Config& cfg, const std::string& section) {
    SolverOptions s;
    s.max_iterations = cfg.get_int(section, "max_iterations", s.max_iterations);
    s.rho = cfg.get_double(section, "rho", s.rho);
    return s;
}

inline FitSetup read_fit_setup(const Config& cfg, const CliOptions& opts,
                               const std::string& section) {
    require_seed(opts);
    FitSetup f;
    f.mode = cfg.get_string(section, "mode", "ksos");
    if (f.mode != "none" && f.mode != "sampled" && f.mode != "ksos")
        throw UsageError("mode must be one of none, sampled, ksos");
    f.problem.n_data = cfg.get_int(section, "n", 5);
    f.problem.noise_scale = cfg.get_double(section, "noise", 1e-2);
    f.problem.seed = opts.seed;
    f.m = cfg.get_int(section, "m", 20);
    if (f.m < 4 || f.m % 4 != 0) throw UsageError("m must be a positive multiple of 4");
    f.metric_grid = cfg.get_int(section, "field_grid", 100);
    f.boundary_per_side = cfg.get_int(section, "boundary_per_side", 100);
    f.solver = solver_options(cfg, section);

    const Dataset data = make_dataset(f.problem);
    if (cfg.get_bool(section, "auto_hyper", false)) {
        const ConstraintSpec cs = boundary_samples(f.m);
        const BoundaryConstraintGrid bc = invariance_boundary_grid(50);
        auto violation = [&bc](const RepresenterModel& model) {
            return l1_violation(model.evaluate_batch(bc.points), bc);
        };
        f.hyper = hyperparameter_search(data.x, data.y, 2, default_sigma_grid(),
                                        default_lambda_phi_grid(), cs, violation,
                                        default_lambda_k_grid(), f.solver);
    } else {
        f.hyper.sigma_k = cfg.get_double(section, "sigma_k", 1.0);
        f.hyper.lambda_k = cfg.get_double(section, "lambda_k", 0.0);
        if (!(f.hyper.lambda_k > 0.0)) {
            const KernelSpec spec{f.hyper.sigma_k, 2};
            f.hyper.lambda_k = gcv_select(gram(spec, data.x), data.y, default_lambda_k_grid());
        }
        f.hyper.sigma_phi = cfg.get_double(section, "sigma_phi", f.hyper.sigma_k / 2.0);
        f.hyper.lambda_phi = cfg.get_double(section, "lambda_phi", 1e-3);
    }
    return f;
}

inline FitResult run_fit(const FitSetup& f, const Dataset& data, const ConstraintSpec& cs) {
    const KernelSpec spec_k{f.hyper.sigma_k, 2};
    const KernelSpec spec_phi{f.hyper.sigma_phi, 1};
    if (f.mode == "none") return fit_unconstrained(data.x, data.y, spec_k, f.hyper.lambda_k);
    if (f.mode == "sampled")
        return fit_sampled(data.x, data.y, spec_k, f.hyper.lambda_k, cs, f.solver);
    return fit_ksos(data.x, data.y, spec_k, f.hyper.lambda_k, f.hyper.lambda_phi, spec_phi, cs,
                    f.solver);
}

}  // namespace cli_detail

inline int cmd_fit(const CliOptions& opts, const Config& cfg) {
    const auto setup = cli_detail::read_fit_setup(cfg, opts, "fit");
    const auto model_path = cli_detail::prepare_output(opts, "model.csv");
    const auto report_path = cli_detail::prepare_output(opts, "report.csv");
    const auto field_path = cli_detail::prepare_output(opts, "field.csv");

    const Dataset data = make_dataset(setup.problem);
    const ConstraintSpec cs = boundary_samples(setup.m);
    const FitResult fit = cli_detail::run_fit(setup, data, cs);
    const MetricsReport metrics =
        compute_metrics(fit.model, setup.metric_grid, setup.boundary_per_side);

    {
        CsvFile model(model_path, {"anchor_x1", "anchor_x2", "coef_1", "coef_2"});
        for (Eigen::Index j = 0; j < fit.model.anchors.rows(); ++j)
            model.write_row({format_double(fit.model.anchors(j, 0)),
                             format_double(fit.model.anchors(j, 1)),
                             format_double(fit.model.coefficients(j, 0)),
                             format_double(fit.model.coefficients(j, 1))});
    }
    {
        CsvFile report(report_path,
                       {"mode", "n", "m", "seed", "sigma_k", "lambda_k", "sigma_phi",
                        "lambda_phi", "objective", "primal_residual", "stationarity_residual",
                        "iterations", "converged", "wall_time_s", "angular", "l2",
                        "linf_violation", "l1_violation", "degenerate_points"});
        report.write_row({setup.mode, std::to_string(setup.problem.n_data),
                          std::to_string(setup.m), std::to_string(opts.seed),
                          format_double(setup.hyper.sigma_k), format_double(setup.hyper.lambda_k),
                          format_double(setup.hyper.sigma_phi),
                          format_double(setup.hyper.lambda_phi),
                          format_double(fit.report.objective),
                          format_double(fit.report.primal_residual),
                          format_double(fit.report.stationarity_residual),
                          std::to_string(fit.report.iterations),
                          fit.report.converged ? "1" : "0",
                          format_double(fit.report.wall_time_s), format_double(metrics.angular),
                          format_double(metrics.l2), format_double(metrics.linf_violation),
                          format_double(metrics.l1_violation),
                          std::to_string(metrics.degenerate_points)});
    }
    {
        const DomainGrid grid =
            box_grid(Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones(), setup.metric_grid);
        const Eigen::MatrixXd fvals = fit.model.evaluate_batch(grid.points);
        CsvFile field(field_path, {"x1", "x2", "f1", "f2"});
        for (Eigen::Index i = 0; i < grid.points.rows(); ++i)
            field.write_row({format_double(grid.points(i, 0)), format_double(grid.points(i, 1)),
                             format_double(fvals(i, 0)), format_double(fvals(i, 1))});
    }
    return fit.report.converged ? 0 : 2;
}

inline int cmd_benchmark(const CliOptions& opts, const Config& cfg) {
    cli_detail::require_seed(opts);
    BenchmarkConfig bc;
    bc.problem.n_data = cfg.get_int("benchmark", "n", 5);
    bc.problem.noise_scale = cfg.get_double("benchmark", "noise", 1e-2);
    bc.problem.seed = opts.seed;
    bc.m_list = cfg.get_int_list("benchmark", "m_list", {8, 20, 40});
    for (int m : bc.m_list)
        if (m < 4 || m % 4 != 0) throw UsageError("m_list entries must be positive multiples of 4");
    bc.repeats = cfg.get_int("benchmark", "repeats", 100);
    bc.modes = cfg.get_string_list("benchmark", "modes", {"none", "sampled", "ksos"});
    bc.metric_grid = cfg.get_int("benchmark", "metric_grid", 100);
    bc.boundary_per_side = cfg.get_int("benchmark", "boundary_per_side", 100);
    bc.auto_hyper = cfg.get_bool("benchmark", "auto_hyper", true);
    bc.solver = cli_detail::solver_options(cfg, "benchmark");
    if (!bc.auto_hyper) {
        bc.hyper.sigma_k = cfg.get_double("benchmark", "sigma_k", 1.0);
        bc.hyper.lambda_k = cfg.get_double("benchmark", "lambda_k", 0.0);
        bc.hyper.sigma_phi = cfg.get_double("benchmark", "sigma_phi", bc.hyper.sigma_k / 2.0);
        bc.hyper.lambda_phi = cfg.get_double("benchmark", "lambda_phi", 1e-3);
    }

    const auto agg_path = cli_detail::prepare_output(opts, "benchmark.csv");
    const auto rep_path = cli_detail::prepare_output(opts, "benchmark_repeats.csv");
    const BenchmarkResult result = run_benchmark(bc);

    {
        CsvFile agg(agg_path,
                    {"mode", "M", "metric", "q1", "median", "q3", "n_converged", "n_substituted"});
        for (const auto& cell : result.cells)
            for (const auto& name : {"angular", "l2", "linf", "l1"}) {
                const auto& q = cell.metrics.at(name);
                agg.write_row({cell.mode, std::to_string(cell.m), name, format_double(q.q1),
                               format_double(q.median), format_double(q.q3),
                               std::to_string(cell.n_converged),
                               std::to_string(cell.n_substituted.at(name))});
            }
    }
    {
        CsvFile rep(rep_path, {"mode", "M", "repeat", "angular", "l2", "linf_violation",
                               "l1_violation", "violation_at_samples", "converged",
                               "degenerate_points"});
        for (const auto& r : result.repeats)
            rep.write_row({r.mode, std::to_string(r.m), std::to_string(r.repeat),
                           format_double(r.metrics.angular), format_double(r.metrics.l2),
                           format_double(r.metrics.linf_violation),
                           format_double(r.metrics.l1_violation),
                           format_double(r.violation_at_samples), r.converged ? "1" : "0",
                           std::to_string(r.metrics.degenerate_points)});
    }
    return 0;
}

inline int cmd_bounds(const CliOptions& opts, const Config& cfg) {
    const auto setup = cli_detail::read_fit_setup(cfg, opts, "bounds");
    const int s = cfg.get_int("bounds", "s", 2);
    const int domain_grid = cfg.get_int("bounds", "domain_grid", 200);
    const double ball_radius = cfg.get_double("bounds", "ball_radius", 0.0);
    const bool has_beta = cfg.has("bounds", "beta");
    const double beta = cfg.get_double("bounds", "beta", 0.0);

    const auto csv_path = cli_detail::prepare_output(opts, "bounds.csv");
    const auto txt_path = cli_detail::prepare_output(opts, "bounds.txt");

    const Dataset data = make_dataset(setup.problem);
    const ConstraintSpec cs = boundary_samples(setup.m);
    const FitResult fit = cli_detail::run_fit(setup, data, cs);

    const KernelSpec spec_phi{setup.hyper.sigma_phi, 1};
    const DomainGrid boundary = boundary_grid_unit_square(domain_grid);
    const DomainGrid domain =
        box_grid(Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones(), domain_grid);

    const double h = fill_distance(cs.samples, boundary);
    // The invariance constraint has d identically zero.
    const double d_semi1 = 0.0, d_semis = 0.0;
    std::vector<std::function<Eigen::VectorXd(const Eigen::VectorXd&)>> rows = {
        [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            return -outward_normal(x).front();
        }};
    const KernelSpec spec_k{setup.hyper.sigma_k, 2};
    const double ck1 = ck_constant(spec_k, rows, boundary, 1, true);
    const double cks = ck_constant(spec_k, rows, boundary, std::min(s, 2), true);
    const double d2 = kernel_deriv_sup(spec_phi, domain, std::min(s, 2));
    const double mf = fit.model.rkhs_norm();

    // Sampled constraint values per block feed the trace bound.
    double ma = 0.0;
    const Eigen::MatrixXd fvals = fit.model.evaluate_batch(cs.samples);
    for (const auto& blk : cs.blocks) {
        if (blk.rows.empty()) continue;
        Eigen::MatrixXd pts(static_cast<Eigen::Index>(blk.rows.size()), cs.samples.cols());
        Eigen::MatrixXd vals(static_cast<Eigen::Index>(blk.rows.size()), 1);
        for (size_t r = 0; r < blk.rows.size(); ++r) {
            pts.row(static_cast<Eigen::Index>(r)) = cs.samples.row(blk.rows[r].sample);
            vals(static_cast<Eigen::Index>(r), 0) =
                blk.rows[r].c.dot(fvals.row(blk.rows[r].sample)) + blk.rows[r].d;
        }
        ma = std::max(ma, ma_bound(cholesky_factor(gram(spec_phi, pts)), vals));
    }

    double g1_norm = 0.0;
    if (has_beta) g1_norm = solve_margin_function(cs, spec_k, setup.solver).norm;
    const BoundsReport report = assemble_bounds_report(
        2, h, d_semi1, d_semis, ck1, cks, d2, mf, ma, s, ball_radius,
        has_beta ? beta : -1.0, g1_norm);

    {
        CsvFile csv(csv_path, {"h", "d_seminorm1", "d_seminorm_s", "ck1", "cks", "d2", "c0",
                               "m_f", "m_a", "sigma_slow", "sigma_fast", "sigma", "gap", "s",
                               "fast_available", "fast_hypothesis_ok", "ball_radius"});
        csv.write_row({format_double(report.h), format_double(report.d_seminorm1),
                       format_double(report.d_seminorm_s), format_double(report.ck1),
                       format_double(report.cks), format_double(report.d2),
                       report.fast_available ? format_double(report.c0) : "",
                       format_double(report.m_f), format_double(report.m_a),
                       format_double(report.sigma_slow_value),
                       report.fast_available ? format_double(report.sigma_fast_value) : "",
                       format_double(report.sigma), report.has_gap ? format_double(report.gap) : "",
                       std::to_string(report.s), report.fast_available ? "1" : "0",
                       report.fast_hypothesis_ok ? "1" : "0", format_double(report.ball_radius)});
    }
    {
        std::ofstream txt(txt_path);
        if (!txt) throw UsageError("cannot write " + txt_path.string());
        txt << "constraint approximation report (grid proxies under-estimate suprema)\n";
        txt << "  fill distance h            = " << format_double(report.h) << "\n";
        txt << "  |d|_{K,1}, |d|_{K,s}       = " << format_double(report.d_seminorm1) << ", "
            << format_double(report.d_seminorm_s) << "\n";
        txt << "  C_{K,1}, C_{K,s}           = " << format_double(report.ck1) << ", "
            << format_double(report.cks) << "\n";
        txt << "  D^2 (kernel derivatives)   = " << format_double(report.d2) << "\n";
        txt << "  M_f (solution RKHS norm)   = " << format_double(report.m_f) << "\n";
        txt << "  M_A (trace bound)          = " << format_double(report.m_a) << "\n";
        txt << "  sigma_slow                 = " << format_double(report.sigma_slow_value)
            << "\n";
        if (report.fast_available) {
            txt << "  C_0 (s = " << report.s << ")               = " << format_double(report.c0)
                << "\n";
            txt << "  sigma_fast                 = " << format_double(report.sigma_fast_value)
                << (report.fast_hypothesis_ok ? "\n"
                                              : "  [hypothesis-conditional: ball-union covering "
                                                "not verified]\n");
        } else {
            txt << "  sigma_fast                 = unavailable (s < 2)\n";
        }
        txt << "  sigma = min(slow, fast)    = " << format_double(report.sigma) << "\n";
        if (report.has_gap)
            txt << "  objective gap bound        = " << format_double(report.gap) << "\n";
    }
    return fit.report.converged ? 0 : 2;
}

inline int cmd_globalopt(const CliOptions& opts, const Config& cfg) {
    const std::string fname = cfg.get_string("globalopt", "function", "quadratic");
    const double center = cfg.get_double("globalopt", "center", 0.3);
    const double value = cfg.get_double("globalopt", "value", 5.0);
    const int m = cfg.get_int("globalopt", "m", 50);
    const double lo = cfg.get_double("globalopt", "lo", 0.0);
    const double hi = cfg.get_double("globalopt", "hi", 1.0);
    const double sigma_phi = cfg.get_double("globalopt", "sigma_phi", 0.3);
    const double lambda_tr = cfg.get_double("globalopt", "lambda_tr", 1e-6);
    if (m < 1 || !(hi > lo)) throw UsageError("globalopt: invalid sample configuration");

    std::function<double(const Eigen::VectorXd&)> g;
    if (fname == "quadratic")
        g = [center](const Eigen::VectorXd& x) { return (x[0] - center) * (x[0] - center); };
    else if (fname == "constant")
        g = [value](const Eigen::VectorXd&) { return value; };
    else if (fname == "sine")
        g = [](const Eigen::VectorXd& x) { return std::sin(2.0 * M_PI * x[0]); };
    else
        throw UsageError("globalopt: unknown function " + fname);

    const auto path = cli_detail::prepare_output(opts, "globalopt.csv");
    Eigen::MatrixXd samples(m, 1);
    for (int i = 0; i < m; ++i)
        samples(i, 0) = m == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (m - 1);

    const GlobalOptResult res = global_opt_lower_bound(
        g, samples, KernelSpec{sigma_phi, 1}, lambda_tr, cli_detail::solver_options(cfg, "globalopt"));
    CsvFile csv(path, {"c_hat", "sos_trace", "objective", "primal_residual",
                       "stationarity_residual", "iterations", "converged"});
    csv.write_row({format_double(res.c_hat), format_double(sos_trace(res.sos)),
                   format_double(res.report.objective), format_double(res.report.primal_residual),
                   format_double(res.report.stationarity_residual),
                   std::to_string(res.report.iterations), res.report.converged ? "1" : "0"});
    return res.report.converged ? 0 : 2;
}

inline int cmd_ot(const CliOptions& opts, const Config& cfg) {
    const int n = cfg.get_int("ot", "n", 24);
    const double shift = cfg.get_double("ot", "shift", 0.5);
    const int pair_grid = cfg.get_int("ot", "pair_grid", 8);
    const double sigma_k = cfg.get_double("ot", "sigma_k", 0.75);
    const double sigma_phi = cfg.get_double("ot", "sigma_phi", 0.75);
    const double lambda_k = cfg.get_double("ot", "lambda_k", 1e-5);
    const double lambda_tr = cfg.get_double("ot", "lambda_tr", 1e-6);
    if (n < 1 || pair_grid < 2) throw UsageError("ot: invalid sample configuration");

    const auto path = cli_detail::prepare_output(opts, "ot.csv");
    Eigen::MatrixXd x(n, 1), y(n, 1);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = (i + 0.5) / n;
        y(i, 0) = x(i, 0) + shift;
    }
    const double lo = 0.0, hi = 1.0 + std::max(0.0, shift);
    Eigen::MatrixXd px(pair_grid * pair_grid, 1), py(pair_grid * pair_grid, 1);
    for (int i = 0; i < pair_grid; ++i)
        for (int j = 0; j < pair_grid; ++j) {
            px(i * pair_grid + j, 0) = lo + (hi - lo) * i / (pair_grid - 1.0);
            py(i * pair_grid + j, 0) = lo + (hi - lo) * j / (pair_grid - 1.0);
        }
    auto sq_cost = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        return (a - b).squaredNorm();
    };
    const OtResult res =
        ot_dual_estimate(x, y, sq_cost, px, py, KernelSpec{sigma_k, 1},
                         KernelSpec{sigma_phi, 1}, lambda_k, lambda_tr,
                         cli_detail::solver_options(cfg, "ot"));
    CsvFile csv(path, {"w_hat", "sos_trace", "objective", "primal_residual",
                       "stationarity_residual", "iterations", "converged"});
    csv.write_row({format_double(res.w_hat), format_double(sos_trace(res.sos)),
                   format_double(res.report.objective), format_double(res.report.primal_residual),
                   format_double(res.report.stationarity_residual),
                   std::to_string(res.report.iterations), res.report.converged ? "1" : "0"});
    return res.report.converged ? 0 : 2;
}

inline int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"kernel sum-of-squares constrained regression"};
    app.fallthrough();
    CliOptions opts;
    auto* seed_opt =
        app.add_option("--seed", opts.seed, "master seed for stochastic commands");
    app.add_option("--config", opts.config_path, "configuration file (key = value sections)");
    app.add_option("--out", opts.out_dir, "output directory");
    app.add_flag("--force", opts.force, "overwrite existing output files");

    auto* fit = app.add_subcommand("fit", "fit one vector field and emit model/report/field CSVs");
    auto* benchmark =
        app.add_subcommand("benchmark", "repeat the vector-field experiment and emit quartiles");
    auto* bounds = app.add_subcommand("bounds", "fit and report the approximation bounds");
    auto* globalopt = app.add_subcommand("globalopt", "certified lower bound demo");
    auto* ot = app.add_subcommand("ot", "optimal transport dual estimate demo");
    app.require_subcommand(1);

    std::vector<const char*> argv;
    argv.push_back("ksos");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    opts.has_seed = seed_opt->count() > 0;

    try {
        const Config cfg =
            opts.config_path.empty() ? Config() : Config::parse_file(opts.config_path);
        if (fit->parsed()) return cmd_fit(opts, cfg);
        if (benchmark->parsed()) return cmd_benchmark(opts, cfg);
        if (bounds->parsed()) return cmd_bounds(opts, cfg);
        if (globalopt->parsed()) return cmd_globalopt(opts, cfg);
        if (ot->parsed()) return cmd_ot(opts, cfg);
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace ksos
