#pragma once

// Vector-field learning benchmark: a two-dimensional competitive
// Lotka-Volterra field on the unit square, learned from a handful of noisy
// observations under an invariance prior on the boundary (the field does not
// point outward), with three solver modes and four error metrics, repeated
// over fresh datasets. Also the two small demonstrations built on the same
// machinery: a certified lower bound for global minimization and a
// Kantorovich-dual estimate of the optimal transport cost.

#include "ksos/bounds.hpp"
#include "ksos/kernels.hpp"
#include "ksos/solver.hpp"
#include "ksos/sos.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ksos {

inline Eigen::Vector2d lv_field(const Eigen::Vector2d& x) {
    return {x[0] * (1.0 - x[0] - 0.2 * x[1]), x[1] * (1.0 - x[1] - 0.4 * x[0])};
}

struct VectorFieldProblem {
    int n_data = 5;
    double noise_scale = 1e-2;
    std::uint64_t seed = 0;
};

struct Dataset {
    Eigen::MatrixXd x;  // N x 2, uniform on the unit square
    Eigen::MatrixXd y;  // N x 2, field values plus scaled standard-normal noise
};

inline Dataset make_dataset(const VectorFieldProblem& prob) {
    if (prob.n_data < 1) throw std::invalid_argument("make_dataset: N must be >= 1");
    if (prob.noise_scale < 0.0) throw std::invalid_argument("make_dataset: negative noise");
    std::mt19937_64 rng(prob.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Dataset d;
    d.x.resize(prob.n_data, 2);
    d.y.resize(prob.n_data, 2);
    for (int n = 0; n < prob.n_data; ++n) {
        const double x0 = unif(rng), x1 = unif(rng);
        d.x(n, 0) = x0;
        d.x(n, 1) = x1;
        const Eigen::Vector2d f = lv_field({x0, x1});
        d.y(n, 0) = f[0] + prob.noise_scale * normal(rng);
        d.y(n, 1) = f[1] + prob.noise_scale * normal(rng);
    }
    return d;
}

/// Outer unit normals of the unit square at a boundary point; corners return
/// two (vertical faces listed before horizontal ones).
inline std::vector<Eigen::Vector2d> outward_normal(const Eigen::Vector2d& x) {
    const double tol = 1e-12;
    std::vector<Eigen::Vector2d> out;
    if (x[0] < -tol || x[0] > 1.0 + tol || x[1] < -tol || x[1] > 1.0 + tol)
        throw std::invalid_argument("outward_normal: point not on the boundary");
    if (std::abs(x[0]) <= tol) out.push_back({-1.0, 0.0});
    if (std::abs(x[0] - 1.0) <= tol) out.push_back({1.0, 0.0});
    if (std::abs(x[1]) <= tol) out.push_back({0.0, -1.0});
    if (std::abs(x[1] - 1.0) <= tol) out.push_back({0.0, 1.0});
    if (out.empty()) throw std::invalid_argument("outward_normal: point not on the boundary");
    return out;
}

namespace detail {

// Arc-length parametrization of the unit-square boundary, counterclockwise
// from the origin; t in [0, 4).
inline Eigen::Vector2d boundary_point(double t) {
    if (t < 1.0) return {t, 0.0};
    if (t < 2.0) return {1.0, t - 1.0};
    if (t < 3.0) return {3.0 - t, 1.0};
    return {0.0, 4.0 - t};
}

inline Eigen::Vector2d side_normal(double t) {
    if (t < 1.0) return {0.0, -1.0};
    if (t < 2.0) return {1.0, 0.0};
    if (t < 3.0) return {0.0, 1.0};
    return {-1.0, 0.0};
}

}  // namespace detail

/// Regular boundary grid with M/4 constraint points per side. Each point
/// carries the row c = -n (so c^T f >= 0 encodes <n, f> <= 0); the four
/// corners carry a second row with the other incident normal, placed in a
/// second block with its own sample subset. The interpolation pair f(0) = 0
/// is included.
inline ConstraintSpec boundary_samples(int m) {
    if (m < 4 || m % 4 != 0)
        throw std::invalid_argument("boundary_samples: M must be a positive multiple of 4");
    ConstraintSpec cs;
    cs.samples.resize(m, 2);
    cs.blocks.resize(2);
    for (int j = 0; j < m; ++j) {
        const double t = 4.0 * j / m;
        const Eigen::Vector2d pt = detail::boundary_point(t);
        cs.samples.row(j) = pt;
        const Eigen::Vector2d primary = detail::side_normal(t);
        cs.blocks[0].rows.push_back(ConstraintRow{j, -primary, 0.0});
        if (j % (m / 4) == 0) {
            for (const auto& n : outward_normal(pt))
                if ((n - primary).norm() > 0.5)
                    cs.blocks[1].rows.push_back(ConstraintRow{j, -n, 0.0});
        }
    }
    cs.equality_pairs.push_back(EqualityPair{Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()});
    return cs;
}

struct MetricsReport {
    double angular = 0.0;
    double l2 = 0.0;
    double linf_violation = 0.0;
    double l1_violation = 0.0;
    int grid_resolution = 0;
    int degenerate_points = 0;  // grid points excluded from the angular mean
};

/// Mean angle between the two fields over rows where both have norm above
/// the vanishing threshold; excluded rows are counted.
inline double angular_error(const Eigen::MatrixXd& fhat, const Eigen::MatrixXd& ftrue,
                            int* degenerate = nullptr) {
    if (fhat.rows() != ftrue.rows() || fhat.cols() != ftrue.cols())
        throw std::invalid_argument("angular_error: field shapes differ");
    const double vanish = 1e-9;
    double sum = 0.0;
    int used = 0, skipped = 0;
    for (Eigen::Index i = 0; i < fhat.rows(); ++i) {
        const double na = fhat.row(i).norm(), nb = ftrue.row(i).norm();
        if (na < vanish || nb < vanish) {
            ++skipped;
            continue;
        }
        const double c = std::clamp(fhat.row(i).dot(ftrue.row(i)) / (na * nb), -1.0, 1.0);
        sum += std::acos(c);
        ++used;
    }
    if (degenerate) *degenerate = skipped;
    return used > 0 ? sum / used : 0.0;
}

inline double l2_error(const Eigen::MatrixXd& fhat, const Eigen::MatrixXd& ftrue) {
    if (fhat.rows() != ftrue.rows() || fhat.cols() != ftrue.cols())
        throw std::invalid_argument("l2_error: field shapes differ");
    return (fhat - ftrue).rowwise().squaredNorm().mean();
}

/// Constraint rows attached to a boundary grid: at grid point i, the list of
/// (c, d) pairs whose violation is max(0, -(c^T f + d)).
struct BoundaryConstraintGrid {
    Eigen::MatrixXd points;  // n x d
    std::vector<std::vector<std::pair<Eigen::VectorXd, double>>> rows;
};

/// Invariance rows c = -n(x), d = 0 on an arc-length grid of the unit-square
/// boundary (corners carry both normals).
inline BoundaryConstraintGrid invariance_boundary_grid(int per_side) {
    BoundaryConstraintGrid bc;
    const DomainGrid g = boundary_grid_unit_square(per_side);
    bc.points = g.points;
    bc.rows.resize(static_cast<size_t>(bc.points.rows()));
    for (Eigen::Index i = 0; i < bc.points.rows(); ++i)
        for (const auto& n : outward_normal(bc.points.row(i)))
            bc.rows[static_cast<size_t>(i)].push_back({-n, 0.0});
    return bc;
}

namespace detail {

inline Eigen::VectorXd worst_violations(const Eigen::MatrixXd& fvals,
                                        const BoundaryConstraintGrid& bc) {
    if (fvals.rows() != bc.points.rows())
        throw std::invalid_argument("violation: field values do not match the boundary grid");
    Eigen::VectorXd worst = Eigen::VectorXd::Zero(fvals.rows());
    for (Eigen::Index i = 0; i < fvals.rows(); ++i)
        for (const auto& [c, d] : bc.rows[static_cast<size_t>(i)])
            worst[i] = std::max(worst[i], -std::min(0.0, c.dot(fvals.row(i)) + d));
    return worst;
}

}  // namespace detail

inline double linf_violation(const Eigen::MatrixXd& fvals, const BoundaryConstraintGrid& bc) {
    return detail::worst_violations(fvals, bc).maxCoeff();
}

inline double l1_violation(const Eigen::MatrixXd& fvals, const BoundaryConstraintGrid& bc) {
    return detail::worst_violations(fvals, bc).mean();
}

/// Worst inequality violation of the model at the constraint sample points.
inline double sampled_violation(const RepresenterModel& model, const ConstraintSpec& cs) {
    if (cs.samples.rows() == 0) return 0.0;
    const Eigen::MatrixXd fvals = model.evaluate_batch(cs.samples);
    double worst = 0.0;
    for (const auto& blk : cs.blocks)
        for (const auto& cr : blk.rows)
            worst = std::max(worst, -std::min(0.0, cr.c.dot(fvals.row(cr.sample)) + cr.d));
    return worst;
}

/// All four benchmark metrics of a fitted field against the true one:
/// angular and L2 over an interior grid, violation measures over a 1-D
/// parametrized boundary grid.
inline MetricsReport compute_metrics(const RepresenterModel& model, int grid_per_dim = 100,
                                     int boundary_per_side = 100) {
    const DomainGrid g = box_grid(Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones(), grid_per_dim);
    Eigen::MatrixXd ftrue(g.points.rows(), 2);
    for (Eigen::Index i = 0; i < g.points.rows(); ++i)
        ftrue.row(i) = lv_field(g.points.row(i));
    const Eigen::MatrixXd fhat = model.evaluate_batch(g.points);

    MetricsReport rep;
    rep.grid_resolution = grid_per_dim;
    rep.angular = angular_error(fhat, ftrue, &rep.degenerate_points);
    rep.l2 = l2_error(fhat, ftrue);

    const BoundaryConstraintGrid bc = invariance_boundary_grid(boundary_per_side);
    const Eigen::MatrixXd fb = model.evaluate_batch(bc.points);
    rep.linf_violation = linf_violation(fb, bc);
    rep.l1_violation = l1_violation(fb, bc);
    return rep;
}

inline std::vector<double> default_sigma_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 20; ++i) g.push_back(0.1 * i);
    return g;
}

inline std::vector<double> default_lambda_phi_grid() {
    return {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
}

struct BenchmarkConfig {
    VectorFieldProblem problem;
    std::vector<int> m_list = {8, 20, 40};
    int repeats = 100;
    std::vector<std::string> modes = {"none", "sampled", "ksos"};
    bool auto_hyper = true;  // select on the first repeat's dataset, then freeze
    HyperParams hyper;       // used directly when auto_hyper is false
    int metric_grid = 100;
    int boundary_per_side = 100;
    SolverOptions solver;
    std::vector<double> sigma_grid = default_sigma_grid();
    std::vector<double> lambda_phi_grid = default_lambda_phi_grid();
};

struct RepeatRecord {
    int repeat = 0;
    std::string mode;
    int m = 0;
    MetricsReport metrics;
    bool converged = true;
    double violation_at_samples = 0.0;
};

struct QuartileStats {
    double q1 = 0.0, median = 0.0, q3 = 0.0;
};

struct BenchmarkCell {
    std::string mode;
    int m = 0;
    std::map<std::string, QuartileStats> metrics;
    std::map<std::string, int> n_substituted;
    int n_converged = 0;
};

struct BenchmarkResult {
    HyperParams hyper;
    std::vector<RepeatRecord> repeats;
    std::vector<BenchmarkCell> cells;
};

namespace detail {

inline QuartileStats quartiles(std::vector<double> v) {
    QuartileStats q;
    if (v.empty()) {
        q.q1 = q.median = q.q3 = std::numeric_limits<double>::quiet_NaN();
        return q;
    }
    std::sort(v.begin(), v.end());
    auto at = [&](double p) {
        const double h = p * (static_cast<double>(v.size()) - 1.0);
        const size_t lo = static_cast<size_t>(h);
        if (lo + 1 >= v.size()) return v.back();
        return v[lo] + (h - lo) * (v[lo + 1] - v[lo]);
    };
    q.q1 = at(0.25);
    q.median = at(0.5);
    q.q3 = at(0.75);
    return q;
}

}  // namespace detail

/// Fits all requested modes over fresh datasets (seed = master seed + repeat
/// index) and aggregates per-cell quartiles over the converged repeats.
/// Exact-zero violations are substituted by the double-precision epsilon
/// before aggregation, with a substitution counter per cell.
inline BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) {
    if (cfg.repeats < 1 || cfg.m_list.empty() || cfg.modes.empty())
        throw std::invalid_argument("run_benchmark: empty configuration");
    BenchmarkResult result;

    // Hyperparameters chosen once on the first repeat's dataset, then frozen.
    VectorFieldProblem first = cfg.problem;
    first.seed = cfg.problem.seed;
    const Dataset d0 = make_dataset(first);
    if (cfg.auto_hyper) {
        const ConstraintSpec cs0 = boundary_samples(cfg.m_list.front());
        const BoundaryConstraintGrid bc = invariance_boundary_grid(50);
        auto violation = [&bc](const RepresenterModel& model) {
            return l1_violation(model.evaluate_batch(bc.points), bc);
        };
        result.hyper = hyperparameter_search(d0.x, d0.y, 2, cfg.sigma_grid, cfg.lambda_phi_grid,
                                             cs0, violation, default_lambda_k_grid(), cfg.solver);
    } else {
        result.hyper = cfg.hyper;
        if (!(result.hyper.lambda_k > 0.0)) {
            const KernelSpec spec{result.hyper.sigma_k, 2};
            result.hyper.lambda_k = gcv_select(gram(spec, d0.x), d0.y, default_lambda_k_grid());
        }
    }
    const KernelSpec spec_k{result.hyper.sigma_k, 2};
    const KernelSpec spec_phi{result.hyper.sigma_phi, 1};

    for (int rep = 0; rep < cfg.repeats; ++rep) {
        VectorFieldProblem prob = cfg.problem;
        prob.seed = cfg.problem.seed + static_cast<std::uint64_t>(rep);
        const Dataset data = make_dataset(prob);
        for (int m : cfg.m_list) {
            const ConstraintSpec cs = boundary_samples(m);
            for (const auto& mode : cfg.modes) {
                FitResult fit;
                if (mode == "none") {
                    fit = fit_unconstrained(data.x, data.y, spec_k, result.hyper.lambda_k);
                } else if (mode == "sampled") {
                    fit = fit_sampled(data.x, data.y, spec_k, result.hyper.lambda_k, cs,
                                      cfg.solver);
                } else if (mode == "ksos") {
                    fit = fit_ksos(data.x, data.y, spec_k, result.hyper.lambda_k,
                                   result.hyper.lambda_phi, spec_phi, cs, cfg.solver);
                } else {
                    throw std::invalid_argument("run_benchmark: unknown mode " + mode);
                }
                RepeatRecord rec;
                rec.repeat = rep;
                rec.mode = mode;
                rec.m = m;
                rec.converged = fit.report.converged;
                rec.metrics = compute_metrics(fit.model, cfg.metric_grid, cfg.boundary_per_side);
                rec.violation_at_samples = sampled_violation(fit.model, cs);
                result.repeats.push_back(std::move(rec));
            }
        }
    }

    const double eps = 2.220446049250313e-16;
    for (const auto& mode : cfg.modes) {
        for (int m : cfg.m_list) {
            BenchmarkCell cell;
            cell.mode = mode;
            cell.m = m;
            std::map<std::string, std::vector<double>> vals;
            for (const auto& rec : result.repeats) {
                if (rec.mode != mode || rec.m != m) continue;
                if (!rec.converged) continue;
                ++cell.n_converged;
                vals["angular"].push_back(rec.metrics.angular);
                vals["l2"].push_back(rec.metrics.l2);
                for (auto [name, v] : {std::pair<std::string, double>{"linf", rec.metrics.linf_violation},
                                       {"l1", rec.metrics.l1_violation}}) {
                    if (v == 0.0) {
                        v = eps;
                        cell.n_substituted[name] += 1;
                    }
                    vals[name].push_back(v);
                }
            }
            for (const auto& name : {"angular", "l2", "linf", "l1"}) {
                cell.metrics[name] = detail::quartiles(vals[name]);
                cell.n_substituted.try_emplace(name, 0);
            }
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

struct GlobalOptResult {
    double c_hat = 0.0;
    SosModel sos;
    SolveReport report;
};

/// Certified lower bound on min g: maximize c subject to the sampled values
/// g(x_m) - c matching an SoS block, its trace penalized by lambda_tr.
inline GlobalOptResult global_opt_lower_bound(const std::function<double(const Eigen::VectorXd&)>& g,
                                              const Eigen::MatrixXd& samples,
                                              const KernelSpec& phi_spec, double lambda_tr,
                                              const SolverOptions& opts = {}) {
    if (samples.rows() < 1) throw std::invalid_argument("global_opt_lower_bound: no samples");
    if (lambda_tr < 0.0) throw std::invalid_argument("global_opt_lower_bound: negative lambda_tr");
    const Eigen::Index m = samples.rows();

    qp::KsosQp p;
    p.H = Eigen::MatrixXd::Zero(1, 1);
    p.q = Eigen::VectorXd::Constant(1, 1.0);  // objective -c
    p.A = Eigen::MatrixXd::Constant(m, 1, -1.0);
    p.b.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) p.b[i] = g(samples.row(i));
    p.E.resize(0, 1);
    p.t.resize(0);
    qp::KsosBlockData blk;
    blk.factor = cholesky_factor(gram(phi_spec, samples));
    blk.lambda_tr = lambda_tr;
    for (Eigen::Index i = 0; i < m; ++i) blk.rows.push_back(i);
    p.blocks.push_back(std::move(blk));

    qp::KsosSolution sol = qp::solve_ksos_qp(p, opts);
    GlobalOptResult res;
    res.c_hat = sol.z[0];
    res.sos = SosModel{samples, phi_spec, p.blocks[0].factor, sol.B[0], 0};
    res.report = sol.report;
    return res;
}

struct OtResult {
    double w_hat = 0.0;
    RepresenterModel u, v;
    SosModel sos;
    SolveReport report;
};

/// Kantorovich-dual transport estimate between two empirical measures: the
/// dual potentials are ridge-regularized kernel expansions and the dual
/// feasibility gap c - u - v is constrained to an SoS block at the pair
/// samples (nonnegative side chosen to match dual feasibility u + v <= c).
inline OtResult ot_dual_estimate(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                 const std::function<double(const Eigen::VectorXd&,
                                                            const Eigen::VectorXd&)>& cost,
                                 const Eigen::MatrixXd& pair_x, const Eigen::MatrixXd& pair_y,
                                 const KernelSpec& k_spec, const KernelSpec& phi_pair_spec,
                                 double lambda_k, double lambda_tr,
                                 const SolverOptions& opts = {}) {
    if (X.rows() < 1 || Y.rows() < 1) throw std::invalid_argument("ot_dual_estimate: no samples");
    if (pair_x.rows() != pair_y.rows() || pair_x.rows() < 1)
        throw std::invalid_argument("ot_dual_estimate: invalid pair samples");
    if (!(lambda_k > 0.0)) throw std::invalid_argument("ot_dual_estimate: lambda_k must be > 0");
    const double n_x = static_cast<double>(X.rows());
    const double n_y = static_cast<double>(Y.rows());

    const Eigen::MatrixXd zu = detail::dedup_points({&X, &pair_x});
    const Eigen::MatrixXd zv = detail::dedup_points({&Y, &pair_y});
    const Eigen::Index ju = zu.rows(), jv = zv.rows();
    const Eigen::MatrixXd gu = gram(k_spec, zu), gv = gram(k_spec, zv);

    qp::KsosQp p;
    p.H = Eigen::MatrixXd::Zero(ju + jv, ju + jv);
    p.H.topLeftCorner(ju, ju) = 2.0 * lambda_k * gu;
    p.H.bottomRightCorner(jv, jv) = 2.0 * lambda_k * gv;
    p.q.resize(ju + jv);
    p.q.head(ju) = cross_gram(k_spec, X, zu).colwise().sum().transpose() / n_x;
    p.q.tail(jv) = cross_gram(k_spec, Y, zv).colwise().sum().transpose() / n_y;

    const Eigen::Index m = pair_x.rows();
    p.A.resize(m, ju + jv);
    p.b.resize(m);
    Eigen::MatrixXd pair_points(m, pair_x.cols() + pair_y.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
        p.A.block(i, 0, 1, ju) = -cross_gram(k_spec, pair_x.row(i), zu);
        p.A.block(i, ju, 1, jv) = -cross_gram(k_spec, pair_y.row(i), zv);
        p.b[i] = cost(pair_x.row(i), pair_y.row(i));
        pair_points.row(i) << pair_x.row(i), pair_y.row(i);
    }
    p.E.resize(0, ju + jv);
    p.t.resize(0);
    qp::KsosBlockData blk;
    blk.factor = cholesky_factor(gram(phi_pair_spec, pair_points));
    blk.lambda_tr = lambda_tr;
    for (Eigen::Index i = 0; i < m; ++i) blk.rows.push_back(i);
    p.blocks.push_back(std::move(blk));

    qp::KsosSolution sol = qp::solve_ksos_qp(p, opts);
    OtResult res;
    res.w_hat = p.q.dot(sol.z);  // mean of u over X plus mean of v over Y
    res.u = RepresenterModel{zu, k_spec, sol.z.head(ju)};
    res.v = RepresenterModel{zv, k_spec, sol.z.tail(jv)};
    res.sos = SosModel{pair_points, phi_pair_spec, p.blocks[0].factor, sol.B[0], 0};
    res.report = sol.report;
    return res;
}

}  // namespace ksos
