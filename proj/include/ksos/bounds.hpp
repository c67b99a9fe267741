#pragma once

// A-posteriori quantities controlling how well sampled kernel-SoS equalities
// approximate the continuum affine constraints: fill distance, C^s
// seminorms, kernel-derivative bounds, the combinatorial constant C_0, the
// constraint-kernel constant C_K, the trace bound M_A, the perturbation
// magnitudes sigma_slow / sigma_fast, the objective-gap bound, and the
// scattering inequality check.
//
// Suprema over continuous sets are approximated from below by dense grids.

#include "ksos/kernels.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ksos {

/// Finite proxy for a continuous domain: an explicit point list plus the
/// bounding box it came from. `resolution` is points per dimension for box
/// grids and 0 for explicit point sets.
struct DomainGrid {
    Eigen::MatrixXd points;  // n x d
    Eigen::VectorXd lo, hi;
    int resolution = 0;
};

inline DomainGrid box_grid(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int per_dim) {
    if (per_dim < 2) throw std::invalid_argument("box_grid: resolution must be >= 2");
    if (lo.size() != hi.size() || lo.size() < 1)
        throw std::invalid_argument("box_grid: inconsistent box bounds");
    const Eigen::Index d = lo.size();
    Eigen::Index n = 1;
    for (Eigen::Index t = 0; t < d; ++t) n *= per_dim;
    Eigen::MatrixXd pts(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index rem = i;
        for (Eigen::Index t = 0; t < d; ++t) {
            const Eigen::Index idx = rem % per_dim;
            rem /= per_dim;
            pts(i, t) = lo[t] + (hi[t] - lo[t]) * static_cast<double>(idx) / (per_dim - 1);
        }
    }
    return DomainGrid{std::move(pts), lo, hi, per_dim};
}

/// Arc-length grid on the boundary of the unit square, `per_side` points per
/// side, corners included once at the start of each side.
inline DomainGrid boundary_grid_unit_square(int per_side) {
    if (per_side < 1) throw std::invalid_argument("boundary_grid_unit_square: per_side >= 1");
    Eigen::MatrixXd pts(4 * per_side, 2);
    for (int k = 0; k < 4 * per_side; ++k) {
        const double t = 4.0 * k / (4.0 * per_side);
        double x = 0.0, y = 0.0;
        if (t < 1.0) {
            x = t;
        } else if (t < 2.0) {
            x = 1.0;
            y = t - 1.0;
        } else if (t < 3.0) {
            x = 3.0 - t;
            y = 1.0;
        } else {
            y = 4.0 - t;
        }
        pts(k, 0) = x;
        pts(k, 1) = y;
    }
    DomainGrid g;
    g.points = std::move(pts);
    g.lo = Eigen::Vector2d::Zero();
    g.hi = Eigen::Vector2d::Ones();
    g.resolution = 0;
    return g;
}

inline DomainGrid explicit_grid(Eigen::MatrixXd pts) {
    if (pts.rows() < 1) throw std::invalid_argument("explicit_grid: empty point set");
    DomainGrid g;
    g.lo = pts.colwise().minCoeff();
    g.hi = pts.colwise().maxCoeff();
    g.points = std::move(pts);
    g.resolution = 0;
    return g;
}

/// Grid lower approximation of sup_{x in domain} min_m |x - x_m|.
inline double fill_distance(const Eigen::MatrixXd& samples, const DomainGrid& domain) {
    if (samples.rows() < 1) throw std::invalid_argument("fill_distance: no samples");
    if (domain.points.rows() < 1) throw std::invalid_argument("fill_distance: empty grid");
    double h = 0.0;
    for (Eigen::Index i = 0; i < domain.points.rows(); ++i) {
        double dmin = std::numeric_limits<double>::infinity();
        for (Eigen::Index m = 0; m < samples.rows(); ++m)
            dmin = std::min(dmin, (domain.points.row(i) - samples.row(m)).norm());
        h = std::max(h, dmin);
    }
    return h;
}

namespace detail {

inline void enumerate_multi_indices(int dim, int order, Eigen::VectorXi prefix, int pos,
                                    std::vector<Eigen::VectorXi>& out) {
    if (pos == dim - 1) {
        prefix[pos] = order;
        out.push_back(prefix);
        return;
    }
    for (int k = order; k >= 0; --k) {
        prefix[pos] = k;
        enumerate_multi_indices(dim, order - k, prefix, pos + 1, out);
    }
}

inline std::vector<Eigen::VectorXi> multi_indices(int dim, int order) {
    std::vector<Eigen::VectorXi> out;
    enumerate_multi_indices(dim, order, Eigen::VectorXi::Zero(dim), 0, out);
    return out;
}

// Central finite difference of a scalar field for one multi-index.
inline double fd_derivative(const std::function<double(const Eigen::VectorXd&)>& g,
                            const Eigen::VectorXd& x, Eigen::VectorXi alpha, double step) {
    for (Eigen::Index t = 0; t < alpha.size(); ++t) {
        if (alpha[t] > 0) {
            alpha[t] -= 1;
            Eigen::VectorXd xp = x, xm = x;
            xp[t] += step;
            xm[t] -= step;
            return (fd_derivative(g, xp, alpha, step) - fd_derivative(g, xm, alpha, step)) /
                   (2.0 * step);
        }
    }
    return g(x);
}

}  // namespace detail

/// C^s seminorm proxy: max over the grid and over |alpha| = s of |d^alpha g|,
/// derivatives by central differences with step 1e-4.
inline double seminorm(const std::function<double(const Eigen::VectorXd&)>& g,
                       const DomainGrid& domain, int s, double step = 1e-4) {
    if (s < 0 || s > 4) throw std::invalid_argument("seminorm: unsupported derivative order");
    const int dim = static_cast<int>(domain.points.cols());
    const auto alphas = detail::multi_indices(dim, s);
    double m = 0.0;
    for (Eigen::Index i = 0; i < domain.points.rows(); ++i) {
        const Eigen::VectorXd x = domain.points.row(i);
        for (const auto& a : alphas)
            m = std::max(m, std::abs(detail::fd_derivative(g, x, a, step)));
    }
    return m;
}

/// Overload taking precomputed derivative values (one column per multi-index
/// of order s, one row per grid point).
inline double seminorm(const Eigen::MatrixXd& derivative_values) {
    if (derivative_values.size() == 0)
        throw std::invalid_argument("seminorm: empty derivative values");
    return derivative_values.cwiseAbs().maxCoeff();
}

/// Kernel-derivative bound D^2: max over point pairs and |alpha| <= s of
/// |d^alpha_x d^alpha_y k(x,y)|. For the stationary Gaussian kernel the
/// supremum depends only on x - y, so the pair scan reduces to a grid over
/// the difference box of the domain.
inline double kernel_deriv_sup(const KernelSpec& phi_spec, const DomainGrid& domain, int s) {
    validate(phi_spec);
    if (s < 0 || s > 2) throw std::invalid_argument("kernel_deriv_sup: unsupported order");
    const int dim = static_cast<int>(domain.points.cols());
    const int res = domain.resolution >= 2 ? 2 * domain.resolution - 1 : 401;
    const Eigen::VectorXd width = domain.hi - domain.lo;
    const DomainGrid diff = box_grid(-width, width, res);

    double m = 0.0;
    for (int order = 0; order <= s; ++order) {
        for (const auto& a : detail::multi_indices(dim, order)) {
            for (Eigen::Index i = 0; i < diff.points.rows(); ++i) {
                double prod = 1.0;
                for (int t = 0; t < dim; ++t)
                    prod *= gauss_deriv(diff.points(i, t), phi_spec.bandwidth, 2 * a[t]);
                m = std::max(m, std::abs(prod));
            }
        }
    }
    return m;
}

/// C_0 = 3 max(sqrt(d), 3 sqrt(2d) (s-1))^{2s} / s!.
inline double c0_constant(int d, int s) {
    if (d < 1 || s < 1) throw std::invalid_argument("c0_constant: requires d >= 1, s >= 1");
    const double base = std::max(std::sqrt(static_cast<double>(d)),
                                 3.0 * std::sqrt(2.0 * d) * (s - 1));
    double fact = 1.0;
    for (int i = 2; i <= s; ++i) fact *= i;
    return 3.0 * std::pow(base, 2 * s) / fact;
}

/// C_K = max over the domain grid, constraint rows, and |alpha| = s of the
/// RKHS norm of d^alpha_x [K(.,x) c_i(x)] for the diagonal Gaussian kernel.
/// With piecewise-constant rows this collapses to
/// |c_i(x)| sqrt(d^alpha_x d^alpha_y k(x,y)|_{y=x}); general rows go through
/// the product rule with finite-difference derivatives of c_i.
inline double ck_constant(const KernelSpec& spec,
                          const std::vector<std::function<Eigen::VectorXd(const Eigen::VectorXd&)>>& rows,
                          const DomainGrid& domain, int s,
                          bool piecewise_constant_rows = false, double step = 1e-4) {
    validate(spec);
    if (s < 0 || s > 2) throw std::invalid_argument("ck_constant: unsupported order");
    if (rows.empty()) throw std::invalid_argument("ck_constant: no constraint rows");
    const int dim = static_cast<int>(domain.points.cols());
    const auto alphas = detail::multi_indices(dim, s);

    double m = 0.0;
    if (piecewise_constant_rows) {
        double kfac = 0.0;
        for (const auto& a : alphas) {
            double prod = 1.0;
            for (int t = 0; t < dim; ++t) prod *= std::abs(gauss_deriv(0.0, spec.bandwidth, 2 * a[t]));
            kfac = std::max(kfac, prod);
        }
        for (Eigen::Index i = 0; i < domain.points.rows(); ++i) {
            const Eigen::VectorXd x = domain.points.row(i);
            for (const auto& row : rows) m = std::max(m, row(x).squaredNorm() * kfac);
        }
        return std::sqrt(m);
    }

    for (Eigen::Index i = 0; i < domain.points.rows(); ++i) {
        const Eigen::VectorXd x = domain.points.row(i);
        for (const auto& row : rows) {
            for (const auto& a : alphas) {
                // |d^alpha [K(.,x) c(x)]|^2 expanded by the Leibniz rule; the
                // kernel inner products reduce to mixed partials at y = x.
                std::vector<Eigen::VectorXi> gammas;
                for (int o = 0; o <= s; ++o)
                    for (const auto& gcand : detail::multi_indices(dim, o)) {
                        bool le = true;
                        for (int t = 0; t < dim; ++t) le = le && gcand[t] <= a[t];
                        if (le) gammas.push_back(gcand);
                    }
                double norm2 = 0.0;
                for (const auto& g1 : gammas) {
                    for (const auto& g2 : gammas) {
                        double binom = 1.0;
                        auto choose = [](int nn, int kk) {
                            double v = 1.0;
                            for (int ii = 1; ii <= kk; ++ii) v = v * (nn - kk + ii) / ii;
                            return v;
                        };
                        for (int t = 0; t < dim; ++t)
                            binom *= choose(a[t], g1[t]) * choose(a[t], g2[t]);
                        Eigen::VectorXd dc1(row(x).size()), dc2(row(x).size());
                        for (Eigen::Index pcomp = 0; pcomp < dc1.size(); ++pcomp) {
                            auto comp = [&](const Eigen::VectorXd& xx) { return row(xx)[pcomp]; };
                            dc1[pcomp] = detail::fd_derivative(comp, x, g1, step);
                            dc2[pcomp] = detail::fd_derivative(comp, x, g2, step);
                        }
                        const Eigen::VectorXi ra = a - g1, rb = a - g2;
                        norm2 += binom * dc1.dot(dc2) * k_partial(spec, ra, rb, x, x);
                    }
                }
                m = std::max(m, norm2);
            }
        }
    }
    return std::sqrt(std::max(0.0, m));
}

/// Trace bound M_A = trace(G^{-1}) max_{m,i} |y_{m,i}| for the SoS witness
/// interpolating the sampled constraint values.
inline double ma_bound(const GramFactor& factor, const Eigen::MatrixXd& sample_values) {
    const double ymax = sample_values.size() > 0 ? sample_values.cwiseAbs().maxCoeff() : 0.0;
    return trace_inverse(factor) * ymax;
}

inline double sigma_slow(double ck1, double mf, double d_semi1, double h) {
    if (ck1 < 0 || mf < 0 || d_semi1 < 0 || h < 0)
        throw std::invalid_argument("sigma_slow: inputs must be >= 0");
    return (ck1 * mf + d_semi1) * h;
}

/// Fast-rate perturbation; requires s >= 2 (the underlying scattering
/// estimate needs the ball-union geometry and at least two derivatives).
inline double sigma_fast(double c0, double cks, double mf, double d_semis, double d2, double ma,
                         double h, int s) {
    if (s < 2) throw std::invalid_argument("sigma_fast: requires s >= 2");
    if (c0 < 0 || cks < 0 || mf < 0 || d_semis < 0 || d2 < 0 || ma < 0 || h < 0)
        throw std::invalid_argument("sigma_fast: inputs must be >= 0");
    return c0 * (cks * mf + d_semis + std::pow(2.0, s) * d2 * ma) * std::pow(h, s);
}

inline double gap_bound(double beta, double g1_norm, double sigma) {
    if (beta < 0 || g1_norm < 0 || sigma < 0)
        throw std::invalid_argument("gap_bound: inputs must be >= 0");
    return beta * g1_norm * sigma;
}

struct ScatteringResult {
    double epsilon = 0.0;
    bool holds = false;
    double min_g = 0.0;
};

/// Scattering inequality check: a C^s function within tau of an SoS of trace
/// trace_A at the samples satisfies g >= -(epsilon + 2 tau) everywhere, with
/// epsilon = C0 (|g|_s + 2^s D^2 trace_A) h^s. A failing check is a valid,
/// flagged outcome.
inline ScatteringResult scattering_check(const Eigen::VectorXd& g_values, double tau,
                                         double trace_a, double h, int s, double g_seminorm,
                                         double d2, int dim) {
    if (g_values.size() < 1) throw std::invalid_argument("scattering_check: empty grid values");
    ScatteringResult res;
    const double c = c0_constant(dim, s) * (g_seminorm + std::pow(2.0, s) * d2 * trace_a);
    res.epsilon = c * std::pow(h, s);
    res.min_g = g_values.minCoeff();
    res.holds = res.min_g >= -(res.epsilon + 2.0 * tau);
    return res;
}

/// Everything the main approximation theorem needs, assembled in one record.
/// sigma_fast is only meaningful when fast_available; the hypothesis flag
/// records the ball-union covering check h <= r min(1, 1/(18(s-1)^2)).
struct BoundsReport {
    double h = 0.0;
    double d_seminorm1 = 0.0;
    double d_seminorm_s = 0.0;
    double ck1 = 0.0;
    double cks = 0.0;
    double d2 = 0.0;
    double c0 = 0.0;
    double m_f = 0.0;
    double m_a = 0.0;
    double sigma_slow_value = 0.0;
    double sigma_fast_value = 0.0;
    double sigma = 0.0;
    double gap = 0.0;
    bool has_gap = false;
    int s = 1;
    bool fast_available = false;
    bool fast_hypothesis_ok = false;
    double ball_radius = 0.0;
};

/// Combines precomputed ingredients into the report; sigma is min(slow, fast)
/// when the fast rate is available, otherwise the slow rate alone.
inline BoundsReport assemble_bounds_report(int dim, double h, double d_semi1, double d_semis,
                                           double ck1, double cks, double d2, double mf,
                                           double ma, int s, double ball_radius,
                                           double beta = -1.0, double g1_norm = 0.0) {
    BoundsReport r;
    r.h = h;
    r.d_seminorm1 = d_semi1;
    r.d_seminorm_s = d_semis;
    r.ck1 = ck1;
    r.cks = cks;
    r.d2 = d2;
    r.m_f = mf;
    r.m_a = ma;
    r.s = s;
    r.ball_radius = ball_radius;
    r.sigma_slow_value = sigma_slow(ck1, mf, d_semi1, h);
    r.sigma = r.sigma_slow_value;
    r.fast_available = s >= 2;
    if (r.fast_available) {
        r.c0 = c0_constant(dim, s);
        r.sigma_fast_value = sigma_fast(r.c0, cks, mf, d_semis, d2, ma, h, s);
        r.sigma = std::min(r.sigma_slow_value, r.sigma_fast_value);
        const double cap = ball_radius * std::min(1.0, 1.0 / (18.0 * (s - 1) * (s - 1)));
        r.fast_hypothesis_ok = ball_radius > 0.0 && h <= cap;
    }
    if (beta >= 0.0) {
        r.gap = gap_bound(beta, g1_norm, r.sigma);
        r.has_gap = true;
    }
    return r;
}

}  // namespace ksos
