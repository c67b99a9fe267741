#pragma once

// Gaussian scalar and diagonal matrix-valued kernels: pointwise evaluation,
// Gram matrices, analytic kernel derivatives, and Cholesky factorization of
// Gram matrices with a single jitter retry for near-singular cases.
//
// Point sets are dense Eigen matrices with one point per row.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace ksos {

/// Thrown when a Gram matrix cannot be factorized even after the jitter retry.
class SingularGramError : public std::runtime_error {
public:
    explicit SingularGramError(const std::string& what) : std::runtime_error(what) {}
};

/// Gaussian kernel k(x,y) = exp(-|x-y|^2 / (2 sigma^2)), normalized so that
/// k(x,x) = 1. For output_dim P > 1 the kernel is lifted to the diagonal
/// matrix-valued kernel K(x,y) = k(x,y) * I_P; all scalar routines below
/// refer to the scalar factor k.
struct KernelSpec {
    double bandwidth = 1.0;
    int output_dim = 1;
};

inline void validate(const KernelSpec& spec) {
    if (!(spec.bandwidth > 0.0))
        throw std::invalid_argument("KernelSpec: bandwidth must be positive");
    if (spec.output_dim < 1)
        throw std::invalid_argument("KernelSpec: output_dim must be >= 1");
}

inline double k_eval(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    validate(spec);
    if (x.size() != y.size())
        throw std::invalid_argument("k_eval: points have different dimensions");
    const double s2 = spec.bandwidth * spec.bandwidth;
    return std::exp(-(x - y).squaredNorm() / (2.0 * s2));
}

/// Gram matrix [k(x_i, x_j)] over the rows of X. Symmetric with unit
/// diagonal by construction; positive semidefinite by kernel positivity.
inline Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::MatrixXd& X) {
    validate(spec);
    const Eigen::Index m = X.rows();
    if (m < 1) throw std::invalid_argument("gram: empty point set");
    const double s2 = spec.bandwidth * spec.bandwidth;
    Eigen::MatrixXd g(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        g(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = std::exp(-(X.row(i) - X.row(j)).squaredNorm() / (2.0 * s2));
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

/// Rectangular kernel matrix [k(x_i, z_j)] for rows of X against rows of Z.
inline Eigen::MatrixXd cross_gram(const KernelSpec& spec, const Eigen::MatrixXd& X,
                                  const Eigen::MatrixXd& Z) {
    validate(spec);
    if (X.cols() != Z.cols())
        throw std::invalid_argument("cross_gram: point sets have different dimensions");
    const double s2 = spec.bandwidth * spec.bandwidth;
    Eigen::MatrixXd k(X.rows(), Z.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < Z.rows(); ++j)
            k(i, j) = std::exp(-(X.row(i) - Z.row(j)).squaredNorm() / (2.0 * s2));
    return k;
}

/// Kernel vector (k(z_1,x), ..., k(z_M,x)) for the rows z_m of Z.
inline Eigen::VectorXd kernel_vector(const KernelSpec& spec, const Eigen::MatrixXd& Z,
                                     const Eigen::VectorXd& x) {
    const double s2 = spec.bandwidth * spec.bandwidth;
    Eigen::VectorXd k(Z.rows());
    for (Eigen::Index m = 0; m < Z.rows(); ++m)
        k(m) = std::exp(-(Z.row(m).transpose() - x).squaredNorm() / (2.0 * s2));
    return k;
}

/// Polynomial factor of the n-th derivative of t -> exp(-t^2 / (2 sigma^2)):
/// the derivative equals this factor times the exponential itself. Hermite
/// form, n <= 4.
inline double gauss_deriv_factor(double t, double sigma, int n) {
    const double a = 1.0 / (sigma * std::sqrt(2.0));
    const double u = t * a;
    double h = 0.0;
    switch (n) {
        case 0: h = 1.0; break;
        case 1: h = 2.0 * u; break;
        case 2: h = 4.0 * u * u - 2.0; break;
        case 3: h = (8.0 * u * u - 12.0) * u; break;
        case 4: h = (16.0 * u * u - 48.0) * u * u + 12.0; break;
        default:
            throw std::invalid_argument("gauss_deriv: order beyond supported range (<= 4)");
    }
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    return sign * std::pow(a, n) * h;
}

/// n-th derivative of t -> exp(-t^2 / (2 sigma^2)), n <= 4.
inline double gauss_deriv(double t, double sigma, int n) {
    return gauss_deriv_factor(t, sigma, n) * std::exp(-t * t / (2.0 * sigma * sigma));
}

inline int multi_index_order(const Eigen::VectorXi& alpha) {
    int s = 0;
    for (Eigen::Index t = 0; t < alpha.size(); ++t) {
        if (alpha[t] < 0) throw std::invalid_argument("multi-index entries must be >= 0");
        s += alpha[t];
    }
    return s;
}

/// Analytic mixed partial d^alpha_x d^beta_y k(x,y) of the scalar Gaussian
/// factor. Supports |alpha| <= 2 and |beta| <= 2; higher orders are exposed
/// through the finite-difference fallback k_partial_fd.
inline double k_partial(const KernelSpec& spec, const Eigen::VectorXi& alpha,
                        const Eigen::VectorXi& beta, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y) {
    validate(spec);
    const Eigen::Index d = x.size();
    if (y.size() != d || alpha.size() != d || beta.size() != d)
        throw std::invalid_argument("k_partial: inconsistent dimensions");
    if (multi_index_order(alpha) > 2 || multi_index_order(beta) > 2)
        throw std::invalid_argument("k_partial: derivative order beyond supported range");
    // One shared exponential so the zero-order case reproduces k_eval exactly.
    double prod = k_eval(spec, x, y);
    for (Eigen::Index t = 0; t < d; ++t) {
        const int a = alpha[t], b = beta[t];
        if (a + b == 0) continue;
        double factor = gauss_deriv_factor(x[t] - y[t], spec.bandwidth, a + b);
        if (b % 2 == 1) factor = -factor;
        prod *= factor;
    }
    return prod;
}

namespace detail {
inline double k_partial_fd_impl(const KernelSpec& spec, Eigen::VectorXi alpha,
                                Eigen::VectorXi beta, Eigen::VectorXd x, Eigen::VectorXd y,
                                double step) {
    for (Eigen::Index t = 0; t < alpha.size(); ++t) {
        if (alpha[t] > 0) {
            alpha[t] -= 1;
            Eigen::VectorXd xp = x, xm = x;
            xp[t] += step;
            xm[t] -= step;
            return (k_partial_fd_impl(spec, alpha, beta, xp, y, step) -
                    k_partial_fd_impl(spec, alpha, beta, xm, y, step)) /
                   (2.0 * step);
        }
    }
    for (Eigen::Index t = 0; t < beta.size(); ++t) {
        if (beta[t] > 0) {
            beta[t] -= 1;
            Eigen::VectorXd yp = y, ym = y;
            yp[t] += step;
            ym[t] -= step;
            return (k_partial_fd_impl(spec, alpha, beta, x, yp, step) -
                    k_partial_fd_impl(spec, alpha, beta, x, ym, step)) /
                   (2.0 * step);
        }
    }
    return k_eval(spec, x, y);
}
}  // namespace detail

/// Central finite-difference fallback for kernel derivatives of any order.
inline double k_partial_fd(const KernelSpec& spec, const Eigen::VectorXi& alpha,
                           const Eigen::VectorXi& beta, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y, double step = 1e-4) {
    const Eigen::Index d = x.size();
    if (y.size() != d || alpha.size() != d || beta.size() != d)
        throw std::invalid_argument("k_partial_fd: inconsistent dimensions");
    return detail::k_partial_fd_impl(spec, alpha, beta, x, y, step);
}

/// Cholesky factorization of a symmetric positive definite Gram matrix.
/// `gram` is the matrix actually factorized (jitter included on its diagonal
/// when the plain factorization failed); `factor` is upper-triangular R with
/// gram = R^T R, and the feature vectors are the columns Phi_m = R e_m.
struct GramFactor {
    Eigen::MatrixXd gram;
    Eigen::MatrixXd factor;
    double jitter = 0.0;

    Eigen::Index size() const { return gram.rows(); }

    /// Coordinates of the canonical feature of a kernel vector: R^{-T} kvec.
    Eigen::VectorXd feature_coords(const Eigen::VectorXd& kvec) const {
        return factor.transpose().triangularView<Eigen::Lower>().solve(kvec);
    }
};

inline GramFactor cholesky_factor(const Eigen::MatrixXd& g) {
    if (g.rows() != g.cols() || g.rows() == 0)
        throw std::invalid_argument("cholesky_factor: matrix must be square and non-empty");
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("cholesky_factor: matrix is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() == Eigen::Success)
        return GramFactor{g, llt.matrixU(), 0.0};
    // Retry once with a small diagonal shift; a second failure signals a
    // genuinely singular sample configuration.
    const double jitter = 1e-10;
    Eigen::MatrixXd gj = g;
    gj.diagonal().array() += jitter;
    llt.compute(gj);
    if (llt.info() != Eigen::Success)
        throw SingularGramError("Gram matrix numerically singular even after jitter retry");
    return GramFactor{std::move(gj), llt.matrixU(), jitter};
}

/// trace(G^{-1}) computed from the factor as |R^{-1}|_F^2.
inline double trace_inverse(const GramFactor& f) {
    const Eigen::Index m = f.size();
    Eigen::MatrixXd rinv = f.factor.triangularView<Eigen::Upper>().solve(
        Eigen::MatrixXd::Identity(m, m));
    return rinv.squaredNorm();
}

}  // namespace ksos
