#pragma once

// Finite-dimensional kernel sum-of-squares machinery. A nonnegative function
// q(x) = <phi(x), A phi(x)> over the feature map of a scalar kernel is
// represented in the reduced coordinates of the Cholesky features of the
// anchor Gram matrix: with G = R^T R and Phi_m = R e_m, the operator A is
// replaced by the finite symmetric PSD matrix B with
//   q(x_m) = Phi_m^T B Phi_m   and   trace(A) = trace(B).
// Off the anchors, q(x) = v^T B v with v = R^{-T} (k(x_1,x), ..., k(x_M,x)).

#include "ksos/kernels.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <utility>

namespace ksos {

class NegativeTargetError : public std::invalid_argument {
public:
    explicit NegativeTargetError(const std::string& what) : std::invalid_argument(what) {}
};

struct SosModel {
    Eigen::MatrixXd anchors;  // M x d sample points
    KernelSpec phi_spec;      // scalar kernel of the feature map
    GramFactor factor;        // factorized Gram of the anchors
    Eigen::MatrixXd B;        // symmetric PSD coefficient matrix, M x M
    int clamped_targets = 0;  // number of tiny negative targets clamped to 0
};

/// Frobenius-nearest positive semidefinite matrix: eigenvalue clipping at 0.
/// Idempotent; the input is symmetrized first.
inline Eigen::MatrixXd psd_project(const Eigen::MatrixXd& s) {
    if (s.rows() != s.cols())
        throw std::invalid_argument("psd_project: matrix must be square");
    Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
}

/// Reduced coefficient matrix B = R^{-T} diag(y) R^{-1} interpolating the
/// nonnegative targets y at the anchors: Phi_m^T B Phi_m = y_m. Assembled as
/// W W^T with W = R^{-T} diag(sqrt(y)) so the result is PSD by construction.
inline Eigen::MatrixXd nonneg_interpolation_matrix(const GramFactor& factor,
                                                   const Eigen::VectorXd& y) {
    if (y.size() != factor.size())
        throw std::invalid_argument("interpolate_nonneg: target size does not match factor");
    Eigen::MatrixXd w = factor.factor.transpose().triangularView<Eigen::Lower>().solve(
        Eigen::MatrixXd(y.cwiseSqrt().asDiagonal()));
    return w * w.transpose();
}

/// Builds the SoS model reproducing the targets y_m >= 0 at the anchors.
/// Targets in [-1e-12, 0) are clamped to zero (roundoff from upstream
/// constraint evaluation); more negative targets are rejected.
inline SosModel interpolate_nonneg(const Eigen::MatrixXd& anchors, const KernelSpec& phi_spec,
                                   GramFactor factor, Eigen::VectorXd y) {
    validate(phi_spec);
    if (anchors.rows() != factor.size())
        throw std::invalid_argument("interpolate_nonneg: anchors do not match factor size");
    int clamped = 0;
    for (Eigen::Index m = 0; m < y.size(); ++m) {
        if (y[m] < 0.0) {
            if (y[m] < -1e-12)
                throw NegativeTargetError("interpolate_nonneg: negative target value");
            y[m] = 0.0;
            ++clamped;
        }
    }
    Eigen::MatrixXd b = nonneg_interpolation_matrix(factor, y);
    return SosModel{anchors, phi_spec, std::move(factor), std::move(b), clamped};
}

/// Convenience overload that builds and factorizes the anchor Gram itself.
inline SosModel interpolate_nonneg(const Eigen::MatrixXd& anchors, const KernelSpec& phi_spec,
                                   const Eigen::VectorXd& y) {
    return interpolate_nonneg(anchors, phi_spec, cholesky_factor(gram(phi_spec, anchors)), y);
}

/// Value of the represented nonnegative function at an arbitrary point.
inline double evaluate_sos(const SosModel& model, const Eigen::VectorXd& x) {
    const Eigen::VectorXd v =
        model.factor.feature_coords(kernel_vector(model.phi_spec, model.anchors, x));
    return v.dot(model.B * v);
}

/// Batch evaluation over the rows of X.
inline Eigen::VectorXd evaluate_sos_batch(const SosModel& model, const Eigen::MatrixXd& X) {
    Eigen::MatrixXd k = cross_gram(model.phi_spec, model.anchors, X);  // M x n
    Eigen::MatrixXd v = model.factor.factor.transpose().triangularView<Eigen::Lower>().solve(k);
    return (v.array() * (model.B * v).array()).colwise().sum();
}

/// Trace of the coefficient matrix; equals the trace of the lifted operator.
inline double sos_trace(const SosModel& model) { return model.B.trace(); }

}  // namespace ksos
