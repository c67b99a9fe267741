#pragma once

// Constrained kernel ridge regression in three modes (unconstrained ridge,
// sampled affine inequalities, kernel-SoS equalities with trace penalty),
// the minimum-norm margin function, and deterministic hyperparameter
// selection by generalized cross-validation.
//
// Both constrained modes run the same over-relaxed operator-splitting scheme:
// a regularized least-squares step in the representer coefficients (with hard
// linear equalities handled through a bordered KKT system), a cone projection
// step (nonnegative orthant, or one PSD projection per SoS block), and dual
// updates on the coupling. The inequality mode finishes with an active-set
// polish that solves the KKT system of the detected active set exactly.

#include "ksos/kernels.hpp"
#include "ksos/sos.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ksos {

struct SolverOptions {
    double tol_feas = 1e-6;        // absolute, scaled by 1 + |offsets|_inf
    double tol_stat = 1e-5;        // relative stationarity tolerance
    int max_iterations = 20000;
    double rho = 1.0;              // splitting penalty
    double over_relaxation = 1.6;
    bool polish = true;            // active-set refinement (inequality mode)
};

struct SolveReport {
    double objective = 0.0;
    double primal_residual = 0.0;
    double stationarity_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    double wall_time_s = 0.0;
};

/// Finite kernel expansion f_p(x) = sum_j coefficients(j,p) k(x, z_j) for a
/// diagonal matrix-valued kernel.
struct RepresenterModel {
    Eigen::MatrixXd anchors;       // J x d
    KernelSpec kernel_spec;
    Eigen::MatrixXd coefficients;  // J x P

    Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const {
        return coefficients.transpose() * kernel_vector(kernel_spec, anchors, x);
    }

    /// Batch evaluation; one row f(x_i)^T per row of X.
    Eigen::MatrixXd evaluate_batch(const Eigen::MatrixXd& X) const {
        return cross_gram(kernel_spec, X, anchors) * coefficients;
    }

    double rkhs_norm_squared() const {
        if (coefficients.rows() == 0) return 0.0;
        const Eigen::MatrixXd g = gram(kernel_spec, anchors);
        return (coefficients.transpose() * g * coefficients).trace();
    }

    double rkhs_norm() const { return std::sqrt(std::max(0.0, rkhs_norm_squared())); }
};

/// One affine inequality c^T f(x_m) + d >= 0 anchored at a sample point.
struct ConstraintRow {
    Eigen::Index sample = 0;  // row index into ConstraintSpec::samples
    Eigen::VectorXd c;        // size P
    double d = 0.0;
};

/// Rows sharing one PSD block in the kSoS mode. A block may reference any
/// subset of the sample points, at most one row per point.
struct ConstraintBlock {
    std::vector<ConstraintRow> rows;
};

struct EqualityPair {
    Eigen::VectorXd point;
    Eigen::VectorXd target;  // size P
};

struct ConstraintSpec {
    Eigen::MatrixXd samples;  // M x d distinct sample points
    std::vector<ConstraintBlock> blocks;
    std::vector<EqualityPair> equality_pairs;

    Eigen::Index total_rows() const {
        Eigen::Index n = 0;
        for (const auto& b : blocks) n += static_cast<Eigen::Index>(b.rows.size());
        return n;
    }
};

struct FitResult {
    RepresenterModel model;
    std::vector<SosModel> sos_blocks;  // empty outside the kSoS mode
    SolveReport report;
};

namespace detail {

inline Eigen::MatrixXd dedup_points(const std::vector<const Eigen::MatrixXd*>& sets,
                                    double tol = 1e-12) {
    Eigen::Index total = 0, dim = 0;
    for (const auto* s : sets) {
        if (s->rows() > 0) dim = s->cols();
        total += s->rows();
    }
    Eigen::MatrixXd out(total, dim);
    Eigen::Index kept = 0;
    for (const auto* s : sets) {
        for (Eigen::Index i = 0; i < s->rows(); ++i) {
            bool dup = false;
            for (Eigen::Index j = 0; j < kept && !dup; ++j)
                dup = (out.row(j) - s->row(i)).cwiseAbs().maxCoeff() <= tol;
            if (!dup) out.row(kept++) = s->row(i);
        }
    }
    return out.topRows(kept);
}

class WallTimer {
public:
    WallTimer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

namespace qp {

/// minimize 1/2 z^T H z - q^T z + c0
/// subject to A z + b >= 0 (componentwise) and E z = t.
struct InequalityQp {
    Eigen::MatrixXd H;
    Eigen::VectorXd q;
    double c0 = 0.0;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::MatrixXd E;
    Eigen::VectorXd t;
};

struct QpSolution {
    Eigen::VectorXd z;
    Eigen::VectorXd ineq_multipliers;  // >= 0
    SolveReport report;
};

namespace detail_qp {

inline Eigen::MatrixXd bordered_kkt(const Eigen::MatrixXd& h, const Eigen::MatrixXd& e) {
    const Eigen::Index n = h.rows(), m = e.rows();
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
    kkt.topLeftCorner(n, n) = h;
    if (m > 0) {
        kkt.topRightCorner(n, m) = e.transpose();
        kkt.bottomLeftCorner(m, n) = e;
    }
    return kkt;
}

// Stationarity residual |Hz - q - A^T lam - E^T nu|_inf with nu chosen by
// least squares, relative to the gradient scale.
inline double stationarity_residual(const InequalityQp& p, const Eigen::VectorXd& z,
                                    const Eigen::VectorXd& lam) {
    Eigen::VectorXd r = p.H * z - p.q;
    const double scale = 1.0 + r.cwiseAbs().maxCoeff();
    if (p.A.rows() > 0) r -= p.A.transpose() * lam;
    if (p.E.rows() > 0) {
        Eigen::VectorXd nu = p.E.transpose()
                                 .colPivHouseholderQr()
                                 .solve(r);
        r -= p.E.transpose() * nu;
    }
    return r.cwiseAbs().maxCoeff() / scale;
}

}  // namespace detail_qp

/// Over-relaxed splitting on the slack s = A z + b with projection onto the
/// nonnegative orthant; rows are diagonally preconditioned to unit norm.
inline QpSolution solve_inequality_qp(const InequalityQp& p, const SolverOptions& opts = {}) {
    detail::WallTimer timer;
    const Eigen::Index n = p.H.rows();
    const Eigen::Index m = p.A.rows();
    const Eigen::Index me = p.E.rows();
    const double rho = opts.rho;
    const double gamma = opts.over_relaxation;
    const double bscale = 1.0 + (m > 0 ? p.b.cwiseAbs().maxCoeff() : 0.0);

    // Row preconditioning.
    Eigen::VectorXd wrow = Eigen::VectorXd::Ones(m);
    for (Eigen::Index r = 0; r < m; ++r)
        wrow[r] = 1.0 / std::max(p.A.row(r).norm(), 1e-12);
    const Eigen::MatrixXd As = wrow.asDiagonal() * p.A;
    const Eigen::VectorXd bs = wrow.cwiseProduct(p.b);

    Eigen::MatrixXd htot = p.H;
    if (m > 0) htot += rho * As.transpose() * As;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> kkt(detail_qp::bordered_kkt(htot, p.E));

    auto solve_x = [&](const Eigen::VectorXd& target) {
        Eigen::VectorXd rhs(n + me);
        rhs.head(n) = p.q;
        if (m > 0) rhs.head(n) += rho * As.transpose() * target;
        if (me > 0) rhs.tail(me) = p.t;
        return Eigen::VectorXd(kkt.solve(rhs).head(n));
    };

    // Warm start from the equality-constrained ridge solution.
    Eigen::VectorXd z;
    {
        Eigen::VectorXd rhs(n + me);
        rhs.head(n) = p.q;
        if (me > 0) rhs.tail(me) = p.t;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> kkt0(detail_qp::bordered_kkt(p.H, p.E));
        z = kkt0.solve(rhs).head(n);
    }
    Eigen::VectorXd s = m > 0 ? (As * z + bs).cwiseMax(0.0) : Eigen::VectorXd();
    Eigen::VectorXd u = Eigen::VectorXd::Zero(m);

    SolveReport report;
    auto residuals = [&](double& feas, double& stat) {
        feas = me > 0 ? (p.E * z - p.t).cwiseAbs().maxCoeff() : 0.0;
        Eigen::VectorXd lam(m);
        if (m > 0) {
            const Eigen::VectorXd vals = p.A * z + p.b;
            feas = std::max(feas, std::max(0.0, -vals.minCoeff()));
            lam = (-rho) * u.cwiseProduct(wrow);
        }
        stat = detail_qp::stationarity_residual(p, z, lam);
    };

    if (m == 0) {
        report.iterations = 0;
        double feas, stat;
        residuals(feas, stat);
        report.primal_residual = feas;
        report.stationarity_residual = stat;
        report.converged = true;
    } else {
        for (int it = 1; it <= opts.max_iterations; ++it) {
            z = solve_x(s - u - bs);
            const Eigen::VectorXd az = As * z + bs;
            const Eigen::VectorXd azr = gamma * az + (1.0 - gamma) * s;
            s = (azr + u).cwiseMax(0.0);
            u += azr - s;
            report.iterations = it;

            double feas, stat;
            residuals(feas, stat);
            report.primal_residual = feas;
            report.stationarity_residual = stat;
            if (feas <= opts.tol_feas * bscale && stat <= opts.tol_stat) {
                report.converged = true;
                break;
            }
        }
    }

    QpSolution sol;
    sol.z = z;
    sol.ineq_multipliers = m > 0 ? Eigen::VectorXd((-rho) * u.cwiseProduct(wrow))
                                 : Eigen::VectorXd();

    // Active-set polish: solve the KKT system of the detected active set and
    // accept the refined point if it verifies feasibility and multiplier signs.
    if (opts.polish && m > 0) {
        std::vector<Eigen::Index> active;
        for (Eigen::Index r = 0; r < m; ++r)
            if (s[r] <= 1e-7 * bscale || sol.ineq_multipliers[r] > 1e-9) active.push_back(r);
        const Eigen::Index na = static_cast<Eigen::Index>(active.size());
        if (na <= n) {
            Eigen::MatrixXd eall(me + na, n);
            Eigen::VectorXd tall(me + na);
            if (me > 0) {
                eall.topRows(me) = p.E;
                tall.head(me) = p.t;
            }
            for (Eigen::Index i = 0; i < na; ++i) {
                eall.row(me + i) = p.A.row(active[i]);
                tall[me + i] = -p.b[active[i]];
            }
            Eigen::VectorXd rhs(n + me + na);
            rhs.head(n) = p.q;
            rhs.tail(me + na) = tall;
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> pol(detail_qp::bordered_kkt(p.H, eall));
            const Eigen::VectorXd sol_full = pol.solve(rhs);
            const Eigen::VectorXd zp = sol_full.head(n);
            const Eigen::VectorXd mult = -sol_full.tail(me + na).tail(na);
            const double tol = 1e-9 * bscale;
            bool ok = (p.A * zp + p.b).minCoeff() >= -tol && (na == 0 || mult.minCoeff() >= -tol);
            if (me > 0) ok = ok && (p.E * zp - p.t).cwiseAbs().maxCoeff() <= tol;
            ok = ok && (p.H * zp + eall.transpose() * sol_full.tail(me + na) - p.q)
                               .cwiseAbs()
                               .maxCoeff() <= 1e-7 * (1.0 + p.q.cwiseAbs().maxCoeff());
            if (ok) {
                z = zp;
                sol.z = zp;
                sol.ineq_multipliers.setZero();
                for (Eigen::Index i = 0; i < na; ++i)
                    sol.ineq_multipliers[active[i]] = std::max(0.0, mult[i]);
                double feas, stat;
                residuals(feas, stat);
                report.primal_residual = feas;
                report.stationarity_residual =
                    detail_qp::stationarity_residual(p, z, sol.ineq_multipliers);
                report.converged = report.primal_residual <= opts.tol_feas * bscale &&
                                   report.stationarity_residual <= opts.tol_stat;
            }
        }
    }

    report.objective = 0.5 * z.dot(p.H * z) - p.q.dot(z) + p.c0;
    report.wall_time_s = timer.seconds();
    sol.report = report;
    return sol;
}

/// One PSD-coupled block: the rows listed in `rows` (indices into the global
/// row matrix, ordered to match the factor's anchors) are constrained to the
/// diagonal quadratic values Phi_m^T B Phi_m of a PSD matrix B whose trace is
/// penalized with weight lambda_tr.
struct KsosBlockData {
    GramFactor factor;
    double lambda_tr = 0.0;
    std::vector<Eigen::Index> rows;
};

/// minimize 1/2 z^T H z - q^T z + c0 + sum_i lambda_tr_i trace(B_i)
/// subject to (A z + b)_r = Phi_m^T B_i Phi_m for each block row,
///            E z = t, and B_i PSD.
struct KsosQp {
    Eigen::MatrixXd H;
    Eigen::VectorXd q;
    double c0 = 0.0;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::MatrixXd E;
    Eigen::VectorXd t;
    std::vector<KsosBlockData> blocks;
};

struct KsosSolution {
    Eigen::VectorXd z;
    std::vector<Eigen::MatrixXd> B;  // PSD, one per block
    SolveReport report;
};

namespace detail_qp {

struct ValueBlock {
    Eigen::MatrixXd A;     // block rows of the global constraint matrix
    Eigen::VectorXd b;
    Eigen::MatrixXd R;     // upper-triangular factor of the block Gram
    Eigen::MatrixXd Minv;  // G^{-1}: trace(B) = <D, Minv>
    double lambda_tr = 0.0;
};

// Primal-dual barrier finisher on the value-coordinate cone program
//   min F(z) + sum_i lambda_i <D_i, Minv_i>   s.t. diag(D_i) = A_i z + b_i,
//       E z = t, D_i positive semidefinite.
// Eliminating D_i = mu (lambda_i Minv_i + diag(nu_i))^{-1} leaves a Newton
// system in (z, nu, nu_e) whose block Jacobian is the Hadamard square of the
// dual slack inverse. Second-order steps do not suffer from the flat-face
// tails that stall the splitting on near-singular Grams.
inline bool barrier_finish(const Eigen::MatrixXd& h, const Eigen::VectorXd& q,
                           const Eigen::MatrixXd& e, const Eigen::VectorXd& t,
                           const std::vector<ValueBlock>& blocks, Eigen::VectorXd& z,
                           std::vector<Eigen::MatrixXd>& d_out, double tol_feas,
                           double tol_stat, double* out_stat = nullptr) {
    const Eigen::Index n = h.rows();
    const Eigen::Index me = e.rows();
    const size_t nb = blocks.size();
    Eigen::Index mtot = 0;
    for (const auto& blk : blocks) mtot += blk.A.rows();

    std::vector<Eigen::VectorXd> nu(nb);
    for (size_t i = 0; i < nb; ++i)
        nu[i] = Eigen::VectorXd::Ones(blocks[i].A.rows());
    Eigen::VectorXd nu_e = Eigen::VectorXd::Zero(me);
    double mu = 0.1;

    std::vector<Eigen::MatrixXd> sinv(nb);
    const Eigen::Index dim = n + mtot + me;
    Eigen::MatrixXd kkt(dim, dim);
    Eigen::VectorXd rhs(dim), r_z(n);

    for (int step = 0; step < 300; ++step) {
        // Dual slacks and the implied primal blocks.
        bool pd = true;
        for (size_t i = 0; i < nb; ++i) {
            Eigen::MatrixXd s = blocks[i].lambda_tr * blocks[i].Minv;
            s.diagonal() += nu[i];
            Eigen::LLT<Eigen::MatrixXd> llt(s);
            if (llt.info() != Eigen::Success) {
                pd = false;
                break;
            }
            sinv[i] = llt.solve(Eigen::MatrixXd::Identity(s.rows(), s.cols()));
        }
        if (!pd) return false;

        r_z = h * z - q;
        if (me > 0) r_z += e.transpose() * nu_e;
        double row_res = me > 0 ? (e * z - t).cwiseAbs().maxCoeff() : 0.0;
        double obj = 0.5 * z.dot(h * z) - q.dot(z);
        for (size_t i = 0; i < nb; ++i) {
            r_z -= blocks[i].A.transpose() * nu[i];
            const Eigen::VectorXd ri =
                mu * sinv[i].diagonal() - blocks[i].A * z - blocks[i].b;
            row_res = std::max(row_res, ri.cwiseAbs().maxCoeff());
            obj += blocks[i].lambda_tr * mu * sinv[i].cwiseProduct(blocks[i].Minv).sum();
        }
        const double stat_rel = r_z.cwiseAbs().maxCoeff() / (1.0 + (h * z - q).cwiseAbs().maxCoeff());
        const double gap_rel = mu * static_cast<double>(mtot) / (1.0 + std::abs(obj));
#ifdef KSOS_SOLVER_TRACE
        std::fprintf(stderr, "  barrier step=%3d mu=%9.2e row=%9.2e stat=%9.2e gap=%9.2e\n",
                     step, mu, row_res, stat_rel, gap_rel);
#endif
        if (row_res <= 0.5 * tol_feas && stat_rel <= 0.5 * tol_stat && gap_rel <= 1e-9) {
            for (size_t i = 0; i < nb; ++i) d_out[i] = mu * sinv[i];
            if (out_stat) *out_stat = stat_rel;
            return true;
        }
        if (std::max(row_res, stat_rel) <= std::max(0.3 * mu, 1e-9)) mu *= 0.2;

        kkt.setZero();
        rhs.setZero();
        kkt.topLeftCorner(n, n) = h;
        kkt.topLeftCorner(n, n).diagonal().array() += 1e-12;
        rhs.head(n) = -r_z;
        Eigen::Index at = n;
        for (size_t i = 0; i < nb; ++i) {
            const Eigen::Index mi = blocks[i].A.rows();
            kkt.block(0, at, n, mi) = -blocks[i].A.transpose();
            kkt.block(at, 0, mi, n) = -blocks[i].A;
            kkt.block(at, at, mi, mi) = -mu * sinv[i].cwiseProduct(sinv[i]);
            kkt.block(at, at, mi, mi).diagonal().array() -= 1e-12;
            rhs.segment(at, mi) = blocks[i].A * z + blocks[i].b - mu * sinv[i].diagonal();
            at += mi;
        }
        if (me > 0) {
            kkt.block(0, at, n, me) = e.transpose();
            kkt.block(at, 0, me, n) = e;
            rhs.segment(at, me) = t - e * z;
        }
        const Eigen::VectorXd delta = kkt.colPivHouseholderQr().solve(rhs);

        // Fraction to boundary: keep every dual slack positive definite.
        double alpha = 1.0;
        for (int tries = 0; tries < 60; ++tries) {
            bool ok = true;
            Eigen::Index pos = n;
            for (size_t i = 0; i < nb && ok; ++i) {
                const Eigen::Index mi = blocks[i].A.rows();
                Eigen::MatrixXd s = blocks[i].lambda_tr * blocks[i].Minv;
                s.diagonal() += nu[i] + alpha * delta.segment(pos, mi);
                ok = Eigen::LLT<Eigen::MatrixXd>(s).info() == Eigen::Success;
                pos += mi;
            }
            if (ok) break;
            alpha *= 0.5;
        }
        z += alpha * delta.head(n);
        Eigen::Index pos = n;
        for (size_t i = 0; i < nb; ++i) {
            nu[i] += alpha * delta.segment(pos, blocks[i].A.rows());
            pos += blocks[i].A.rows();
        }
        if (me > 0) nu_e += alpha * delta.segment(pos, me);
    }
    return false;
}

}  // namespace detail_qp

// Internally the block variable is kept in value coordinates D = R^T B R,
// where the row equalities pin exactly the diagonal (D_mm = Phi_m^T B Phi_m)
// and PSD-ness transfers by congruence. In these coordinates the splitting
// penalty is the identity and the trace becomes the inner product <D, G^{-1}>,
// so no solve against the (possibly near-singular) Gram appears inside the
// iteration. If the splitting plateaus above tolerance (flat-face tails on
// near-singular Grams), a primal-dual barrier finisher completes the solve.
inline KsosSolution solve_ksos_qp(const KsosQp& p, const SolverOptions& opts = {}) {
    detail::WallTimer timer;
    const Eigen::Index n = p.H.rows();
    const Eigen::Index me = p.E.rows();
    const size_t nb = p.blocks.size();
    const double gamma = opts.over_relaxation;
    const double bscale = 1.0 + (p.b.size() > 0 ? p.b.cwiseAbs().maxCoeff() : 0.0);
    double rho = opts.rho;

    struct BlockWork {
        Eigen::MatrixXd A;       // block rows of the global A
        Eigen::VectorXd b;
        Eigen::MatrixXd R;       // upper-triangular factor
        Eigen::MatrixXd Minv;    // (R R^T)^{-1}: trace(B) = <D, Minv>
        Eigen::MatrixXd W, U, D;
        double lambda_tr = 0.0;
    };
    std::vector<BlockWork> wk(nb);

    Eigen::MatrixXd a_sq = Eigen::MatrixXd::Zero(n, n);
    for (size_t i = 0; i < nb; ++i) {
        const auto& blk = p.blocks[i];
        const Eigen::Index mi = blk.factor.size();
        if (static_cast<Eigen::Index>(blk.rows.size()) != mi)
            throw std::invalid_argument("solve_ksos_qp: block rows do not match factor size");
        BlockWork& w = wk[i];
        w.A.resize(mi, n);
        w.b.resize(mi);
        for (Eigen::Index r = 0; r < mi; ++r) {
            w.A.row(r) = p.A.row(blk.rows[r]);
            w.b[r] = p.b[blk.rows[r]];
        }
        w.R = blk.factor.factor;
        // trace(B) = trace(R^{-T} D R^{-1}) = <D, G^{-1}> with G = R^T R.
        const Eigen::MatrixXd rinv =
            w.R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(mi, mi));
        w.Minv = rinv * rinv.transpose();
        w.Minv = 0.5 * (w.Minv + w.Minv.transpose());
        w.W = Eigen::MatrixXd::Zero(mi, mi);
        w.U = Eigen::MatrixXd::Zero(mi, mi);
        w.D = Eigen::MatrixXd::Zero(mi, mi);
        w.lambda_tr = blk.lambda_tr;
        a_sq += w.A.transpose() * w.A;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> kkt;
    auto refactor = [&]() {
        kkt.compute(detail_qp::bordered_kkt(Eigen::MatrixXd(p.H + rho * a_sq), p.E));
    };
    refactor();

    Eigen::Index state_dim = 0;
    for (const auto& w : wk) state_dim += 2 * w.W.size();
    auto pack_state = [&](Eigen::VectorXd& x) {
        Eigen::Index at = 0;
        for (const auto& w : wk) {
            x.segment(at, w.W.size()) = Eigen::Map<const Eigen::VectorXd>(w.W.data(), w.W.size());
            at += w.W.size();
            x.segment(at, w.U.size()) = Eigen::Map<const Eigen::VectorXd>(w.U.data(), w.U.size());
            at += w.U.size();
        }
    };
    auto unpack_state = [&](const Eigen::VectorXd& x) {
        Eigen::Index at = 0;
        for (auto& w : wk) {
            w.W = Eigen::Map<const Eigen::MatrixXd>(x.data() + at, w.W.rows(), w.W.cols());
            at += w.W.size();
            w.U = Eigen::Map<const Eigen::MatrixXd>(x.data() + at, w.U.rows(), w.U.cols());
            at += w.U.size();
        }
    };

    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    SolveReport report;
    double rp = 0.0, rd = 0.0, rd_rel = 0.0;

    // Warm start at the affine-sampled relaxation: its optimal coefficients
    // are feasible for the lifted problem through the diagonal interpolant
    // (nonnegative sample values are always SoS-representable), which leaves
    // only the trace trade-off to negotiate.
    {
        qp::InequalityQp relax{p.H, p.q, p.c0, p.A, p.b, p.E, p.t};
        const qp::QpSolution rsol = solve_inequality_qp(relax, opts);
        z = rsol.z;
        for (auto& w : wk) {
            const Eigen::VectorXd s = (w.A * z + w.b).cwiseMax(0.0);
            w.W = s.asDiagonal();
        }
    }

    // One splitting sweep from the (W, U) state currently held in the blocks:
    // coefficient step (z and D jointly, diag(D) pinned to the row values,
    // identity curvature after eliminating D), cone step with the trace
    // penalty as a matrix-valued shift inside the projection (eigenvalue
    // thresholding, bounded even when G^{-1} has enormous entries), dual step.
    auto sweep = [&]() {
        Eigen::VectorXd rhs(n + me);
        rhs.head(n) = p.q;
        if (me > 0) rhs.tail(me) = p.t;
        for (size_t i = 0; i < nb; ++i) {
            BlockWork& w = wk[i];
            rhs.head(n) += rho * w.A.transpose() * ((w.W - w.U).diagonal() - w.b);
        }
        z = kkt.solve(rhs).head(n);

        rp = 0.0;
        rd = 0.0;
        double rd_z = 0.0, rd_block = 0.0;
        for (size_t i = 0; i < nb; ++i) {
            BlockWork& w = wk[i];
            w.D = w.W - w.U;
            w.D.diagonal() = w.A * z + w.b;

            const Eigen::MatrixXd drel = gamma * w.D + (1.0 - gamma) * w.W;
            const Eigen::MatrixXd wold = w.W;
            w.W = psd_project(drel + w.U - (w.lambda_tr / rho) * w.Minv);
            w.U += drel - w.W;
            rp = std::max(rp, (w.D - w.W).norm());
            const Eigen::MatrixXd dw = w.W - wold;
            rd = std::max(rd, rho * dw.norm());
            // Dual-feasibility drift, each part measured against the gradient
            // scale of its own optimality condition: the block diagonal
            // couples into the coefficient stationarity, the full block into
            // the trace term (whose gradient can be enormous for dense
            // anchors, making drift there relatively negligible).
            rd_z = std::max(rd_z, rho * (w.A.transpose() * dw.diagonal()).cwiseAbs().maxCoeff());
            const double block_scale = 1.0 + w.lambda_tr * w.Minv.cwiseAbs().maxCoeff() +
                                       rho * w.U.diagonal().cwiseAbs().maxCoeff();
            rd_block = std::max(rd_block, rho * dw.cwiseAbs().maxCoeff() / block_scale);
        }
        const double grad_scale = 1.0 + (p.H * z - p.q).cwiseAbs().maxCoeff();
        rd_rel = std::max(rd_block, rd_z / grad_scale);
    };

    // Anderson acceleration (memory 10) over the stacked (W, U) fixed point;
    // degenerate PSD faces otherwise produce long sublinear tails. The
    // history is dropped whenever the extrapolation misbehaves or rho changes.
    const int aa_memory = 10;
    std::vector<Eigen::VectorXd> dx_hist, df_hist;
    Eigen::VectorXd x_prev, f_prev;
    bool have_prev = false;
    double best_row_gap = std::numeric_limits<double>::infinity();
    int best_row_it = 0;

    for (int it = 1; it <= opts.max_iterations; ++it) {
        Eigen::VectorXd x(state_dim);
        pack_state(x);
        sweep();
        Eigen::VectorXd g(state_dim);
        pack_state(g);
        const Eigen::VectorXd f = g - x;

        report.iterations = it;
#ifdef KSOS_SOLVER_TRACE
        if (it % 1000 == 0 || it < 10)
            std::fprintf(stderr,
                         "  it=%6d rho=%9.2e rp=%9.2e rd=%9.2e rd_rel=%9.2e |W|=%9.2e "
                         "|U|=%9.2e trD=%9.2e\n",
                         it, rho, rp, rd, rd_rel, wk[0].W.cwiseAbs().maxCoeff(),
                         wk[0].U.cwiseAbs().maxCoeff(), wk[0].D.trace());
#endif
        // Exit on the quantities the caller actually receives: the returned
        // blocks are the PSD iterates W, whose row residual is the diagonal
        // part of the cone gap.
        double row_gap = me > 0 ? (p.E * z - p.t).cwiseAbs().maxCoeff() : 0.0;
        for (size_t i = 0; i < nb; ++i)
            row_gap = std::max(row_gap,
                               (wk[i].W.diagonal() - wk[i].D.diagonal()).cwiseAbs().maxCoeff());
        if (rd_rel <= opts.tol_stat && row_gap <= opts.tol_feas * bscale) {
            report.converged = true;
            break;
        }
        if (row_gap < 0.7 * best_row_gap) {
            best_row_gap = row_gap;
            best_row_it = it;
        }
        // A long stretch without meaningful progress on the row residual is
        // a flat-face tail; hand over to the second-order finisher.
        if (it - best_row_it >= 1000 && it >= 1500) break;

        bool reset_history = false;
        if (have_prev) {
            if (f.norm() > 2.0 * f_prev.norm()) reset_history = true;
            dx_hist.push_back(x - x_prev);
            df_hist.push_back(f - f_prev);
            if (static_cast<int>(dx_hist.size()) > aa_memory) {
                dx_hist.erase(dx_hist.begin());
                df_hist.erase(df_hist.begin());
            }
        }
        x_prev = x;
        f_prev = f;
        have_prev = true;

        Eigen::VectorXd x_next = g;
        if (!reset_history && !dx_hist.empty()) {
            const Eigen::Index mh = static_cast<Eigen::Index>(dx_hist.size());
            Eigen::MatrixXd fmat(state_dim, mh), gmat(state_dim, mh);
            for (Eigen::Index j = 0; j < mh; ++j) {
                fmat.col(j) = df_hist[static_cast<size_t>(j)];
                gmat.col(j) = dx_hist[static_cast<size_t>(j)] + df_hist[static_cast<size_t>(j)];
            }
            const Eigen::VectorXd gammas = fmat.colPivHouseholderQr().solve(f);
            const Eigen::VectorXd x_aa = g - gmat * gammas;
            if (x_aa.allFinite()) x_next = x_aa;
        }
        if (reset_history) {
            dx_hist.clear();
            df_hist.clear();
        }
        unpack_state(x_next);

        // Residual balancing keeps the two residuals comparable; the scaled
        // duals are rescaled to preserve the fixed point.
        if (it % 50 == 0) {
            double factor = 1.0;
            if (rp > 10.0 * rd && rho < 1e8)
                factor = 2.0;
            else if (rd > 10.0 * rp && rho > 1e-6)
                factor = 0.5;
            if (factor != 1.0) {
                rho *= factor;
                for (auto& w : wk) w.U /= factor;
                refactor();
                dx_hist.clear();
                df_hist.clear();
                have_prev = false;
            }
        }
    }

    if (!report.converged) {
        // Plateau or max-iteration exit: try the barrier finisher from the
        // current coefficients; on success the cone iterates are replaced by
        // the exactly-centered primal blocks.
        std::vector<detail_qp::ValueBlock> vblocks(nb);
        for (size_t i = 0; i < nb; ++i)
            vblocks[i] = detail_qp::ValueBlock{wk[i].A, wk[i].b, wk[i].R, wk[i].Minv,
                                               wk[i].lambda_tr};
        Eigen::VectorXd zf = z;
        std::vector<Eigen::MatrixXd> dfin(nb);
        double fin_stat = 0.0;
        if (detail_qp::barrier_finish(p.H, p.q, p.E, p.t, vblocks, zf, dfin,
                                      opts.tol_feas * bscale, opts.tol_stat, &fin_stat)) {
            z = zf;
            for (size_t i = 0; i < nb; ++i) wk[i].W = dfin[i];
            rd_rel = fin_stat;
            report.converged = true;
        } else {
            // One plain sweep makes the reported pair internally consistent
            // again after an extrapolated state.
            sweep();
        }
    }

    KsosSolution sol;
    sol.z = z;
    sol.B.resize(nb);
    double row_res = me > 0 ? (p.E * z - p.t).cwiseAbs().maxCoeff() : 0.0;
    report.objective = 0.5 * z.dot(p.H * z) - p.q.dot(z) + p.c0;
    for (size_t i = 0; i < nb; ++i) {
        BlockWork& w = wk[i];
        // The returned block is the cone iterate: exactly PSD, with the cone
        // gap surfacing as the residual of the row equalities.
        const Eigen::VectorXd s = w.A * z + w.b;
        row_res = std::max(row_res, (w.W.diagonal() - s).cwiseAbs().maxCoeff());
        report.objective += w.lambda_tr * w.W.cwiseProduct(w.Minv).sum();
        // B = R^{-T} D R^{-1}, PSD by congruence.
        const Eigen::MatrixXd y = w.R.transpose().triangularView<Eigen::Lower>().solve(
            Eigen::MatrixXd(w.W));
        sol.B[i] =
            w.R.transpose().triangularView<Eigen::Lower>().solve(y.transpose()).transpose();
        sol.B[i] = 0.5 * (sol.B[i] + sol.B[i].transpose());
    }
    report.primal_residual = row_res;
    report.stationarity_residual = rd_rel;
    report.wall_time_s = timer.seconds();
    sol.report = report;
    return sol;
}

}  // namespace qp

namespace detail {

// Shared assembly for the constrained fits: deduplicated anchor set, data
// matrices, flattened inequality/equality rows over vec(alpha).
struct FitWorkspace {
    Eigen::MatrixXd anchors;          // J x d
    Eigen::Index n_outputs = 1;
    Eigen::MatrixXd H;                // JP x JP
    Eigen::VectorXd q;
    double c0 = 0.0;
    Eigen::MatrixXd A;                // constraint rows over vec(alpha)
    Eigen::VectorXd b;
    Eigen::MatrixXd E;                // equality-pair rows
    Eigen::VectorXd t;
    std::vector<std::vector<Eigen::Index>> block_rows;  // global row ids per block
};

inline FitWorkspace build_fit_workspace(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                        const KernelSpec& spec, double lambda_k,
                                        const ConstraintSpec& constraints) {
    validate(spec);
    const Eigen::Index p = spec.output_dim;
    if (Y.rows() != X.rows() || (X.rows() > 0 && Y.cols() != p))
        throw std::invalid_argument("fit: data dimensions inconsistent with kernel spec");

    FitWorkspace ws;
    ws.n_outputs = p;
    Eigen::MatrixXd eq_points(static_cast<Eigen::Index>(constraints.equality_pairs.size()),
                              X.cols() > 0 ? X.cols() : constraints.samples.cols());
    for (size_t i = 0; i < constraints.equality_pairs.size(); ++i)
        eq_points.row(static_cast<Eigen::Index>(i)) = constraints.equality_pairs[i].point;
    ws.anchors = dedup_points({&X, &constraints.samples, &eq_points});
    const Eigen::Index j = ws.anchors.rows();

    const Eigen::MatrixXd gz = gram(spec, ws.anchors);
    const Eigen::MatrixXd kd = X.rows() > 0 ? cross_gram(spec, X, ws.anchors)
                                            : Eigen::MatrixXd(0, j);
    const Eigen::MatrixXd hd = 2.0 * (kd.transpose() * kd + lambda_k * gz);

    ws.H = Eigen::MatrixXd::Zero(j * p, j * p);
    ws.q = Eigen::VectorXd::Zero(j * p);
    for (Eigen::Index c = 0; c < p; ++c) {
        ws.H.block(c * j, c * j, j, j) = hd;
        if (X.rows() > 0) ws.q.segment(c * j, j) = 2.0 * kd.transpose() * Y.col(c);
    }
    ws.c0 = X.rows() > 0 ? Y.squaredNorm() : 0.0;

    const Eigen::MatrixXd ks = constraints.samples.rows() > 0
                                   ? cross_gram(spec, constraints.samples, ws.anchors)
                                   : Eigen::MatrixXd(0, j);
    ws.A.resize(constraints.total_rows(), j * p);
    ws.b.resize(ws.A.rows());
    Eigen::Index row = 0;
    for (const auto& blk : constraints.blocks) {
        ws.block_rows.emplace_back();
        for (const auto& cr : blk.rows) {
            if (cr.sample < 0 || cr.sample >= constraints.samples.rows())
                throw std::invalid_argument("fit: constraint row references unknown sample");
            if (cr.c.size() != p)
                throw std::invalid_argument("fit: constraint row has wrong output dimension");
            for (Eigen::Index c = 0; c < p; ++c)
                ws.A.block(row, c * j, 1, j) = cr.c[c] * ks.row(cr.sample);
            ws.b[row] = cr.d;
            ws.block_rows.back().push_back(row);
            ++row;
        }
    }

    const Eigen::Index ne = static_cast<Eigen::Index>(constraints.equality_pairs.size());
    ws.E = Eigen::MatrixXd::Zero(ne * p, j * p);
    ws.t.resize(ne * p);
    for (Eigen::Index e = 0; e < ne; ++e) {
        const auto& pair = constraints.equality_pairs[static_cast<size_t>(e)];
        if (pair.target.size() != p)
            throw std::invalid_argument("fit: equality target has wrong dimension");
        const Eigen::VectorXd kvec = kernel_vector(spec, ws.anchors, pair.point);
        for (Eigen::Index c = 0; c < p; ++c) {
            ws.E.block(e * p + c, c * j, 1, j) = kvec.transpose();
            ws.t[e * p + c] = pair.target[c];
        }
    }
    return ws;
}

inline Eigen::MatrixXd unvec(const Eigen::VectorXd& z, Eigen::Index j, Eigen::Index p) {
    return Eigen::Map<const Eigen::MatrixXd>(z.data(), j, p);
}

}  // namespace detail

/// Closed-form kernel ridge regression: alpha = (G + lambda I)^{-1} Y.
inline FitResult fit_unconstrained(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                   const KernelSpec& spec, double lambda_k) {
    validate(spec);
    if (X.rows() < 1) throw std::invalid_argument("fit_unconstrained: empty dataset");
    if (!(lambda_k > 0.0)) throw std::invalid_argument("fit_unconstrained: lambda_k must be > 0");
    detail::WallTimer timer;
    const Eigen::MatrixXd g = gram(spec, X);
    Eigen::MatrixXd reg = g;
    reg.diagonal().array() += lambda_k;
    const Eigen::MatrixXd alpha = reg.ldlt().solve(Y);

    FitResult res;
    res.model = RepresenterModel{X, spec, alpha};
    res.report.objective =
        (Y - g * alpha).squaredNorm() + lambda_k * (alpha.transpose() * g * alpha).trace();
    res.report.primal_residual = 0.0;
    res.report.stationarity_residual =
        (reg * alpha - Y).cwiseAbs().maxCoeff() / (1.0 + Y.cwiseAbs().maxCoeff());
    res.report.converged = true;
    res.report.wall_time_s = timer.seconds();
    return res;
}

/// Kernel ridge regression with affine inequalities enforced at the sample
/// points and exact interpolation pairs.
inline FitResult fit_sampled(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                             const KernelSpec& spec, double lambda_k,
                             const ConstraintSpec& constraints, const SolverOptions& opts = {}) {
    if (!(lambda_k > 0.0)) throw std::invalid_argument("fit_sampled: lambda_k must be > 0");
    auto ws = detail::build_fit_workspace(X, Y, spec, lambda_k, constraints);
    qp::InequalityQp p{ws.H, ws.q, ws.c0, ws.A, ws.b, ws.E, ws.t};
    qp::QpSolution sol = qp::solve_inequality_qp(p, opts);

    FitResult res;
    res.model = RepresenterModel{ws.anchors, spec,
                                 detail::unvec(sol.z, ws.anchors.rows(), ws.n_outputs)};
    res.report = sol.report;
    return res;
}

/// Kernel ridge regression with the sampled inequalities replaced by
/// equalities to one kernel-SoS block per constraint index, trace-penalized.
inline FitResult fit_ksos(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                          const KernelSpec& spec, double lambda_k, double lambda_phi,
                          const KernelSpec& phi_spec, const ConstraintSpec& constraints,
                          const SolverOptions& opts = {}) {
    if (!(lambda_k > 0.0)) throw std::invalid_argument("fit_ksos: lambda_k must be > 0");
    if (lambda_phi < 0.0) throw std::invalid_argument("fit_ksos: lambda_phi must be >= 0");
    validate(phi_spec);
    auto ws = detail::build_fit_workspace(X, Y, spec, lambda_k, constraints);

    qp::KsosQp p{ws.H, ws.q, ws.c0, ws.A, ws.b, ws.E, ws.t, {}};
    std::vector<Eigen::MatrixXd> block_points;
    for (size_t i = 0; i < constraints.blocks.size(); ++i) {
        const auto& blk = constraints.blocks[i];
        if (blk.rows.empty()) continue;
        Eigen::MatrixXd pts(static_cast<Eigen::Index>(blk.rows.size()),
                            constraints.samples.cols());
        for (size_t r = 0; r < blk.rows.size(); ++r) {
            for (size_t r2 = 0; r2 < r; ++r2)
                if (blk.rows[r].sample == blk.rows[r2].sample)
                    throw std::invalid_argument(
                        "fit_ksos: duplicate sample point within a constraint block");
            pts.row(static_cast<Eigen::Index>(r)) = constraints.samples.row(blk.rows[r].sample);
        }
        qp::KsosBlockData bd;
        bd.factor = cholesky_factor(gram(phi_spec, pts));
        bd.lambda_tr = lambda_phi;
        bd.rows = ws.block_rows[i];
        p.blocks.push_back(std::move(bd));
        block_points.push_back(std::move(pts));
    }

    qp::KsosSolution sol = qp::solve_ksos_qp(p, opts);

    FitResult res;
    res.model = RepresenterModel{ws.anchors, spec,
                                 detail::unvec(sol.z, ws.anchors.rows(), ws.n_outputs)};
    for (size_t i = 0; i < sol.B.size(); ++i)
        res.sos_blocks.push_back(SosModel{block_points[i], phi_spec, p.blocks[i].factor,
                                          sol.B[i], 0});
    res.report = sol.report;
    return res;
}

struct MarginResult {
    RepresenterModel g1;
    double norm = 0.0;
    SolveReport report;
};

/// Minimum-norm function with C(x) g(x) >= 1 at every constraint sample.
inline MarginResult solve_margin_function(const ConstraintSpec& constraints,
                                          const KernelSpec& spec, const SolverOptions& opts = {}) {
    validate(spec);
    if (constraints.samples.rows() < 1 || constraints.total_rows() < 1)
        throw std::invalid_argument("solve_margin_function: needs at least one sample row");
    for (const auto& blk : constraints.blocks)
        for (const auto& cr : blk.rows)
            if (cr.c.norm() == 0.0)
                throw std::invalid_argument("solve_margin_function: degenerate zero row");

    // Same machinery as fit_sampled with no data, rows c^T g - 1 >= 0.
    ConstraintSpec shifted = constraints;
    shifted.equality_pairs.clear();
    for (auto& blk : shifted.blocks)
        for (auto& cr : blk.rows) cr.d = -1.0;
    const Eigen::MatrixXd no_data_x(0, constraints.samples.cols());
    const Eigen::MatrixXd no_data_y(0, spec.output_dim);
    auto ws = detail::build_fit_workspace(no_data_x, no_data_y, spec, 1.0, shifted);
    qp::InequalityQp p{ws.H, ws.q, ws.c0, ws.A, ws.b, ws.E, ws.t};
    qp::QpSolution sol = qp::solve_inequality_qp(p, opts);

    MarginResult res;
    res.g1 = RepresenterModel{ws.anchors, spec,
                              detail::unvec(sol.z, ws.anchors.rows(), ws.n_outputs)};
    res.norm = res.g1.rkhs_norm();
    res.report = sol.report;
    res.report.objective = res.norm * res.norm;
    return res;
}

namespace detail {

inline std::pair<double, double> gcv_best(const Eigen::MatrixXd& G, const Eigen::MatrixXd& Y,
                                          const std::vector<double>& lambda_grid) {
    if (lambda_grid.empty()) throw std::invalid_argument("gcv_select: empty grid");
    for (size_t i = 1; i < lambda_grid.size(); ++i)
        if (!(lambda_grid[i] > lambda_grid[i - 1]))
            throw std::invalid_argument("gcv_select: grid must be strictly increasing");
    const Eigen::Index n = G.rows();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    const Eigen::VectorXd d = eig.eigenvalues();
    const Eigen::MatrixXd yt = eig.eigenvectors().transpose() * Y;
    const Eigen::VectorXd yt2 = yt.array().square().rowwise().sum();

    double best_lambda = lambda_grid.front();
    double best_v = std::numeric_limits<double>::infinity();
    for (double lambda : lambda_grid) {
        const Eigen::ArrayXd f = lambda / (d.array() + lambda);
        const double rss = (f.square() * yt2.array()).sum();
        const double tr = f.sum();
        const double v = static_cast<double>(n) * rss / (tr * tr);
        if (v <= best_v) {  // ties resolved toward the largest lambda
            best_v = v;
            best_lambda = lambda;
        }
    }
    return {best_lambda, best_v};
}

}  // namespace detail

/// Generalized cross-validation: argmin over the grid of
/// V(lambda) = N |(I - H)Y|_F^2 / trace(I - H)^2 with H = G (G + lambda I)^{-1}.
inline double gcv_select(const Eigen::MatrixXd& G, const Eigen::MatrixXd& Y,
                         const std::vector<double>& lambda_grid) {
    return detail::gcv_best(G, Y, lambda_grid).first;
}

struct HyperParams {
    double sigma_k = 1.0;
    double lambda_k = 1e-6;
    double sigma_phi = 0.5;
    double lambda_phi = 1e-3;
};

inline std::vector<double> default_lambda_k_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back(std::pow(10.0, -8.0 + 0.25 * i));
    return grid;
}

/// Bandwidth by GCV score over the sigma grid (ridge weight from gcv_select
/// at each sigma), the phi bandwidth fixed to sigma/2, and the trace weight
/// by leave-one-out validation loss plus an optional violation score.
inline HyperParams hyperparameter_search(
    const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, int output_dim,
    const std::vector<double>& sigma_grid, const std::vector<double>& lambda_phi_grid,
    const ConstraintSpec& constraints,
    const std::function<double(const RepresenterModel&)>& violation_score = {},
    const std::vector<double>& lambda_k_grid = default_lambda_k_grid(),
    const SolverOptions& opts = {}) {
    if (X.rows() < 1) throw std::invalid_argument("hyperparameter_search: empty dataset");
    if (sigma_grid.empty() || lambda_phi_grid.empty())
        throw std::invalid_argument("hyperparameter_search: empty grid");

    HyperParams hp;
    double best_score = std::numeric_limits<double>::infinity();
    for (double sigma : sigma_grid) {
        const KernelSpec spec{sigma, output_dim};
        const auto [lambda, score] =
            detail::gcv_best(gram(spec, X), Y, lambda_k_grid);
        if (score < best_score) {
            best_score = score;
            hp.sigma_k = sigma;
            hp.lambda_k = lambda;
        }
    }
    hp.sigma_phi = hp.sigma_k / 2.0;

    const KernelSpec spec{hp.sigma_k, output_dim};
    const KernelSpec phi{hp.sigma_phi, 1};
    const Eigen::Index n = X.rows();
    double best_crit = std::numeric_limits<double>::infinity();
    hp.lambda_phi = lambda_phi_grid.front();
    for (double lp : lambda_phi_grid) {
        double crit = 0.0;
        if (n >= 2) {
            for (Eigen::Index held = 0; held < n; ++held) {
                Eigen::MatrixXd xr(n - 1, X.cols()), yr(n - 1, Y.cols());
                Eigen::Index k = 0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (i == held) continue;
                    xr.row(k) = X.row(i);
                    yr.row(k) = Y.row(i);
                    ++k;
                }
                const FitResult fit =
                    fit_ksos(xr, yr, spec, hp.lambda_k, lp, phi, constraints, opts);
                crit += (Eigen::VectorXd(Y.row(held)) -
                         fit.model.evaluate(Eigen::VectorXd(X.row(held))))
                            .squaredNorm();
            }
        }
        if (violation_score) {
            const FitResult full =
                fit_ksos(X, Y, spec, hp.lambda_k, lp, phi, constraints, opts);
            crit += violation_score(full.model);
        }
        if (crit < best_crit) {
            best_crit = crit;
            hp.lambda_phi = lp;
        }
    }
    return hp;
}

}  // namespace ksos
