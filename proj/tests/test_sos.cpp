#include "ksos/sos.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace ksos;

namespace {

Eigen::MatrixXd random_points(std::mt19937_64& rng, int m, int d, double min_sep) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd pts(m, d);
    int filled = 0;
    while (filled < m) {
        Eigen::RowVectorXd candidate(d);
        for (int t = 0; t < d; ++t) candidate[t] = unif(rng);
        bool ok = true;
        for (int j = 0; j < filled && ok; ++j)
            ok = (pts.row(j) - candidate).norm() >= min_sep;
        if (ok) pts.row(filled++) = candidate;
    }
    return pts;
}

GramFactor identity_factor(int m) {
    return GramFactor{Eigen::MatrixXd::Identity(m, m), Eigen::MatrixXd::Identity(m, m), 0.0};
}

}  // namespace

TEST_CASE("interpolation matrix hand examples", "[sos]") {
    Eigen::VectorXd y(2);
    y << 1.0, 2.0;
    const Eigen::MatrixXd b = nonneg_interpolation_matrix(identity_factor(2), y);
    CHECK((b - Eigen::Vector2d(1.0, 2.0).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() <=
          1e-14);
    CHECK_THAT(b.trace(), Catch::Matchers::WithinAbs(3.0, 1e-14));

    // M = 1, G = [[2]], y = [4]: B = [[2]], quadratic form 2*2 = 4,
    // trace = 2 = trace(diag(4) G^{-1}).
    Eigen::MatrixXd g(1, 1);
    g << 2.0;
    const GramFactor f = cholesky_factor(g);
    const Eigen::MatrixXd b1 = nonneg_interpolation_matrix(f, Eigen::VectorXd::Constant(1, 4.0));
    CHECK_THAT(b1(0, 0), Catch::Matchers::WithinAbs(2.0, 1e-12));
    const Eigen::VectorXd phi = f.factor.col(0);
    CHECK_THAT(phi.dot(b1 * phi), Catch::Matchers::WithinAbs(4.0, 1e-12));
}

TEST_CASE("interpolation handles zero and tiny-negative targets", "[sos]") {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd pts = random_points(rng, 4, 2, 0.1);
    KernelSpec phi{0.7, 1};
    const SosModel zero = interpolate_nonneg(pts, phi, Eigen::VectorXd::Zero(4));
    CHECK(zero.B.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sos_trace(zero) == 0.0);

    Eigen::VectorXd y = Eigen::VectorXd::Constant(4, 0.5);
    y[2] = -5e-13;  // roundoff-scale negative gets clamped
    const SosModel clamped = interpolate_nonneg(pts, phi, y);
    CHECK(clamped.clamped_targets == 1);
    CHECK_THAT(evaluate_sos(clamped, Eigen::VectorXd(pts.row(2))),
               Catch::Matchers::WithinAbs(0.0, 1e-8));

    y[2] = -1e-6;
    CHECK_THROWS_AS(interpolate_nonneg(pts, phi, y), NegativeTargetError);
}

TEST_CASE("interpolation exactness, trace identity, trace bounds", "[sos]") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int m = 2 + static_cast<int>(rng() % 19);
        const double sigma = 0.3 + 1.7 * unif(rng);
        // Separation scaled with the bandwidth keeps the Gram invertible in a
        // numerically meaningful sense (the dense-inverse oracle needs it too).
        const double sep = 0.5 * sigma;
        const double side = sep * std::ceil(std::sqrt(static_cast<double>(m))) * 1.5;
        Eigen::MatrixXd pts = side * random_points(rng, m, 2, sep / side);
        KernelSpec phi{sigma, 1};
        Eigen::VectorXd y(m);
        for (int i = 0; i < m; ++i) y[i] = 10.0 * unif(rng);

        const GramFactor f = cholesky_factor(gram(phi, pts));
        const Eigen::MatrixXd b = nonneg_interpolation_matrix(f, y);

        double worst = 0.0;
        for (int i = 0; i < m; ++i) {
            const Eigen::VectorXd col = f.factor.col(i);
            worst = std::max(worst, std::abs(col.dot(b * col) - y[i]));
        }
        CHECK(worst <= 1e-8);

        const Eigen::MatrixXd ginv = Eigen::FullPivLU<Eigen::MatrixXd>(f.gram).inverse();
        const double trace_direct = (y.asDiagonal().toDenseMatrix() * ginv).trace();
        CHECK_THAT(b.trace(),
                   Catch::Matchers::WithinAbs(trace_direct,
                                              1e-8 * std::max(1.0, std::abs(trace_direct))));

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f.gram);
        CHECK(b.trace() <= y.cwiseAbs().maxCoeff() * ginv.trace() + 1e-8);
        CHECK(b.trace() <= y.lpNorm<1>() / eig.eigenvalues().minCoeff() + 1e-8);

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(b);
        CHECK(eb.eigenvalues().minCoeff() >= -1e-8 * std::max(1.0, b.trace()));
    }
}

TEST_CASE("evaluate_sos reproduces targets and never dips below zero", "[sos]") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Eigen::MatrixXd pts = random_points(rng, 8, 2, 0.08);
    KernelSpec phi{0.6, 1};
    Eigen::VectorXd y(8);
    for (int i = 0; i < 8; ++i) y[i] = 3.0 * unif(rng);
    const SosModel model = interpolate_nonneg(pts, phi, y);

    for (int i = 0; i < 8; ++i)
        CHECK_THAT(evaluate_sos(model, Eigen::VectorXd(pts.row(i))),
                   Catch::Matchers::WithinAbs(y[i], 1e-8));

    SosModel zero = model;
    zero.B.setZero();
    CHECK(evaluate_sos(zero, Eigen::Vector2d(0.5, 0.5)) == 0.0);

    // Fuzz a PSD quadratic form over many query points.
    Eigen::MatrixXd fuzz(10000, 2);
    for (int i = 0; i < fuzz.rows(); ++i) {
        fuzz(i, 0) = 3.0 * unif(rng) - 1.0;
        fuzz(i, 1) = 3.0 * unif(rng) - 1.0;
    }
    const Eigen::VectorXd vals = evaluate_sos_batch(model, fuzz);
    CHECK(vals.minCoeff() >= -1e-10);
}

TEST_CASE("two-route evaluation oracle", "[sos]") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    // Well-separated anchors keep the Gram condition number moderate; the
    // direct route squares it.
    const Eigen::MatrixXd pts = random_points(rng, 10, 2, 0.25);
    KernelSpec phi{0.45, 1};
    Eigen::VectorXd y(10);
    for (int i = 0; i < 10; ++i) y[i] = 5.0 * unif(rng);
    const SosModel model = interpolate_nonneg(pts, phi, y);
    const Eigen::MatrixXd ginv = Eigen::FullPivLU<Eigen::MatrixXd>(model.factor.gram).inverse();
    const Eigen::MatrixXd a = ginv * y.asDiagonal() * ginv;

    for (int i = 0; i < 200; ++i) {
        const Eigen::Vector2d x(unif(rng), unif(rng));
        const Eigen::VectorXd k = kernel_vector(phi, pts, x);
        const double direct = k.dot(a * k);
        CHECK_THAT(evaluate_sos(model, x), Catch::Matchers::WithinAbs(direct, 1e-8));
    }
}

TEST_CASE("psd_project clips eigenvalues and is idempotent", "[sos]") {
    Eigen::MatrixXd d(2, 2);
    d << 1.0, 0.0, 0.0, -1.0;
    const Eigen::MatrixXd p = psd_project(d);
    CHECK_THAT(p(0, 0), Catch::Matchers::WithinAbs(1.0, 1e-14));
    CHECK_THAT(p(1, 1), Catch::Matchers::WithinAbs(0.0, 1e-14));

    std::mt19937_64 rng(37);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd a(3, 3);
        for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = normal(rng);
        const Eigen::MatrixXd psd = a * a.transpose();
        CHECK((psd_project(psd) - psd).cwiseAbs().maxCoeff() <= 1e-12 * psd.cwiseAbs().maxCoeff());
        Eigen::MatrixXd s = a + a.transpose();
        const Eigen::MatrixXd once = psd_project(s);
        CHECK((psd_project(once) - once).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("psd_project is Frobenius-nearest on 2x2 grid search", "[sos]") {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::MatrixXd s(2, 2);
        s(0, 0) = normal(rng);
        s(1, 1) = normal(rng);
        s(0, 1) = s(1, 0) = normal(rng);
        const Eigen::MatrixXd p = psd_project(s);
        const double achieved = (s - p).norm();

        // Coarse grid over PSD candidates [[a, b], [b, c]].
        double best = std::numeric_limits<double>::infinity();
        const double lim = 3.0;
        for (double a = 0.0; a <= lim; a += 0.05)
            for (double c = 0.0; c <= lim; c += 0.05)
                for (double b = -lim; b <= lim; b += 0.05) {
                    if (b * b > a * c) continue;
                    Eigen::MatrixXd x(2, 2);
                    x << a, b, b, c;
                    best = std::min(best, (s - x).norm());
                }
        CHECK(achieved <= best + 0.1);  // grid resolution slack
    }
}
