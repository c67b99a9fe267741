#include "ksos/kernels.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace ksos;

namespace {

Eigen::MatrixXd random_points(std::mt19937_64& rng, int m, int d, double min_sep = 0.0) {
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

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
    Eigen::MatrixXd s = a * a.transpose();
    s.diagonal().array() += 0.5;
    return s;
}

}  // namespace

TEST_CASE("k_eval closed form and symmetry", "[kernels]") {
    KernelSpec spec{1.0, 1};
    Eigen::Vector2d x(0.3, -0.7);
    CHECK(k_eval(spec, x, x) == 1.0);

    Eigen::Vector2d a(0.0, 0.0), b(1.0, 0.0);
    CHECK_THAT(k_eval(spec, a, b), Catch::Matchers::WithinAbs(std::exp(-0.5), 1e-12));

    KernelSpec narrow{0.5, 1};
    CHECK_THAT(k_eval(narrow, a, b), Catch::Matchers::WithinAbs(std::exp(-2.0), 1e-12));

    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        Eigen::Vector3d u(normal(rng), normal(rng), normal(rng));
        Eigen::Vector3d v(normal(rng), normal(rng), normal(rng));
        CHECK(k_eval(spec, u, v) == k_eval(spec, v, u));  // exact by construction
        CHECK(k_eval(spec, u, v) > 0.0);
        CHECK(k_eval(spec, u, v) <= 1.0);
    }
}

TEST_CASE("k_eval rejects mismatched dimensions and bad specs", "[kernels]") {
    CHECK_THROWS_AS(k_eval(KernelSpec{1.0, 1}, Eigen::Vector2d(0, 0), Eigen::Vector3d(0, 0, 0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(k_eval(KernelSpec{0.0, 1}, Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(k_eval(KernelSpec{1.0, 0}, Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 0)),
                    std::invalid_argument);
}

TEST_CASE("gram matrices are symmetric, unit-diagonal, PSD", "[kernels]") {
    KernelSpec spec{1.0, 1};

    Eigen::MatrixXd one(1, 2);
    one << 0.2, 0.4;
    CHECK(gram(spec, one) == Eigen::MatrixXd::Identity(1, 1));

    Eigen::MatrixXd coincident(2, 2);
    coincident << 0.2, 0.4, 0.2, 0.4;
    const Eigen::MatrixXd g2 = gram(spec, coincident);
    CHECK(g2(0, 1) == 1.0);
    CHECK(g2(1, 0) == 1.0);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(g2);
    CHECK(lu.rank() == 1);

    std::mt19937_64 rng(11);
    const Eigen::MatrixXd pts = random_points(rng, 5, 2, 0.05);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram(spec, pts));
    CHECK(eig.eigenvalues().minCoeff() > 0.0);

    for (int trial = 0; trial < 100; ++trial) {
        const int m = 2 + static_cast<int>(rng() % 10);
        const Eigen::MatrixXd x = random_points(rng, m, 3);
        const Eigen::MatrixXd g = gram(spec, x);
        CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(g.diagonal().maxCoeff() == 1.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e(g);
        CHECK(e.eigenvalues().minCoeff() >= -1e-10);
    }
}

TEST_CASE("k_partial matches finite differences on all supported orders", "[kernels]") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    KernelSpec spec{1.0, 1};
    const int d = 2;

    // All multi-index pairs with |alpha| <= 2 and |beta| <= 2.
    std::vector<Eigen::VectorXi> idx;
    for (int a0 = 0; a0 <= 2; ++a0)
        for (int a1 = 0; a1 + a0 <= 2; ++a1) {
            Eigen::VectorXi v(d);
            v << a0, a1;
            idx.push_back(v);
        }

    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd x(d), y(d);
        for (int t = 0; t < d; ++t) {
            x[t] = unif(rng);
            y[t] = unif(rng);
        }
        for (const auto& alpha : idx)
            for (const auto& beta : idx) {
                const double exact = k_partial(spec, alpha, beta, x, y);
                const int order = alpha.sum() + beta.sum();
                if (order <= 2) {
                    // Low orders against the pure finite-difference fallback.
                    const double fd = k_partial_fd(spec, alpha, beta, x, y, 1e-5);
                    CHECK_THAT(exact, Catch::Matchers::WithinAbs(
                                          fd, 1e-6 * std::max(1.0, std::abs(exact))));
                }
                // Every order against one central difference of the analytic
                // derivative one order below (chained verification keeps the
                // difference scheme first-order and accurate).
                if (order > 0) {
                    const double h = 1e-5;
                    Eigen::VectorXi a = alpha, b = beta;
                    double fd_chain = 0.0;
                    if (alpha.sum() > 0) {
                        int t = alpha[0] > 0 ? 0 : 1;
                        a[t] -= 1;
                        Eigen::VectorXd xp = x, xm = x;
                        xp[t] += h;
                        xm[t] -= h;
                        fd_chain = (k_partial(spec, a, b, xp, y) - k_partial(spec, a, b, xm, y)) /
                                   (2.0 * h);
                    } else {
                        int t = beta[0] > 0 ? 0 : 1;
                        b[t] -= 1;
                        Eigen::VectorXd yp = y, ym = y;
                        yp[t] += h;
                        ym[t] -= h;
                        fd_chain = (k_partial(spec, a, b, x, yp) - k_partial(spec, a, b, x, ym)) /
                                   (2.0 * h);
                    }
                    CHECK_THAT(exact, Catch::Matchers::WithinAbs(
                                          fd_chain, 1e-6 * std::max(1.0, std::abs(exact))));
                }
            }
    }
}

TEST_CASE("k_partial special values and error paths", "[kernels]") {
    KernelSpec spec{1.0, 1};
    Eigen::Vector2d x(0.1, 0.9), y(-0.4, 0.3);
    Eigen::VectorXi zero = Eigen::VectorXi::Zero(2);
    CHECK(k_partial(spec, zero, zero, x, y) == k_eval(spec, x, y));

    Eigen::VectorXi e1(2);
    e1 << 1, 0;
    CHECK(k_partial(spec, e1, zero, x, x) == 0.0);

    Eigen::VectorXi third(2);
    third << 3, 0;
    CHECK_THROWS_AS(k_partial(spec, third, zero, x, y), std::invalid_argument);
}

TEST_CASE("cholesky_factor reconstructs and flags singular matrices", "[kernels]") {
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
    CHECK(cholesky_factor(id).factor == id);

    Eigen::MatrixXd four(1, 1);
    four << 4.0;
    CHECK(cholesky_factor(four).factor(0, 0) == 2.0);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd g = random_spd(rng, 6);
        const GramFactor f = cholesky_factor(g);
        const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
        CHECK((f.factor.transpose() * f.factor - f.gram).cwiseAbs().maxCoeff() <= 1e-10 * scale);
        CHECK((f.factor.triangularView<Eigen::StrictlyLower>().toDenseMatrix().cwiseAbs().maxCoeff()) == 0.0);
        // Feature inner products reproduce the Gram entries.
        const Eigen::MatrixXd inner = f.factor.transpose() * f.factor;
        CHECK((inner - f.gram).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    }

    // Indefinite input fails even with the jitter retry.
    Eigen::MatrixXd indef(2, 2);
    indef << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(cholesky_factor(indef), SingularGramError);

    // An exactly rank-deficient PSD Gram goes through the jitter path.
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 2);
    const GramFactor jittered = cholesky_factor(ones);
    CHECK(jittered.jitter == 1e-10);
    CHECK(jittered.gram(0, 0) == 1.0 + 1e-10);

    CHECK_THROWS_AS(cholesky_factor(Eigen::MatrixXd::Ones(2, 3)), std::invalid_argument);
}

TEST_CASE("trace_inverse agrees with a dense inverse", "[kernels]") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd g = random_spd(rng, 5);
        const GramFactor f = cholesky_factor(g);
        const double direct = g.inverse().trace();
        CHECK_THAT(trace_inverse(f), Catch::Matchers::WithinRel(direct, 1e-9));
    }
}
