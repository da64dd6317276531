#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "gtvc/errors.hpp"
#include "gtvc/spline.hpp"

using namespace gtvc;

TEST_CASE("knot layout") {
    SplineBasis bern(4, 3);  // no interior knots: Bernstein cubics
    CHECK(bern.knots().size() == 8);
    for (int i = 0; i < 4; ++i) CHECK(bern.knots()[static_cast<size_t>(i)] == 0.0);
    for (int i = 4; i < 8; ++i) CHECK(bern.knots()[static_cast<size_t>(i)] == 1.0);

    SplineBasis b10(10, 3);  // 6 interior knots at i/7
    const auto& k = b10.knots();
    REQUIRE(k.size() == 14);
    for (int i = 1; i <= 6; ++i) {
        CHECK(k[static_cast<size_t>(3 + i)] == doctest::Approx(i / 7.0).epsilon(1e-15));
    }

    CHECK_THROWS_AS(SplineBasis(3, 3), ConfigError);
}

TEST_CASE("Bernstein evaluation oracle") {
    SplineBasis basis(4, 3);
    // hand values: Bernstein cubics at 0.5 are C(3,k) 0.5^3
    const Eigen::VectorXd v = basis.evaluate(0.5);
    CHECK(v[0] == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(v[1] == doctest::Approx(0.375).epsilon(1e-14));
    CHECK(v[2] == doctest::Approx(0.375).epsilon(1e-14));
    CHECK(v[3] == doctest::Approx(0.125).epsilon(1e-14));

    // full-multiplicity boundary: first function interpolates at 0
    const Eigen::VectorXd at0 = basis.evaluate(0.0);
    CHECK(at0[0] == doctest::Approx(1.0));
    CHECK(at0.tail(3).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    const Eigen::VectorXd at1 = basis.evaluate(1.0);
    CHECK(at1[3] == doctest::Approx(1.0));

    CHECK_THROWS_AS(basis.evaluate(-0.01), DataError);
    CHECK_THROWS_AS(basis.evaluate(1.01), DataError);
}

TEST_CASE("partition of unity on a dense grid") {
    for (int J : {4, 8, 12}) {
        SplineBasis basis(J, 3);
        double worst = 0.0;
        for (int i = 0; i < 10000; ++i) {
            const double tau = static_cast<double>(i) / 9999.0;
            const Eigen::VectorXd v = basis.evaluate(tau);
            CHECK(v.minCoeff() >= 0.0);
            worst = std::max(worst, std::abs(v.sum() - 1.0));
        }
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("local support") {
    SplineBasis basis(10, 3);
    const auto& knots = basis.knots();
    for (int j = 0; j < 10; ++j) {
        const double lo = knots[static_cast<size_t>(j)];
        const double hi = knots[static_cast<size_t>(j + 4)];
        for (int i = 0; i <= 500; ++i) {
            const double tau = i / 500.0;
            const double v = basis.evaluate(tau)[j];
            if (tau < lo - 1e-12 || tau > hi + 1e-12) CHECK(v == 0.0);
        }
    }
}

TEST_CASE("penalty matrix hand oracles") {
    SplineBasis b3(3, 1);
    const Eigen::MatrixXd P1 = penalty_matrix(b3, 1);
    Eigen::MatrixXd expected(3, 3);
    expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
    CHECK((P1 - expected).cwiseAbs().maxCoeff() < 1e-15);

    SplineBasis b8(8, 3);
    const Eigen::MatrixXd P2 = penalty_matrix(b8, 2);
    CHECK((P2 - P2.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P2);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10);
    // null space of the second-order penalty: constants and linear ramps
    int null_dim = 0;
    for (int i = 0; i < 8; ++i) {
        if (eig.eigenvalues()[i] < 1e-10) ++null_dim;
    }
    CHECK(null_dim == 2);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(8);
    Eigen::VectorXd ramp(8);
    for (int i = 0; i < 8; ++i) ramp[i] = 0.3 + 1.7 * i;
    CHECK(ones.dot(P2 * ones) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(ramp.dot(P2 * ramp) == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(penalty_matrix(b3, 3), ConfigError);
}

TEST_CASE("quadratic form equals the sum of squared differences") {
    SplineBasis b5(5, 3);
    const Eigen::MatrixXd P = penalty_matrix(b5, 2);
    Eigen::VectorXd c(5);
    c << 0.3, -1.2, 0.7, 2.5, -0.4;
    double direct = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double d2 = c[i + 2] - 2 * c[i + 1] + c[i];
        direct += d2 * d2;
    }
    CHECK(c.dot(P * c) == doctest::Approx(direct).epsilon(1e-12));

    // a sequence with a nonzero second difference is penalized
    Eigen::VectorXd kink = Eigen::VectorXd::Zero(5);
    kink[2] = 1.0;
    CHECK(kink.dot(P * kink) > 0.0);
}

TEST_CASE("centering enforces a zero grid mean") {
    SplineBasis basis(8, 3);
    const auto grid = unit_grid(501);
    const CenteredBasis cb = center_basis(basis, grid);

    // offsets are the column means of the raw table, recomputed independently
    for (int j = 0; j < 8; ++j) {
        double mean = 0.0;
        for (double tau : grid) mean += basis.evaluate(tau)[j];
        mean /= static_cast<double>(grid.size());
        CHECK(cb.offsets[j] == doctest::Approx(mean).epsilon(1e-14));
    }

    // any coefficient combination of centered columns has zero grid mean
    Eigen::VectorXd coef(8);
    coef << 1.0, -2.0, 0.5, 3.0, -1.5, 0.25, 2.0, -0.75;
    const Eigen::VectorXd values = cb.table * coef;
    CHECK(std::abs(values.mean()) < 1e-12);

    CHECK_THROWS_AS(center_basis(basis, unit_grid(50)), ConfigError);
}

TEST_CASE("polynomial reproduction by unpenalized least squares") {
    SplineBasis basis(8, 3);
    const auto grid = unit_grid(200);
    const Eigen::MatrixXd B = basis.evaluate_grid(grid);
    Eigen::VectorXd y(200);
    for (int i = 0; i < 200; ++i) {
        const double t = grid[static_cast<size_t>(i)];
        y[i] = 0.4 - 1.3 * t + 2.2 * t * t - 0.9 * t * t * t;
    }
    const Eigen::VectorXd coef = (B.transpose() * B).ldlt().solve(B.transpose() * y);
    CHECK((B * coef - y).cwiseAbs().maxCoeff() < 1e-8);
}
