#include <doctest.h>

#include <cmath>

#include "hill4bp/equilibria.hpp"
#include "hill4bp/errors.hpp"
#include "oracles.hpp"

using namespace hill4bp;

TEST_CASE("mu = 0 has only L1 and L2")
{
    const auto pts = equilibrium_points(0.0);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].label == EquilibriumLabel::L1);
    CHECK(pts[0].position.x() == doctest::Approx(std::pow(3.0, -1.0 / 3.0)).epsilon(1e-15));
    CHECK(pts[1].position.x() == doctest::Approx(-std::pow(3.0, -1.0 / 3.0)).epsilon(1e-15));
    CHECK_FALSE(equilibrium_point(0.0, EquilibriumLabel::L3).has_value());
    CHECK_FALSE(equilibrium_point(0.0, EquilibriumLabel::L4).has_value());
}

TEST_CASE("L1 at mu = 0.00095")
{
    const auto l1 = *equilibrium_point(0.00095, EquilibriumLabel::L1);
    CHECK(l1.position.x() == doctest::Approx(0.693526).epsilon(1e-6));
    CHECK(std::abs(l1.jacobi - 4.32572) < 1e-5);
    CHECK(l1.jacobi == doctest::Approx(4.325722).epsilon(2e-7));
}

TEST_CASE("equilibria at mu = 1/2")
{
    const auto pts = equilibrium_points(0.5);
    REQUIRE(pts.size() == 4);
    CHECK(pts[0].position.x() == doctest::Approx(std::pow(2.25, -1.0 / 3.0)));
    CHECK(pts[2].position.y() == doctest::Approx(std::pow(0.75, -1.0 / 3.0)));
    CHECK((pts[1].position + pts[0].position).norm() == 0.0);
    CHECK((pts[3].position + pts[2].position).norm() == 0.0);
}

TEST_CASE("gradient vanishes at every equilibrium")
{
    for (int i = 1; i <= 50; ++i) {
        const double mu = 0.5 * i / 50.0;
        const ModelParams p(mu);
        for (const auto &pt : equilibrium_points(mu)) {
            CHECK(potential_gradient(Vec3(pt.position.x(), pt.position.y(), 0.0), p).norm() <= 1e-12);
            CHECK(pt.omega_xy == 0.0);
            // Closed-form partials agree with the Hessian.
            const Mat3 h = potential_hessian(Vec3(pt.position.x(), pt.position.y(), 0.0), p);
            CHECK(h(0, 0) == doctest::Approx(pt.omega_xx).epsilon(1e-12));
            CHECK(h(1, 1) == doctest::Approx(pt.omega_yy).epsilon(1e-12));
            CHECK(std::abs(h(0, 1)) < 1e-12);
        }
    }
}

TEST_CASE("linearization coefficients")
{
    const auto l1 = *equilibrium_point(0.0, EquilibriumLabel::L1);
    CHECK(l1.omega_xx == doctest::Approx(9.0));
    CHECK(l1.omega_yy == doctest::Approx(-3.0));
    CHECK(l1.charpoly.B == doctest::Approx(-27.0));

    for (double mu : {0.001, 0.05, 0.3, 0.5}) {
        const double d = std::sqrt(1 - 3 * mu + 3 * mu * mu);
        const auto lin1 = linearize(*equilibrium_point(mu, EquilibriumLabel::L1), mu);
        CHECK(lin1.charpoly.B == doctest::Approx(-13.5 * (1 + d) * d));
        const auto lin3 = linearize(*equilibrium_point(mu, EquilibriumLabel::L3), mu);
        CHECK(lin3.charpoly.A == doctest::Approx((3 * d - 1) / 2));
        CHECK(lin3.charpoly.B == doctest::Approx(13.5 * (1 - d) * d));
        CHECK(lin3.charpoly.D == doctest::Approx((225 * d * d - 222 * d + 1) / 4));
        CHECK(lin3.charpoly.D == doctest::Approx(oracle::l3_discriminant(mu)));
    }
    CHECK(l3_discriminant(0.01) > 0.0);
    CHECK(l3_discriminant(0.0125) < 0.0);
    CHECK(oracle::l3_discriminant(0.01) > 0.0);
    CHECK(oracle::l3_discriminant(0.0125) < 0.0);
}

TEST_CASE("classification examples")
{
    for (int i = 0; i <= 50; ++i) {
        const double mu = 0.5 * i / 50.0;
        CHECK(equilibrium_point(mu, EquilibriumLabel::L1)->kind == StabilityKind::SaddleCenter);
        CHECK(equilibrium_point(mu, EquilibriumLabel::L2)->kind == StabilityKind::SaddleCenter);
    }
    CHECK(equilibrium_point(0.00095, EquilibriumLabel::L3)->kind == StabilityKind::CenterCenter);
    CHECK(equilibrium_point(0.05, EquilibriumLabel::L3)->kind == StabilityKind::ComplexSaddle);
    CHECK(equilibrium_point(0.05, EquilibriumLabel::L4)->kind == StabilityKind::ComplexSaddle);
    CHECK(classify(CharPoly{1.0, 0.25, 0.0}) == StabilityKind::Degenerate);
}

TEST_CASE("characteristic roots agree with numerical eigenvalues")
{
    for (int i = 1; i <= 100; ++i) {
        const double mu = 0.5 * i / 100.0;
        for (const auto &pt : equilibrium_points(mu)) {
            auto num = numeric_eigenvalues(linearize(pt, mu).matrix);
            sort_eigenvalues(num);
            for (int k = 0; k < 4; ++k) {
                CHECK(std::abs(num[k] - pt.eigenvalues[k]) < 1e-9);
            }
        }
    }
}

TEST_CASE("critical mass ratio")
{
    const auto c = critical_mass_ratio();
    CHECK(c.paper_value == 0.00898964);
    CHECK(c.computed_root > 0.01);
    CHECK(c.computed_root < 0.0125);
    CHECK(std::abs(oracle::l3_discriminant(c.computed_root)) < 1e-10);
    CHECK(std::abs(c.computed_root - c.eigen_oracle_root) <= 1e-8);
    CHECK(c.discrepancy);
    CHECK(oracle::l3_discriminant(c.paper_value) > 0.0);
    // Stability below and above the computed root.
    CHECK(equilibrium_point(c.computed_root - 1e-4, EquilibriumLabel::L3)->kind == StabilityKind::CenterCenter);
    CHECK(equilibrium_point(c.computed_root + 1e-4, EquilibriumLabel::L3)->kind == StabilityKind::ComplexSaddle);
}
