#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hill4bp/errors.hpp"
#include "hill4bp/integrate.hpp"
#include "hill4bp/regularization.hpp"
#include "oracles.hpp"

using namespace hill4bp;

TEST_CASE("Levi-Civita coordinate map")
{
    CHECK(lc_map(1.0, 0.0) == Vec2(1.0, 0.0));
    CHECK(lc_map(0.0, 1.0) == Vec2(-1.0, 0.0));
    auto g = oracle::rng(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        const double X = u(g), Y = u(g), PX = u(g), PY = u(g);
        CHECK(lc_map(X, Y) == lc_map(-X, -Y));
        CHECK(lc_momentum_map(X, Y, PX, PY) == lc_momentum_map(-X, -Y, -PX, -PY));
    }
    CHECK_THROWS_AS(lc_momentum_map(0.0, 0.0, 1.0, 1.0), SingularityError);
}

TEST_CASE("regularized energy")
{
    CHECK(regularized_energy(4.0) == doctest::Approx(0.0625).epsilon(1e-15));
    CHECK(regularized_energy(4.329636) == doctest::Approx(0.055500).epsilon(1e-5));
    CHECK(regularized_energy(-3.7) == regularized_energy(3.7));
    CHECK_THROWS_AS(regularized_energy(0.0), DomainError);
}

TEST_CASE("regularized Hamiltonian")
{
    CHECK(regularized_hamiltonian(RegState{}, 0.3) == 0.0);
    auto g = oracle::rng(2);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 1000; ++i) {
        const RegState s{u(g), u(g), u(g), u(g), 0.0};
        CHECK(regularized_hamiltonian(s, 0.0) ==
              doctest::Approx(oracle::classical_regularized_hamiltonian(s.X, s.Y, s.PX, s.PY)).epsilon(1e-14));
        for (double mu : {0.00095, 0.1, 0.5}) {
            const RegState n{-s.X, -s.Y, -s.PX, -s.PY, 0.0};
            CHECK(regularized_hamiltonian(s, mu) == regularized_hamiltonian(n, mu));
        }
    }
}

TEST_CASE("regularized field is the symplectic gradient of the Hamiltonian")
{
    auto g = oracle::rng(3);
    std::uniform_real_distribution<double> u(-1.2, 1.2);
    for (double mu : {0.0, 0.00095, 0.2, 0.5}) {
        const RegularizedField f(mu);
        for (int i = 0; i < 200; ++i) {
            const std::array<double, 4> s{u(g), u(g), u(g), u(g)};
            const auto grad = oracle::gradient<4>(
                [&](const std::array<double, 4> &v) {
                    return regularized_hamiltonian(RegState::from_array(v), mu);
                },
                s, 1e-5);
            const auto d = regularized_field(RegState::from_array(s), mu);
            const std::array<double, 4> ref{grad[2], grad[3], -grad[0], -grad[1]};
            const std::array<double, 4> got{d.X, d.Y, d.PX, d.PY};
            for (int k = 0; k < 4; ++k) {
                CHECK(std::abs(got[k] - ref[k]) <= 1e-6 * std::max(1.0, std::abs(ref[k])));
            }
            // Odd under negation.
            const auto dn = regularized_field(RegState{-s[0], -s[1], -s[2], -s[3], 0.0}, mu);
            CHECK(dn.X == -d.X);
            CHECK(dn.Y == -d.Y);
            CHECK(dn.PX == -d.PX);
            CHECK(dn.PY == -d.PY);
            // Closed-form Jacobian.
            const auto fd = integrate::finite_difference_jacobian<4>(
                [&](const std::array<double, 4> &x, std::array<double, 4> &dx) { f(x, dx); }, 1e-6)(s);
            CHECK((f.jacobian(s) - fd).norm() < 1e-6 * std::max(1.0, fd.norm()));
        }
    }
}

TEST_CASE("momentum on the section")
{
    const double h = regularized_energy(4.2);
    CHECK(momentum_on_section(0.0, 0.0, h, 0.1) == doctest::Approx(std::sqrt(2.0 * h)).epsilon(1e-15));
    const double a = 0.5 * (1.0 - eigen_structure(0.1).lambda2);
    int admissible = 0;
    for (double X : {-0.3, -0.1, 0.05, 0.2, 0.35}) {
        for (double PX : {-0.1, 0.0, 0.15}) {
            // Discriminant of PY^2/2 - 2X^3 PY + (X^2 + PX^2)/2 + 4aX^6 - h.
            const double x6 = std::pow(X, 6);
            const double disc = 4.0 * x6 - (X * X + PX * PX + 8.0 * a * x6 - 2.0 * h);
            if (disc < 0.0) {
                CHECK_THROWS_AS(momentum_on_section(X, PX, h, 0.1), InadmissibleError);
                continue;
            }
            ++admissible;
            const double PY = momentum_on_section(X, PX, h, 0.1);
            CHECK(PY > 0.0);
            CHECK(std::abs(regularized_hamiltonian(RegState{X, 0.0, PX, PY, h}, 0.1) - h) <= 1e-12);
        }
    }
    CHECK(admissible >= 10);
    CHECK_THROWS_AS(momentum_on_section(0.0, 2.0, h, 0.1), InadmissibleError);
}

TEST_CASE("physical to regularized round trip and energy correspondence")
{
    auto g = oracle::rng(4);
    std::uniform_real_distribution<double> ur(0.05, 1.0), ua(-std::numbers::pi, std::numbers::pi),
        uv(-1.0, 1.0);
    for (double mu : {0.0, 0.00095, 0.3}) {
        const PlanarHillField f{ModelParams(mu)};
        for (int i = 0; i < 300; ++i) {
            const double r = ur(g), a = ua(g);
            const auto s = PhaseState::planar_state(r * std::cos(a), r * std::sin(a), uv(g), uv(g));
            const double C = f.jacobi(s.planar_array());
            if (!(C > 0.5)) {
                continue;
            }
            const auto ctx = EnergyContext::from_jacobi(C);
            const auto rs = from_physical(s, ctx);
            CHECK(rs.X >= 0.0);
            CHECK(std::abs(regularized_hamiltonian(rs, mu) - ctx.h_reg) <= 1e-12 * std::max(1.0, ctx.h_reg));
            const auto back = to_physical(rs, ctx);
            CHECK((back.position - s.position).norm() <= 1e-12);
            CHECK((back.velocity - s.velocity).norm() <= 1e-12 * std::max(1.0, s.velocity.norm()));
        }
    }
    CHECK_THROWS_AS(EnergyContext::from_jacobi(-1.0), DomainError);
}

TEST_CASE("regularized and physical propagation trace the same path")
{
    const double mu = 0.1;
    const double C = 4.6;
    const PlanarHillField f{ModelParams(mu)};
    const double x0 = 0.25;
    const auto s0 = PhaseState::planar_state(x0, 0.0, 0.0, std::sqrt(2.0 * f.potential(x0, 0.0) - C));
    const auto ctx = EnergyContext::from_jacobi(C);
    const auto r0 = from_physical(s0, ctx);

    // (X, Y, PX, PY, t) with dt/dsigma.
    const RegularizedField rf(mu);
    integrate::Field<5> aug = [&rf](const integrate::Vec<5> &y, integrate::Vec<5> &dy) {
        std::array<double, 4> s{y[0], y[1], y[2], y[3]}, ds;
        rf(s, ds);
        dy = integrate::Vec<5>{ds[0], ds[1], ds[2], ds[3], physical_time_rate(RegState::from_array(s))};
    };
    const auto reg = integrate::propagate<5>(aug, {r0.X, r0.Y, r0.PX, r0.PY, 0.0}, 0.0, 3.0);
    const auto yend = reg.trajectory.back();
    const double T = yend[4];
    REQUIRE(T > 0.5);
    integrate::Field<4> phys = [&f](const integrate::Vec<4> &s, integrate::Vec<4> &ds) { f(s, ds); };
    const auto pp = integrate::propagate<4>(phys, s0.planar_array(), 0.0, T);
    const auto pend = to_physical(RegState{yend[0], yend[1], yend[2], yend[3], 0.0}, ctx);
    const auto q = pp.trajectory.back();
    CHECK(std::abs(pend.position.x() - q[0]) <= 1e-8);
    CHECK(std::abs(pend.position.y() - q[1]) <= 1e-8);
    CHECK(std::abs(pend.velocity.x() - q[2]) <= 1e-8);
    CHECK(std::abs(pend.velocity.y() - q[3]) <= 1e-8);
}

TEST_CASE("regularized energy is conserved over tau = 1000")
{
    const double mu = 0.1;
    const double h = regularized_energy(4.3);
    const double PY = momentum_on_section(0.2, 0.0, h, mu);
    const RegularizedField rf(mu);
    integrate::Field<4> field = [&rf](const integrate::Vec<4> &s, integrate::Vec<4> &ds) { rf(s, ds); };
    const auto prop = integrate::propagate<4>(field, {0.2, 0.0, 0.0, PY}, 0.0, 1000.0);
    double drift = 0.0;
    for (const auto &s : prop.trajectory.states()) {
        drift = std::max(drift, std::abs(rf.hamiltonian(s) - h));
    }
    CHECK(drift <= 1e-10);
}
