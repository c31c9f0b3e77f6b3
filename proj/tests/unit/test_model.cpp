#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hill4bp/errors.hpp"
#include "hill4bp/hill_region.hpp"
#include "hill4bp/integrate.hpp"
#include "hill4bp/model.hpp"
#include "hill4bp/r4bp.hpp"
#include "oracles.hpp"

using namespace hill4bp;

namespace {

std::array<double, 4> random_planar_state(std::mt19937_64 &g, double rmin, double rmax, double vmax)
{
    std::uniform_real_distribution<double> ur(rmin, rmax), ua(0.0, 2.0 * std::numbers::pi),
        uv(-vmax, vmax);
    const double r = ur(g), a = ua(g);
    return {r * std::cos(a), r * std::sin(a), uv(g), uv(g)};
}

} // namespace

TEST_CASE("model params reject mass ratios outside [0, 1/2]")
{
    CHECK_THROWS_AS(ModelParams(-1e-9), DomainError);
    CHECK_THROWS_AS(ModelParams(0.5000001), DomainError);
    CHECK_NOTHROW(ModelParams(0.0));
    CHECK_NOTHROW(ModelParams(0.5));
    CHECK_THROWS_AS(eigen_structure(0.7), DomainError);
}

TEST_CASE("eigen structure at mu = 0 is a rotation by pi/3")
{
    const auto e = eigen_structure(0.0);
    CHECK(e.d == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(e.lambda1 == doctest::Approx(0.0));
    CHECK(e.lambda2 == doctest::Approx(3.0));
    const double c = std::cos(std::numbers::pi / 3), s = std::sin(std::numbers::pi / 3);
    CHECK(std::abs(e.rotation(0, 0) - c) < 1e-15);
    CHECK(std::abs(e.rotation(0, 1) + s) < 1e-15);
    CHECK(std::abs(e.rotation(1, 0) - s) < 1e-15);
    CHECK(std::abs(e.rotation(1, 1) - c) < 1e-15);
}

TEST_CASE("eigen structure at mu = 1/2")
{
    const auto e = eigen_structure(0.5);
    CHECK(e.d == doctest::Approx(0.5));
    CHECK(e.lambda1 == doctest::Approx(0.75));
    CHECK(e.lambda2 == doctest::Approx(2.25));
    CHECK((e.rotation.transpose() * e.rotation - Mat2::Identity()).norm() < 1e-15);
    // Frame equivalence still holds with the limiting eigenvectors.
    const ModelParams pu(0.5, Frame::Unrotated), pr(0.5, Frame::Rotated);
    const Vec2 p(0.3, -0.7);
    CHECK(std::abs(effective_potential(p, pu) - effective_potential(Vec2(e.rotation.transpose() * p), pr)) <
          1e-14);
}

TEST_CASE("eigen structure at mu = 0.00095")
{
    const auto e = eigen_structure(0.00095);
    CHECK(e.lambda2 == doctest::Approx(2.997863).epsilon(1e-6));
    CHECK(3.0 * std::cbrt(e.lambda2) == doctest::Approx(4.32572).epsilon(1e-6));
}

TEST_CASE("eigen structure invariants over mu")
{
    double prev_d = 2.0;
    for (int i = 0; i <= 100; ++i) {
        const double mu = 0.5 * i / 100.0;
        const auto e = eigen_structure(mu);
        CHECK(e.d == doctest::Approx(std::sqrt(1 - 3 * mu + 3 * mu * mu)).epsilon(1e-15));
        CHECK(e.d >= 0.5 - 1e-15);
        CHECK(e.d <= 1.0 + 1e-15);
        CHECK(e.d < prev_d);
        prev_d = e.d;
        CHECK(std::abs(e.lambda1 + e.lambda2 - 3.0) < 1e-15);
        CHECK(std::abs(e.v1.norm() - 1.0) < 1e-15);
        CHECK(std::abs(e.v2.norm() - 1.0) < 1e-15);
        CHECK(std::abs(e.v1.dot(e.v2)) < 1e-15);
        CHECK((e.rotation.transpose() * e.rotation - Mat2::Identity()).norm() < 1e-14);
        CHECK(e.a_coef == doctest::Approx((1 - e.lambda2) / 2));
        CHECK(e.b_coef == doctest::Approx((1 - e.lambda1) / 2));
        CHECK(e.c_coef == 0.5);
        CHECK(std::abs(e.coriolis_coef - 1.0) < 1e-14);
        // R^T M R is diag(lambda2, lambda1)
        Mat2 m;
        m << 0.75, 0.75 * std::sqrt(3.0) * (1 - 2 * mu), 0.75 * std::sqrt(3.0) * (1 - 2 * mu), 2.25;
        const Mat2 dg = e.rotation.transpose() * m * e.rotation;
        CHECK(std::abs(dg(0, 0) - e.lambda2) < 1e-14);
        CHECK(std::abs(dg(1, 1) - e.lambda1) < 1e-14);
        CHECK(std::abs(dg(0, 1)) < 1e-14);
    }
}

TEST_CASE("effective potential values")
{
    CHECK(effective_potential(Vec2(1.0, 0.0), ModelParams(0.0)) == doctest::Approx(2.5));
    for (double mu : {0.0, 0.00095, 0.1, 0.3, 0.5}) {
        const auto e = eigen_structure(mu);
        const double xl = std::pow(e.lambda2, -1.0 / 3.0);
        const ModelParams p(mu);
        CHECK(effective_potential(Vec2(xl, 0.0), p) ==
              doctest::Approx(1.5 * std::cbrt(e.lambda2)).epsilon(1e-14));
        CHECK(potential_gradient(Vec3(xl, 0, 0), p).norm() < 1e-13);
    }
    CHECK_THROWS_AS(effective_potential(Vec2(0.0, 0.0), ModelParams(0.1)), SingularityError);
}

TEST_CASE("unrotated and rotated potentials agree at random points")
{
    auto g = oracle::rng(7);
    const double mu = 0.3;
    const auto e = eigen_structure(mu);
    const ModelParams pr(mu, Frame::Rotated);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Vec2 p(u(g), u(g));
        const double a = oracle::unrotated_potential(p.x(), p.y(), mu);
        const double b = effective_potential(Vec2(e.rotation.transpose() * p), pr);
        worst = std::max(worst, std::abs(a - b));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("spatial potential subtracts z^2 / 2 and the z force")
{
    const ModelParams p(0.2);
    const Vec3 q(0.4, -0.3, 0.25);
    const double flat = effective_potential(Vec3(0.4, -0.3, 0.0), p) - 1.0 / 0.5;
    CHECK(effective_potential(q, p) == doctest::Approx(flat - 0.5 * 0.0625 + 1.0 / q.norm()));
    const double r3 = std::pow(q.norm(), 3);
    CHECK(potential_gradient(q, p).z() == doctest::Approx(-0.25 * (1.0 + 1.0 / r3)));
}

TEST_CASE("potential gradient matches finite differences")
{
    auto g = oracle::rng(11);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (double mu : {0.0, 0.1, 0.5}) {
        for (Frame f : {Frame::Rotated, Frame::Unrotated}) {
            const ModelParams p(mu, f);
            for (int i = 0; i < 1000; ++i) {
                std::array<double, 3> q{u(g), u(g), u(g)};
                if (std::hypot(q[0], q[1], q[2]) < 0.2) {
                    continue;
                }
                const auto fd = oracle::gradient<3>(
                    [&](const std::array<double, 3> &v) {
                        return effective_potential(Vec3(v[0], v[1], v[2]), p);
                    },
                    q);
                const Vec3 an = potential_gradient(Vec3(q[0], q[1], q[2]), p);
                for (int k = 0; k < 3; ++k) {
                    CHECK(std::abs(an[k] - fd[k]) <= 1e-6 * std::max(1.0, std::abs(an[k])));
                }
            }
        }
    }
}

TEST_CASE("vector field vanishes at L1 and reduces to classical Hill at mu = 0")
{
    const auto e = eigen_structure(0.00095);
    const ModelParams p(0.00095);
    const auto d = vector_field(PhaseState::planar_state(std::pow(e.lambda2, -1.0 / 3.0), 0, 0, 0), p);
    CHECK(d.acceleration.norm() < 1e-14);

    const PlanarHillField f0{ModelParams(0.0)};
    auto g = oracle::rng(3);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto s = random_planar_state(g, 0.5, 2.0, 1.0);
        std::array<double, 4> ds;
        f0(s, ds);
        const auto ref = oracle::classical_hill(s);
        for (int k = 0; k < 4; ++k) {
            worst = std::max(worst, std::abs(ds[k] - ref[k]));
        }
        const auto v = vector_field(PhaseState::planar_state(s[0], s[1], s[2], s[3]), ModelParams(0.0));
        worst = std::max(worst, std::abs(v.acceleration.x() - ref[2]));
        worst = std::max(worst, std::abs(v.acceleration.y() - ref[3]));
    }
    CHECK(worst <= 1e-14);
    CHECK_THROWS_AS(vector_field(PhaseState::planar_state(0, 0, 1, 0), p), SingularityError);
    CHECK_THROWS_AS(vector_field(PhaseState::planar_state(1, 0, 1, 0, Frame::Unrotated), p), DomainError);
}

TEST_CASE("frame equivalence of the vector field")
{
    auto g = oracle::rng(5);
    for (double mu : {0.0, 0.00095, 0.25, 0.5}) {
        const auto e = eigen_structure(mu);
        const Mat2 R = e.rotation;
        const ModelParams pr(mu, Frame::Rotated), pu(mu, Frame::Unrotated);
        for (int i = 0; i < 200; ++i) {
            const auto s = random_planar_state(g, 0.3, 2.0, 1.0);
            const auto su = PhaseState::planar_state(s[0], s[1], s[2], s[3], Frame::Unrotated);
            const auto sr = to_frame(su, mu, Frame::Rotated);
            const auto du = vector_field(su, pu);
            const auto dr = vector_field(sr, pr);
            const Vec2 back = R * dr.acceleration.head<2>();
            CHECK((back - du.acceleration.head<2>()).norm() < 1e-12);
            CHECK(std::abs(jacobi_constant(su, pu) - jacobi_constant(sr, pr)) < 1e-12);
        }
    }
}

TEST_CASE("Jacobi constant at L1")
{
    const auto e = eigen_structure(0.00095);
    const double xl = std::pow(e.lambda2, -1.0 / 3.0);
    CHECK(jacobi_constant(PhaseState::planar_state(xl, 0, 0, 0), ModelParams(0.00095)) ==
          doctest::Approx(4.325722).epsilon(2e-7));
    const double x0 = std::pow(3.0, -1.0 / 3.0);
    CHECK(jacobi_constant(PhaseState::planar_state(x0, 0, 0, 0), ModelParams(0.0)) ==
          doctest::Approx(3.0 * std::cbrt(3.0)).epsilon(1e-15));
    CHECK(3.0 * std::cbrt(3.0) == doctest::Approx(4.326749).epsilon(1e-6));
}

TEST_CASE("rotated Hamiltonian equals -C / 2")
{
    auto g = oracle::rng(9);
    for (int i = 0; i < 100; ++i) {
        const auto s = random_planar_state(g, 0.2, 2.0, 1.0);
        const auto ps = PhaseState::planar_state(s[0], s[1], s[2], s[3]);
        CHECK(rotated_hamiltonian(ps, 0.2) == doctest::Approx(-0.5 * jacobi_constant(ps, ModelParams(0.2))));
    }
}

TEST_CASE("planar field Jacobian matches finite differences")
{
    const PlanarHillField f{ModelParams(0.1)};
    const std::array<double, 4> s{0.4, -0.2, 0.3, 0.5};
    const auto j = f.jacobian(s);
    const auto fd = integrate::finite_difference_jacobian<4>(
        [&](const std::array<double, 4> &x, std::array<double, 4> &dx) { f(x, dx); }, 1e-6)(s);
    CHECK((j - fd).norm() < 1e-6);
}

namespace {

integrate::Field<4> hill_field(double mu)
{
    return [f = PlanarHillField(ModelParams(mu))](const integrate::Vec<4> &s, integrate::Vec<4> &ds) {
        f(s, ds);
    };
}

} // namespace

TEST_CASE("reversibility under the x-axis and y-axis symmetries")
{
    const double mu = 0.1, T = 3.0;
    const integrate::Vec<4> s0{0.35, 0.1, 0.2, 0.9};
    const auto fwd = integrate::propagate<4>(hill_field(mu), s0, 0.0, T);
    const auto sT = fwd.trajectory.back();
    // (x, -y, -xd, yd) at time T runs back to the reflected initial state.
    const auto xr = integrate::propagate<4>(hill_field(mu), {sT[0], -sT[1], -sT[2], sT[3]}, 0.0, T);
    const auto e1 = xr.trajectory.back();
    CHECK(std::abs(e1[0] - s0[0]) < 1e-9);
    CHECK(std::abs(e1[1] + s0[1]) < 1e-9);
    CHECK(std::abs(e1[2] + s0[2]) < 1e-9);
    CHECK(std::abs(e1[3] - s0[3]) < 1e-9);
    const auto yr = integrate::propagate<4>(hill_field(mu), {-sT[0], sT[1], sT[2], -sT[3]}, 0.0, T);
    const auto e2 = yr.trajectory.back();
    CHECK(std::abs(e2[0] + s0[0]) < 1e-9);
    CHECK(std::abs(e2[1] - s0[1]) < 1e-9);
    CHECK(std::abs(e2[2] - s0[2]) < 1e-9);
    CHECK(std::abs(e2[3] + s0[3]) < 1e-9);
}

TEST_CASE("Jacobi constant is conserved over span 100")
{
    const PlanarHillField f{ModelParams(0.00095)};
    // Retrograde orbit well inside the zero velocity curve.
    const double x0 = 0.3;
    const double C = 4.6;
    const double vy = -std::sqrt(2.0 * f.potential(x0, 0.0) - C);
    const integrate::Vec<4> s0{x0, 0.0, 0.0, vy};
    const auto prop = integrate::propagate<4>(hill_field(0.00095), s0, 0.0, 100.0);
    double drift = 0.0;
    for (const auto &s : prop.trajectory.states()) {
        drift = std::max(drift, std::abs(f.jacobi(s) - C));
    }
    CHECK(drift <= 1e-10);
}

TEST_CASE("Hill region connectivity around C_L1")
{
    const double mu = 0.00095;
    const ModelParams p(mu);
    const double cl1 = 3.0 * std::cbrt(eigen_structure(mu).lambda2);
    const GridSpec grid{{-2.0, 2.0}, {-2.0, 2.0}, 401, 401};
    const auto above = hill_region_mask(grid, cl1 + 0.02, p);
    const auto below = hill_region_mask(grid, cl1 - 0.02, p);
    CHECK_FALSE(connected(above, Vec2(0.0, 0.0), Vec2(1.9, 0.0)));
    CHECK(connected(below, Vec2(0.0, 0.0), Vec2(1.9, 0.0)));
    const auto all = hill_region_mask(grid, -1e300, p);
    CHECK(all.allowed_count() == grid.size());
    CHECK(above.at(200, 200));
    const auto csv = mask_csv(above);
    CHECK(csv.rfind("x,y,allowed\n", 0) == 0);
    CHECK_THROWS_AS(hill_region_mask(GridSpec{{0, 1}, {0, 1}, 1, 3}, 4.0, p), DomainError);
}

TEST_CASE("R4BP primaries")
{
    const double mu = 0.2;
    const auto q = r4bp_primaries(1 - mu, mu, 0.0);
    CHECK((q[0] - Vec3(-mu, 0, 0)).norm() < 1e-15);
    CHECK((q[1] - Vec3(1 - mu, 0, 0)).norm() < 1e-15);
    CHECK((q[2] - Vec3(0.5 - mu, std::sqrt(3.0) / 2, 0)).norm() < 1e-15);
    auto g = oracle::rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        double a = u(g), b = u(g), c = u(g);
        const double s = a + b + c;
        std::array<double, 3> m{a / s, b / s, c / s};
        std::sort(m.begin(), m.end(), std::greater<double>());
        m[0] = 1.0 - m[1] - m[2];
        const auto cfg = make_r4bp_config(m[0], m[1], m[2]);
        for (int x = 0; x < 3; ++x) {
            CHECK(std::abs((cfg.primaries[x] - cfg.primaries[(x + 1) % 3]).norm() - 1.0) < 1e-12);
        }
        const Vec3 com = m[0] * cfg.primaries[0] + m[1] * cfg.primaries[1] + m[2] * cfg.primaries[2];
        CHECK(com.norm() < 1e-12);
    }
    CHECK_THROWS_AS(r4bp_primaries(1.0, 0.0, 0.0), DomainError);
}

TEST_CASE("R4BP field: L4 equilibrium of the three-body limit and collisions")
{
    const double mu = 0.01;
    const auto cfg = r4bp_config_from_mu(mu, 0.0);
    const auto d = r4bp_vector_field(
        PhaseState::planar_state(0.5 - mu, std::sqrt(3.0) / 2, 0, 0, Frame::Unrotated), cfg);
    CHECK(d.acceleration.norm() < 1e-14);
    const auto cfg3 = r4bp_config_from_mu(mu, 1e-3);
    const auto p0 = cfg3.primaries[0];
    try {
        r4bp_vector_field(PhaseState::planar_state(p0.x(), p0.y(), 0, 0, Frame::Unrotated), cfg3);
        FAIL("expected a singularity error");
    } catch (const SingularityError &e) {
        CHECK(e.body().find("m1") != std::string::npos);
    }
}

TEST_CASE("R4BP field with equal masses is symmetric about the bisector of m1 m2")
{
    const auto cfg = make_r4bp_config(0.45, 0.45, 0.1);
    const Vec3 a = cfg.primaries[0], b = cfg.primaries[1];
    const Vec3 mid = 0.5 * (a + b);
    const Vec3 n = (b - a).normalized(); // reflection normal
    auto reflect = [&](const Vec3 &v) { return Vec3(v - 2.0 * n.dot(v) * n); };
    auto reflect_point = [&](const Vec3 &p) { return Vec3(mid + reflect(p - mid)); };
    auto g = oracle::rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const Vec3 p(u(g), u(g), 0.0), v(u(g), u(g), 0.0);
        const auto s = PhaseState::planar_state(p.x(), p.y(), v.x(), v.y(), Frame::Unrotated);
        const Vec3 pr = reflect_point(p);
        // The reflection reverses orientation, so it pairs with time reversal: v -> -R v.
        const Vec3 vr = -reflect(v);
        const auto sr = PhaseState::planar_state(pr.x(), pr.y(), vr.x(), vr.y(), Frame::Unrotated);
        const auto d = r4bp_vector_field(s, cfg);
        const auto dr = r4bp_vector_field(sr, cfg);
        CHECK((dr.acceleration - reflect(d.acceleration)).norm() < 1e-9);
        CHECK(r4bp_jacobi(s, cfg) == doctest::Approx(r4bp_jacobi(sr, cfg)).epsilon(1e-13));
    }
}

TEST_CASE("R4BP Jacobi drift over span 50")
{
    const auto cfg = r4bp_config_from_mu(0.05, 0.01);
    const PlanarR4BPField f(cfg);
    // Loop around m1 that stays clear of all primaries.
    const integrate::Vec<4> s0{0.4, 0.0, 0.0, 0.8};
    integrate::Field<4> field = [&f](const integrate::Vec<4> &s, integrate::Vec<4> &ds) { f(s, ds); };
    const auto prop = integrate::propagate<4>(field, s0, 0.0, 50.0);
    const double C0 = f.jacobi(s0);
    double drift = 0.0;
    for (const auto &s : prop.trajectory.states()) {
        drift = std::max(drift, std::abs(f.jacobi(s) - C0));
    }
    CHECK(drift <= 1e-10);
}

namespace {

double sup_difference(double mu, double m3)
{
    const ModelParams pu(mu, Frame::Unrotated);
    double worst = 0.0;
    for (int i = -10; i <= 10; ++i) {
        for (int j = -10; j <= 10; ++j) {
            const double x = 0.1 * i, y = 0.1 * j;
            const double r = std::hypot(x, y);
            if (r > 1.0 || r < 0.05) {
                continue;
            }
            const auto s = PhaseState::planar_state(x, y, 0.3, -0.2, Frame::Unrotated);
            const auto a = scaled_r4bp_field(s, mu, m3);
            const auto b = vector_field(s, pu);
            worst = std::max(worst, (a.acceleration - b.acceleration).norm());
        }
    }
    return worst;
}

} // namespace

TEST_CASE("scaled R4BP field converges to the Hill field at rate m3^(1/3)")
{
    const double mu = 0.00095;
    const double d6 = sup_difference(mu, 1e-6);
    const double d9 = sup_difference(mu, 1e-9);
    CHECK(d6 / d9 == doctest::Approx(10.0).epsilon(0.05));
    CHECK(sup_difference(mu, 7.03e-12) < 1e-3);
    CHECK_THROWS_AS(scaled_r4bp_field(PhaseState::planar_state(1, 0, 0, 0, Frame::Unrotated), mu, 0.0),
                    DomainError);
}

TEST_CASE("field convergence study")
{
    const auto c = field_convergence(0.00095, {1e-6, 1e-8, 1e-10, 1e-12}, 11);
    REQUIRE(c.sup_error.size() == 4);
    CHECK(c.samples > 100);
    for (std::size_t i = 1; i < 4; ++i) {
        CHECK(c.sup_error[i] < c.sup_error[i - 1]);
    }
    CHECK(c.slope == doctest::Approx(1.0 / 3.0).epsilon(0.05));
    CHECK_THROWS_AS(field_convergence(0.00095, {1e-6}), DomainError);
}
