#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "hill4bp/errors.hpp"
#include "hill4bp/integrate.hpp"
#include "hill4bp/model.hpp"
#include "hill4bp/poincare.hpp"
#include "hill4bp/regularization.hpp"
#include "oracles.hpp"

using namespace hill4bp;

namespace {

constexpr double kMu = 0.1;
constexpr double kC = 13.57209;

integrate::Trajectory<4> physical_orbit(const std::array<double, 4> &s0, double span, double mu = kMu)
{
    // The trajectory keeps the field, so capture by value.
    integrate::Field<4> field = [f = PlanarHillField{ModelParams(mu)}](const integrate::Vec<4> &s,
                                                                       integrate::Vec<4> &ds) { f(s, ds); };
    return integrate::propagate<4>(field, s0, 0.0, span).trajectory;
}

} // namespace

TEST_CASE("section seeds sit on the section and the energy level")
{
    const double h = regularized_energy(kC);
    const auto s = section_seed(0.05, 0.01, h, kMu);
    CHECK(s.Y == 0.0);
    CHECK(s.PY > 0.0);
    CHECK(regularized_hamiltonian(s, kMu) == doctest::Approx(h).epsilon(1e-13));
    CHECK_THROWS_AS(section_seed(0.5, 0.0, h, kMu), InadmissibleError);
}

TEST_CASE("return map conserves energy and lands on the section")
{
    const double h = regularized_energy(4.25334);
    const auto seed = section_seed(0.2, 0.05, h, kMu);
    const auto r = return_map(seed, 50, kMu);
    REQUIRE_FALSE(r.escaped);
    REQUIRE(r.points.size() == 50);
    for (std::size_t k = 0; k < r.points.size(); ++k) {
        const auto &p = r.points[k];
        CHECK(p.cut_index == k + 1);
        CHECK(std::abs(p.state[1]) <= 1e-12);
        CHECK(p.state[3] > 0.0);
        const auto rs = RegState::from_array(p.state, h);
        CHECK(std::abs(regularized_hamiltonian(rs, kMu) - h) <= 1e-10);
    }
}

TEST_CASE("retrograde fixed point at high energy constant")
{
    const double h = regularized_energy(kC);
    const auto fps = symmetric_fixed_points(h, kMu, {-1.5, 1.5}, 301);
    REQUIRE(fps.size() == 2);
    const auto &retro = fps.front();
    CHECK(retro.coords.x() < 0.0);
    CHECK(retro.stable);
    CHECK(retro.symmetric);
    CHECK(fps.back().coords.x() > 0.0);
    CHECK(fps.back().stable);

    const auto r = return_map(section_seed(retro.coords.x(), retro.coords.y(), h, kMu), 3, kMu);
    REQUIRE(r.points.size() == 3);
    for (const auto &p : r.points) {
        CHECK((p.coords - retro.coords).norm() <= 1e-8);
    }
    CHECK(retro.dp.determinant() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("return-map derivative matches finite differences")
{
    const double h = regularized_energy(4.329636);
    const Vec2 z(0.25, 0.03);
    const auto d = return_derivative(z, h, kMu);
    const auto image = return_map(section_seed(z.x(), z.y(), h, kMu), 1, kMu).points.at(0).coords;
    CHECK((d.image - image).norm() <= 1e-10);
    const double eps = 1e-6;
    for (int j = 0; j < 2; ++j) {
        Vec2 dz = Vec2::Zero();
        dz[j] = eps;
        const Vec2 zp = z + dz, zm = z - dz;
        const auto ip = return_map(section_seed(zp.x(), zp.y(), h, kMu), 1, kMu).points.at(0).coords;
        const auto im = return_map(section_seed(zm.x(), zm.y(), h, kMu), 1, kMu).points.at(0).coords;
        const Vec2 col = (ip - im) / (2.0 * eps);
        CHECK((d.dp.col(j) - col).norm() <= 1e-5 * std::max(1.0, col.norm()));
    }
    CHECK(d.dp.determinant() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("reversibility: reflected images return to a symmetric seed")
{
    // For z0 on PX = 0, P^k(R P^k z0) = z0 with R(X, PX) = (X, -PX).
    const double h = regularized_energy(4.25334);
    const auto seed = section_seed(0.31, 0.0, h, kMu);
    const auto fwd = return_map(seed, 6, kMu);
    REQUIRE(fwd.points.size() == 6);
    for (std::size_t k : {1u, 3u, 6u}) {
        const Vec2 img = fwd.points[k - 1].coords;
        const auto back = return_map(section_seed(img.x(), -img.y(), h, kMu), k, kMu);
        REQUIRE(back.points.size() == k);
        CHECK(back.points.back().coords.x() == doctest::Approx(0.31).epsilon(1e-8));
        CHECK(std::abs(back.points.back().coords.y()) <= 1e-8);
    }
}

TEST_CASE("flow commutes with the double-cover involution")
{
    const RegularizedField f(kMu);
    integrate::Field<4> field = [&f](const integrate::Vec<4> &s, integrate::Vec<4> &ds) { f(s, ds); };
    const double h = regularized_energy(4.3);
    const auto seed = section_seed(0.22, -0.04, h, kMu).array();
    const integrate::Vec<4> neg{-seed[0], -seed[1], -seed[2], -seed[3]};
    const auto a = integrate::propagate<4>(field, seed, 0.0, 40.0).trajectory;
    const auto b = integrate::propagate<4>(field, neg, 0.0, 40.0).trajectory;
    for (double t : {3.0, 17.5, 40.0}) {
        const auto sa = a.state_at(t), sb = b.state_at(t);
        for (int i = 0; i < 4; ++i) {
            CHECK(sa[i] == doctest::Approx(-sb[i]).epsilon(1e-9).scale(1.0));
        }
    }
    // Section crossings of the image orbit are the images of the crossings.
    std::function<double(const integrate::Vec<4> &)> g = [](const integrate::Vec<4> &s) { return s[1]; };
    const auto ca = integrate::find_crossings(a, g, integrate::Direction::Any);
    const auto cb = integrate::find_crossings(b, g, integrate::Direction::Any);
    REQUIRE(ca.size() == cb.size());
    REQUIRE(ca.size() > 4);
    for (std::size_t k = 0; k < ca.size(); ++k) {
        CHECK(ca[k].t == doctest::Approx(cb[k].t).epsilon(1e-9));
        CHECK(ca[k].state[0] == doctest::Approx(-cb[k].state[0]).epsilon(1e-9).scale(1.0));
        CHECK(ca[k].state[2] == doctest::Approx(-cb[k].state[2]).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("scan is deterministic and thread-count independent")
{
    const double h = regularized_energy(4.329636);
    const GridSpec grid{{-0.4, 0.4}, {-0.3, 0.3}, 6, 5};
    const auto a = scan(h, kMu, grid, 20, 1);
    const auto b = scan(h, kMu, grid, 20, 4);
    CHECK(a.csv() == b.csv());
    CHECK(a.orbits.size() + a.skipped == grid.nx * grid.ny);
    CHECK(a.csv().rfind("seed_id,iter,X,PX\n", 0) == 0);
    for (std::size_t k = 0; k < a.orbits.size(); ++k) {
        CHECK(a.orbits[k].seed_id == k);
    }
}

TEST_CASE("physical cuts of a loop around the origin alternate")
{
    const PlanarHillField f{ModelParams(kMu)};
    const std::array<double, 4> s0{0.1, 0.0, 0.0, -3.4};
    const double C = f.jacobi(s0);
    const auto traj = physical_orbit(s0, 8.0);

    const auto all = physical_cuts(traj, SectionDef::sigma(kMu), 1000);
    REQUIRE(all.points.size() >= 10);
    CHECK(all.tangential == 0);
    for (std::size_t k = 0; k < all.points.size(); ++k) {
        const auto &p = all.points[k];
        CHECK(p.cut_index == k + 1);
        CHECK(std::abs(p.state[0]) <= 1e-12);
        CHECK(std::abs(f.jacobi(p.state) - C) <= 1e-10);
        CHECK(inside_tangency(C, ModelParams(kMu), 0.0, p.coords.x(), p.coords.y()));
        if (k > 0) {
            CHECK(p.subsection != all.points[k - 1].subsection);
        }
    }

    const auto plus = physical_cuts(traj, SectionDef::sigma(kMu, SectionId::SigmaPlus), 1000);
    const auto minus = physical_cuts(traj, SectionDef::sigma(kMu, SectionId::SigmaMinus), 1000);
    CHECK(plus.points.size() + minus.points.size() == all.points.size());
    std::set<std::size_t> idx;
    for (const auto &p : plus.points) {
        CHECK(p.coords.x() > 0.0);
        idx.insert(p.cut_index);
    }
    for (const auto &p : minus.points) {
        CHECK(p.coords.x() < 0.0);
        idx.insert(p.cut_index);
    }
    CHECK(idx.size() == all.points.size());
    CHECK(*idx.rbegin() == all.points.size());

    const auto capped = physical_cuts(traj, SectionDef::sigma(kMu), 4);
    CHECK(capped.points.size() == 4);
}

TEST_CASE("cuts on the shifted section in the unrotated frame")
{
    const double mu = 0.00095;
    const auto sec = SectionDef::sigma_prime(mu);
    const auto e = eigen_structure(mu);
    CHECK(sec.x_position == doctest::Approx(-std::cbrt(1.0 / e.lambda2)).epsilon(1e-15));
    const PlanarHillField f{ModelParams(mu)};
    // Orbit around the origin wide enough to reach the shifted line.
    const std::array<double, 4> s0{0.8, 0.0, 0.0, -2.0};
    const double C = f.jacobi(s0);
    const auto traj = physical_orbit(s0, 12.0, mu);
    const auto cuts = physical_cuts(traj, sec, 100);
    REQUIRE(cuts.points.size() >= 2);
    const ModelParams unrot(mu, Frame::Unrotated);
    for (const auto &p : cuts.points) {
        CHECK(std::abs(sec.event(p.state)) <= 1e-12);
        const auto q = sec.to_section_frame(p.state);
        CHECK(q[0] == doctest::Approx(sec.x_position).epsilon(1e-12));
        CHECK(std::abs(f.jacobi(p.state) - C) <= 1e-10);
        CHECK(inside_tangency(C, unrot, sec.x_position, p.coords.x(), p.coords.y()));
    }
}

TEST_CASE("tangency curve")
{
    const ModelParams params(0.00095);
    const double C = 4.3;
    const auto curves = tangency_curve(C, params, 0.0, {-1.2, 1.2}, 401);
    REQUIRE_FALSE(curves.empty());
    for (const auto &poly : curves) {
        CHECK(poly.front() == poly.back());
        for (const auto &p : poly) {
            const double res = p.y() * p.y() + C - 2.0 * effective_potential(Vec2(0.0, p.x()), params);
            CHECK(std::abs(res) <= 1e-12 * std::max(1.0, p.y() * p.y()));
        }
    }
    // Whole band admissible for very negative C.
    const auto wide = tangency_curve(-1e6, params, 0.0, {-1.2, -0.01}, 101);
    REQUIRE(wide.size() == 1);
    CHECK(wide[0].front().x() == doctest::Approx(-1.2));
    double ymax = -1e9;
    for (const auto &p : wide[0]) {
        ymax = std::max(ymax, p.x());
    }
    CHECK(ymax == doctest::Approx(-0.01));
    // No admissible set.
    CHECK(tangency_curve(1e6, params, 0.0, {0.5, 1.2}, 50).empty());
    CHECK_THROWS_AS(tangency_curve(C, params, 0.0, {1.0, 1.0}, 50), DomainError);
}

TEST_CASE("cut export")
{
    SectionPoint p;
    p.coords = {0.5, -0.25};
    p.cut_index = 3;
    const auto csv = cuts_csv({{"unstable", p}});
    CHECK(csv == "branch,cut_index,y,ydot\nunstable,3,0.5,-0.25\n");
}

TEST_CASE("portrait stages along decreasing C at mu = 0.1")
{
    const auto a = portrait_summary(13.57209, kMu);
    CHECK(a.stage == PortraitStage::TwoFixedPoints);
    CHECK(a.stable == 2);
    CHECK(a.chaos_extent == 0);

    const auto b = portrait_summary(4.329636, kMu);
    CHECK(b.stage == PortraitStage::Pitchfork);
    CHECK(b.stable == 3);
    CHECK(b.hyperbolic == 1);
    CHECK(b.escapes == 0);

    const auto d = portrait_summary(4.228647, kMu);
    CHECK(d.stage == PortraitStage::Chaos);
    CHECK(d.chaos_extent > 10 * b.chaos_extent);

    const auto f = portrait_summary(4.110353, kMu);
    CHECK(f.stage == PortraitStage::OpenNeck);
    CHECK(f.escapes > 0);
    CHECK(to_string(f.stage) == "open_neck");
    CHECK_THROWS_AS(portrait_summary(4.2, 0.0), DomainError);
}
