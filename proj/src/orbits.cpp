#include "hill4bp/orbits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hill4bp/errors.hpp"

namespace hill4bp {

namespace {

using integrate::Vec;
constexpr std::size_t M = integrate::augmented_size<4>;

struct HalfPeriod {
    double t;
    std::array<double, 4> state;
    Mat4 phi;
    std::array<double, 4> deriv;
    int event;    // component that vanishes at the crossing
    int residual; // component that must vanish there
};

/// Propagates state and STM to the next crossing of y = 0 (or x = 0 for the
/// quarter-period condition of doubly symmetric orbits).
HalfPeriod half_period(const std::array<double, 4> &s0, const PlanarHillField &f, const CorrectorOptions &opt)
{
    const bool quarter = opt.symmetry == Symmetry::Doubly;
    const int e = quarter ? 0 : 1;
    const auto field = integrate::variational_field<4>(
        [f](const Vec<4> &s, Vec<4> &ds) { f(s, ds); },
        [f](const Vec<4> &s) { return integrate::Matrix<4>(f.jacobian(s)); });
    integrate::Event<M> ev;
    ev.g = [e](const Vec<M> &y) { return y[std::size_t(e)]; };
    ev.direction = integrate::Direction::Any;
    ev.terminal_after = 1;
    const double g2 = opt.guard_radius * opt.guard_radius;
    auto prop = integrate::propagate<M>(field, integrate::augment<4>(s0), 0.0, opt.max_half_period,
                                        opt.integration, &ev,
                                        [g2](const Vec<M> &y) { return y[0] * y[0] + y[1] * y[1] < g2; });
    if (prop.status == integrate::Status::Guarded) {
        throw ConvergenceError("half-period propagation hit the collision guard");
    }
    if (prop.status != integrate::Status::EventStop) {
        throw ConvergenceError("no axis crossing within the half-period limit");
    }
    HalfPeriod hp;
    hp.t = prop.crossings.front().t;
    hp.state = integrate::state_part<4>(prop.crossings.front().state);
    hp.phi = integrate::stm_part<4>(prop.crossings.front().state);
    hp.event = e;
    hp.residual = quarter ? 3 : 2;
    f(hp.state, hp.deriv);
    return hp;
}

/// Sensitivity of the crossing residual to an initial component, with the
/// crossing time adjusted to stay on the axis.
double crossing_sensitivity(const HalfPeriod &hp, int column)
{
    const double rate = hp.deriv[std::size_t(hp.event)];
    if (std::abs(rate) < 1e-12) {
        throw ConvergenceError("tangential axis crossing");
    }
    return hp.phi(hp.residual, column) - hp.deriv[std::size_t(hp.residual)] / rate * hp.phi(hp.event, column);
}

double energy_velocity(const PlanarHillField &f, double x0, double C, double sign)
{
    const double v2 = 2.0 * f.potential(x0, 0.0) - C;
    if (!(v2 >= 0.0)) {
        throw InadmissibleError("x0 lies outside the Hill region for this C");
    }
    return std::copysign(std::sqrt(v2), sign);
}

PeriodicOrbit make_orbit(double mu, double x0, double ydot0, const HalfPeriod &hp, OrbitFamily family,
                         const PlanarHillField &f, int iterations)
{
    const bool quarter = hp.event == 0;
    PeriodicOrbit o;
    o.mu = mu;
    o.x0 = x0;
    o.ydot0 = ydot0;
    o.period = (quarter ? 4.0 : 2.0) * hp.t;
    o.symmetry = quarter ? Symmetry::Doubly : Symmetry::XAxis;
    o.jacobi = f.jacobi({x0, 0.0, 0.0, ydot0});
    o.stability_index = std::numeric_limits<double>::quiet_NaN();
    o.family = family;
    o.x_half = quarter ? -x0 : hp.state[0];
    o.residual = std::abs(hp.state[std::size_t(hp.residual)]);
    o.iterations = iterations;
    return o;
}

/// Corrector with the pseudo-arclength constraint t . (z - z_prev) = ds.
PeriodicOrbit correct_arclength(const PeriodicOrbit &prev, const Vec2 &tangent, double ds,
                                const CorrectorOptions &opt)
{
    const PlanarHillField f{ModelParams(prev.mu)};
    Vec2 z = Vec2(prev.x0, prev.ydot0) + ds * tangent;
    std::vector<double> residuals;
    for (int it = 0; it <= opt.max_iterations; ++it) {
        HalfPeriod hp;
        try {
            hp = half_period({z.x(), 0.0, 0.0, z.y()}, f, opt);
        } catch (const ConvergenceError &e) {
            throw ConvergenceError(e.what(), residuals);
        }
        const double r = hp.state[std::size_t(hp.residual)];
        const double c = tangent.dot(z - Vec2(prev.x0, prev.ydot0)) - ds;
        residuals.push_back(std::abs(r));
        if (std::abs(r) <= opt.tolerance && std::abs(c) <= 1e-12) {
            return make_orbit(prev.mu, z.x(), z.y(), hp, prev.family, f, it);
        }
        Mat2 J;
        J << crossing_sensitivity(hp, 0), crossing_sensitivity(hp, 3), tangent.x(), tangent.y();
        Vec2 dz = -J.fullPivLu().solve(Vec2(r, c));
        if (!dz.allFinite()) {
            break;
        }
        if (dz.norm() > 0.05) {
            dz *= 0.05 / dz.norm();
        }
        z += dz;
    }
    throw ConvergenceError("pseudo-arclength corrector did not converge", residuals);
}

} // namespace

std::string_view to_string(OrbitFamily f) noexcept
{
    switch (f) {
    case OrbitFamily::gFamily: return "g";
    case OrbitFamily::gPrime: return "g'";
    case OrbitFamily::LyapunovL1: return "LyapunovL1";
    case OrbitFamily::LyapunovL2: return "LyapunovL2";
    case OrbitFamily::Retrograde: return "retrograde";
    }
    return "?";
}

PeriodicOrbit correct_symmetric(double x0, double ydot0, double mu, OrbitFamily family,
                                const CorrectorOptions &opt, std::optional<double> target_jacobi)
{
    const PlanarHillField f{ModelParams(mu)};
    const bool fix_c = opt.fixed == FixedQuantity::FixJacobi;
    const double C = target_jacobi.value_or(f.jacobi({x0, 0.0, 0.0, ydot0}));
    const double sign = ydot0 >= 0.0 ? 1.0 : -1.0;
    if (fix_c) {
        ydot0 = energy_velocity(f, x0, C, sign);
    }
    std::vector<double> residuals;
    for (int it = 0; it <= opt.max_iterations; ++it) {
        HalfPeriod hp;
        try {
            hp = half_period({x0, 0.0, 0.0, ydot0}, f, opt);
        } catch (const ConvergenceError &e) {
            throw ConvergenceError(e.what(), residuals);
        }
        const double r = hp.state[std::size_t(hp.residual)];
        residuals.push_back(std::abs(r));
        if (std::abs(r) <= opt.tolerance) {
            return make_orbit(mu, x0, ydot0, hp, family, f, it);
        }
        if (it == opt.max_iterations) {
            break;
        }
        if (!fix_c) {
            double d = -r / crossing_sensitivity(hp, 3);
            const double cap = 0.1 * std::max(1.0, std::abs(ydot0));
            d = std::clamp(d, -cap, cap);
            if (!std::isfinite(d)) {
                break;
            }
            ydot0 += d;
        } else {
            // ydot0 = sqrt(2 Omega(x0, 0) - C): d ydot0 / d x0 = Omega_x / ydot0.
            Vec<4> ds;
            f({x0, 0.0, 0.0, 0.0}, ds);
            const double dyd = ds[2] / ydot0;
            const double g = crossing_sensitivity(hp, 0) + crossing_sensitivity(hp, 3) * dyd;
            double d = std::clamp(-r / g, -0.05, 0.05);
            if (!std::isfinite(d)) {
                break;
            }
            // Stay inside the Hill region.
            for (int k = 0; k < 30; ++k) {
                if (2.0 * f.potential(x0 + d, 0.0) - C >= 0.0) {
                    break;
                }
                d *= 0.5;
            }
            x0 += d;
            try {
                ydot0 = energy_velocity(f, x0, C, sign);
            } catch (const InadmissibleError &) {
                break;
            }
        }
    }
    throw ConvergenceError("symmetric corrector did not converge", residuals);
}

Monodromy monodromy(const PeriodicOrbit &orbit, const integrate::Tolerances &tol)
{
    const PlanarHillField f{ModelParams(orbit.mu)};
    const auto s0 = orbit.initial_state();
    const auto res = integrate::stm<4>([f](const Vec<4> &s, Vec<4> &ds) { f(s, ds); },
                                       [f](const Vec<4> &s) { return integrate::Matrix<4>(f.jacobian(s)); },
                                       s0, orbit.period, tol);
    Monodromy m;
    m.phi = res.phi;
    m.stability_index = 0.5 * (res.phi.trace() - 2.0);
    m.eigenvalues = numeric_eigenvalues(res.phi);
    m.determinant = res.phi.determinant();
    double r = 0.0;
    for (int i = 0; i < 4; ++i) {
        r = std::max(r, std::abs(res.final_state[i] - s0[i]));
    }
    m.periodicity_residual = r;
    return m;
}

PeriodicOrbit with_stability(PeriodicOrbit orbit, const integrate::Tolerances &tol)
{
    orbit.stability_index = monodromy(orbit, tol).stability_index;
    return orbit;
}

std::string Family::csv() const
{
    std::ostringstream out;
    out << "x0,ydot0,period,jacobi,stability_index\n";
    for (const auto &o : members) {
        out << io::fmt(o.x0) << ',' << io::fmt(o.ydot0) << ',' << io::fmt(o.period) << ','
            << io::fmt(o.jacobi) << ',' << io::fmt(o.stability_index) << '\n';
    }
    return out.str();
}

Family continue_family(const PeriodicOrbit &seed, int direction, std::size_t steps,
                       const StepControl &control, const StopPredicate &stop, const CorrectorOptions &opt)
{
    if (direction == 0) {
        throw DomainError("continue_family needs direction +1 or -1");
    }
    Family fam;
    PeriodicOrbit first = seed;
    if (std::isnan(first.stability_index)) {
        first = with_stability(first, opt.integration);
    }
    fam.members.push_back(first);
    double step = control.initial;
    Vec2 tangent(direction > 0 ? 1.0 : -1.0, 0.0);
    bool have_tangent = false;
    CorrectorOptions natural = opt;
    natural.fixed = FixedQuantity::FixX0;
    natural.symmetry = seed.symmetry;

    while (fam.members.size() <= steps) {
        const PeriodicOrbit &prev = fam.members.back();
        const bool arclength = have_tangent && std::abs(tangent.x()) < 0.05;
        PeriodicOrbit next;
        try {
            if (arclength) {
                next = correct_arclength(prev, tangent, step, natural);
                ++fam.arclength_steps;
            } else {
                const double dx = (tangent.x() >= 0.0 ? 1.0 : -1.0) * step;
                const double slope = have_tangent ? tangent.y() / tangent.x() : 0.0;
                next = correct_symmetric(prev.x0 + dx, prev.ydot0 + slope * dx, prev.mu, prev.family, natural);
            }
            next = with_stability(next, opt.integration);
        } catch (const Error &) {
            step *= 0.5;
            if (step < control.min) {
                fam.truncated = true;
                fam.reason = "step underflow";
                break;
            }
            continue;
        }
        const double jump = std::abs(next.stability_index - prev.stability_index);
        if (jump > control.max_index_jump * std::max(1.0, std::abs(prev.stability_index)) &&
            step > control.min) {
            step = std::max(control.min, 0.5 * step);
            continue;
        }
        const Vec2 dz(next.x0 - prev.x0, next.ydot0 - prev.ydot0);
        if (dz.norm() > 0.0) {
            tangent = dz / dz.norm();
            have_tangent = true;
        }
        const int its = next.iterations;
        fam.members.push_back(next);
        if (stop && stop(next)) {
            break;
        }
        if (its <= 2) {
            step = std::min(control.max, 2.0 * step);
        } else if (its <= 4) {
            step = std::min(control.max, 1.2 * step);
        } else if (its > 6) {
            step = std::max(control.min, 0.5 * step);
        }
    }
    return fam;
}

LyapunovGuess lyapunov_guess(const EquilibriumInfo &point, double amplitude, double mu)
{
    if (point.kind != StabilityKind::SaddleCenter) {
        throw DomainError("lyapunov_guess needs a saddle-center equilibrium");
    }
    const auto lin = linearize(point, mu);
    Eigen::EigenSolver<Mat4> es(lin.matrix);
    int k = -1;
    for (int i = 0; i < 4; ++i) {
        const auto ev = es.eigenvalues()[i];
        if (std::abs(ev.real()) < 1e-9 * std::abs(ev) && ev.imag() > 0.0 &&
            (k < 0 || ev.imag() > es.eigenvalues()[k].imag())) {
            k = i;
        }
    }
    if (k < 0) {
        throw DomainError("no center eigenvalue at this equilibrium");
    }
    const double omega = es.eigenvalues()[k].imag();
    Eigen::Vector4cd v = es.eigenvectors().col(k);
    v /= v[0]; // x component real and unit: y and xdot vanish at t = 0
    const double dx = std::copysign(amplitude, point.position.x());
    LyapunovGuess g;
    g.state = {point.position.x() + dx, point.position.y(), 0.0, dx * v[3].real()};
    g.period = 2.0 * M_PI / omega;
    g.omega = omega;
    return g;
}

PeriodicOrbit lyapunov_orbit(double mu, EquilibriumLabel label, double C, const StepControl &control)
{
    const auto point = equilibrium_point(mu, label);
    if (!point || (label != EquilibriumLabel::L1 && label != EquilibriumLabel::L2)) {
        throw DomainError("Lyapunov orbits are computed about L1 or L2");
    }
    if (!(C < point->jacobi)) {
        throw DomainError("no planar Lyapunov orbit above the equilibrium's Jacobi constant");
    }
    const auto family = label == EquilibriumLabel::L1 ? OrbitFamily::LyapunovL1 : OrbitFamily::LyapunovL2;
    const auto g = lyapunov_guess(*point, 1e-3, mu);
    const auto seed = correct_symmetric(g.state[0], g.state[3], mu, family);
    if (seed.jacobi <= C) {
        CorrectorOptions fixc;
        fixc.fixed = FixedQuantity::FixJacobi;
        return with_stability(correct_symmetric(seed.x0, seed.ydot0, mu, family, fixc, C));
    }
    const int dir = point->position.x() > 0.0 ? 1 : -1;
    const auto fam = continue_family(seed, dir, 10000, control,
                                     [C](const PeriodicOrbit &o) { return o.jacobi <= C; });
    if (fam.members.back().jacobi > C) {
        throw ConvergenceError("Lyapunov family ended before reaching the requested C: " + fam.reason);
    }
    // Interpolate between the bracketing members, then fix C.
    const auto &a = fam.members[fam.members.size() - 2];
    const auto &b = fam.members.back();
    const double w = (C - a.jacobi) / (b.jacobi - a.jacobi);
    CorrectorOptions fixc;
    fixc.fixed = FixedQuantity::FixJacobi;
    return with_stability(correct_symmetric(a.x0 + w * (b.x0 - a.x0), a.ydot0 + w * (b.ydot0 - a.ydot0), mu,
                                            family, fixc, C));
}

std::vector<PeriodicOrbit> branch_orbits(const PeriodicOrbit &center, double C,
                                         const std::vector<double> &displacements, const CorrectorOptions &opt)
{
    CorrectorOptions fixc = opt;
    fixc.fixed = FixedQuantity::FixJacobi;
    fixc.symmetry = Symmetry::XAxis;
    const PlanarHillField f{ModelParams(center.mu)};
    constexpr double window = 0.1;

    // Residual xdot(T/2) of the uncorrected energy-level start at x0.
    auto residual = [&](double x0) -> std::optional<double> {
        try {
            const double yd = energy_velocity(f, x0, C, center.ydot0);
            return half_period({x0, 0.0, 0.0, yd}, f, fixc).state[2];
        } catch (const Error &) {
            return std::nullopt;
        }
    };

    std::vector<double> seeds;
    for (double d : displacements) {
        seeds.push_back(center.x0 - d);
        seeds.push_back(center.x0 + d);
    }
    // Sign changes on a grid, narrowed by bisection.
    constexpr int n = 200;
    std::optional<double> prev;
    double x_prev = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = center.x0 - window + 2.0 * window * i / n;
        const auto r = residual(x);
        if (prev && r && (*prev) * (*r) < 0.0) {
            double lo = x_prev, hi = x, rlo = *prev;
            for (int k = 0; k < 40; ++k) {
                const double mid = 0.5 * (lo + hi);
                const auto rm = residual(mid);
                if (!rm) {
                    break;
                }
                if (rlo * (*rm) <= 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                    rlo = *rm;
                }
            }
            seeds.push_back(0.5 * (lo + hi));
        }
        prev = r;
        x_prev = x;
    }

    std::vector<PeriodicOrbit> found;
    for (double x0 : seeds) {
        PeriodicOrbit o;
        try {
            const double yd = energy_velocity(f, x0, C, center.ydot0);
            o = correct_symmetric(x0, yd, center.mu, OrbitFamily::gPrime, fixc, C);
        } catch (const Error &) {
            continue;
        }
        // Members of a doubly symmetric family cross the negative axis at -x0; g' do not.
        if (std::abs(o.x0 - center.x0) <= 1e-7 || std::abs(o.x_half + o.x0) <= 1e-6 ||
            std::abs(o.x0 - center.x0) > window) {
            continue;
        }
        const bool dup = std::any_of(found.begin(), found.end(),
                                     [&](const PeriodicOrbit &p) { return std::abs(p.x0 - o.x0) <= 1e-5; });
        if (!dup) {
            found.push_back(o);
        }
    }
    std::sort(found.begin(), found.end(), [](const auto &a, const auto &b) { return a.x0 < b.x0; });
    for (auto &o : found) {
        o = with_stability(o, opt.integration);
    }
    return found;
}

std::optional<Pitchfork> detect_pitchfork(const Family &family, const PitchforkOptions &popt,
                                          const CorrectorOptions &opt)
{
    const auto &m = family.members;
    std::size_t k = m.size();
    for (std::size_t i = 0; i + 1 < m.size(); ++i) {
        if ((m[i].stability_index - 1.0) * (m[i + 1].stability_index - 1.0) < 0.0) {
            k = i;
            break;
        }
    }
    if (k == m.size()) {
        return std::nullopt;
    }
    CorrectorOptions fix_x0 = opt;
    fix_x0.fixed = FixedQuantity::FixX0;
    fix_x0.symmetry = m[k].symmetry;
    PeriodicOrbit lo = m[k], hi = m[k + 1];
    const PeriodicOrbit unstable = lo.stability_index > 1.0 ? lo : hi;
    while (std::abs(hi.x0 - lo.x0) > popt.bisection_tol) {
        const double w = 0.5;
        const double x0 = lo.x0 + w * (hi.x0 - lo.x0);
        const double yd = lo.ydot0 + w * (hi.ydot0 - lo.ydot0);
        const auto mid = with_stability(correct_symmetric(x0, yd, lo.mu, lo.family, fix_x0), opt.integration);
        if ((mid.stability_index - 1.0) * (lo.stability_index - 1.0) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Pitchfork p;
    const double wl = (1.0 - lo.stability_index) / (hi.stability_index - lo.stability_index);
    p.x0 = lo.x0 + wl * (hi.x0 - lo.x0);
    p.orbit = with_stability(correct_symmetric(p.x0, lo.ydot0 + wl * (hi.ydot0 - lo.ydot0), lo.mu, lo.family, fix_x0),
                             opt.integration);
    p.jacobi = p.orbit.jacobi;

    const double side = unstable.jacobi > p.jacobi ? 1.0 : -1.0;
    std::vector<double> disp{popt.seed_displacement};
    for (double d = 3.0 * popt.seed_displacement; d <= 0.06; d *= 3.0) {
        disp.push_back(d);
    }
    CorrectorOptions fixc = opt;
    fixc.fixed = FixedQuantity::FixJacobi;
    fixc.symmetry = p.orbit.symmetry;
    auto branches_at = [&](double C) {
        const auto center = correct_symmetric(p.orbit.x0, p.orbit.ydot0, p.orbit.mu, p.orbit.family, fixc, C);
        return branch_orbits(center, C, disp, opt);
    };
    p.far_side_jacobi = p.jacobi + side * popt.branch_offset;
    p.branches = branches_at(p.far_side_jacobi);
    p.near_side_branches = branches_at(p.jacobi - side * popt.branch_offset).size();
    return p;
}

io::json to_json(const PeriodicOrbit &o)
{
    io::json j;
    j["family"] = std::string(to_string(o.family));
    j["mu"] = o.mu;
    j["x0"] = o.x0;
    j["ydot0"] = o.ydot0;
    j["period"] = o.period;
    j["jacobi"] = o.jacobi;
    j["stability_index"] = o.stability_index;
    j["x_half"] = o.x_half;
    j["direct"] = o.direct();
    j["residual"] = o.residual;
    return j;
}

io::json to_json(const Pitchfork &p)
{
    io::json j;
    j["jacobi"] = p.jacobi;
    j["x0"] = p.x0;
    j["orbit"] = to_json(p.orbit);
    j["far_side_jacobi"] = p.far_side_jacobi;
    j["branches"] = io::json::array();
    for (const auto &b : p.branches) {
        j["branches"].push_back(to_json(b));
    }
    j["near_side_branches"] = p.near_side_branches;
    return j;
}

} // namespace hill4bp
