#include "hill4bp/poincare.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "hill4bp/equilibria.hpp"
#include "hill4bp/errors.hpp"
#include "hill4bp/parallel.hpp"

namespace hill4bp {

namespace {

using integrate::Vec;

integrate::Field<4> reg_field(double mu)
{
    return [f = RegularizedField(mu)](const Vec<4> &s, Vec<4> &ds) { f(s, ds); };
}

/// One return of the regularized flow to Y = 0, PY > 0; empty on escape.
std::optional<integrate::Crossing<4>> one_return(const Vec<4> &z, const integrate::Field<4> &field,
                                                 const ReturnOptions &opt)
{
    integrate::Event<4> ev;
    ev.g = [](const Vec<4> &s) { return s[1]; };
    ev.direction = integrate::Direction::Any;
    ev.accept = [](const Vec<4> &s) { return s[3] > 0.0; };
    ev.terminal_after = 1;
    const double r2 = opt.escape_radius * opt.escape_radius;
    auto prop = integrate::propagate<4>(field, z, 0.0, opt.max_return_time, opt.tol, &ev,
                                        [r2](const Vec<4> &s) { return s[0] * s[0] + s[1] * s[1] > r2; });
    if (prop.status != integrate::Status::EventStop) {
        return std::nullopt;
    }
    return prop.crossings.front();
}

} // namespace

std::string_view to_string(SectionId id) noexcept
{
    switch (id) {
    case SectionId::RegY0: return "RegY0";
    case SectionId::Sigma: return "Sigma";
    case SectionId::SigmaPlus: return "SigmaPlus";
    case SectionId::SigmaMinus: return "SigmaMinus";
    case SectionId::SigmaPrime: return "SigmaPrime";
    }
    return "?";
}

SectionDef SectionDef::reg_y0(double mu)
{
    SectionDef s;
    s.id = SectionId::RegY0;
    s.time_variable = integrate::TimeVariable::Regularized;
    s.mu = mu;
    return s;
}

SectionDef SectionDef::sigma(double mu, SectionId id)
{
    if (id != SectionId::Sigma && id != SectionId::SigmaPlus && id != SectionId::SigmaMinus) {
        throw DomainError("SectionDef::sigma expects Sigma, SigmaPlus or SigmaMinus");
    }
    SectionDef s;
    s.id = id;
    s.mu = mu;
    return s;
}

SectionDef SectionDef::sigma_prime(double mu)
{
    const auto e = eigen_structure(mu);
    SectionDef s;
    s.id = SectionId::SigmaPrime;
    s.frame = Frame::Unrotated;
    s.x_position = -std::pow(e.lambda2, -1.0 / 3.0);
    s.mu = mu;
    s.rotation = e.rotation;
    return s;
}

std::array<double, 4> SectionDef::to_section_frame(const std::array<double, 4> &s) const
{
    if (frame == Frame::Rotated || id == SectionId::RegY0) {
        return s;
    }
    const Vec2 p = rotation * Vec2(s[0], s[1]);
    const Vec2 v = rotation * Vec2(s[2], s[3]);
    return {p.x(), p.y(), v.x(), v.y()};
}

double SectionDef::event(const std::array<double, 4> &s) const
{
    if (id == SectionId::RegY0) {
        return s[1];
    }
    if (frame == Frame::Rotated) {
        return s[0] - x_position;
    }
    return rotation(0, 0) * s[0] + rotation(0, 1) * s[1] - x_position;
}

Vec2 SectionDef::coords(const std::array<double, 4> &s) const
{
    if (id == SectionId::RegY0) {
        return {s[0], s[2]};
    }
    const auto q = to_section_frame(s);
    return {q[1], q[3]};
}

double SectionDef::normal_velocity(const std::array<double, 4> &s) const
{
    if (id == SectionId::RegY0) {
        return s[3] - 2.0 * (s[0] * s[0] + s[1] * s[1]) * s[0];
    }
    return to_section_frame(s)[2];
}

bool SectionDef::in_subsection(const std::array<double, 4> &s) const
{
    switch (id) {
    case SectionId::SigmaPlus: return s[1] > 0.0;
    case SectionId::SigmaMinus: return s[1] < 0.0;
    case SectionId::RegY0: return s[3] > 0.0;
    default: return true;
    }
}

RegState section_seed(double X, double PX, double h_reg, double mu)
{
    return RegState{X, 0.0, PX, momentum_on_section(X, PX, h_reg, mu), h_reg};
}

ReturnResult return_map(const RegState &seed, std::size_t n, double mu, const ReturnOptions &opt)
{
    const auto field = reg_field(mu);
    ReturnResult out;
    Vec<4> z = seed.array();
    double t = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        const auto c = one_return(z, field, opt);
        if (!c) {
            out.escaped = true;
            break;
        }
        t += c->t;
        SectionPoint p;
        p.coords = {c->state[0], c->state[2]};
        p.cut_index = k;
        p.subsection = SectionId::RegY0;
        p.t = t;
        p.state = c->state;
        out.points.push_back(p);
        z = c->state;
        z[1] = 0.0; // restart exactly on the section
    }
    return out;
}

std::string ScanResult::csv() const
{
    std::ostringstream out;
    out << "seed_id,iter,X,PX\n";
    for (const auto &o : orbits) {
        out << o.seed_id << ",0," << io::fmt(o.seed.x()) << ',' << io::fmt(o.seed.y()) << '\n';
        for (std::size_t k = 0; k < o.points.size(); ++k) {
            out << o.seed_id << ',' << k + 1 << ',' << io::fmt(o.points[k].x()) << ','
                << io::fmt(o.points[k].y()) << '\n';
        }
    }
    return out.str();
}

ScanResult scan(double h_reg, double mu, const GridSpec &grid, std::size_t iterates, unsigned threads,
                const ReturnOptions &opt)
{
    grid.validate();
    ScanResult res{h_reg, mu, iterates, {}, 0, 0};
    std::vector<Vec2> seeds;
    std::vector<RegState> states;
    for (std::size_t j = 0; j < grid.ny; ++j) {
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const double X = grid.x_at(i), PX = grid.y_at(j);
            try {
                states.push_back(section_seed(X, PX, h_reg, mu));
                seeds.emplace_back(X, PX);
            } catch (const InadmissibleError &) {
                ++res.skipped;
            }
        }
    }
    res.orbits = parallel_map<ScanOrbit>(seeds.size(), threads, [&](std::size_t k) {
        const auto r = return_map(states[k], iterates, mu, opt);
        ScanOrbit o{k, seeds[k], {}, r.escaped};
        o.points.reserve(r.points.size());
        for (const auto &p : r.points) {
            o.points.push_back(p.coords);
        }
        return o;
    });
    for (const auto &o : res.orbits) {
        res.escapes += o.escaped ? 1 : 0;
    }
    return res;
}

ReturnDerivative return_derivative(const Vec2 &x_px, double h_reg, double mu, const ReturnOptions &opt)
{
    const RegularizedField rf(mu);
    const auto z0 = section_seed(x_px.x(), x_px.y(), h_reg, mu).array();
    constexpr std::size_t M = integrate::augmented_size<4>;
    const auto field = integrate::variational_field<4>(
        [rf](const Vec<4> &s, Vec<4> &ds) { rf(s, ds); },
        [rf](const Vec<4> &s) { return integrate::Matrix<4>(rf.jacobian(s)); });
    integrate::Event<M> ev;
    ev.g = [](const Vec<M> &y) { return y[1]; };
    ev.direction = integrate::Direction::Any;
    ev.accept = [](const Vec<M> &y) { return y[3] > 0.0; };
    ev.terminal_after = 1;
    const double r2 = opt.escape_radius * opt.escape_radius;
    auto prop = integrate::propagate<M>(field, integrate::augment<4>(z0), 0.0, opt.max_return_time,
                                        opt.tol, &ev,
                                        [r2](const Vec<M> &y) { return y[0] * y[0] + y[1] * y[1] > r2; });
    if (prop.status != integrate::Status::EventStop) {
        throw ConvergenceError("return_derivative: no return to the section");
    }
    const auto &yc = prop.crossings.front().state;
    const auto zr = integrate::state_part<4>(yc);
    const Mat4 phi = integrate::stm_part<4>(yc);

    Vec<4> f0, fr;
    rf(z0, f0);
    rf(zr, fr);
    // Variations tangent to the energy level at the seed: dPY from dH = 0.
    // f0 = (H_PX, H_PY, -H_X, -H_Y).
    Eigen::Matrix<double, 4, 2> dz0 = Eigen::Matrix<double, 4, 2>::Zero();
    dz0(0, 0) = 1.0;
    dz0(3, 0) = f0[2] / f0[1];
    dz0(2, 1) = 1.0;
    dz0(3, 1) = -f0[0] / f0[1];
    // Project onto the section along the flow.
    Mat4 proj = Mat4::Identity();
    for (int r = 0; r < 4; ++r) {
        proj(r, 1) -= fr[r] / fr[1];
    }
    const Eigen::Matrix<double, 4, 2> dzr = proj * phi * dz0;
    ReturnDerivative out;
    out.image = {zr[0], zr[2]};
    out.dp << dzr(0, 0), dzr(0, 1), dzr(2, 0), dzr(2, 1);
    out.return_time = prop.crossings.front().t;
    return out;
}

std::optional<FixedPoint> refine_fixed_point(const Vec2 &guess, double h_reg, double mu,
                                             const ReturnOptions &opt)
{
    Vec2 z = guess;
    for (int it = 0; it < 40; ++it) {
        ReturnDerivative rd;
        try {
            rd = return_derivative(z, h_reg, mu, opt);
        } catch (const Error &) {
            return std::nullopt;
        }
        const Vec2 res = rd.image - z;
        if (res.norm() <= 1e-11) {
            FixedPoint fp;
            fp.coords = z;
            fp.dp = rd.dp;
            fp.trace = rd.dp.trace();
            fp.stable = std::abs(fp.trace) < 2.0;
            fp.symmetric = std::abs(z.y()) <= 1e-8;
            fp.return_time = rd.return_time;
            return fp;
        }
        const Mat2 J = rd.dp - Mat2::Identity();
        if (std::abs(J.determinant()) < 1e-14) {
            return std::nullopt;
        }
        Vec2 dz = -J.fullPivLu().solve(res);
        const double cap = 0.05;
        if (dz.norm() > cap) {
            dz *= cap / dz.norm();
        }
        z += dz;
        if (!z.allFinite()) {
            return std::nullopt;
        }
    }
    return std::nullopt;
}

std::vector<FixedPoint> symmetric_fixed_points(double h_reg, double mu, Interval x_range,
                                               std::size_t samples, const ReturnOptions &opt)
{
    if (samples < 2) {
        throw DomainError("symmetric_fixed_points needs at least two samples");
    }
    const auto field = reg_field(mu);
    struct Sample {
        double X;
        bool ok = false;
        double px_ret = 0.0;
        double x_ret = 0.0;
    };
    auto evaluate = [&](double X) {
        Sample s{X};
        try {
            const auto z = section_seed(X, 0.0, h_reg, mu).array();
            if (const auto c = one_return(z, field, opt)) {
                s.ok = true;
                s.px_ret = c->state[2];
                s.x_ret = c->state[0];
            }
        } catch (const InadmissibleError &) {
        }
        return s;
    };
    std::vector<Sample> grid(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        grid[i] = evaluate(x_range.lo + (x_range.hi - x_range.lo) * double(i) / double(samples - 1));
    }
    std::vector<FixedPoint> out;
    for (std::size_t i = 0; i + 1 < samples; ++i) {
        Sample a = grid[i], b = grid[i + 1];
        if (!a.ok || !b.ok || (a.px_ret > 0.0) == (b.px_ret > 0.0)) {
            continue;
        }
        // Bisection; a jump in the return map shows up as a non-small PX at the end.
        for (int it = 0; it < 60 && b.X - a.X > 1e-13; ++it) {
            const Sample m = evaluate(0.5 * (a.X + b.X));
            if (!m.ok) {
                break;
            }
            if ((m.px_ret > 0.0) == (a.px_ret > 0.0)) {
                a = m;
            } else {
                b = m;
            }
        }
        const Sample &best = std::abs(a.px_ret) < std::abs(b.px_ret) ? a : b;
        if (std::abs(best.px_ret) > 1e-8 || std::abs(best.x_ret - best.X) > 1e-6) {
            continue;
        }
        if (auto fp = refine_fixed_point(Vec2(best.X, 0.0), h_reg, mu, opt)) {
            const bool dup = std::any_of(out.begin(), out.end(), [&](const FixedPoint &q) {
                return (q.coords - fp->coords).norm() < 1e-7;
            });
            if (!dup) {
                out.push_back(*fp);
            }
        }
    }
    std::sort(out.begin(), out.end(),
              [](const FixedPoint &a, const FixedPoint &b) { return a.coords.x() < b.coords.x(); });
    return out;
}

std::string_view to_string(PortraitStage s) noexcept
{
    switch (s) {
    case PortraitStage::TwoFixedPoints:
        return "two_fixed_points";
    case PortraitStage::Pitchfork:
        return "pitchfork";
    case PortraitStage::Chaos:
        return "chaos";
    case PortraitStage::OpenNeck:
        return "open_neck";
    case PortraitStage::Unclassified:
        break;
    }
    return "unclassified";
}

PortraitSummary portrait_summary(double C, double mu, const PortraitOptions &opt)
{
    if (!(mu > 0.0)) {
        throw DomainError("portrait_summary requires mu > 0");
    }
    const auto ctx = EnergyContext::from_jacobi(C);
    const double h = ctx.h_reg;
    PortraitSummary out{C, mu, {}};
    out.fixed_points = symmetric_fixed_points(h, mu, {-opt.x_limit, opt.x_limit}, opt.samples, opt.ret);
    std::optional<FixedPoint> hyp;
    for (const auto &f : out.fixed_points) {
        (f.stable ? out.stable : out.hyperbolic)++;
        if (!f.stable && f.coords.x() > 0.0 && !hyp) {
            hyp = f;
        }
    }

    if (hyp) {
        const auto seed = section_seed(hyp->coords.x() + opt.chaos_offset, hyp->coords.y(), h, mu);
        const auto r = return_map(seed, opt.chaos_iterates, mu, opt.ret);
        std::set<std::pair<long long, long long>> cells;
        for (const auto &p : r.points) {
            cells.emplace(std::llround(std::floor(p.coords.x() / opt.cell)),
                          std::llround(std::floor(p.coords.y() / opt.cell)));
        }
        out.chaos_extent = cells.size();
        out.chaos_iterates = r.points.size();
    }

    const double x_l1 = equilibrium_point(mu, EquilibriumLabel::L1)->position.x();
    const double X_l1 = std::sqrt(x_l1) / ctx.alpha;
    std::vector<RegState> seeds;
    for (std::size_t i = 1; i <= opt.escape_nx; ++i) {
        for (std::size_t j = 0; j < opt.escape_npx; ++j) {
            const double X = X_l1 * double(i) / double(opt.escape_nx);
            const double PX = opt.escape_npx > 1
                                  ? -opt.escape_px + 2.0 * opt.escape_px * double(j) / double(opt.escape_npx - 1)
                                  : 0.0;
            try {
                seeds.push_back(section_seed(X, PX, h, mu));
            } catch (const InadmissibleError &) {
            }
        }
    }
    const auto escaped = parallel_map<char>(seeds.size(), opt.threads, [&](std::size_t i) {
        return char(return_map(seeds[i], opt.escape_iterates, mu, opt.ret).escaped);
    });
    out.escape_seeds = seeds.size();
    out.escapes = std::size_t(std::count(escaped.begin(), escaped.end(), char(1)));

    // Stable direct points on both sides of the hyperbolic one: the pitchfork pair.
    bool flanked = false;
    if (hyp) {
        bool below = false, above = false;
        for (const auto &f : out.fixed_points) {
            if (f.stable && f.coords.x() > 0.0) {
                (f.coords.x() < hyp->coords.x() ? below : above) = true;
            }
        }
        flanked = below && above;
    }
    if (out.escapes > 0) {
        out.stage = PortraitStage::OpenNeck;
    } else if (hyp && out.chaos_extent >= opt.chaos_cells) {
        out.stage = PortraitStage::Chaos;
    } else if (flanked) {
        out.stage = PortraitStage::Pitchfork;
    } else if (out.hyperbolic == 0 && out.stable == 2 && out.fixed_points.front().coords.x() < 0.0 &&
               out.fixed_points.back().coords.x() > 0.0) {
        out.stage = PortraitStage::TwoFixedPoints;
    }
    return out;
}

CutList physical_cuts(const integrate::Trajectory<4> &traj, const SectionDef &section,
                      std::size_t max_cuts, std::size_t trajectory_id)
{
    CutList out;
    std::function<double(const Vec<4> &)> g = [&section](const Vec<4> &s) { return section.event(s); };
    const auto crossings = integrate::find_crossings(traj, g, integrate::Direction::Any);
    std::size_t index = 0;
    for (const auto &c : crossings) {
        if (std::abs(section.normal_velocity(c.state)) <= kTangentialTol) {
            ++out.tangential;
            continue;
        }
        if (++index > max_cuts) {
            break;
        }
        const auto q = section.to_section_frame(c.state);
        if (!section.in_subsection(q)) {
            continue;
        }
        SectionPoint p;
        p.coords = section.coords(c.state);
        p.cut_index = index;
        p.trajectory_id = trajectory_id;
        p.subsection = section.id == SectionId::Sigma
                           ? (q[1] > 0.0 ? SectionId::SigmaPlus : SectionId::SigmaMinus)
                           : section.id;
        p.t = c.t;
        p.state = c.state;
        out.points.push_back(p);
    }
    return out;
}

namespace {

double tangency_rhs(double C, const ModelParams &params, double x, double y)
{
    if (x == 0.0 && y == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 2.0 * effective_potential(Vec2(x, y), params) - C;
}

} // namespace

std::vector<std::vector<Vec2>> tangency_curve(double C, const ModelParams &params, double x_section,
                                              Interval y_range, std::size_t n)
{
    if (n < 2 || !(y_range.hi > y_range.lo)) {
        throw DomainError("tangency_curve needs n >= 2 and a nondegenerate y range");
    }
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        ys[i] = y_range.lo + (y_range.hi - y_range.lo) * double(i) / double(n - 1);
    }
    auto rhs = [&](double y) { return tangency_rhs(C, params, x_section, y); };
    auto boundary = [&](double in, double out) {
        // rhs(in) >= 0 > rhs(out)
        for (int it = 0; it < 100 && std::abs(out - in) > 1e-15 * std::max(1.0, std::abs(in)); ++it) {
            const double m = 0.5 * (in + out);
            (rhs(m) >= 0.0 ? in : out) = m;
        }
        return in;
    };

    std::vector<std::vector<Vec2>> curves;
    std::size_t i = 0;
    while (i < n) {
        const double r = rhs(ys[i]);
        if (!(r >= 0.0) || !std::isfinite(r)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && rhs(ys[j + 1]) >= 0.0 && std::isfinite(rhs(ys[j + 1]))) {
            ++j;
        }
        std::vector<double> run;
        if (i > 0 && std::isfinite(rhs(ys[i - 1]))) {
            run.push_back(boundary(ys[i], ys[i - 1]));
        }
        for (std::size_t k = i; k <= j; ++k) {
            if (run.empty() || ys[k] != run.back()) {
                run.push_back(ys[k]);
            }
        }
        if (j + 1 < n && std::isfinite(rhs(ys[j + 1]))) {
            const double b = boundary(ys[j], ys[j + 1]);
            if (b != run.back()) {
                run.push_back(b);
            }
        }
        std::vector<Vec2> poly;
        for (double y : run) {
            poly.emplace_back(y, std::sqrt(std::max(0.0, rhs(y))));
        }
        for (auto it = run.rbegin(); it != run.rend(); ++it) {
            poly.emplace_back(*it, -std::sqrt(std::max(0.0, rhs(*it))));
        }
        poly.push_back(poly.front());
        curves.push_back(std::move(poly));
        i = j + 1;
    }
    return curves;
}

bool inside_tangency(double C, const ModelParams &params, double x_section, double y, double ydot,
                     double tol)
{
    return ydot * ydot <= tangency_rhs(C, params, x_section, y) + tol;
}

std::string cuts_csv(const std::vector<std::pair<std::string, SectionPoint>> &cuts)
{
    std::ostringstream out;
    out << "branch,cut_index,y,ydot\n";
    for (const auto &[branch, p] : cuts) {
        out << branch << ',' << p.cut_index << ',' << io::fmt(p.coords.x()) << ','
            << io::fmt(p.coords.y()) << '\n';
    }
    return out.str();
}

} // namespace hill4bp
