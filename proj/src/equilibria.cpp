#include "hill4bp/equilibria.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "hill4bp/errors.hpp"

namespace hill4bp {

std::string_view to_string(EquilibriumLabel label) noexcept
{
    switch (label) {
    case EquilibriumLabel::L1: return "L1";
    case EquilibriumLabel::L2: return "L2";
    case EquilibriumLabel::L3: return "L3";
    case EquilibriumLabel::L4: return "L4";
    }
    return "?";
}

std::string_view to_string(StabilityKind kind) noexcept
{
    switch (kind) {
    case StabilityKind::SaddleCenter: return "SaddleCenter";
    case StabilityKind::CenterCenter: return "CenterCenter";
    case StabilityKind::ComplexSaddle: return "ComplexSaddle";
    case StabilityKind::SaddleSaddle: return "SaddleSaddle";
    case StabilityKind::Degenerate: return "Degenerate";
    }
    return "?";
}

void sort_eigenvalues(Eigenvalues &ev)
{
    std::sort(ev.begin(), ev.end(), [](const auto &a, const auto &b) {
        if (std::abs(a.real() - b.real()) > 1e-9) {
            return a.real() > b.real();
        }
        return a.imag() > b.imag();
    });
}

Eigenvalues charpoly_roots(const CharPoly &cp)
{
    using cd = std::complex<double>;
    const cd sq = std::sqrt(cd(cp.D, 0.0));
    const cd s1 = std::sqrt((-cp.A + sq) / 2.0);
    const cd s2 = std::sqrt((-cp.A - sq) / 2.0);
    Eigenvalues ev{s1, -s1, s2, -s2};
    sort_eigenvalues(ev);
    return ev;
}

Eigenvalues numeric_eigenvalues(const Mat4 &m)
{
    Eigen::EigenSolver<Mat4> es(m, false);
    Eigenvalues ev;
    for (int i = 0; i < 4; ++i) {
        ev[i] = es.eigenvalues()[i];
    }
    sort_eigenvalues(ev);
    return ev;
}

StabilityKind classify(const CharPoly &cp)
{
    if (std::abs(cp.D) <= kDegeneracyTol) {
        return StabilityKind::Degenerate;
    }
    if (cp.B < 0.0) {
        return StabilityKind::SaddleCenter;
    }
    if (cp.D < 0.0) {
        return StabilityKind::ComplexSaddle;
    }
    return cp.A > 0.0 ? StabilityKind::CenterCenter : StabilityKind::SaddleSaddle;
}

namespace {

EquilibriumInfo make_point(double mu, EquilibriumLabel label, const EigenStructure &e)
{
    EquilibriumInfo p{};
    p.label = label;
    switch (label) {
    case EquilibriumLabel::L1: p.position = Vec2(1.0 / std::cbrt(e.lambda2), 0.0); break;
    case EquilibriumLabel::L2: p.position = Vec2(-1.0 / std::cbrt(e.lambda2), 0.0); break;
    case EquilibriumLabel::L3: p.position = Vec2(0.0, 1.0 / std::cbrt(e.lambda1)); break;
    case EquilibriumLabel::L4: p.position = Vec2(0.0, -1.0 / std::cbrt(e.lambda1)); break;
    }
    const ModelParams params(mu, Frame::Rotated);
    const Vec3 q(p.position.x(), p.position.y(), 0.0);
    p.jacobi = 2.0 * effective_potential(q, params);
    const Mat3 h = potential_hessian(q, params);
    p.omega_xx = h(0, 0);
    p.omega_yy = h(1, 1);
    p.omega_xy = h(0, 1);
    const auto lin = linearize(p, mu);
    p.charpoly = lin.charpoly;
    p.eigenvalues = charpoly_roots(p.charpoly);
    p.kind = classify(p.charpoly);
    return p;
}

} // namespace

std::optional<EquilibriumInfo> equilibrium_point(double mu, EquilibriumLabel label)
{
    const auto e = eigen_structure(mu);
    const bool far_pair = label == EquilibriumLabel::L3 || label == EquilibriumLabel::L4;
    if (far_pair && e.lambda1 <= 0.0) {
        return std::nullopt;
    }
    return make_point(mu, label, e);
}

std::vector<EquilibriumInfo> equilibrium_points(double mu)
{
    std::vector<EquilibriumInfo> out;
    for (auto label : {EquilibriumLabel::L1, EquilibriumLabel::L2, EquilibriumLabel::L3,
                       EquilibriumLabel::L4}) {
        if (auto p = equilibrium_point(mu, label)) {
            out.push_back(*p);
        }
    }
    return out;
}

Linearization linearize(const EquilibriumInfo &point, double /*mu*/)
{
    Linearization lin;
    lin.matrix << 0, 0, 1, 0,
                  0, 0, 0, 1,
                  point.omega_xx, point.omega_xy, 0, 2,
                  point.omega_xy, point.omega_yy, -2, 0;
    const double a = 4.0 - point.omega_xx - point.omega_yy;
    const double b = point.omega_xx * point.omega_yy - point.omega_xy * point.omega_xy;
    lin.charpoly = {a, b, a * a - 4.0 * b};
    return lin;
}

StabilityKind classify(const EquilibriumInfo &point, double mu)
{
    return classify(linearize(point, mu).charpoly);
}

double l3_discriminant(double mu)
{
    const auto p = equilibrium_point(mu, EquilibriumLabel::L3);
    if (!p) {
        throw DomainError("L3 does not exist at mu = 0");
    }
    return p->charpoly.D;
}

namespace {

bool off_imaginary_axis(double mu)
{
    const auto p = equilibrium_point(mu, EquilibriumLabel::L3);
    const auto ev = numeric_eigenvalues(linearize(*p, mu).matrix);
    double re = 0.0;
    for (const auto &z : ev) {
        re = std::max(re, std::abs(z.real()));
    }
    return re > 1e-6;
}

} // namespace

double eigenvalue_transition(double sweep_step, double tol)
{
    double prev = sweep_step;
    if (off_imaginary_axis(prev)) {
        throw ConsistencyError("L3 eigenvalues already off the imaginary axis at the first sample");
    }
    for (double mu = 2.0 * sweep_step; mu <= 0.5 + 1e-15; mu += sweep_step) {
        const double m = std::min(mu, 0.5);
        if (off_imaginary_axis(m)) {
            double lo = prev, hi = m;
            while (hi - lo > tol) {
                const double mid = 0.5 * (lo + hi);
                (off_imaginary_axis(mid) ? hi : lo) = mid;
            }
            return 0.5 * (lo + hi);
        }
        prev = m;
    }
    throw ConsistencyError("L3 eigenvalues never leave the imaginary axis on (0, 1/2]");
}

CriticalMassRatio critical_mass_ratio(double tol)
{
    if (!(tol > 0.0)) {
        throw DomainError("critical_mass_ratio: tolerance must be positive");
    }
    // Bracket on a coarse grid, then bisect on the sign of D.
    double lo = 0.0, hi = 0.0;
    bool found = false;
    double prev = 1e-3;
    double d_prev = l3_discriminant(prev);
    for (int k = 2; k <= 500 && !found; ++k) {
        const double mu = 1e-3 * k;
        const double d = l3_discriminant(mu);
        if ((d_prev > 0.0) != (d > 0.0)) {
            lo = prev;
            hi = mu;
            found = true;
        }
        prev = mu;
        d_prev = d;
    }
    if (!found) {
        throw ConsistencyError("no sign change of the L3 discriminant on (0, 1/2]");
    }
    const bool lo_positive = l3_discriminant(lo) > 0.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        ((l3_discriminant(mid) > 0.0) == lo_positive ? lo : hi) = mid;
    }

    CriticalMassRatio r{};
    r.computed_root = 0.5 * (lo + hi);
    r.eigen_oracle_root = eigenvalue_transition(1e-5, tol);
    r.paper_value = kQuotedMu0;
    r.paper_closed_form = (112.0 - std::sqrt(2.0 * (1979.0 + 37.0 * std::sqrt(12097.0)))) / 224.0;
    r.discriminant_at_paper_value = l3_discriminant(kQuotedMu0);
    r.discrepancy = std::abs(r.computed_root - kQuotedMu0) > 1e-4;
    return r;
}

} // namespace hill4bp
