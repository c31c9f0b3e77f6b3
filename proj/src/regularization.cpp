#include "hill4bp/regularization.hpp"

#include <cmath>
#include <string>

#include "hill4bp/errors.hpp"

namespace hill4bp {

EnergyContext EnergyContext::from_jacobi(double C)
{
    if (!(C > 0.0) || !std::isfinite(C)) {
        throw DomainError("regularized state maps need a positive Jacobi constant, got " +
                          std::to_string(C));
    }
    EnergyContext ctx{};
    ctx.C = C;
    ctx.h = -0.5 * C;
    const double k = 0.25 * C; // -h / 2
    ctx.alpha = 2.0 * std::pow(k, 0.25);
    ctx.beta = 2.0 * std::pow(k, 0.75);
    ctx.gamma = 4.0 * std::pow(k, 1.5);
    ctx.h_reg = regularized_energy(C);
    return ctx;
}

double regularized_energy(double C)
{
    if (C == 0.0 || !std::isfinite(C)) {
        throw DomainError("regularized energy diverges at C = 0");
    }
    return 0.5 * std::pow(std::abs(C), -1.5);
}

Vec2 lc_map(double X, double Y) { return {X * X - Y * Y, 2.0 * X * Y}; }

Vec2 lc_momentum_map(double X, double Y, double PX, double PY)
{
    const double rho = X * X + Y * Y;
    if (rho == 0.0) {
        throw SingularityError("tertiary (origin)");
    }
    const double f = 2.0 / rho;
    return {f * (X * PX - Y * PY), f * (Y * PX + X * PY)};
}

SexticCoefficients sextic_coefficients(double mu)
{
    const auto e = eigen_structure(mu);
    return {e.a_coef, 4.0 * e.b_coef - e.a_coef};
}

namespace {

double sextic(const SexticCoefficients &k, double X, double Y)
{
    const double x2 = X * X, y2 = Y * Y;
    return k.a * x2 * x2 * x2 + k.e * x2 * x2 * y2 + k.e * x2 * y2 * y2 + k.a * y2 * y2 * y2;
}

double hamiltonian(const SexticCoefficients &k, double X, double Y, double PX, double PY)
{
    const double rho = X * X + Y * Y;
    return 0.5 * (rho + PX * PX + PY * PY) + 2.0 * rho * (Y * PX - X * PY) +
           4.0 * sextic(k, X, Y);
}

void field(const SexticCoefficients &k, const std::array<double, 4> &s,
           std::array<double, 4> &ds)
{
    const double X = s[0], Y = s[1], PX = s[2], PY = s[3];
    const double x2 = X * X, y2 = Y * Y;
    const double rho = x2 + y2;
    const double L = Y * PX - X * PY;
    const double sx = 6.0 * k.a * x2 * x2 * X + 4.0 * k.e * x2 * X * y2 + 2.0 * k.e * X * y2 * y2;
    const double sy = 2.0 * k.e * x2 * x2 * Y + 4.0 * k.e * x2 * y2 * Y + 6.0 * k.a * y2 * y2 * Y;
    ds[0] = PX + 2.0 * rho * Y;
    ds[1] = PY - 2.0 * rho * X;
    ds[2] = -X - 4.0 * X * L + 2.0 * rho * PY - 4.0 * sx;
    ds[3] = -Y - 4.0 * Y * L - 2.0 * rho * PX - 4.0 * sy;
}

} // namespace

double regularized_hamiltonian(const RegState &s, double mu)
{
    return hamiltonian(sextic_coefficients(mu), s.X, s.Y, s.PX, s.PY);
}

RegState regularized_field(const RegState &s, double mu)
{
    std::array<double, 4> ds;
    field(sextic_coefficients(mu), s.array(), ds);
    return RegState::from_array(ds);
}

double momentum_on_section(double X, double PX, double h_reg, double mu)
{
    const auto k = sextic_coefficients(mu);
    const double x3 = X * X * X;
    const double c = 0.5 * (X * X + PX * PX) + 4.0 * k.a * x3 * x3 - h_reg;
    const double disc = 4.0 * x3 * x3 - 2.0 * c;
    if (disc < 0.0) {
        throw InadmissibleError("no real P_Y on the section for X = " + std::to_string(X) +
                                ", P_X = " + std::to_string(PX));
    }
    const double py = 2.0 * x3 + std::sqrt(disc);
    if (!(py > 0.0)) {
        throw InadmissibleError("no positive P_Y on the section for X = " + std::to_string(X) +
                                ", P_X = " + std::to_string(PX));
    }
    return py;
}

PhaseState to_physical(const RegState &s, const EnergyContext &ctx)
{
    const double rho = s.X * s.X + s.Y * s.Y;
    if (rho == 0.0) {
        throw SingularityError("tertiary (origin)");
    }
    const double a2 = ctx.alpha * ctx.alpha;
    const double x = a2 * (s.X * s.X - s.Y * s.Y);
    const double y = a2 * 2.0 * s.X * s.Y;
    const double f = 2.0 * ctx.beta / (ctx.alpha * rho);
    const double px = f * (s.X * s.PX - s.Y * s.PY);
    const double py = f * (s.Y * s.PX + s.X * s.PY);
    return PhaseState::planar_state(x, y, px + y, py - x, Frame::Rotated);
}

RegState from_physical(const PhaseState &s, const EnergyContext &ctx)
{
    if (s.frame != Frame::Rotated || !s.planar) {
        throw DomainError("from_physical expects a planar rotated-frame state");
    }
    const double a2 = ctx.alpha * ctx.alpha;
    const double x = s.position.x() / a2;
    const double y = s.position.y() / a2;
    const double r = std::hypot(x, y);
    if (r == 0.0) {
        throw SingularityError("tertiary (origin)");
    }
    double X, Y;
    if (x >= 0.0) {
        X = std::sqrt(0.5 * (r + x));
        Y = y / (2.0 * X);
    } else {
        // Avoid cancellation in r + x on the negative half-axis.
        Y = std::sqrt(0.5 * (r - x));
        X = y / (2.0 * Y);
        if (X < 0.0 || (X == 0.0 && std::signbit(X))) {
            X = -X;
            Y = -Y;
        }
    }
    if (X == 0.0 && Y < 0.0) {
        Y = -Y;
    }
    const double px = s.velocity.x() - s.position.y();
    const double py = s.velocity.y() + s.position.x();
    const double f = ctx.alpha / (2.0 * ctx.beta);
    RegState out;
    out.X = X;
    out.Y = Y;
    out.PX = f * (X * px + Y * py);
    out.PY = f * (-Y * px + X * py);
    out.h_reg = ctx.h_reg;
    return out;
}

double physical_time_rate(const RegState &s) { return 4.0 * (s.X * s.X + s.Y * s.Y); }

RegularizedField::RegularizedField(double mu) : mu_(mu), k_(sextic_coefficients(mu)) {}

void RegularizedField::operator()(const std::array<double, 4> &s,
                                  std::array<double, 4> &ds) const
{
    field(k_, s, ds);
}

double RegularizedField::hamiltonian(const std::array<double, 4> &s) const
{
    return hill4bp::hamiltonian(k_, s[0], s[1], s[2], s[3]);
}

Mat4 RegularizedField::jacobian(const std::array<double, 4> &s) const
{
    const double X = s[0], Y = s[1], PX = s[2], PY = s[3];
    const double x2 = X * X, y2 = Y * Y;
    const double rho = x2 + y2;
    const double L = Y * PX - X * PY;
    const double a = k_.a, e = k_.e;
    const double sxx = 30.0 * a * x2 * x2 + 12.0 * e * x2 * y2 + 2.0 * e * y2 * y2;
    const double sxy = 8.0 * e * x2 * X * Y + 8.0 * e * X * y2 * Y;
    const double syy = 2.0 * e * x2 * x2 + 12.0 * e * x2 * y2 + 30.0 * a * y2 * y2;
    Mat4 j;
    j << 4.0 * X * Y, 2.0 * rho + 4.0 * y2, 1.0, 0.0,
        -2.0 * rho - 4.0 * x2, -4.0 * X * Y, 0.0, 1.0,
        -1.0 - 4.0 * L + 8.0 * X * PY - 4.0 * sxx, -4.0 * X * PX + 4.0 * Y * PY - 4.0 * sxy,
        -4.0 * X * Y, 4.0 * x2 + 2.0 * rho,
        4.0 * Y * PY - 4.0 * X * PX - 4.0 * sxy, -1.0 - 4.0 * L - 8.0 * Y * PX - 4.0 * syy,
        -4.0 * y2 - 2.0 * rho, 4.0 * X * Y;
    return j;
}

} // namespace hill4bp
