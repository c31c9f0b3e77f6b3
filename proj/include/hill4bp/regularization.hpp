#pragma once

// Levi-Civita regularization of the planar rotated-frame problem.
//
// With rho = X^2 + Y^2 the regularized Hamiltonian is
//
//     H = (X^2 + Y^2 + PX^2 + PY^2) / 2 + 2 rho (Y PX - X PY) + 4 S(X, Y),
//     S = a X^6 + (4b - a) X^4 Y^2 + (4b - a) X^2 Y^4 + a Y^6,
//
// where a = (1 - lambda2) / 2 and b = (1 - lambda1) / 2 are the rotated
// Hamiltonian coefficients. At mu = 0 the sextic is -4 (X^6 - 3X^4Y^2 -
// 3X^2Y^4 + Y^6), the classical lunar Hill form. Physical time advances as
// dt/dsigma = 4 rho along the regularized flow.

#include <array>

#include "hill4bp/model.hpp"

namespace hill4bp {

struct RegState {
    double X = 0.0;
    double Y = 0.0;
    double PX = 0.0;
    double PY = 0.0;
    /// Level of the regularized Hamiltonian the state is meant to lie on.
    double h_reg = 0.0;

    std::array<double, 4> array() const { return {X, Y, PX, PY}; }
    static RegState from_array(const std::array<double, 4> &a, double h_reg = 0.0)
    {
        return {a[0], a[1], a[2], a[3], h_reg};
    }
};

/// Energy-dependent scaling x = alpha X, p = beta P, H_hat = gamma H.
struct EnergyContext {
    double C;
    double h;
    double alpha;
    double beta;
    double gamma;
    double h_reg;

    static EnergyContext from_jacobi(double C);
};

/// |C|^(-3/2) / 2.
double regularized_energy(double C);

/// (x, y) = (X^2 - Y^2, 2XY).
Vec2 lc_map(double X, double Y);

/// (p_x, p_y) = 2 / (X^2 + Y^2) * [[X, -Y], [Y, X]] (P_X, P_Y), before energy scaling.
Vec2 lc_momentum_map(double X, double Y, double PX, double PY);

struct SexticCoefficients {
    double a;
    double e; // 4b - a
};

SexticCoefficients sextic_coefficients(double mu);

double regularized_hamiltonian(const RegState &s, double mu);

/// Derivative (Xdot, Ydot, PXdot, PYdot) in regularized time; h_reg of the result is 0.
RegState regularized_field(const RegState &s, double mu);

/// Positive P_Y on the section Y = 0 with H(X, 0, PX, PY) = h_reg (larger root).
double momentum_on_section(double X, double PX, double h_reg, double mu);

/// Rotated-frame planar state for a regularized state at the context's energy.
PhaseState to_physical(const RegState &s, const EnergyContext &ctx);

/// Inverse map on the cover X >= 0 (Y >= 0 when X = 0). The state must be planar
/// and in the rotated frame.
RegState from_physical(const PhaseState &s, const EnergyContext &ctx);

/// dt/dsigma at a regularized state.
double physical_time_rate(const RegState &s);

/// Regularized vector field on flat arrays (X, Y, PX, PY).
class RegularizedField {
public:
    explicit RegularizedField(double mu);

    void operator()(const std::array<double, 4> &s, std::array<double, 4> &ds) const;
    Mat4 jacobian(const std::array<double, 4> &s) const;
    double hamiltonian(const std::array<double, 4> &s) const;
    double mu() const noexcept { return mu_; }

private:
    double mu_;
    SexticCoefficients k_;
};

} // namespace hill4bp
