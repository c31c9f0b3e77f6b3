#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string_view>
#include <vector>

#include "hill4bp/model.hpp"

namespace hill4bp {

enum class EquilibriumLabel { L1, L2, L3, L4 };

enum class StabilityKind {
    SaddleCenter,  // +-Lambda, +-i omega
    CenterCenter,  // +-i omega1, +-i omega2
    ComplexSaddle, // +-alpha +- i omega
    SaddleSaddle,  // four real roots; does not occur in this model
    Degenerate,    // |D| <= 1e-12
};

std::string_view to_string(EquilibriumLabel label) noexcept;
std::string_view to_string(StabilityKind kind) noexcept;

using Eigenvalues = std::array<std::complex<double>, 4>;

/// Coefficients of p(lambda) = lambda^4 + A lambda^2 + B, with D = A^2 - 4B.
struct CharPoly {
    double A;
    double B;
    double D;
};

struct EquilibriumInfo {
    EquilibriumLabel label;
    Vec2 position; // rotated frame, z = 0
    double jacobi;
    double omega_xx;
    double omega_yy;
    double omega_xy;
    CharPoly charpoly;
    Eigenvalues eigenvalues; // roots of the characteristic polynomial, sorted
    StabilityKind kind;
};

inline constexpr double kDegeneracyTol = 1e-12;

/// L1, L2 (and L3, L4 when mu > 0) with their linear stability data.
std::vector<EquilibriumInfo> equilibrium_points(double mu);

/// A single point; empty for L3/L4 at mu = 0, where they are at infinity.
std::optional<EquilibriumInfo> equilibrium_point(double mu, EquilibriumLabel label);

struct Linearization {
    Mat4 matrix; // rows (xd, yd, xdd, ydd) over (x, y, xd, yd)
    CharPoly charpoly;
};

Linearization linearize(const EquilibriumInfo &point, double mu);

StabilityKind classify(const EquilibriumInfo &point, double mu);
StabilityKind classify(const CharPoly &cp);

/// Sort order: descending real part, then descending imaginary part. Real
/// parts closer than 1e-9 are treated as equal.
void sort_eigenvalues(Eigenvalues &ev);

Eigenvalues charpoly_roots(const CharPoly &cp);

/// Eigenvalues of an arbitrary 4x4 matrix, sorted as above.
Eigenvalues numeric_eigenvalues(const Mat4 &m);

/// Discriminant D of the L3/L4 characteristic polynomial, from the linearization.
double l3_discriminant(double mu);

struct CriticalMassRatio {
    double computed_root;       // bisection on sign(D) at L3
    double eigen_oracle_root;   // first mu with eigenvalues off the imaginary axis
    double paper_value;         // 0.00898964 as quoted
    double paper_closed_form;   // (112 - sqrt(2 (1979 + 37 sqrt 12097))) / 224
    double discriminant_at_paper_value;
    bool discrepancy;           // |computed - quoted| > 1e-4
};

inline constexpr double kQuotedMu0 = 0.00898964;

/// Throws ConsistencyError when no sign change of D is found on (0, 1/2].
CriticalMassRatio critical_mass_ratio(double tol = 1e-13);

/// Smallest mu on (0, 1/2] where the numerical L3 eigenvalues leave the
/// imaginary axis, located by a sweep of step `sweep_step` and bisection.
double eigenvalue_transition(double sweep_step = 1e-5, double tol = 1e-13);

} // namespace hill4bp
