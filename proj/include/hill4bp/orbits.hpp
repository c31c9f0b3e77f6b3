#pragma once

// Symmetric periodic orbits of the planar Hill field: differential correction,
// natural-parameter continuation with a pseudo-arclength fallback, monodromy
// and pitchfork detection.
//
// A symmetric orbit starts perpendicular to the x-axis at (x0, 0, 0, ydot0)
// and crosses it perpendicularly again at t = T/2.

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hill4bp/equilibria.hpp"
#include "hill4bp/integrate.hpp"
#include "hill4bp/io.hpp"
#include "hill4bp/model.hpp"

namespace hill4bp {

enum class OrbitFamily { gFamily, gPrime, LyapunovL1, LyapunovL2, Retrograde };

std::string_view to_string(OrbitFamily f) noexcept;

enum class FixedQuantity { FixX0, FixJacobi };

/// XAxis: perpendicular x-axis crossing at T/2. Doubly: also perpendicular
/// to the y-axis at T/4, which keeps continuation on a doubly symmetric family
/// through pitchforks that only break the y-axis symmetry.
enum class Symmetry { XAxis, Doubly };

struct PeriodicOrbit {
    double mu = 0.0;
    double x0 = 0.0;
    double ydot0 = 0.0;
    double period = 0.0;
    double jacobi = 0.0;
    double stability_index = 0.0; // NaN until the monodromy is evaluated
    OrbitFamily family = OrbitFamily::gFamily;
    bool symmetric = true;
    Symmetry symmetry = Symmetry::XAxis;
    double x_half = 0.0;   // x at the half-period crossing
    double residual = 0.0; // |xdot(T/2)|, or |ydot(T/4)| when doubly symmetric
    int iterations = 0;

    std::array<double, 4> initial_state() const { return {x0, 0.0, 0.0, ydot0}; }
    /// Sign of x ydot - y xdot at the start.
    bool direct() const { return x0 * ydot0 > 0.0; }
};

struct CorrectorOptions {
    FixedQuantity fixed = FixedQuantity::FixX0;
    Symmetry symmetry = Symmetry::XAxis;
    int max_iterations = 25;
    double tolerance = 1e-11; // on the crossing residual
    double max_half_period = 50.0;
    double guard_radius = integrate::kGuardRadius;
    integrate::Tolerances integration{};
};

/// Newton correction of a symmetric guess. FixX0 solves for ydot0; FixJacobi
/// keeps C (of the guess, or `target_jacobi`) and solves for x0 with ydot0
/// from the energy, preserving its sign. Throws ConvergenceError with the
/// residual history when Newton fails.
PeriodicOrbit correct_symmetric(double x0, double ydot0, double mu, OrbitFamily family,
                                const CorrectorOptions &opt = {},
                                std::optional<double> target_jacobi = std::nullopt);

struct Monodromy {
    Mat4 phi;
    double stability_index;     // (trace - 2) / 2
    Eigenvalues eigenvalues;    // sorted as numeric_eigenvalues
    double determinant;
    double periodicity_residual; // |x(T) - x(0)|
};

Monodromy monodromy(const PeriodicOrbit &orbit, const integrate::Tolerances &tol = {});

/// Corrected orbit with its monodromy filled in.
PeriodicOrbit with_stability(PeriodicOrbit orbit, const integrate::Tolerances &tol = {});

struct StepControl {
    double initial = 1e-3;
    double min = 1e-6;
    double max = 1e-2;
    double max_index_jump = 0.1; // per accepted step
};

struct Family {
    std::vector<PeriodicOrbit> members;
    bool truncated = false;
    std::string reason;
    std::size_t arclength_steps = 0;

    /// CSV `x0,ydot0,period,jacobi,stability_index`.
    std::string csv() const;
};

/// Stops continuation when it returns true for a newly accepted member.
using StopPredicate = std::function<bool(const PeriodicOrbit &)>;

/// Natural-parameter continuation in x0 (direction +1 or -1). Near folds in
/// x0 the predictor switches to pseudo-arclength in (x0, ydot0).
Family continue_family(const PeriodicOrbit &seed, int direction, std::size_t steps,
                       const StepControl &control = {}, const StopPredicate &stop = {},
                       const CorrectorOptions &opt = {});

struct LyapunovGuess {
    std::array<double, 4> state;
    double period;
    double omega;
};

/// Linear center-eigenspace guess; `amplitude` is the x displacement away
/// from the origin. Throws DomainError unless the point is a saddle-center.
LyapunovGuess lyapunov_guess(const EquilibriumInfo &point, double amplitude, double mu);

/// Lyapunov orbit about L1 or L2 at Jacobi constant C, continued from a
/// small-amplitude seed.
PeriodicOrbit lyapunov_orbit(double mu, EquilibriumLabel label, double C,
                             const StepControl &control = {});

struct Pitchfork {
    double jacobi;
    double x0;
    PeriodicOrbit orbit;                  // family member at the crossing
    double far_side_jacobi;               // where the g' pair was found
    std::vector<PeriodicOrbit> branches;  // g' pair, sorted by x0
    std::size_t near_side_branches;       // g' found before the crossing (expect 0)
};

struct PitchforkOptions {
    double bisection_tol = 1e-10;  // on x0
    double branch_offset = 1e-3;   // |C - C*| for the branch check
    double seed_displacement = 1e-4;
};

/// Locates the stability_index = +1 crossing along a family by bisection in
/// x0 and verifies the pair of g' branches on the unstable side.
std::optional<Pitchfork> detect_pitchfork(const Family &family, const PitchforkOptions &popt = {},
                                          const CorrectorOptions &opt = {});

/// Non-family symmetric orbits at fixed C near x_center, from Newton seeds
/// displaced by `displacements` on both sides (deduplicated, sorted by x0).
std::vector<PeriodicOrbit> branch_orbits(const PeriodicOrbit &center, double C,
                                         const std::vector<double> &displacements,
                                         const CorrectorOptions &opt = {});

io::json to_json(const PeriodicOrbit &o);
io::json to_json(const Pitchfork &p);

} // namespace hill4bp
