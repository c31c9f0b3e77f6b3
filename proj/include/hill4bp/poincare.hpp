#pragma once

// Surfaces of section, the first-return map of the regularized flow, and cuts
// of physical trajectories with lines x = const.
//
// Physical trajectories are always propagated in the rotated frame; sections
// may be posed in either frame and convert states on the fly. Section
// coordinates are (X, PX) on the regularized section and (y, ydot) on the
// physical ones.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hill4bp/grid.hpp"
#include "hill4bp/integrate.hpp"
#include "hill4bp/io.hpp"
#include "hill4bp/model.hpp"
#include "hill4bp/regularization.hpp"

namespace hill4bp {

enum class SectionId {
    RegY0,      // Y = 0, PY > 0 (regularized)
    Sigma,      // x = 0, either sign of y
    SigmaPlus,  // x = 0, y > 0
    SigmaMinus, // x = 0, y < 0
    SigmaPrime, // x = -x_L1 in the unrotated frame
};

std::string_view to_string(SectionId id) noexcept;

/// Tangential-crossing threshold on the normal velocity.
inline constexpr double kTangentialTol = 1e-10;

struct SectionDef {
    SectionId id = SectionId::Sigma;
    Frame frame = Frame::Rotated;
    integrate::TimeVariable time_variable = integrate::TimeVariable::Physical;
    double x_position = 0.0; // section line x = x_position in `frame`
    double mu = 0.0;
    Mat2 rotation = Mat2::Identity(); // p_unrot = rotation p_rot

    static SectionDef reg_y0(double mu);
    static SectionDef sigma(double mu, SectionId id = SectionId::Sigma);
    static SectionDef sigma_prime(double mu);

    /// Event function on a rotated-frame (or regularized) state.
    double event(const std::array<double, 4> &s) const;
    /// State expressed in the section frame (identity for rotated sections).
    std::array<double, 4> to_section_frame(const std::array<double, 4> &s) const;
    /// (y, ydot) or (X, PX).
    Vec2 coords(const std::array<double, 4> &s) const;
    /// xdot in the section frame; Ydot for the regularized section.
    double normal_velocity(const std::array<double, 4> &s) const;
    /// Subsection membership of a point already on the section line.
    bool in_subsection(const std::array<double, 4> &s) const;
};

struct SectionPoint {
    Vec2 coords;
    std::size_t cut_index = 0; // 1-based
    std::size_t trajectory_id = 0;
    SectionId subsection = SectionId::Sigma;
    double t = 0.0;
    std::array<double, 4> state{}; // rotated frame / regularized
};

// ---------------------------------------------------------------------------
// Regularized return map

struct ReturnOptions {
    double escape_radius = 10.0; // on sqrt(X^2 + Y^2)
    double max_return_time = 200.0;
    integrate::Tolerances tol{};
};

struct ReturnResult {
    std::vector<SectionPoint> points;
    bool escaped = false;
};

/// Next n crossings of Y = 0 with PY > 0. Stops early (escaped = true) when
/// the orbit leaves the escape radius or does not return in time.
ReturnResult return_map(const RegState &seed, std::size_t n, double mu, const ReturnOptions &opt = {});

/// Seed on the section from (X, PX); throws InadmissibleError when no PY > 0 exists.
RegState section_seed(double X, double PX, double h_reg, double mu);

struct ScanOrbit {
    std::size_t seed_id;
    Vec2 seed;
    std::vector<Vec2> points;
    bool escaped;
};

struct ScanResult {
    double h_reg;
    double mu;
    std::size_t iterates;
    std::vector<ScanOrbit> orbits;
    std::size_t skipped = 0; // inadmissible grid points
    std::size_t escapes = 0;

    /// CSV `seed_id,iter,X,PX`; iteration 0 is the seed itself.
    std::string csv() const;
};

/// Iterates the return map from every admissible grid point of (X, PX).
ScanResult scan(double h_reg, double mu, const GridSpec &grid, std::size_t iterates,
                unsigned threads = 0, const ReturnOptions &opt = {});

struct ReturnDerivative {
    Vec2 image;
    Mat2 dp;
    double return_time;
};

/// One return and its 2x2 derivative from the variational equations.
ReturnDerivative return_derivative(const Vec2 &x_px, double h_reg, double mu,
                                   const ReturnOptions &opt = {});

struct FixedPoint {
    Vec2 coords;
    Mat2 dp;
    double trace;
    bool stable;    // |trace| < 2
    bool symmetric; // PX = 0
    double return_time;
};

/// Newton iteration for P(z) = z from a guess.
std::optional<FixedPoint> refine_fixed_point(const Vec2 &guess, double h_reg, double mu,
                                             const ReturnOptions &opt = {});

/// Fixed points on the symmetry line PX = 0, from sign changes of PX after
/// one return over `samples` values of X in `x_range`, keeping those that
/// also return to the same X.
std::vector<FixedPoint> symmetric_fixed_points(double h_reg, double mu, Interval x_range,
                                               std::size_t samples, const ReturnOptions &opt = {});

// ---------------------------------------------------------------------------
// Portrait scoring

/// Qualitative stage of a RegY0 portrait as C decreases.
enum class PortraitStage { TwoFixedPoints, Pitchfork, Chaos, OpenNeck, Unclassified };

std::string_view to_string(PortraitStage s) noexcept;

struct PortraitOptions {
    double x_limit = 2.99;               // fixed-point search on |X| <= x_limit
    std::size_t samples = 400;
    std::size_t chaos_iterates = 2000;   // from the hyperbolic direct point
    double chaos_offset = 1e-6;
    double cell = 0.01;                  // (X, PX) cell size for the extent count
    std::size_t chaos_cells = 20;        // extent at which the layer counts as chaotic
    std::size_t escape_nx = 20;          // seeds on 0 < X <= X_L1
    std::size_t escape_npx = 21;         // seeds on |PX| <= escape_px
    double escape_px = 1.0;
    std::size_t escape_iterates = 300;
    unsigned threads = 0;
    ReturnOptions ret{};
};

struct PortraitSummary {
    double jacobi;
    double mu;
    std::vector<FixedPoint> fixed_points; // symmetric, sorted by X
    std::size_t stable = 0;
    std::size_t hyperbolic = 0;
    /// Cells visited by the orbit started next to the hyperbolic direct fixed
    /// point (X > 0); 0 when there is none.
    std::size_t chaos_extent = 0;
    std::size_t chaos_iterates = 0; // before escape, if any
    /// Seeds inside the L1 distance (physical x <= x_L1); orbits beyond it lie
    /// in the outer component and may escape at any C.
    std::size_t escape_seeds = 0;
    std::size_t escapes = 0;
    PortraitStage stage = PortraitStage::Unclassified;
};

/// Fixed points, chaos extent and escapes of the RegY0 map at (C, mu), and
/// the stage they imply. Requires mu > 0 (L1 at finite distance) and C > 0.
PortraitSummary portrait_summary(double C, double mu, const PortraitOptions &opt = {});

// ---------------------------------------------------------------------------
// Physical sections

struct CutList {
    std::vector<SectionPoint> points;
    std::size_t tangential = 0;
};

/// Transversal crossings of the section's line, numbered over both subsections.
/// Only points of the requested subsection are returned; numbering stops at max_cuts.
CutList physical_cuts(const integrate::Trajectory<4> &traj, const SectionDef &section,
                      std::size_t max_cuts, std::size_t trajectory_id = 0);

/// Zero normal-velocity curve ydot^2 = 2 Omega(x_s, y) - C on the line x = x_s of
/// `params.frame()`. Each admissible y-interval gives one closed polyline of
/// (y, ydot) points.
std::vector<std::vector<Vec2>> tangency_curve(double C, const ModelParams &params,
                                              double x_section, Interval y_range, std::size_t n);

/// Whether (y, ydot) lies in the region bounded by the tangency curve.
bool inside_tangency(double C, const ModelParams &params, double x_section, double y,
                     double ydot, double tol = 1e-9);

/// CSV `branch,cut_index,y,ydot`.
std::string cuts_csv(const std::vector<std::pair<std::string, SectionPoint>> &cuts);

} // namespace hill4bp
