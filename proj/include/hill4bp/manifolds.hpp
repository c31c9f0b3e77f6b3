#pragma once

// Stable and unstable manifolds of Lyapunov orbits: eigenvector seeding,
// globalization to section cuts, and detection of the first transverse
// homoclinic intersections between cut curves.
//
// A branch is the image of the orbit's phase circle displaced by epsilon along
// the transported monodromy eigenvector. Its n-th cut curve is the n-th
// crossing of each seed trajectory with the section, ordered by phase.

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hill4bp/integrate.hpp"
#include "hill4bp/io.hpp"
#include "hill4bp/model.hpp"
#include "hill4bp/orbits.hpp"
#include "hill4bp/poincare.hpp"

namespace hill4bp {

enum class ManifoldSense { Stable, Unstable };
/// Inner: the side of the tertiary. Outer: away from it.
enum class Region { Inner, Outer };

std::string_view to_string(ManifoldSense s) noexcept;
std::string_view to_string(Region r) noexcept;

struct ManifoldBranch {
    PeriodicOrbit orbit;
    ManifoldSense sense = ManifoldSense::Unstable;
    Region side = Region::Inner;
    double epsilon = 1e-6;
    double multiplier = 0.0;        // monodromy eigenvalue of the branch
    Eigen::Vector4d eigenvector;    // at phase 0, unit position part, region sign applied
    std::vector<double> phases;     // seed times along the orbit, in [0, T)
    std::vector<std::array<double, 4>> seeds;
    /// Orbit with its STM over one period, forward for unstable branches and
    /// backward over [-T, 0] for stable ones; used to seed at new phases.
    std::shared_ptr<const integrate::Trajectory<20>> reference;
};

/// N seeds equally spaced in time along the orbit. Throws DomainError for a
/// stable orbit (|stability index| <= 1).
ManifoldBranch seed_manifold(const PeriodicOrbit &orbit, ManifoldSense sense, Region side,
                             double epsilon = 1e-6, std::size_t n = 200);

/// Seed at an arbitrary phase (taken modulo the period).
std::array<double, 4> manifold_seed(const ManifoldBranch &branch, double phase);

struct GlobalizeOptions {
    double insertion_threshold = 1e-3; // max gap between neighbouring cut points
    std::size_t max_seeds = 100000;
    /// Relative to the period. Closer seeds differ by less than the
    /// integration noise of their cut points.
    double min_phase_gap = 1e-8;
    double max_time = 0.0;             // per seed; 0: 12 (inner) or 80 (outer) per cut
    unsigned threads = 0;
    double guard_radius = integrate::kGuardRadius;
    /// Stop seeds that transit to the other region: inner branches beyond
    /// 1.5 x_L1 from the origin, outer branches within 0.5 x_L1.
    bool confine = true;
    integrate::Tolerances tol{};
};

struct CutCurve {
    ManifoldSense sense = ManifoldSense::Unstable;
    std::size_t cut_index = 0;
    SectionId section = SectionId::Sigma;
    std::vector<Vec2> points; // phase order
    std::vector<double> phases;
    std::vector<SectionId> subsections;
    /// linked[i]: points i and i+1 (cyclically) are neighbours on the curve.
    std::vector<bool> linked;
    bool closed = false;

    std::size_t segment_count() const;
    /// Crossings between non-adjacent linked segments.
    std::size_t self_intersections() const;
};

struct Globalization {
    ManifoldBranch branch;
    SectionDef section;
    std::size_t max_cuts = 0;
    GlobalizeOptions options;
    std::vector<CutCurve> curves; // curves[n - 1] is cut n
    std::size_t seeds = 0;
    std::size_t dropped = 0;    // stopped by the collision guard
    std::size_t transits = 0;   // stopped on leaving the region
    std::size_t incomplete = 0; // fewer than max_cuts crossings within max_time
    std::size_t unresolved = 0; // gaps left unsplit when the seed budget ran out
    double max_jacobi_error = 0.0;
    double max_radius = 0.0;

    const CutCurve &cut(std::size_t n) const { return curves.at(n - 1); }
};

/// Propagates every seed (unstable forward, stable backward) to max_cuts
/// transversal crossings, inserting seeds where neighbouring images separate.
Globalization globalize(const ManifoldBranch &branch, const SectionDef &section, std::size_t max_cuts,
                        const GlobalizeOptions &opt = {});

struct HomoclinicRecord {
    std::size_t n_u = 0;
    std::size_t n_s = 0;
    SectionId section = SectionId::Sigma;
    std::vector<Vec2> points;
    std::vector<double> residuals; // final segment lengths after refinement
    double jacobi = 0.0;
};

/// Index pairs whose cut curves intersect, by increasing n_u + n_s, then by
/// increasing |n_u - n_s|. All crossings of one homoclinic orbit share the
/// sum; the balanced split is the first pair where both cut sequences meet.
std::vector<std::pair<std::size_t, std::size_t>> intersecting_pairs(const Globalization &unstable,
                                                                    const Globalization &stable,
                                                                    std::size_t max_sum = 0);

/// Records for the first intersecting pair and its mirror (n_s, n_u) when that
/// intersects. Points are refined by bisection in phase; crossings whose
/// refinement does not reach `tolerance` are discarded as polyline artefacts.
std::vector<HomoclinicRecord> first_intersection(const Globalization &unstable, const Globalization &stable,
                                                 std::size_t max_sum = 0, double tolerance = 1e-8);

/// Image under the x-axis reversibility on a section (y, ydot) -> (-y, ydot).
Vec2 reversed(const Vec2 &y_ydot);

/// CSV `sense,cut_index,point_order,y,ydot`.
std::string cuts_csv(const std::vector<const Globalization *> &branches);

io::json to_json(const HomoclinicRecord &r);
io::json to_json(const Globalization &g); // summary statistics only

} // namespace hill4bp
