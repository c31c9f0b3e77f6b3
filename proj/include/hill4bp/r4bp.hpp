#pragma once

// Full equilateral restricted four-body problem in the synodic frame. Used as
// the reference model the Hill approximation is the scaling limit of.

#include <array>
#include <cstddef>
#include <vector>

#include "hill4bp/model.hpp"

namespace hill4bp {

/// Three primaries at the vertices of a unit equilateral triangle, centre of
/// mass at the origin, m1 >= m2 >= m3 >= 0 and m1 + m2 + m3 = 1.
struct R4BPConfig {
    double m1;
    double m2;
    double m3;
    std::array<Vec3, 3> primaries;

    std::array<double, 3> masses() const { return {m1, m2, m3}; }
};

/// Closed-form primary positions. Throws DomainError when K = 0 or m2 = 0.
std::array<Vec3, 3> r4bp_primaries(double m1, double m2, double m3);

/// Builds and validates a configuration (unit sides and centroid to 1e-12).
R4BPConfig make_r4bp_config(double m1, double m2, double m3);

/// Configuration for given mu and tertiary mass: m2 = mu (1 - m3), m1 = (1 - mu)(1 - m3).
R4BPConfig r4bp_config_from_mu(double mu, double m3);

/// Omega = (x^2 + y^2) / 2 + sum m_i / r_i.
double r4bp_potential(const Vec3 &p, const R4BPConfig &cfg);

/// Synodic equations of motion; SingularityError names the colliding body.
PhaseDerivative r4bp_vector_field(const PhaseState &s, const R4BPConfig &cfg);

double r4bp_jacobi(const PhaseState &s, const R4BPConfig &cfg);

/// Field of the full problem seen from the tertiary in coordinates scaled by
/// m3^(1/3) (time unchanged). Tends to the unrotated Hill field as m3 -> 0
/// with error O(m3^(1/3)). `s` must be an unrotated-frame state in scaled units.
PhaseDerivative scaled_r4bp_field(const PhaseState &s, double mu, double m3);

struct FieldConvergence {
    double mu;
    std::vector<double> m3;
    std::vector<double> sup_error; // max |a_scaled - a_hill| over the samples
    double slope;                  // least-squares slope of log error on log m3
    std::size_t samples;
};

/// Sup-norm difference between the scaled R4BP and unrotated Hill fields on an
/// n^3 lattice of the unit ball (points with r < 0.05 skipped), per tertiary
/// mass. The expected slope is 1/3.
FieldConvergence field_convergence(double mu, const std::vector<double> &m3, std::size_t n = 21);

/// Planar R4BP field on flat arrays, with a central-difference Jacobian.
class PlanarR4BPField {
public:
    explicit PlanarR4BPField(R4BPConfig cfg) : cfg_(std::move(cfg)) {}

    void operator()(const std::array<double, 4> &s, std::array<double, 4> &ds) const;
    Mat4 jacobian(const std::array<double, 4> &s, double step = 1e-7) const;
    double jacobi(const std::array<double, 4> &s) const;
    const R4BPConfig &config() const noexcept { return cfg_; }

private:
    R4BPConfig cfg_;
};

} // namespace hill4bp
