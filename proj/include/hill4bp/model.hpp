#pragma once

// Hill approximation of the equilateral restricted four-body problem.
//
// Coordinates are centred on the tertiary. Two frames are supported: the
// unrotated frame inherited from the synodic frame of the full problem, and
// the rotated frame in which the tidal quadratic form is diagonal,
//
//     Omega_bar = (lambda2 x^2 + lambda1 y^2 - z^2) / 2 + 1 / r.
//
// States carry velocities; canonical momenta (p_x = xdot - y, p_y = ydot + x)
// only appear where Hamiltonians are evaluated.

#include <array>
#include <string_view>

#include <Eigen/Dense>

namespace hill4bp {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

enum class Frame { Unrotated, Rotated };

std::string_view to_string(Frame frame) noexcept;

/// Mass ratio mu = m2 / (m1 + m2) of the two distant primaries, in [0, 1/2].
class ModelParams {
public:
    explicit ModelParams(double mu, Frame frame = Frame::Rotated);

    double mu() const noexcept { return mu_; }
    Frame frame() const noexcept { return frame_; }
    ModelParams with_frame(Frame frame) const { return ModelParams(mu_, frame); }

private:
    double mu_;
    Frame frame_;
};

/// Spectral data of the tidal matrix
///     M = [[3/4, (3 sqrt3 / 4)(1 - 2mu)], [(3 sqrt3 / 4)(1 - 2mu), 9/4]].
///
/// `rotation` has columns (v2, v1) and maps rotated coordinates to unrotated
/// ones: p_unrot = rotation * p_rot. At mu = 1/2 the printed eigenvector
/// formulas are 0/0; their limit (v2 = (0, 1), v1 = (-1, 0)) is used so that
/// the frame equivalence holds on the whole closed interval.
struct EigenStructure {
    double mu;
    double d;
    double lambda1;
    double lambda2;
    Vec2 v1;
    Vec2 v2;
    Mat2 rotation;
    /// Coefficients of the rotated Hamiltonian a x^2 + b y^2 + c z^2.
    double a_coef;
    double b_coef;
    double c_coef;
    /// Coriolis coefficient -v22 / v11 after the frame change; equals 1.
    double coriolis_coef;
};

EigenStructure eigen_structure(double mu);

/// Quadratic (tidal) part of Omega in the plane: (xx x^2 + 2 xy x y + yy y^2) / 2.
struct TidalForm {
    double xx;
    double xy;
    double yy;
};

TidalForm tidal_form(const ModelParams &params);

/// Position + velocity. Planar states keep z = zdot = 0 and ignore them.
struct PhaseState {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    Frame frame = Frame::Rotated;
    bool planar = true;

    static PhaseState planar_state(double x, double y, double vx, double vy,
                                   Frame frame = Frame::Rotated);
    static PhaseState spatial_state(const Vec3 &position, const Vec3 &velocity,
                                    Frame frame = Frame::Rotated);
    /// (x, y, xdot, ydot)
    std::array<double, 4> planar_array() const;
};

struct PhaseDerivative {
    Vec3 velocity = Vec3::Zero();
    Vec3 acceleration = Vec3::Zero();
};

/// Omega at `p` in the frame of `params`. The 2-vector overload is the planar (z = 0) potential.
double effective_potential(const Vec3 &p, const ModelParams &params);
double effective_potential(const Vec2 &p, const ModelParams &params);

Vec3 potential_gradient(const Vec3 &p, const ModelParams &params);
Mat3 potential_hessian(const Vec3 &p, const ModelParams &params);

/// Equations of motion xdd - 2 yd = Omega_x, ydd + 2 xd = Omega_y, zdd = Omega_z.
/// The state frame must match `params.frame()`.
PhaseDerivative vector_field(const PhaseState &s, const ModelParams &params);

/// C = -|v|^2 + 2 Omega. The Hamiltonian value is h = -C / 2.
double jacobi_constant(const PhaseState &s, const ModelParams &params);

/// Rotated-frame Hamiltonian H = |p|^2/2 + y p_x - x p_y + a x^2 + b y^2 + c z^2 - 1/r.
double rotated_hamiltonian(const PhaseState &s, double mu);

PhaseState to_frame(const PhaseState &s, double mu, Frame target);

/// Planar vector field on flat arrays (x, y, xdot, ydot), used by the integrators.
class PlanarHillField {
public:
    explicit PlanarHillField(const ModelParams &params);

    void operator()(const std::array<double, 4> &s, std::array<double, 4> &ds) const;
    /// Jacobian of the planar field with respect to (x, y, xdot, ydot).
    Mat4 jacobian(const std::array<double, 4> &s) const;
    double jacobi(const std::array<double, 4> &s) const;
    double potential(double x, double y) const;
    const ModelParams &params() const noexcept { return params_; }

private:
    ModelParams params_;
    TidalForm q_;
};

} // namespace hill4bp
