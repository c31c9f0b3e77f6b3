#include "hill4bp/model.hpp"

#include <cmath>
#include <string>

#include "hill4bp/errors.hpp"

namespace hill4bp {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

void require_off_origin(const Vec3 &p)
{
    if (p.x() == 0.0 && p.y() == 0.0 && p.z() == 0.0) {
        throw SingularityError("tertiary (origin)");
    }
}

} // namespace

std::string_view to_string(Frame frame) noexcept
{
    return frame == Frame::Rotated ? "rotated" : "unrotated";
}

ModelParams::ModelParams(double mu, Frame frame) : mu_(mu), frame_(frame)
{
    if (!(mu >= 0.0 && mu <= 0.5)) {
        throw DomainError("mass ratio mu must lie in [0, 1/2], got " + std::to_string(mu));
    }
}

EigenStructure eigen_structure(double mu)
{
    if (!(mu >= 0.0 && mu <= 0.5)) {
        throw DomainError("mass ratio mu must lie in [0, 1/2], got " + std::to_string(mu));
    }
    EigenStructure e{};
    e.mu = mu;
    e.d = std::sqrt(1.0 - 3.0 * mu + 3.0 * mu * mu);
    e.lambda1 = 1.5 * (1.0 - e.d);
    e.lambda2 = 1.5 * (1.0 + e.d);

    // Printed eigenvectors, rewritten with (1 - 2d)/(1 - 2mu) = -3(1 - 2mu)/(1 + 2d)
    // so that both stay regular (and continuous) up to mu = 1/2.
    const double s = 1.0 - 2.0 * mu;
    const double t = 1.0 + 2.0 * e.d;
    e.v1 = Vec2(-t, kSqrt3 * s) / std::sqrt(t * t + 3.0 * s * s);
    e.v2 = Vec2(3.0 * s, kSqrt3 * t) / std::sqrt(9.0 * s * s + 3.0 * t * t);
    e.rotation.col(0) = e.v2;
    e.rotation.col(1) = e.v1;

    e.a_coef = 0.5 * (1.0 - e.lambda2);
    e.b_coef = 0.5 * (1.0 - e.lambda1);
    e.c_coef = 0.5;
    e.coriolis_coef = -e.v2.y() / e.v1.x();
    return e;
}

TidalForm tidal_form(const ModelParams &params)
{
    if (params.frame() == Frame::Unrotated) {
        return {0.75, 0.75 * kSqrt3 * (1.0 - 2.0 * params.mu()), 2.25};
    }
    const auto e = eigen_structure(params.mu());
    return {e.lambda2, 0.0, e.lambda1};
}

PhaseState PhaseState::planar_state(double x, double y, double vx, double vy, Frame frame)
{
    PhaseState s;
    s.position = Vec3(x, y, 0.0);
    s.velocity = Vec3(vx, vy, 0.0);
    s.frame = frame;
    s.planar = true;
    return s;
}

PhaseState PhaseState::spatial_state(const Vec3 &position, const Vec3 &velocity, Frame frame)
{
    PhaseState s;
    s.position = position;
    s.velocity = velocity;
    s.frame = frame;
    s.planar = false;
    return s;
}

std::array<double, 4> PhaseState::planar_array() const
{
    return {position.x(), position.y(), velocity.x(), velocity.y()};
}

double effective_potential(const Vec3 &p, const ModelParams &params)
{
    require_off_origin(p);
    const auto q = tidal_form(params);
    const double x = p.x(), y = p.y(), z = p.z();
    return 0.5 * (q.xx * x * x + 2.0 * q.xy * x * y + q.yy * y * y - z * z) + 1.0 / p.norm();
}

double effective_potential(const Vec2 &p, const ModelParams &params)
{
    return effective_potential(Vec3(p.x(), p.y(), 0.0), params);
}

Vec3 potential_gradient(const Vec3 &p, const ModelParams &params)
{
    require_off_origin(p);
    const auto q = tidal_form(params);
    const double r = p.norm();
    const double ir3 = 1.0 / (r * r * r);
    return {q.xx * p.x() + q.xy * p.y() - p.x() * ir3,
            q.xy * p.x() + q.yy * p.y() - p.y() * ir3,
            -p.z() - p.z() * ir3};
}

Mat3 potential_hessian(const Vec3 &p, const ModelParams &params)
{
    require_off_origin(p);
    const auto q = tidal_form(params);
    const double r2 = p.squaredNorm();
    const double r = std::sqrt(r2);
    const double ir3 = 1.0 / (r2 * r);
    const double ir5 = ir3 / r2;
    Mat3 h = 3.0 * ir5 * (p * p.transpose());
    h.diagonal().array() -= ir3;
    h(0, 0) += q.xx;
    h(0, 1) += q.xy;
    h(1, 0) += q.xy;
    h(1, 1) += q.yy;
    h(2, 2) -= 1.0;
    return h;
}

PhaseDerivative vector_field(const PhaseState &s, const ModelParams &params)
{
    if (s.frame != params.frame()) {
        throw DomainError("state frame does not match model frame");
    }
    Vec3 pos = s.position;
    if (s.planar) {
        pos.z() = 0.0;
    }
    const Vec3 g = potential_gradient(pos, params);
    PhaseDerivative d;
    d.velocity = s.velocity;
    d.acceleration = Vec3(g.x() + 2.0 * s.velocity.y(), g.y() - 2.0 * s.velocity.x(), g.z());
    if (s.planar) {
        d.velocity.z() = 0.0;
        d.acceleration.z() = 0.0;
    }
    return d;
}

double jacobi_constant(const PhaseState &s, const ModelParams &params)
{
    if (s.frame != params.frame()) {
        throw DomainError("state frame does not match model frame");
    }
    if (s.planar) {
        const Vec2 p(s.position.x(), s.position.y());
        return -s.velocity.head<2>().squaredNorm() + 2.0 * effective_potential(p, params);
    }
    return -s.velocity.squaredNorm() + 2.0 * effective_potential(s.position, params);
}

double rotated_hamiltonian(const PhaseState &s, double mu)
{
    if (s.frame != Frame::Rotated) {
        throw DomainError("rotated_hamiltonian expects a rotated-frame state");
    }
    const auto e = eigen_structure(mu);
    Vec3 q = s.position;
    Vec3 v = s.velocity;
    if (s.planar) {
        q.z() = 0.0;
        v.z() = 0.0;
    }
    require_off_origin(q);
    const double px = v.x() - q.y();
    const double py = v.y() + q.x();
    const double pz = v.z();
    return 0.5 * (px * px + py * py + pz * pz) + q.y() * px - q.x() * py +
           e.a_coef * q.x() * q.x() + e.b_coef * q.y() * q.y() + e.c_coef * q.z() * q.z() -
           1.0 / q.norm();
}

PhaseState to_frame(const PhaseState &s, double mu, Frame target)
{
    if (s.frame == target) {
        return s;
    }
    const auto e = eigen_structure(mu);
    // p_unrot = R p_rot
    const Mat2 m = (target == Frame::Unrotated) ? e.rotation : Mat2(e.rotation.transpose());
    PhaseState out = s;
    out.frame = target;
    out.position.head<2>() = m * s.position.head<2>();
    out.velocity.head<2>() = m * s.velocity.head<2>();
    return out;
}

PlanarHillField::PlanarHillField(const ModelParams &params)
    : params_(params), q_(tidal_form(params))
{
}

void PlanarHillField::operator()(const std::array<double, 4> &s, std::array<double, 4> &ds) const
{
    const double x = s[0], y = s[1];
    const double r2 = x * x + y * y;
    const double ir3 = 1.0 / (r2 * std::sqrt(r2));
    ds[0] = s[2];
    ds[1] = s[3];
    ds[2] = q_.xx * x + q_.xy * y - x * ir3 + 2.0 * s[3];
    ds[3] = q_.xy * x + q_.yy * y - y * ir3 - 2.0 * s[2];
}

Mat4 PlanarHillField::jacobian(const std::array<double, 4> &s) const
{
    const double x = s[0], y = s[1];
    const double r2 = x * x + y * y;
    const double r = std::sqrt(r2);
    const double ir3 = 1.0 / (r2 * r);
    const double ir5 = ir3 / r2;
    Mat4 j = Mat4::Zero();
    j(0, 2) = 1.0;
    j(1, 3) = 1.0;
    j(2, 0) = q_.xx - ir3 + 3.0 * x * x * ir5;
    j(2, 1) = q_.xy + 3.0 * x * y * ir5;
    j(3, 0) = j(2, 1);
    j(3, 1) = q_.yy - ir3 + 3.0 * y * y * ir5;
    j(2, 3) = 2.0;
    j(3, 2) = -2.0;
    return j;
}

double PlanarHillField::potential(double x, double y) const
{
    return 0.5 * (q_.xx * x * x + 2.0 * q_.xy * x * y + q_.yy * y * y) + 1.0 / std::hypot(x, y);
}

double PlanarHillField::jacobi(const std::array<double, 4> &s) const
{
    return -(s[2] * s[2] + s[3] * s[3]) + 2.0 * potential(s[0], s[1]);
}

} // namespace hill4bp
