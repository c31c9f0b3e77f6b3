#include "hill4bp/r4bp.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hill4bp/errors.hpp"

namespace hill4bp {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr const char *kBodyNames[3] = {"m1 (primary)", "m2 (secondary)", "m3 (tertiary)"};

// sum over bodies of m_i (q_i - q) / r_i^3
Vec3 attraction(const Vec3 &q, const R4BPConfig &cfg)
{
    Vec3 acc = Vec3::Zero();
    const auto m = cfg.masses();
    for (int i = 0; i < 3; ++i) {
        if (m[i] == 0.0) {
            continue;
        }
        const Vec3 d = cfg.primaries[i] - q;
        const double r2 = d.squaredNorm();
        if (r2 == 0.0) {
            throw SingularityError(kBodyNames[i]);
        }
        acc += m[i] * d / (r2 * std::sqrt(r2));
    }
    return acc;
}

} // namespace

std::array<Vec3, 3> r4bp_primaries(double m1, double m2, double m3)
{
    if (!(m1 > 0.0 && m2 > 0.0 && m3 >= 0.0)) {
        throw DomainError("r4bp_primaries: masses must satisfy m1, m2 > 0 and m3 >= 0");
    }
    if (std::abs(m1 + m2 + m3 - 1.0) > 1e-12) {
        throw DomainError("r4bp_primaries: masses must sum to 1");
    }
    const double k = m2 * (m3 - m2) + m1 * (m2 + 2.0 * m3);
    if (k == 0.0) {
        throw DomainError("r4bp_primaries: degenerate masses (K = 0)");
    }
    const double s = std::sqrt(m2 * m2 + m2 * m3 + m3 * m3);
    const double ak = std::abs(k);
    std::array<Vec3, 3> p;
    p[0] = Vec3(-ak * s / k, 0.0, 0.0);
    p[1] = Vec3(ak * ((m2 - m3) * m3 + m1 * (2.0 * m2 + m3)) / (2.0 * k * s),
                -kSqrt3 * m3 / (2.0 * std::pow(m2, 1.5)) * std::sqrt(m2 * m2 * m2) / s, 0.0);
    p[2] = Vec3(ak / (2.0 * s), kSqrt3 / (2.0 * std::sqrt(m2)) * std::sqrt(m2 * m2 * m2) / s, 0.0);
    return p;
}

R4BPConfig make_r4bp_config(double m1, double m2, double m3)
{
    if (!(m1 >= m2 && m2 >= m3)) {
        throw DomainError("R4BP masses must be ordered m1 >= m2 >= m3");
    }
    R4BPConfig cfg{m1, m2, m3, r4bp_primaries(m1, m2, m3)};
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            const double dist = (cfg.primaries[i] - cfg.primaries[j]).norm();
            if (std::abs(dist - 1.0) > 1e-12) {
                throw ConsistencyError("R4BP primaries are not at unit mutual distance");
            }
        }
    }
    const Vec3 com = m1 * cfg.primaries[0] + m2 * cfg.primaries[1] + m3 * cfg.primaries[2];
    if (com.norm() > 1e-12) {
        throw ConsistencyError("R4BP centre of mass is not at the origin");
    }
    return cfg;
}

R4BPConfig r4bp_config_from_mu(double mu, double m3)
{
    if (!(mu > 0.0 && mu <= 0.5)) {
        throw DomainError("r4bp_config_from_mu: mu must lie in (0, 1/2]");
    }
    if (!(m3 >= 0.0 && m3 < 1.0)) {
        throw DomainError("r4bp_config_from_mu: m3 must lie in [0, 1)");
    }
    return make_r4bp_config((1.0 - mu) * (1.0 - m3), mu * (1.0 - m3), m3);
}

double r4bp_potential(const Vec3 &p, const R4BPConfig &cfg)
{
    double omega = 0.5 * (p.x() * p.x() + p.y() * p.y());
    const auto m = cfg.masses();
    for (int i = 0; i < 3; ++i) {
        if (m[i] == 0.0) {
            continue;
        }
        const double r = (p - cfg.primaries[i]).norm();
        if (r == 0.0) {
            throw SingularityError(kBodyNames[i]);
        }
        omega += m[i] / r;
    }
    return omega;
}

PhaseDerivative r4bp_vector_field(const PhaseState &s, const R4BPConfig &cfg)
{
    Vec3 q = s.position;
    if (s.planar) {
        q.z() = 0.0;
    }
    const Vec3 a = attraction(q, cfg);
    PhaseDerivative d;
    d.velocity = s.velocity;
    d.acceleration = Vec3(q.x() + a.x() + 2.0 * s.velocity.y(), q.y() + a.y() - 2.0 * s.velocity.x(),
                          a.z());
    if (s.planar) {
        d.velocity.z() = 0.0;
        d.acceleration.z() = 0.0;
    }
    return d;
}

double r4bp_jacobi(const PhaseState &s, const R4BPConfig &cfg)
{
    Vec3 q = s.position;
    Vec3 v = s.velocity;
    if (s.planar) {
        q.z() = 0.0;
        v.z() = 0.0;
    }
    return -v.squaredNorm() + 2.0 * r4bp_potential(q, cfg);
}

PhaseDerivative scaled_r4bp_field(const PhaseState &s, double mu, double m3)
{
    if (s.frame != Frame::Unrotated) {
        throw DomainError("scaled_r4bp_field expects an unrotated-frame state");
    }
    if (!(m3 > 0.0)) {
        throw DomainError("scaled_r4bp_field requires m3 > 0");
    }
    const R4BPConfig cfg = r4bp_config_from_mu(mu, m3);
    const double eps = std::cbrt(m3);
    Vec3 xi = s.position;
    Vec3 xi_dot = s.velocity;
    if (s.planar) {
        xi.z() = 0.0;
        xi_dot.z() = 0.0;
    }
    if (xi.norm() > 0.1 / eps) {
        throw DomainError("scaled_r4bp_field: state outside the validity ball 0.1 m3^(-1/3)");
    }
    const double r2 = xi.squaredNorm();
    if (r2 == 0.0) {
        throw SingularityError(kBodyNames[2]);
    }

    // Physical offset from the tertiary is eps * xi; relative vectors to the
    // distant primaries are formed directly to avoid cancellation.
    const Vec3 &q3 = cfg.primaries[2];
    const Vec3 q = q3 + eps * xi;
    Vec3 far = q;
    far.z() = 0.0;
    const double m[2] = {cfg.m1, cfg.m2};
    for (int i = 0; i < 2; ++i) {
        const Vec3 d = (cfg.primaries[i] - q3) - eps * xi;
        const double di2 = d.squaredNorm();
        if (di2 == 0.0) {
            throw SingularityError(kBodyNames[i]);
        }
        far += m[i] * d / (di2 * std::sqrt(di2));
    }
    const Vec3 near = -xi / (r2 * std::sqrt(r2));

    PhaseDerivative out;
    out.velocity = xi_dot;
    const Vec3 grad = far / eps + near;
    out.acceleration = Vec3(grad.x() + 2.0 * xi_dot.y(), grad.y() - 2.0 * xi_dot.x(), grad.z());
    if (s.planar) {
        out.acceleration.z() = 0.0;
    }
    return out;
}

FieldConvergence field_convergence(double mu, const std::vector<double> &m3, std::size_t n)
{
    if (m3.size() < 2 || n < 2) {
        throw DomainError("field_convergence needs at least two masses and n >= 2");
    }
    const ModelParams hill(mu, Frame::Unrotated);
    std::vector<Vec3> pts;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) {
                const double h = 2.0 / double(n - 1);
                const Vec3 p(-1.0 + h * double(i), -1.0 + h * double(j), -1.0 + h * double(k));
                const double r = p.norm();
                if (r <= 1.0 && r >= 0.05) {
                    pts.push_back(p);
                }
            }
        }
    }
    FieldConvergence out{mu, m3, {}, 0.0, pts.size()};
    const Vec3 vel(0.3, -0.2, 0.1);
    for (double m : m3) {
        double worst = 0.0;
        for (const auto &p : pts) {
            const auto s = PhaseState::spatial_state(p, vel, Frame::Unrotated);
            const auto a = scaled_r4bp_field(s, mu, m);
            const auto b = vector_field(s, hill);
            worst = std::max(worst, (a.acceleration - b.acceleration).norm());
        }
        out.sup_error.push_back(worst);
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double k = double(m3.size());
    for (std::size_t i = 0; i < m3.size(); ++i) {
        const double x = std::log(m3[i]), y = std::log(out.sup_error[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    out.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    return out;
}

void PlanarR4BPField::operator()(const std::array<double, 4> &s, std::array<double, 4> &ds) const
{
    const Vec3 q(s[0], s[1], 0.0);
    const Vec3 a = attraction(q, cfg_);
    ds[0] = s[2];
    ds[1] = s[3];
    ds[2] = s[0] + a.x() + 2.0 * s[3];
    ds[3] = s[1] + a.y() - 2.0 * s[2];
}

Mat4 PlanarR4BPField::jacobian(const std::array<double, 4> &s, double step) const
{
    Mat4 j;
    for (int c = 0; c < 4; ++c) {
        auto sp = s;
        auto sm = s;
        sp[c] += step;
        sm[c] -= step;
        std::array<double, 4> fp{}, fm{};
        (*this)(sp, fp);
        (*this)(sm, fm);
        for (int r = 0; r < 4; ++r) {
            j(r, c) = (fp[r] - fm[r]) / (2.0 * step);
        }
    }
    return j;
}

double PlanarR4BPField::jacobi(const std::array<double, 4> &s) const
{
    return -(s[2] * s[2] + s[3] * s[3]) + 2.0 * r4bp_potential(Vec3(s[0], s[1], 0.0), cfg_);
}

} // namespace hill4bp
