#pragma once

// Adaptive propagation with event location, dense output and state
// transition matrices for autonomous vector fields on flat arrays.
//
// The single-step kernel is the Fehlberg 7(8) pair from Boost.Odeint
// (8th-order solution propagated, 7th-order embedded error estimate). Step
// control, crossing detection and dense output are implemented here. Dense
// output re-takes one step of the same method from the start of the enclosing
// accepted step, so interpolated states carry the integrator's own accuracy.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include "hill4bp/errors.hpp"
#include "hill4bp/io.hpp"

namespace hill4bp::integrate {

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
using Field = std::function<void(const Vec<N> &, Vec<N> &)>;

template <std::size_t N>
using Matrix = Eigen::Matrix<double, int(N), int(N)>;

template <std::size_t N>
using JacobianFn = std::function<Matrix<N>(const Vec<N> &)>;

struct Tolerances {
    double abs = 1e-12;
    double rel = 1e-12;
    double initial_step = 1e-3;
    double min_step = 1e-13;
    std::size_t max_steps = 20'000'000;
    /// Local error is measured per unit step (|h| clamped to [1e-2, 1]), so the
    /// error accumulated over a long span grows with the span, not the step count.
    bool per_unit_step = true;
};

/// Guard radius around the tertiary for physical-frame propagation.
inline constexpr double kGuardRadius = 1e-5;

/// Increasing: the event function increases through zero along the direction
/// of integration.
enum class Direction { Decreasing = -1, Any = 0, Increasing = 1 };

enum class TimeVariable { Physical, Regularized };

enum class Status { Completed, EventStop, Guarded };

inline const char *to_string(TimeVariable tv) { return tv == TimeVariable::Physical ? "physical" : "regularized"; }

struct Metadata {
    std::string field_id = "unnamed";
    TimeVariable time_variable = TimeVariable::Physical;
    Tolerances tolerances{};
    std::optional<double> mu;
    std::optional<double> jacobi;
};

namespace detail {

template <std::size_t N>
class Kernel {
public:
    explicit Kernel(const Field<N> *field) : field_(field) {}

    void step(const Vec<N> &in, double h, Vec<N> &out, Vec<N> &err)
    {
        auto sys = [this](const Vec<N> &x, Vec<N> &dx, double) { (*field_)(x, dx); };
        stepper_.do_step(sys, in, 0.0, out, h, err);
    }

    void step(const Vec<N> &in, double h, Vec<N> &out)
    {
        Vec<N> err;
        step(in, h, out, err);
    }

private:
    const Field<N> *field_;
    boost::numeric::odeint::runge_kutta_fehlberg78<Vec<N>> stepper_;
};

} // namespace detail

/// Accepted steps of a propagation plus dense output between them.
template <std::size_t N>
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(Field<N> field, Metadata md) : field_(std::move(field)), md_(std::move(md)) {}

    void push(double t, const Vec<N> &x)
    {
        t_.push_back(t);
        x_.push_back(x);
    }

    std::size_t size() const noexcept { return t_.size(); }
    bool empty() const noexcept { return t_.empty(); }
    double t(std::size_t i) const { return t_[i]; }
    const Vec<N> &x(std::size_t i) const { return x_[i]; }
    const std::vector<double> &times() const noexcept { return t_; }
    const std::vector<Vec<N>> &states() const noexcept { return x_; }
    double t_begin() const { return t_.front(); }
    double t_end() const { return t_.back(); }
    const Vec<N> &front() const { return x_.front(); }
    const Vec<N> &back() const { return x_.back(); }
    const Metadata &metadata() const noexcept { return md_; }
    Metadata &metadata() noexcept { return md_; }
    const Field<N> &field() const noexcept { return field_; }
    bool forward() const { return size() < 2 || t_.back() >= t_.front(); }

    /// One method step of length h from sample i.
    Vec<N> step_from(std::size_t i, double h) const
    {
        if (h == 0.0) {
            return x_[i];
        }
        detail::Kernel<N> k(&field_);
        Vec<N> out;
        k.step(x_[i], h, out);
        return out;
    }

    /// Dense output; t must lie within the covered span.
    Vec<N> state_at(double t) const
    {
        if (empty()) {
            throw DomainError("state_at on an empty trajectory");
        }
        const bool fwd = forward();
        const double lo = fwd ? t_.front() : t_.back();
        const double hi = fwd ? t_.back() : t_.front();
        if (t < lo - 1e-12 * std::max(1.0, std::abs(lo)) ||
            t > hi + 1e-12 * std::max(1.0, std::abs(hi))) {
            throw DomainError("state_at: time outside trajectory span");
        }
        std::size_t i;
        if (fwd) {
            auto it = std::upper_bound(t_.begin(), t_.end(), t);
            i = it == t_.begin() ? 0 : std::size_t(it - t_.begin()) - 1;
        } else {
            auto it = std::upper_bound(t_.begin(), t_.end(), t, std::greater<double>());
            i = it == t_.begin() ? 0 : std::size_t(it - t_.begin()) - 1;
        }
        i = std::min(i, size() - 1);
        return step_from(i, t - t_[i]);
    }

private:
    Field<N> field_;
    std::vector<double> t_;
    std::vector<Vec<N>> x_;
    Metadata md_;
};

template <std::size_t N>
struct Event {
    std::function<double(const Vec<N> &)> g;
    Direction direction = Direction::Any;
    /// Optional filter evaluated at the refined crossing state.
    std::function<bool(const Vec<N> &)> accept;
    /// Stop after this many accepted crossings (0: never stop).
    std::size_t terminal_after = 0;
};

template <std::size_t N>
struct Crossing {
    double t;
    Vec<N> state;
    std::size_t step; // index of the accepted step containing the crossing
    int sign;         // +1 if g increased through zero along the integration
};

template <std::size_t N>
struct Propagation {
    Trajectory<N> trajectory;
    Status status = Status::Completed;
    std::vector<Crossing<N>> crossings;
};

namespace detail {

inline bool sign_change(double g0, double g1, Direction dir)
{
    const bool up = g0 < 0.0 && g1 >= 0.0;
    const bool down = g0 > 0.0 && g1 <= 0.0;
    switch (dir) {
    case Direction::Increasing: return up;
    case Direction::Decreasing: return down;
    case Direction::Any: return up || down;
    }
    return false;
}

/// Refines g(step(x0, s h)) = 0 for s in (0, 1] with the Illinois variant of
/// regula falsi.
template <std::size_t N>
std::pair<double, Vec<N>> refine_root(Kernel<N> &k, const Vec<N> &x0, double h, double g0,
                                      double g1, const Vec<N> &x1,
                                      const std::function<double(const Vec<N> &)> &g)
{
    constexpr double kEventTol = 1e-13;
    double a = 0.0, fa = g0;
    double b = 1.0, fb = g1;
    Vec<N> xb = x1;
    if (std::abs(fb) <= kEventTol) {
        return {h, x1};
    }
    Vec<N> xs = x0;
    double s = 0.0;
    int side = 0;
    for (int it = 0; it < 200; ++it) {
        s = (a * fb - b * fa) / (fb - fa);
        if (!(s > a && s < b)) {
            s = 0.5 * (a + b);
        }
        k.step(x0, s * h, xs);
        const double fs = g(xs);
        if (std::abs(fs) <= kEventTol || (b - a) < 1e-16) {
            return {s * h, xs};
        }
        if ((fs > 0.0) == (fb > 0.0)) {
            b = s;
            fb = fs;
            xb = xs;
            if (side == 1) {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = s;
            fa = fs;
            if (side == -1) {
                fb *= 0.5;
            }
            side = -1;
        }
    }
    return {s * h, xs};
}

} // namespace detail

/// Propagates from t0 to t_end (backwards when t_end < t0).
///
/// The optional guard is evaluated at every accepted state; when it fires the
/// propagation stops with Status::Guarded and the partial trajectory. Step
/// size underflow throws StiffnessError.
template <std::size_t N>
Propagation<N> propagate(Field<N> field, const Vec<N> &x0, double t0, double t_end,
                         const Tolerances &tol = {}, const Event<N> *event = nullptr,
                         const std::function<bool(const Vec<N> &)> &guard = {},
                         Metadata md = {})
{
    md.tolerances = tol;
    Propagation<N> result{Trajectory<N>(std::move(field), std::move(md)), Status::Completed, {}};
    auto &traj = result.trajectory;
    traj.push(t0, x0);
    if (t_end == t0) {
        return result;
    }
    const double dir = t_end > t0 ? 1.0 : -1.0;
    detail::Kernel<N> k(&traj.field());

    double t = t0;
    Vec<N> x = x0;
    double h = dir * std::min(std::abs(tol.initial_step), std::abs(t_end - t0));
    double g_prev = (event && event->g) ? event->g(x) : 0.0;
    Vec<N> xn, err;

    for (std::size_t n = 0;; ++n) {
        if (n >= tol.max_steps) {
            throw StiffnessError("propagate: maximum number of steps exceeded");
        }
        if (std::abs(h) < tol.min_step) {
            throw StiffnessError("propagate: step size underflow at t = " + std::to_string(t));
        }
        bool last = false;
        if (dir * (t + h - t_end) >= 0.0) {
            h = t_end - t;
            last = true;
        }
        k.step(x, h, xn, err);
        const double unit = tol.per_unit_step ? std::clamp(std::abs(h), 1e-2, 1.0) : 1.0;
        double e = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < N; ++i) {
            if (!std::isfinite(xn[i])) {
                finite = false;
                break;
            }
            const double sc = (tol.abs + tol.rel * std::max(std::abs(x[i]), std::abs(xn[i]))) * unit;
            e = std::max(e, std::abs(err[i]) / sc);
        }
        if (!finite || e > 1.0) {
            h *= finite ? std::max(0.2, 0.9 * std::pow(e, -1.0 / 8.0)) : 0.25;
            continue;
        }

        const std::size_t step_index = traj.size() - 1;
        const double t_new = last ? t_end : t + h;

        if (event && event->g) {
            const double g_new = event->g(xn);
            if (detail::sign_change(g_prev, g_new, event->direction)) {
                auto [hc, xc] = detail::refine_root(k, x, h, g_prev, g_new, xn, event->g);
                if (!event->accept || event->accept(xc)) {
                    result.crossings.push_back(
                        {t + hc, xc, step_index, g_new > g_prev ? +1 : -1});
                    if (event->terminal_after != 0 &&
                        result.crossings.size() >= event->terminal_after) {
                        traj.push(t + hc, xc);
                        result.status = Status::EventStop;
                        return result;
                    }
                }
            }
            g_prev = g_new;
        }

        t = t_new;
        x = xn;
        traj.push(t, x);
        if (guard && guard(x)) {
            result.status = Status::Guarded;
            return result;
        }
        if (last) {
            return result;
        }
        const double grow = e == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(e, -1.0 / 8.0));
        h *= grow;
    }
}

/// Locates crossings of g on a recorded trajectory, refined on dense output.
template <std::size_t N>
std::vector<Crossing<N>> find_crossings(const Trajectory<N> &traj,
                                        const std::function<double(const Vec<N> &)> &g,
                                        Direction dir, std::size_t max_count = 0)
{
    std::vector<Crossing<N>> out;
    if (traj.size() < 2) {
        return out;
    }
    detail::Kernel<N> k(&traj.field());
    double g_prev = g(traj.x(0));
    for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
        const double g_new = g(traj.x(i + 1));
        if (detail::sign_change(g_prev, g_new, dir)) {
            const double h = traj.t(i + 1) - traj.t(i);
            auto [hc, xc] = detail::refine_root(k, traj.x(i), h, g_prev, g_new, traj.x(i + 1), g);
            out.push_back({traj.t(i) + hc, xc, i, g_new > g_prev ? +1 : -1});
            if (max_count != 0 && out.size() >= max_count) {
                break;
            }
        }
        g_prev = g_new;
    }
    return out;
}

template <std::size_t N>
std::optional<Crossing<N>> find_crossing(const Trajectory<N> &traj,
                                         const std::function<double(const Vec<N> &)> &g,
                                         Direction dir)
{
    auto all = find_crossings(traj, g, dir, 1);
    if (all.empty()) {
        return std::nullopt;
    }
    return all.front();
}

// ---------------------------------------------------------------------------
// Variational equations

template <std::size_t N>
constexpr std::size_t augmented_size = N + N * N;

/// Augmented layout: state, then Phi column-major.
template <std::size_t N>
Vec<augmented_size<N>> augment(const Vec<N> &x, const Matrix<N> &phi = Matrix<N>::Identity())
{
    Vec<augmented_size<N>> out{};
    std::copy(x.begin(), x.end(), out.begin());
    for (std::size_t c = 0; c < N; ++c) {
        for (std::size_t r = 0; r < N; ++r) {
            out[N + r + N * c] = phi(int(r), int(c));
        }
    }
    return out;
}

template <std::size_t N>
Vec<N> state_part(const Vec<augmented_size<N>> &y)
{
    Vec<N> x;
    std::copy(y.begin(), y.begin() + N, x.begin());
    return x;
}

template <std::size_t N>
Matrix<N> stm_part(const Vec<augmented_size<N>> &y)
{
    Matrix<N> phi;
    for (std::size_t c = 0; c < N; ++c) {
        for (std::size_t r = 0; r < N; ++r) {
            phi(int(r), int(c)) = y[N + r + N * c];
        }
    }
    return phi;
}

template <std::size_t N>
Field<augmented_size<N>> variational_field(Field<N> f, JacobianFn<N> jac)
{
    return [f = std::move(f), jac = std::move(jac)](const Vec<augmented_size<N>> &y,
                                                     Vec<augmented_size<N>> &dy) {
        const Vec<N> x = state_part<N>(y);
        Vec<N> dx;
        f(x, dx);
        std::copy(dx.begin(), dx.end(), dy.begin());
        const Matrix<N> a = jac(x);
        const Matrix<N> dphi = a * stm_part<N>(y);
        for (std::size_t c = 0; c < N; ++c) {
            for (std::size_t r = 0; r < N; ++r) {
                dy[N + r + N * c] = dphi(int(r), int(c));
            }
        }
    };
}

/// Central-difference Jacobian, for fields without closed-form partials.
template <std::size_t N>
JacobianFn<N> finite_difference_jacobian(Field<N> f, double step = 1e-7)
{
    return [f = std::move(f), step](const Vec<N> &x) {
        Matrix<N> j;
        for (std::size_t c = 0; c < N; ++c) {
            Vec<N> xp = x, xm = x, fp, fm;
            xp[c] += step;
            xm[c] -= step;
            f(xp, fp);
            f(xm, fm);
            for (std::size_t r = 0; r < N; ++r) {
                j(int(r), int(c)) = (fp[r] - fm[r]) / (2.0 * step);
            }
        }
        return j;
    };
}

template <std::size_t N>
struct StmResult {
    Matrix<N> phi;
    Vec<N> final_state;
    Propagation<augmented_size<N>> reference;
};

/// Phi(t0 -> t0 + T) along the trajectory from s0.
template <std::size_t N>
StmResult<N> stm(Field<N> f, JacobianFn<N> jac, const Vec<N> &s0, double T,
                 const Tolerances &tol = {}, Metadata md = {})
{
    auto prop = propagate<augmented_size<N>>(variational_field<N>(std::move(f), std::move(jac)),
                                             augment<N>(s0), 0.0, T, tol, nullptr, {},
                                             std::move(md));
    const auto &y = prop.trajectory.back();
    return {stm_part<N>(y), state_part<N>(y), std::move(prop)};
}

// ---------------------------------------------------------------------------
// Export

/// CSV `t,x,y,xdot,ydot` for planar (x, y, xdot, ydot) trajectories.
inline std::string trajectory_csv(const Trajectory<4> &traj)
{
    std::ostringstream out;
    out << "t,x,y,xdot,ydot\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto &s = traj.x(i);
        out << io::fmt(traj.t(i)) << ',' << io::fmt(s[0]) << ',' << io::fmt(s[1]) << ','
            << io::fmt(s[2]) << ',' << io::fmt(s[3]) << '\n';
    }
    return out.str();
}

/// CSV `t,x,y,xdot,ydot,z,zdot` for spatial (x, y, z, xdot, ydot, zdot) trajectories.
inline std::string trajectory_csv(const Trajectory<6> &traj)
{
    std::ostringstream out;
    out << "t,x,y,xdot,ydot,z,zdot\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto &s = traj.x(i);
        out << io::fmt(traj.t(i)) << ',' << io::fmt(s[0]) << ',' << io::fmt(s[1]) << ','
            << io::fmt(s[3]) << ',' << io::fmt(s[4]) << ',' << io::fmt(s[2]) << ','
            << io::fmt(s[5]) << '\n';
    }
    return out.str();
}

inline io::json trajectory_sidecar(const Metadata &md)
{
    io::json j;
    j["field"] = md.field_id;
    j["time_variable"] = to_string(md.time_variable);
    j["tolerances"] = {{"abs", md.tolerances.abs}, {"rel", md.tolerances.rel}};
    if (md.mu) {
        j["mu"] = *md.mu;
    }
    if (md.jacobi) {
        j["C"] = *md.jacobi;
    }
    return j;
}

} // namespace hill4bp::integrate
