#include "hill4bp/manifolds.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <optional>
#include <sstream>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "hill4bp/errors.hpp"
#include "hill4bp/parallel.hpp"

namespace hill4bp {

namespace {

using integrate::Vec;
using State = std::array<double, 4>;

constexpr double kMergeDistance = 1e-9;

integrate::Field<4> hill_field(double mu)
{
    return [f = PlanarHillField{ModelParams(mu)}](const Vec<4> &s, Vec<4> &ds) { f(s, ds); };
}

/// Section crossings of one seed trajectory.
struct SeedRun {
    double phase = 0.0;
    std::vector<Vec2> coords;
    std::vector<SectionId> subs;
    std::vector<State> states;
    integrate::Status status = integrate::Status::Completed;
    double max_radius = 0.0;
    double jacobi_error = 0.0;
    bool transit = false;
};

SeedRun run_seed(const ManifoldBranch &b, const SectionDef &section, std::size_t max_cuts,
                 const GlobalizeOptions &opt, double phase)
{
    SeedRun run;
    run.phase = phase;
    const State s0 = manifold_seed(b, phase);
    const PlanarHillField f{ModelParams(b.orbit.mu)};

    integrate::Event<4> ev;
    ev.g = [&section](const Vec<4> &s) { return section.event(s); };
    ev.direction = integrate::Direction::Any;
    ev.accept = [&section](const Vec<4> &s) { return std::abs(section.normal_velocity(s)) > kTangentialTol; };
    ev.terminal_after = max_cuts;

    // Outer loops run along the zero-velocity curve and cut far less often.
    const double per_cut = b.side == Region::Inner ? 12.0 : 80.0;
    const double span = opt.max_time > 0.0 ? opt.max_time : per_cut * double(max_cuts);
    const double t_end = b.sense == ManifoldSense::Unstable ? span : -span;
    double rmax = 0.0;
    const double g2 = opt.guard_radius * opt.guard_radius;
    const double xl = std::pow(eigen_structure(b.orbit.mu).lambda2, -1.0 / 3.0);
    const bool inner = b.side == Region::Inner;
    const double edge2 = opt.confine ? (inner ? 2.25 : 0.25) * xl * xl : 0.0;
    bool transit = false;
    auto guard = [&, g2, edge2, inner](const Vec<4> &s) {
        const double r2 = s[0] * s[0] + s[1] * s[1];
        rmax = std::max(rmax, r2);
        if (edge2 > 0.0 && (inner ? r2 > edge2 : r2 < edge2)) {
            transit = true;
            return true;
        }
        return r2 < g2;
    };
    const auto prop = integrate::propagate<4>(hill_field(b.orbit.mu), s0, 0.0, t_end, opt.tol, &ev, guard);
    run.status = prop.status;
    run.transit = transit;
    run.max_radius = std::sqrt(rmax);
    for (const auto &c : prop.crossings) {
        const auto q = section.to_section_frame(c.state);
        run.coords.push_back(section.coords(c.state));
        run.subs.push_back(section.id == SectionId::Sigma || section.id == SectionId::SigmaPlus ||
                                   section.id == SectionId::SigmaMinus
                               ? (q[1] > 0.0 ? SectionId::SigmaPlus : SectionId::SigmaMinus)
                               : section.id);
        run.states.push_back(c.state);
        run.jacobi_error = std::max(run.jacobi_error, std::abs(f.jacobi(c.state) - b.orbit.jacobi));
    }
    run.jacobi_error = std::max(run.jacobi_error, std::abs(f.jacobi(prop.trajectory.back()) - b.orbit.jacobi));
    return run;
}

// ---------------------------------------------------------------------------
// Segment geometry

struct Segment {
    Vec2 a, b;
    std::size_t id; // index of the first point in its curve
};

double cross(const Vec2 &u, const Vec2 &v) { return u.x() * v.y() - u.y() * v.x(); }

/// Proper crossing of [p, p2) and [q, q2); parameters returned on success.
bool segments_cross(const Vec2 &p, const Vec2 &p2, const Vec2 &q, const Vec2 &q2, double &s, double &t)
{
    const Vec2 r = p2 - p, d = q2 - q;
    const double den = cross(r, d);
    if (den == 0.0) {
        return false;
    }
    const Vec2 w = q - p;
    s = cross(w, d) / den;
    t = cross(w, r) / den;
    return s >= 0.0 && s < 1.0 && t >= 0.0 && t < 1.0;
}

std::vector<Segment> linked_segments(const CutCurve &c)
{
    std::vector<Segment> out;
    const std::size_t n = c.points.size();
    for (std::size_t i = 0; i < n && i < c.linked.size(); ++i) {
        if (c.linked[i]) {
            out.push_back({c.points[i], c.points[(i + 1) % n], i});
        }
    }
    return out;
}

/// Bucket grid over segment bounding boxes.
class SegmentGrid {
public:
    explicit SegmentGrid(const std::vector<Segment> &segs) : segs_(segs)
    {
        if (segs.empty()) {
            return;
        }
        lo_ = hi_ = segs.front().a;
        double total = 0.0;
        for (const auto &s : segs) {
            lo_ = lo_.cwiseMin(s.a).cwiseMin(s.b);
            hi_ = hi_.cwiseMax(s.a).cwiseMax(s.b);
            total += (s.b - s.a).norm();
        }
        const Vec2 ext = (hi_ - lo_).cwiseMax(Vec2(1e-12, 1e-12));
        cell_ = std::max({2.0 * total / double(segs.size()), ext.maxCoeff() / 2048.0, 1e-12});
        nx_ = std::size_t(ext.x() / cell_) + 1;
        ny_ = std::size_t(ext.y() / cell_) + 1;
        cells_.resize(nx_ * ny_);
        for (std::size_t k = 0; k < segs.size(); ++k) {
            visit(segs[k].a, segs[k].b, [&](std::size_t c) { cells_[c].push_back(k); });
        }
    }

    /// Calls fn(k) once for every segment whose cells overlap [a, b]'s box.
    template <class Fn>
    void query(const Vec2 &a, const Vec2 &b, Fn &&fn) const
    {
        if (segs_.empty()) {
            return;
        }
        ++stamp_;
        seen_.resize(segs_.size(), 0);
        visit(a, b, [&](std::size_t c) {
            for (std::size_t k : cells_[c]) {
                if (seen_[k] != stamp_) {
                    seen_[k] = stamp_;
                    fn(k);
                }
            }
        });
    }

private:
    template <class Fn>
    void visit(const Vec2 &a, const Vec2 &b, Fn &&fn) const
    {
        const Vec2 mn = a.cwiseMin(b), mx = a.cwiseMax(b);
        if (mx.x() < lo_.x() || mx.y() < lo_.y() || mn.x() > hi_.x() || mn.y() > hi_.y()) {
            return;
        }
        auto ix = [&](double v) { return std::min(nx_ - 1, std::size_t(std::max(0.0, (v - lo_.x()) / cell_))); };
        auto iy = [&](double v) { return std::min(ny_ - 1, std::size_t(std::max(0.0, (v - lo_.y()) / cell_))); };
        for (std::size_t i = ix(mn.x()); i <= ix(mx.x()); ++i) {
            for (std::size_t j = iy(mn.y()); j <= iy(mx.y()); ++j) {
                fn(i * ny_ + j);
            }
        }
    }

    const std::vector<Segment> &segs_;
    Vec2 lo_, hi_;
    double cell_ = 1.0;
    std::size_t nx_ = 0, ny_ = 0;
    std::vector<std::vector<std::size_t>> cells_;
    mutable std::vector<std::size_t> seen_;
    mutable std::size_t stamp_ = 0;
};

struct SegmentHit {
    std::size_t u, s; // segment start indices in each curve
    double su, ts;    // parameters along each segment
};

std::vector<SegmentHit> curve_crossings(const CutCurve &u, const CutCurve &s, bool first_only)
{
    std::vector<SegmentHit> hits;
    const auto su = linked_segments(u), ss = linked_segments(s);
    if (su.empty() || ss.empty()) {
        return hits;
    }
    const SegmentGrid grid(su);
    for (const auto &q : ss) {
        grid.query(q.a, q.b, [&](std::size_t k) {
            if (first_only && !hits.empty()) {
                return;
            }
            double a, b;
            if (segments_cross(su[k].a, su[k].b, q.a, q.b, a, b)) {
                hits.push_back({su[k].id, q.id, a, b});
            }
        });
        if (first_only && !hits.empty()) {
            break;
        }
    }
    std::sort(hits.begin(), hits.end(), [](const SegmentHit &x, const SegmentHit &y) {
        return std::tie(x.u, x.s) < std::tie(y.u, y.s);
    });
    return hits;
}

/// One end of a curve segment during refinement.
struct Node {
    double phase; // unwrapped
    Vec2 p;
};

std::optional<Node> cut_at(const Globalization &g, std::size_t n, double phase, SectionId sub)
{
    const double T = g.branch.orbit.period;
    const auto run = run_seed(g.branch, g.section, n, g.options, std::fmod(phase, T));
    if (run.coords.size() < n || run.subs[n - 1] != sub) {
        return std::nullopt;
    }
    return Node{phase, run.coords[n - 1]};
}

/// Bisects the longer of the two crossing segments until both are below tol.
HomoclinicRecord refine(const Globalization &gu, const Globalization &gs, std::size_t nu, std::size_t ns,
                        const std::vector<SegmentHit> &hits, double tol)
{
    HomoclinicRecord rec;
    rec.n_u = nu;
    rec.n_s = ns;
    rec.section = gu.section.id;
    rec.jacobi = gu.branch.orbit.jacobi;
    const auto &cu = gu.cut(nu), &cs = gs.cut(ns);
    const double Tu = gu.branch.orbit.period, Ts = gs.branch.orbit.period;
    auto ends = [](const CutCurve &c, std::size_t i, double T) {
        const std::size_t j = (i + 1) % c.points.size();
        const double pj = j == 0 ? c.phases[j] + T : c.phases[j];
        return std::array<Node, 2>{Node{c.phases[i], c.points[i]}, Node{pj, c.points[j]}};
    };
    for (const auto &h : hits) {
        auto u = ends(cu, h.u, Tu);
        auto s = ends(cs, h.s, Ts);
        const SectionId sub = cu.subsections[h.u];
        double a = h.su; // along the unstable segment
        for (int it = 0; it < 200; ++it) {
            const double lu = (u[1].p - u[0].p).norm(), ls = (s[1].p - s[0].p).norm();
            if (std::max(lu, ls) <= tol) {
                break;
            }
            const bool split_u = lu >= ls;
            auto &seg = split_u ? u : s;
            const auto &g = split_u ? gu : gs;
            const double T = split_u ? Tu : Ts;
            if (seg[1].phase - seg[0].phase <= g.options.min_phase_gap * T * 1e-3) {
                break;
            }
            const auto mid = cut_at(g, split_u ? nu : ns, 0.5 * (seg[0].phase + seg[1].phase), sub);
            if (!mid) {
                break;
            }
            const auto &other = split_u ? s : u;
            double x, y;
            bool found = false;
            for (int half = 0; half < 2 && !found; ++half) {
                const Node &p0 = half == 0 ? seg[0] : *mid;
                const Node &p1 = half == 0 ? *mid : seg[1];
                // Closed ends here: the crossing may sit on the new node.
                const Vec2 r = p1.p - p0.p, d = other[1].p - other[0].p;
                const double den = cross(r, d);
                if (den == 0.0) {
                    continue;
                }
                const Vec2 w = other[0].p - p0.p;
                x = cross(w, d) / den;
                y = cross(w, r) / den;
                if (x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0) {
                    seg = {p0, p1};
                    found = true;
                }
            }
            if (!found) {
                break;
            }
            a = split_u ? x : y;
        }
        rec.points.push_back(u[0].p + a * (u[1].p - u[0].p));
        rec.residuals.push_back(std::max((u[1].p - u[0].p).norm(), (s[1].p - s[0].p).norm()));
    }
    return rec;
}

} // namespace

std::string_view to_string(ManifoldSense s) noexcept
{
    return s == ManifoldSense::Stable ? "stable" : "unstable";
}

std::string_view to_string(Region r) noexcept
{
    return r == Region::Inner ? "inner" : "outer";
}

ManifoldBranch seed_manifold(const PeriodicOrbit &orbit, ManifoldSense sense, Region side, double epsilon,
                             std::size_t n)
{
    if (n == 0 || !(epsilon > 0.0)) {
        throw DomainError("seed_manifold needs n > 0 and epsilon > 0");
    }
    // The unstable vector is transported forward and the stable one backward,
    // so each grows along its reference and roundoff along the other decays.
    const bool unstable = sense == ManifoldSense::Unstable;
    const PlanarHillField f{ModelParams(orbit.mu)};
    auto prop = integrate::propagate<20>(
        integrate::variational_field<4>([f](const Vec<4> &s, Vec<4> &ds) { f(s, ds); },
                                        [f](const Vec<4> &s) { return integrate::Matrix<4>(f.jacobian(s)); }),
        integrate::augment<4>(orbit.initial_state()), 0.0, unstable ? orbit.period : -orbit.period);
    const Mat4 phi = integrate::stm_part<4>(prop.trajectory.back());
    const double k = 0.5 * (phi.trace() - 2.0);
    if (!(std::abs(k) > 1.0)) {
        throw DomainError("seed_manifold: orbit is not unstable (stability index " + std::to_string(k) + ")");
    }

    // Dominant real eigenvector of Phi(T) (unstable) or Phi(-T) (stable).
    Eigen::EigenSolver<Mat4> es(phi);
    int pick = -1;
    for (int i = 0; i < 4; ++i) {
        const auto ev = es.eigenvalues()[i];
        if (std::abs(ev.imag()) > 1e-9 * std::abs(ev)) {
            continue;
        }
        if (pick < 0 || std::abs(ev) > std::abs(es.eigenvalues()[pick])) {
            pick = i;
        }
    }
    ManifoldBranch b;
    b.orbit = orbit;
    b.sense = sense;
    b.side = side;
    b.epsilon = epsilon;
    b.multiplier = unstable ? es.eigenvalues()[pick].real() : 1.0 / es.eigenvalues()[pick].real();
    Eigen::Vector4d v = es.eigenvectors().col(pick).real();
    v /= v.head<2>().norm();
    // Inner moves toward the tertiary at phase 0; the sign carries over the
    // whole phase circle by continuity.
    const Eigen::Vector2d r(orbit.x0, 0.0);
    const double toward = v.head<2>().dot(r);
    if ((side == Region::Inner) == (toward > 0.0)) {
        v = -v;
    }
    b.eigenvector = v;
    b.reference = std::make_shared<const integrate::Trajectory<20>>(std::move(prop.trajectory));

    b.phases.resize(n);
    b.seeds.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        b.phases[i] = orbit.period * double(i) / double(n);
        b.seeds[i] = manifold_seed(b, b.phases[i]);
    }
    return b;
}

std::array<double, 4> manifold_seed(const ManifoldBranch &b, double phase)
{
    const double T = b.orbit.period;
    double t = std::fmod(phase, T);
    if (t < 0.0) {
        t += T;
    }
    // The stable reference runs over [-T, 0].
    const auto y = b.reference->state_at(b.sense == ManifoldSense::Unstable ? t : t - T);
    const Eigen::Vector4d w = Eigen::Matrix4d(integrate::stm_part<4>(y)) * b.eigenvector;
    const Eigen::Vector4d d = b.epsilon * w / w.head<2>().norm();
    const auto x = integrate::state_part<4>(y);
    return {x[0] + d[0], x[1] + d[1], x[2] + d[2], x[3] + d[3]};
}

std::size_t CutCurve::segment_count() const
{
    return std::size_t(std::count(linked.begin(), linked.end(), true));
}

std::size_t CutCurve::self_intersections() const
{
    const auto segs = linked_segments(*this);
    if (segs.size() < 3) {
        return 0;
    }
    const std::size_t n = points.size();
    const SegmentGrid grid(segs);
    std::size_t count = 0;
    for (std::size_t q = 0; q < segs.size(); ++q) {
        grid.query(segs[q].a, segs[q].b, [&](std::size_t k) {
            if (k <= q) {
                return;
            }
            const std::size_t i = segs[q].id, j = segs[k].id;
            if ((i + 1) % n == j || (j + 1) % n == i) {
                return;
            }
            double s, t;
            if (segments_cross(segs[q].a, segs[q].b, segs[k].a, segs[k].b, s, t)) {
                ++count;
            }
        });
    }
    return count;
}

Globalization globalize(const ManifoldBranch &branch, const SectionDef &section, std::size_t max_cuts,
                        const GlobalizeOptions &opt)
{
    if (max_cuts == 0) {
        throw DomainError("globalize needs max_cuts >= 1");
    }
    if (section.id == SectionId::RegY0) {
        throw DomainError("globalize works on physical sections");
    }
    const double T = branch.orbit.period;
    const unsigned threads = resolve_threads(opt.threads);

    auto runs = parallel_map<SeedRun>(branch.phases.size(), threads, [&](std::size_t i) {
        return run_seed(branch, section, max_cuts, opt, branch.phases[i]);
    });

    auto gap_of = [&](std::size_t i) {
        const std::size_t j = (i + 1) % runs.size();
        return j == 0 ? runs[0].phase + T - runs[i].phase : runs[j].phase - runs[i].phase;
    };
    // Whether some cut of seeds i and i+1 needs a seed between them.
    // First cut index at which seeds i and i+1 need a seed between them, or
    // max_cuts when they do not.
    auto split_index = [&](std::size_t i) {
        const auto &a = runs[i], &b = runs[(i + 1) % runs.size()];
        for (std::size_t k = 0; k < max_cuts; ++k) {
            const bool ha = k < a.coords.size(), hb = k < b.coords.size();
            if (ha != hb) {
                return k;
            }
            if (!ha) {
                break;
            }
            if (a.subs[k] != b.subs[k] || (a.coords[k] - b.coords[k]).norm() > opt.insertion_threshold) {
                return k;
            }
        }
        return max_cuts;
    };

    std::size_t budget_gaps = 0;
    for (;;) {
        std::vector<std::pair<std::size_t, double>> fresh; // (cut index, phase)
        for (std::size_t i = 0; i < runs.size(); ++i) {
            if (gap_of(i) > opt.min_phase_gap * T) {
                if (const std::size_t k = split_index(i); k < max_cuts) {
                    fresh.emplace_back(k, std::fmod(runs[i].phase + 0.5 * gap_of(i), T));
                }
            }
        }
        if (fresh.empty()) {
            break;
        }
        const std::size_t room = opt.max_seeds > runs.size() ? opt.max_seeds - runs.size() : 0;
        if (fresh.size() > room) {
            // Out of budget: resolve the lowest cut indices first.
            std::stable_sort(fresh.begin(), fresh.end(),
                             [](const auto &x, const auto &y) { return x.first < y.first; });
            budget_gaps = fresh.size() - room;
            fresh.resize(room);
        }
        std::sort(fresh.begin(), fresh.end(), [](const auto &x, const auto &y) { return x.second < y.second; });
        auto more = parallel_map<SeedRun>(fresh.size(), threads, [&](std::size_t i) {
            return run_seed(branch, section, max_cuts, opt, fresh[i].second);
        });
        std::vector<SeedRun> merged;
        merged.reserve(runs.size() + more.size());
        std::merge(std::make_move_iterator(runs.begin()), std::make_move_iterator(runs.end()),
                   std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()),
                   std::back_inserter(merged), [](const SeedRun &x, const SeedRun &y) { return x.phase < y.phase; });
        runs = std::move(merged);
        if (budget_gaps > 0) {
            break;
        }
    }

    Globalization g;
    g.branch = branch;
    g.section = section;
    g.max_cuts = max_cuts;
    g.options = opt;
    g.seeds = runs.size();
    g.unresolved = budget_gaps;
    for (const auto &r : runs) {
        const bool guarded = r.status == integrate::Status::Guarded;
        g.dropped += guarded && !r.transit;
        g.transits += r.transit;
        g.incomplete += !guarded && r.coords.size() < max_cuts;
        g.max_jacobi_error = std::max(g.max_jacobi_error, r.jacobi_error);
        g.max_radius = std::max(g.max_radius, r.max_radius);
    }

    const std::size_t ns = runs.size();
    for (std::size_t n = 1; n <= max_cuts; ++n) {
        CutCurve c;
        c.sense = branch.sense;
        c.cut_index = n;
        c.section = section.id;
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ns; ++i) {
            if (runs[i].coords.size() >= n) {
                idx.push_back(i);
                c.points.push_back(runs[i].coords[n - 1]);
                c.phases.push_back(runs[i].phase);
                c.subsections.push_back(runs[i].subs[n - 1]);
            }
        }
        const std::size_t m = idx.size();
        std::vector<bool> link(m, false);
        bool all = m == ns && m > 2;
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t i = idx[k], j = idx[(k + 1) % m];
            const bool adjacent = (i + 1) % ns == j && m > 1;
            const bool same = c.subsections[k] == c.subsections[(k + 1) % m];
            const double d = (c.points[(k + 1) % m] - c.points[k]).norm();
            // A gap split down to the phase floor without closing is a jump.
            const bool jump = d > opt.insertion_threshold && gap_of(i) <= opt.min_phase_gap * T;
            link[k] = adjacent && same && !jump;
            all = all && link[k];
        }
        // Seeds stacked at a split boundary share their image to roundoff;
        // merging them keeps noise-level zigzags out of the crossing tests.
        CutCurve merged;
        merged.sense = c.sense;
        merged.cut_index = n;
        merged.section = c.section;
        bool carry = false;
        for (std::size_t k = 0; k < m; ++k) {
            if (!merged.points.empty() && carry && (c.points[k] - merged.points.back()).norm() < kMergeDistance) {
                carry = link[k];
                merged.linked.back() = carry;
                continue;
            }
            merged.points.push_back(c.points[k]);
            merged.phases.push_back(c.phases[k]);
            merged.subsections.push_back(c.subsections[k]);
            merged.linked.push_back(link[k]);
            carry = link[k];
        }
        c = std::move(merged);
        c.closed = all;
        g.curves.push_back(std::move(c));
    }
    return g;
}

std::vector<std::pair<std::size_t, std::size_t>> intersecting_pairs(const Globalization &u, const Globalization &s,
                                                                    std::size_t max_sum)
{
    const std::size_t mu = u.curves.size(), ms = s.curves.size();
    if (max_sum == 0) {
        max_sum = mu + ms;
    }
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t sum = 2; sum <= max_sum; ++sum) {
        std::vector<std::size_t> order;
        for (std::size_t nu = 1; nu < sum; ++nu) {
            if (nu <= mu && sum - nu <= ms) {
                order.push_back(nu);
            }
        }
        std::stable_sort(order.begin(), order.end(), [sum](std::size_t a, std::size_t b) {
            const auto skew = [sum](std::size_t n) { return n * 2 > sum ? n * 2 - sum : sum - n * 2; };
            return skew(a) < skew(b);
        });
        for (std::size_t nu : order) {
            if (!curve_crossings(u.cut(nu), s.cut(sum - nu), true).empty()) {
                out.emplace_back(nu, sum - nu);
            }
        }
    }
    return out;
}

std::vector<HomoclinicRecord> first_intersection(const Globalization &u, const Globalization &s,
                                                 std::size_t max_sum, double tolerance)
{
    if (u.branch.sense != ManifoldSense::Unstable || s.branch.sense != ManifoldSense::Stable) {
        throw DomainError("first_intersection expects (unstable, stable) globalizations");
    }
    auto confirmed = [&](std::size_t nu, std::size_t ns) -> std::optional<HomoclinicRecord> {
        if (nu > u.curves.size() || ns > s.curves.size()) {
            return std::nullopt;
        }
        const auto hits = curve_crossings(u.cut(nu), s.cut(ns), false);
        if (hits.empty()) {
            return std::nullopt;
        }
        auto rec = refine(u, s, nu, ns, hits, tolerance);
        HomoclinicRecord kept = rec;
        kept.points.clear();
        kept.residuals.clear();
        for (std::size_t k = 0; k < rec.points.size(); ++k) {
            if (rec.residuals[k] <= tolerance) {
                kept.points.push_back(rec.points[k]);
                kept.residuals.push_back(rec.residuals[k]);
            }
        }
        if (kept.points.empty()) {
            return std::nullopt;
        }
        return kept;
    };
    std::vector<HomoclinicRecord> out;
    for (const auto &[nu, ns] : intersecting_pairs(u, s, max_sum)) {
        if (auto rec = confirmed(nu, ns)) {
            out.push_back(std::move(*rec));
            if (nu != ns) {
                if (auto mirror = confirmed(ns, nu)) {
                    out.push_back(std::move(*mirror));
                }
            }
            break;
        }
    }
    return out;
}

Vec2 reversed(const Vec2 &p)
{
    return {-p.x(), p.y()};
}

std::string cuts_csv(const std::vector<const Globalization *> &branches)
{
    std::ostringstream out;
    out << "sense,cut_index,point_order,y,ydot\n";
    for (const auto *g : branches) {
        for (const auto &c : g->curves) {
            for (std::size_t k = 0; k < c.points.size(); ++k) {
                out << to_string(c.sense) << ',' << c.cut_index << ',' << k << ',' << io::fmt(c.points[k].x())
                    << ',' << io::fmt(c.points[k].y()) << '\n';
            }
        }
    }
    return out.str();
}

io::json to_json(const HomoclinicRecord &r)
{
    io::json j;
    j["n_u"] = r.n_u;
    j["n_s"] = r.n_s;
    j["section"] = std::string(to_string(r.section));
    j["jacobi"] = r.jacobi;
    io::json pts = io::json::array();
    for (std::size_t k = 0; k < r.points.size(); ++k) {
        pts.push_back({{"y", r.points[k].x()}, {"ydot", r.points[k].y()}, {"residual", r.residuals[k]}});
    }
    j["points"] = pts;
    return j;
}

io::json to_json(const Globalization &g)
{
    io::json j;
    j["sense"] = std::string(to_string(g.branch.sense));
    j["region"] = std::string(to_string(g.branch.side));
    j["section"] = std::string(to_string(g.section.id));
    j["jacobi"] = g.branch.orbit.jacobi;
    j["epsilon"] = g.branch.epsilon;
    j["multiplier"] = g.branch.multiplier;
    j["max_cuts"] = g.max_cuts;
    j["seeds"] = g.seeds;
    j["dropped"] = g.dropped;
    j["dropped_fraction"] = g.seeds ? double(g.dropped) / double(g.seeds) : 0.0;
    j["transits"] = g.transits;
    j["incomplete"] = g.incomplete;
    j["unresolved_gaps"] = g.unresolved;
    j["max_jacobi_error"] = g.max_jacobi_error;
    j["max_radius"] = g.max_radius;
    io::json cuts = io::json::array();
    for (const auto &c : g.curves) {
        cuts.push_back({{"cut_index", c.cut_index}, {"points", c.points.size()}, {"closed", c.closed}});
    }
    j["cuts"] = cuts;
    return j;
}

} // namespace hill4bp
