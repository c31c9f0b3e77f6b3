#include "hill4bp/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "hill4bp/equilibria.hpp"
#include "hill4bp/errors.hpp"
#include "hill4bp/hill_region.hpp"
#include "hill4bp/integrate.hpp"
#include "hill4bp/manifolds.hpp"
#include "hill4bp/model.hpp"
#include "hill4bp/orbits.hpp"
#include "hill4bp/parallel.hpp"
#include "hill4bp/poincare.hpp"
#include "hill4bp/r4bp.hpp"
#include "hill4bp/regularization.hpp"

#ifndef HILL4BP_VERSION
#define HILL4BP_VERSION "0.0.0"
#endif

namespace hill4bp::cli {

namespace fs = std::filesystem;

std::string version()
{
    return HILL4BP_VERSION;
}

io::json RunManifest::to_json() const
{
    io::json j;
    j["command"] = command;
    j["parameters"] = parameters;
    j["tolerances"] = tolerances;
    j["code_version"] = version();
    j["wall_time_s"] = wall_time;
    j["outputs"] = outputs;
    j["warnings"] = warnings;
    return j;
}

std::vector<std::pair<std::string, std::string>> read_config(const fs::path &path)
{
    std::ifstream in(path);
    if (!in) {
        throw CLI::FileError::Missing(path.string());
    }
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw CLI::ConversionError(path.string() + ":" + std::to_string(n) + ": expected key=value");
        }
        std::string key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        out.emplace_back(key, value);
    }
    return out;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Context {
    fs::path out_dir = ".";
    unsigned threads = 0;
    RunManifest manifest;
    io::json result = io::json::object();

    void emit(const std::string &name, const std::string &body)
    {
        io::write_text(out_dir / name, body);
        manifest.outputs.push_back(name);
    }
    void emit_json(const std::string &name, const io::json &j)
    {
        io::write_json(out_dir / name, j);
        manifest.outputs.push_back(name);
    }
    void warn(std::string w) { manifest.warnings.push_back(std::move(w)); }
};

io::json tolerances_json(const integrate::Tolerances &t = {})
{
    return {{"abs", t.abs}, {"rel", t.rel}, {"min_step", t.min_step}, {"per_unit_step", t.per_unit_step}};
}

EquilibriumLabel parse_label(const std::string &s)
{
    static const std::map<std::string, EquilibriumLabel> m{{"L1", EquilibriumLabel::L1},
                                                           {"L2", EquilibriumLabel::L2},
                                                           {"L3", EquilibriumLabel::L3},
                                                           {"L4", EquilibriumLabel::L4}};
    return m.at(s);
}

io::json complex_json(const std::complex<double> &z)
{
    return io::json::array({z.real(), z.imag()});
}

io::json equilibrium_json(const EquilibriumInfo &e)
{
    io::json ev = io::json::array();
    for (const auto &z : e.eigenvalues) {
        ev.push_back(complex_json(z));
    }
    return {{"label", std::string(to_string(e.label))},
            {"position", {e.position.x(), e.position.y()}},
            {"jacobi", e.jacobi},
            {"A", e.charpoly.A},
            {"B", e.charpoly.B},
            {"D", e.charpoly.D},
            {"eigenvalues", ev},
            {"kind", std::string(to_string(e.kind))}};
}

/// Members where the stability index crosses +1 or -1.
io::json stability_crossings(const Family &fam)
{
    io::json out = io::json::array();
    for (std::size_t i = 1; i < fam.members.size(); ++i) {
        const auto &a = fam.members[i - 1], &b = fam.members[i];
        for (double level : {1.0, -1.0}) {
            if ((a.stability_index - level) * (b.stability_index - level) < 0.0) {
                out.push_back({{"level", level}, {"between", {i - 1, i}}, {"x0", {a.x0, b.x0}},
                               {"jacobi", {a.jacobi, b.jacobi}}});
            }
        }
    }
    return out;
}

void family_warnings(Context &ctx, const Family &fam)
{
    if (fam.truncated) {
        ctx.warn("continuation truncated: " + fam.reason);
    }
    if (fam.arclength_steps > 0) {
        ctx.warn("pseudo-arclength fallback used for " + std::to_string(fam.arclength_steps) + " steps");
    }
}

// ---------------------------------------------------------------------------

struct Command {
    CLI::App *app;
    std::function<void(Context &)> run;
};

void add_equilibria(CLI::App &root, std::vector<Command> &cmds)
{
    auto *app = root.add_subcommand("equilibria", "Equilibria, stability coefficients and a mass-ratio sweep");
    auto p = std::make_shared<std::tuple<double, std::size_t, std::string>>(0.0, 500, "L3");
    app->add_option("--mu", std::get<0>(*p), "Mass ratio")->required();
    app->add_option("--sweep", std::get<1>(*p), "Sweep samples on (0, 1/2]")->capture_default_str();
    app->add_option("--sweep-point", std::get<2>(*p), "Equilibrium used for the sweep")
        ->check(CLI::IsMember({"L1", "L2", "L3", "L4"}))
        ->capture_default_str();
    cmds.push_back({app, [p](Context &ctx) {
                        const auto [mu, n, point] = *p;
                        ctx.manifest.parameters = {{"mu", mu}, {"sweep", n}, {"sweep_point", point}};
                        io::json pts = io::json::array();
                        for (const auto &e : equilibrium_points(mu)) {
                            pts.push_back(equilibrium_json(e));
                            if (e.kind == StabilityKind::Degenerate) {
                                ctx.warn(std::string(to_string(e.label)) + " is degenerate (|D| <= 1e-12)");
                            }
                        }
                        ctx.result = {{"mu", mu}, {"points", pts}};
                        ctx.emit_json("equilibria.json", ctx.result);

                        std::ostringstream csv;
                        csv << "mu,A,B,D,kind\n";
                        const auto label = parse_label(point);
                        for (std::size_t i = 1; i <= n; ++i) {
                            const double m = 0.5 * double(i) / double(n);
                            const auto e = equilibrium_point(m, label);
                            csv << io::fmt(m) << ',' << io::fmt(e->charpoly.A) << ',' << io::fmt(e->charpoly.B)
                                << ',' << io::fmt(e->charpoly.D) << ',' << to_string(e->kind) << '\n';
                        }
                        ctx.emit("stability_sweep.csv", csv.str());
                    }});
}

void add_mu_critical(CLI::App &root, std::vector<Command> &cmds)
{
    auto *app = root.add_subcommand("mu-critical", "Critical mass ratio of L3/L4");
    auto tol = std::make_shared<double>(1e-13);
    app->add_option("--tol", *tol, "Bisection tolerance")->capture_default_str();
    cmds.push_back({app, [tol](Context &ctx) {
                        ctx.manifest.parameters = {{"tol", *tol}};
                        const auto r = critical_mass_ratio(*tol);
                        ctx.result = {{"paper_value", r.paper_value},
                                      {"computed_root", r.computed_root},
                                      {"eigen_oracle_root", r.eigen_oracle_root},
                                      {"paper_closed_form", r.paper_closed_form},
                                      {"discriminant_at_paper_value", r.discriminant_at_paper_value},
                                      {"discrepancy_flag", r.discrepancy}};
                        if (r.discrepancy) {
                            ctx.warn("mu0 discrepancy: computed root " + io::fmt(r.computed_root) +
                                     " differs from the quoted " + io::fmt(r.paper_value) + " by more than 1e-4");
                        }
                        if (std::abs(r.computed_root - r.eigen_oracle_root) > 1e-8) {
                            ctx.warn("discriminant root and eigenvalue transition differ by more than 1e-8");
                        }
                        ctx.emit_json("mu_critical.json", ctx.result);
                    }});
}

void add_hill_region(CLI::App &root, std::vector<Command> &cmds)
{
    struct P {
        double mu = 0.0, C = 0.0;
        std::string frame = "rotated";
        std::vector<double> x{-2.0, 2.0}, y{-2.0, 2.0};
        std::size_t nx = 201, ny = 201;
    };
    auto p = std::make_shared<P>();
    auto *app = root.add_subcommand("hill-region", "Zero-velocity mask on a grid");
    app->add_option("--mu", p->mu)->required();
    app->add_option("--jacobi", p->C)->required();
    app->add_option("--frame", p->frame)->check(CLI::IsMember({"rotated", "unrotated"}))->capture_default_str();
    app->add_option("--x-range", p->x)->expected(2)->capture_default_str();
    app->add_option("--y-range", p->y)->expected(2)->capture_default_str();
    app->add_option("--nx", p->nx)->capture_default_str();
    app->add_option("--ny", p->ny)->capture_default_str();
    cmds.push_back({app, [p](Context &ctx) {
                        ctx.manifest.parameters = {{"mu", p->mu},       {"jacobi", p->C},   {"frame", p->frame},
                                                   {"x_range", p->x},   {"y_range", p->y}, {"nx", p->nx},
                                                   {"ny", p->ny}};
                        const GridSpec g{{p->x[0], p->x[1]}, {p->y[0], p->y[1]}, p->nx, p->ny};
                        const auto mask = hill_region_mask(
                            g, p->C, ModelParams(p->mu, p->frame == "rotated" ? Frame::Rotated : Frame::Unrotated));
                        ctx.result = mask_descriptor(mask);
                        ctx.result["components"] = connected_components(mask);
                        ctx.emit("hill_region.csv", mask_csv(mask));
                        ctx.emit_json("hill_region.json", ctx.result);
                    }});
}

void add_poincare(CLI::App &root, std::vector<Command> &cmds)
{
    struct P {
        double mu = 0.0, C = 0.0;
        std::size_t grid = 60, iters = 300;
        std::vector<double> x{-0.6, 0.6}, px{-0.6, 0.6};
        double escape_radius = 10.0;
        bool score = false;
    };
    auto p = std::make_shared<P>();
    auto *app = root.add_subcommand("poincare", "Return-map portrait on Y = 0, PY > 0");
    app->add_option("--mu", p->mu)->required();
    app->add_option("--jacobi", p->C)->required();
    app->add_option("--grid", p->grid, "Seeds per axis")->capture_default_str();
    app->add_option("--iters", p->iters, "Returns per seed")->capture_default_str();
    app->add_option("--x-range", p->x)->expected(2)->capture_default_str();
    app->add_option("--px-range", p->px)->expected(2)->capture_default_str();
    app->add_option("--escape-radius", p->escape_radius)->capture_default_str();
    app->add_flag("--score", p->score, "Add fixed points, chaos extent and the portrait stage");
    cmds.push_back({app, [p](Context &ctx) {
                        ctx.manifest.parameters = {{"mu", p->mu},       {"jacobi", p->C},
                                                   {"grid", p->grid},   {"iters", p->iters},
                                                   {"x_range", p->x},   {"px_range", p->px},
                                                   {"escape_radius", p->escape_radius},
                                                   {"score", p->score}, {"threads", ctx.threads}};
                        ReturnOptions ro;
                        ro.escape_radius = p->escape_radius;
                        const double h = regularized_energy(p->C);
                        const GridSpec g{{p->x[0], p->x[1]}, {p->px[0], p->px[1]}, p->grid, p->grid};
                        const auto s = scan(h, p->mu, g, p->iters, ctx.threads, ro);
                        ctx.result = {{"mu", p->mu},           {"jacobi", p->C},         {"h_reg", h},
                                      {"seeds", s.orbits.size()}, {"skipped", s.skipped}, {"escapes", s.escapes}};
                        if (s.skipped > 0) {
                            ctx.warn(std::to_string(s.skipped) + " grid seeds inadmissible and skipped");
                        }
                        if (s.escapes > 0) {
                            ctx.warn(std::to_string(s.escapes) + " seeds escaped before " + std::to_string(p->iters) +
                                     " returns");
                        }
                        if (p->score) {
                            PortraitOptions po;
                            po.threads = ctx.threads;
                            po.ret = ro;
                            const auto ps = portrait_summary(p->C, p->mu, po);
                            io::json fps = io::json::array();
                            for (const auto &f : ps.fixed_points) {
                                fps.push_back({{"X", f.coords.x()},
                                               {"PX", f.coords.y()},
                                               {"trace", f.trace},
                                               {"stable", f.stable}});
                            }
                            ctx.result["portrait"] = {{"stage", std::string(to_string(ps.stage))},
                                                      {"fixed_points", fps},
                                                      {"stable", ps.stable},
                                                      {"hyperbolic", ps.hyperbolic},
                                                      {"chaos_extent", ps.chaos_extent},
                                                      {"escape_seeds", ps.escape_seeds},
                                                      {"escapes", ps.escapes}};
                        }
                        ctx.emit("poincare.csv", s.csv());
                        ctx.emit_json("poincare.json", ctx.result);
                    }});
}

void add_gfamily(CLI::App &root, std::vector<Command> &cmds)
{
    struct P {
        double mu = 0.0, x0 = 0.1, cmin = 3.8;
        std::size_t steps = 400;
        bool pitchfork = true;
    };
    auto p = std::make_shared<P>();
    auto *app = root.add_subcommand("gfamily", "Continue the g-family and locate its pitchfork");
    app->add_option("--mu", p->mu)->required();
    app->add_option("--x0", p->x0, "Seed x0; ydot0 starts at sqrt(1/x0)")->capture_default_str();
    app->add_option("--steps", p->steps)->capture_default_str();
    app->add_option("--jacobi-min", p->cmin, "Stop below this C")->capture_default_str();
    app->add_flag("!--no-pitchfork", p->pitchfork, "Skip pitchfork detection");
    cmds.push_back({app, [p](Context &ctx) {
                        ctx.manifest.parameters = {{"mu", p->mu},       {"x0", p->x0},
                                                   {"steps", p->steps}, {"jacobi_min", p->cmin},
                                                   {"pitchfork", p->pitchfork}};
                        CorrectorOptions dbl;
                        dbl.symmetry = Symmetry::Doubly;
                        const auto seed = with_stability(
                            correct_symmetric(p->x0, std::sqrt(1.0 / p->x0), p->mu, OrbitFamily::gFamily, dbl));
                        const double cmin = p->cmin;
                        const auto fam = continue_family(seed, +1, p->steps, {},
                                                         [cmin](const PeriodicOrbit &o) { return o.jacobi < cmin; });
                        family_warnings(ctx, fam);
                        ctx.result = {{"mu", p->mu},
                                      {"members", fam.members.size()},
                                      {"truncated", fam.truncated},
                                      {"reason", fam.reason},
                                      {"stability_crossings", stability_crossings(fam)},
                                      {"pitchfork", nullptr}};
                        if (p->pitchfork) {
                            if (const auto pf = detect_pitchfork(fam)) {
                                ctx.result["pitchfork"] = to_json(*pf);
                                if (pf->branches.size() != 2) {
                                    ctx.warn("pitchfork found " + std::to_string(pf->branches.size()) +
                                             " g' branches on the far side, expected 2");
                                }
                                if (pf->near_side_branches != 0) {
                                    ctx.warn("g' branches also found on the near side");
                                }
                            } else {
                                ctx.warn("no pitchfork (stability index +1 crossing) along the family");
                            }
                        }
                        ctx.emit("gfamily.csv", fam.csv());
                        ctx.emit_json("gfamily.json", ctx.result);
                    }});
}

void add_lyapunov(CLI::App &root, std::vector<Command> &cmds)
{
    struct P {
        double mu = 0.0, cmin = 4.0;
        std::optional<double> C;
        std::string point = "L1";
        std::size_t steps = 400;
    };
    auto p = std::make_shared<P>();
    auto *app = root.add_subcommand("lyapunov", "Planar Lyapunov family about L1 or L2");
    app->add_option("--mu", p->mu)->required();
    app->add_option("--point", p->point)->check(CLI::IsMember({"L1", "L2"}))->capture_default_str();
    app->add_option("--steps", p->steps)->capture_default_str();
    app->add_option("--jacobi-min", p->cmin, "Stop below this C")->capture_default_str();
    app->add_option("--jacobi", p->C, "Also report the orbit at this C");
    cmds.push_back({app, [p](Context &ctx) {
                        ctx.manifest.parameters = {{"mu", p->mu},
                                                   {"point", p->point},
                                                   {"steps", p->steps},
                                                   {"jacobi_min", p->cmin},
                                                   {"jacobi", p->C ? io::json(*p->C) : io::json(nullptr)}};
                        const auto label = parse_label(p->point);
                        const auto eq = equilibrium_point(p->mu, label);
                        const auto fam_id = label == EquilibriumLabel::L1 ? OrbitFamily::LyapunovL1
                                                                          : OrbitFamily::LyapunovL2;
                        const auto g = lyapunov_guess(*eq, 1e-3, p->mu);
                        const auto seed = with_stability(correct_symmetric(g.state[0], g.state[3], p->mu, fam_id));
                        const double cmin = p->cmin;
                        const auto fam = continue_family(seed, eq->position.x() > 0.0 ? 1 : -1, p->steps, {},
                                                         [cmin](const PeriodicOrbit &o) { return o.jacobi < cmin; });
                        family_warnings(ctx, fam);
                        ctx.result = {{"mu", p->mu},
                                      {"point", p->point},
                                      {"equilibrium_jacobi", eq->jacobi},
                                      {"members", fam.members.size()},
                                      {"truncated", fam.truncated},
                                      {"reason", fam.reason},
                                      {"stability_crossings", stability_crossings(fam)},
                                      {"orbit", nullptr}};
                        if (p->C) {
                            ctx.result["orbit"] = to_json(lyapunov_orbit(p->mu, label, *p->C));
                        }
                        ctx.emit("lyapunov.csv", fam.csv());
                        ctx.emit_json("lyapunov.json", ctx.result);
                    }});
}

void add_manifolds(CLI::App &root, std::vector<Command> &cmds)
{
    struct P {
        double mu = 0.0, C = 0.0;
        std::string region = "inner", section;
        std::size_t max_cuts = 8, seeds = 200, max_seeds = 100000;
        double epsilon = 1e-6, threshold = 1e-3, max_time = 0.0;
    };
    auto p = std::make_shared<P>();
    auto *app = root.add_subcommand("manifolds", "Manifold cuts of an L1 Lyapunov orbit and homoclinic points");
    app->add_option("--mu", p->mu)->required();
    app->add_option("--jacobi", p->C)->required();
    app->add_option("--region", p->region)->check(CLI::IsMember({"inner", "outer"}))->capture_default_str();
    app->add_option("--max-cuts", p->max_cuts)->capture_default_str();
    app->add_option("--section", p->section, "sigma or sigma-prime; default by region")
        ->check(CLI::IsMember({"sigma", "sigma-prime"}));
    app->add_option("--seeds", p->seeds, "Initial seeds per branch")->capture_default_str();
    app->add_option("--epsilon", p->epsilon)->capture_default_str();
    app->add_option("--threshold", p->threshold, "Insertion threshold on cut gaps")->capture_default_str();
    app->add_option("--max-seeds", p->max_seeds)->capture_default_str();
    app->add_option("--max-time", p->max_time, "Per-seed time; 0 picks a budget per cut")->capture_default_str();
    cmds.push_back({app, [p](Context &ctx) {
                        const auto region = p->region == "inner" ? Region::Inner : Region::Outer;
                        const std::string sec_name =
                            !p->section.empty() ? p->section : (region == Region::Inner ? "sigma" : "sigma-prime");
                        ctx.manifest.parameters = {{"mu", p->mu},
                                                   {"jacobi", p->C},
                                                   {"region", p->region},
                                                   {"max_cuts", p->max_cuts},
                                                   {"section", sec_name},
                                                   {"seeds", p->seeds},
                                                   {"epsilon", p->epsilon},
                                                   {"threshold", p->threshold},
                                                   {"max_seeds", p->max_seeds},
                                                   {"max_time", p->max_time},
                                                   {"threads", ctx.threads}};
                        const auto sec = sec_name == "sigma" ? SectionDef::sigma(p->mu) : SectionDef::sigma_prime(p->mu);
                        const auto orbit = lyapunov_orbit(p->mu, EquilibriumLabel::L1, p->C);
                        GlobalizeOptions opt;
                        opt.insertion_threshold = p->threshold;
                        opt.max_seeds = p->max_seeds;
                        opt.max_time = p->max_time;
                        opt.threads = ctx.threads;
                        const auto gu = globalize(
                            seed_manifold(orbit, ManifoldSense::Unstable, region, p->epsilon, p->seeds), sec,
                            p->max_cuts, opt);
                        const auto gs = globalize(
                            seed_manifold(orbit, ManifoldSense::Stable, region, p->epsilon, p->seeds), sec,
                            p->max_cuts, opt);
                        for (const auto *g : {&gu, &gs}) {
                            const std::string name(to_string(g->branch.sense));
                            if (g->dropped > 0) {
                                ctx.warn(name + ": " + std::to_string(g->dropped) + " of " +
                                         std::to_string(g->seeds) + " seeds dropped at the collision guard");
                            }
                            if (g->incomplete > 0) {
                                ctx.warn(name + ": " + std::to_string(g->incomplete) +
                                         " seeds did not reach max-cuts within the time budget");
                            }
                            if (g->unresolved > 0) {
                                ctx.warn(name + ": seed budget exhausted with " + std::to_string(g->unresolved) +
                                         " gaps above the threshold");
                            }
                            for (const auto &c : g->curves) {
                                if (!c.closed) {
                                    ctx.warn(name + ": cut " + std::to_string(c.cut_index) + " is not closed");
                                }
                            }
                        }
                        const auto pairs = intersecting_pairs(gu, gs);
                        const auto recs = first_intersection(gu, gs);
                        if (recs.empty()) {
                            ctx.warn("no confirmed homoclinic intersection within " + std::to_string(p->max_cuts) +
                                     " cuts");
                        }
                        io::json jp = io::json::array();
                        for (const auto &[a, b] : pairs) {
                            jp.push_back({a, b});
                        }
                        io::json jr = io::json::array();
                        for (const auto &r : recs) {
                            jr.push_back(to_json(r));
                        }
                        ctx.result = {{"orbit", to_json(orbit)},
                                      {"unstable", to_json(gu)},
                                      {"stable", to_json(gs)},
                                      {"intersecting_pairs", jp},
                                      {"homoclinic", jr}};
                        ctx.emit("manifold_cuts.csv", cuts_csv(std::vector<const Globalization *>{&gu, &gs}));
                        ctx.emit_json("manifolds.json", ctx.result);
                    }});
}

void add_compare_r4bp(CLI::App &root, std::vector<Command> &cmds)
{
    struct P {
        double mu = 0.0, m3 = 1e-9, span = 10.0;
        std::vector<double> state{0.3, 0.0, 0.0, 1.5};
        std::size_t samples = 201;
    };
    auto p = std::make_shared<P>();
    auto *app = root.add_subcommand("compare-r4bp", "Hill and scaled R4BP trajectories from one unrotated state");
    app->add_option("--mu", p->mu)->required();
    app->add_option("--m3", p->m3)->capture_default_str();
    app->add_option("--state", p->state, "x y xdot ydot (unrotated frame)")->expected(4)->capture_default_str();
    app->add_option("--span", p->span)->capture_default_str();
    app->add_option("--samples", p->samples)->capture_default_str();
    cmds.push_back({app, [p](Context &ctx) {
                        ctx.manifest.parameters = {{"mu", p->mu},       {"m3", p->m3},         {"state", p->state},
                                                   {"span", p->span},   {"samples", p->samples}};
                        if (p->samples < 2) {
                            throw DomainError("--samples must be at least 2");
                        }
                        const std::array<double, 4> s0{p->state[0], p->state[1], p->state[2], p->state[3]};
                        const PlanarHillField hill{ModelParams(p->mu, Frame::Unrotated)};
                        integrate::Field<4> fh = [hill](const integrate::Vec<4> &s, integrate::Vec<4> &ds) {
                            hill(s, ds);
                        };
                        const double mu = p->mu, m3 = p->m3;
                        integrate::Field<4> fr = [mu, m3](const integrate::Vec<4> &s, integrate::Vec<4> &ds) {
                            const auto d = scaled_r4bp_field(
                                PhaseState::planar_state(s[0], s[1], s[2], s[3], Frame::Unrotated), mu, m3);
                            ds = {d.velocity.x(), d.velocity.y(), d.acceleration.x(), d.acceleration.y()};
                        };
                        const auto guard = [](const integrate::Vec<4> &s) {
                            return s[0] * s[0] + s[1] * s[1] < integrate::kGuardRadius * integrate::kGuardRadius;
                        };
                        const auto a = integrate::propagate<4>(fh, s0, 0.0, p->span, {}, nullptr, guard);
                        const auto b = integrate::propagate<4>(fr, s0, 0.0, p->span, {}, nullptr, guard);
                        if (a.status == integrate::Status::Guarded || b.status == integrate::Status::Guarded) {
                            throw DomainError("trajectory reached the collision guard");
                        }
                        std::ostringstream csv;
                        csv << "t,x_hill,y_hill,x_r4bp,y_r4bp,distance\n";
                        double worst = 0.0;
                        for (std::size_t i = 0; i < p->samples; ++i) {
                            const double t = p->span * double(i) / double(p->samples - 1);
                            const auto u = a.trajectory.state_at(t), v = b.trajectory.state_at(t);
                            const double d = std::hypot(u[0] - v[0], u[1] - v[1]);
                            worst = std::max(worst, d);
                            csv << io::fmt(t) << ',' << io::fmt(u[0]) << ',' << io::fmt(u[1]) << ',' << io::fmt(v[0])
                                << ',' << io::fmt(v[1]) << ',' << io::fmt(d) << '\n';
                        }
                        const double cj0 = hill.jacobi(s0), cj1 = hill.jacobi(a.trajectory.back());
                        ctx.result = {{"mu", p->mu},
                                      {"m3", p->m3},
                                      {"max_distance", worst},
                                      {"hill_jacobi", cj0},
                                      {"hill_jacobi_drift", std::abs(cj1 - cj0)}};
                        ctx.emit("compare_r4bp.csv", csv.str());
                        ctx.emit_json("compare_r4bp.json", ctx.result);
                    }});
}

void add_convergence(CLI::App &root, std::vector<Command> &cmds)
{
    struct P {
        double mu = 0.00095;
        std::vector<double> m3{1e-6, 1e-8, 1e-10, 1e-12};
        std::size_t lattice = 21;
    };
    auto p = std::make_shared<P>();
    auto *app = root.add_subcommand("convergence", "Rate at which the scaled R4BP field tends to the Hill field");
    app->add_option("--mu", p->mu)->capture_default_str();
    app->add_option("--m3", p->m3, "Tertiary masses")->capture_default_str();
    app->add_option("--lattice", p->lattice, "Lattice points per axis on the unit ball")->capture_default_str();
    cmds.push_back({app, [p](Context &ctx) {
                        ctx.manifest.parameters = {{"mu", p->mu}, {"m3", p->m3}, {"lattice", p->lattice}};
                        const auto c = field_convergence(p->mu, p->m3, p->lattice);
                        std::ostringstream csv;
                        csv << "m3,sup_error\n";
                        for (std::size_t i = 0; i < c.m3.size(); ++i) {
                            csv << io::fmt(c.m3[i]) << ',' << io::fmt(c.sup_error[i]) << '\n';
                        }
                        ctx.result = {{"mu", c.mu},
                                      {"m3", c.m3},
                                      {"sup_error", c.sup_error},
                                      {"slope", c.slope},
                                      {"expected_slope", 1.0 / 3.0},
                                      {"samples", c.samples}};
                        if (std::abs(c.slope - 1.0 / 3.0) > 0.05) {
                            ctx.warn("fitted slope " + io::fmt(c.slope) + " is not within 0.05 of 1/3");
                        }
                        ctx.emit("convergence.csv", csv.str());
                        ctx.emit_json("convergence.json", ctx.result);
                    }});
}

/// Appends `--key=value` for config entries the command line does not set.
std::vector<std::string> apply_config(std::vector<std::string> args)
{
    std::optional<std::string> path;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (!path) {
        return args;
    }
    std::vector<std::string> extra;
    for (const auto &[key, value] : read_config(*path)) {
        const std::string flag = "--" + key;
        const bool given = std::any_of(rest.begin(), rest.end(), [&](const std::string &a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
        if (!given) {
            extra.push_back(flag + "=" + value);
        }
    }
    // Options after `--` would be positional; keep config entries before it.
    auto sep = std::find(rest.begin(), rest.end(), "--");
    rest.insert(sep, extra.begin(), extra.end());
    return rest;
}

int exit_code_for(const std::exception &e)
{
    if (dynamic_cast<const DomainError *>(&e) || dynamic_cast<const SingularityError *>(&e)) {
        return kExitDomain;
    }
    if (dynamic_cast<const ConvergenceError *>(&e) || dynamic_cast<const ConsistencyError *>(&e)) {
        return kExitConvergence;
    }
    return kExitFailure;
}

} // namespace

int run(const std::vector<std::string> &raw, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Hill approximation of the equilateral restricted four-body problem", "hill4bp"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version());
    std::string out_dir = ".";
    unsigned threads = 0;
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads; 0 uses HILL4BP_THREADS or all cores");

    std::vector<Command> cmds;
    add_equilibria(app, cmds);
    add_mu_critical(app, cmds);
    add_hill_region(app, cmds);
    add_poincare(app, cmds);
    add_gfamily(app, cmds);
    add_lyapunov(app, cmds);
    add_manifolds(app, cmds);
    add_compare_r4bp(app, cmds);
    add_convergence(app, cmds);
    // Global options may also follow the subcommand name.
    for (auto &c : cmds) {
        c.app->fallthrough();
    }

    std::vector<std::string> args;
    try {
        args = apply_config(raw);
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp &e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp &e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion &e) {
        out << version() << '\n';
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }

    const Command *cmd = nullptr;
    for (const auto &c : cmds) {
        if (c.app->parsed()) {
            cmd = &c;
        }
    }
    Context ctx;
    ctx.out_dir = out_dir;
    ctx.threads = resolve_threads(threads);
    ctx.manifest.command = cmd->app->get_name();
    ctx.manifest.tolerances = tolerances_json();
    const auto t0 = Clock::now();
    try {
        fs::create_directories(ctx.out_dir);
        cmd->run(ctx);
    } catch (const std::exception &e) {
        err << ctx.manifest.command << ": " << e.what() << '\n';
        return exit_code_for(e);
    }
    ctx.manifest.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
    io::write_json(ctx.out_dir / (ctx.manifest.command + ".manifest.json"), ctx.manifest.to_json());
    for (const auto &w : ctx.manifest.warnings) {
        err << "warning: " << w << '\n';
    }
    out << ctx.result.dump(2) << '\n';
    return kExitOk;
}

int main(int argc, char **argv)
{
    return run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}

} // namespace hill4bp::cli
