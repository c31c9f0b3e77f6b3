#include "hill4bp/hill_region.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "hill4bp/errors.hpp"

namespace hill4bp {

void GridSpec::validate() const
{
    if (nx < 2 || ny < 2) {
        throw DomainError("grid needs at least 2 samples per axis");
    }
    if (!(x.hi > x.lo) || !(y.hi > y.lo)) {
        throw DomainError("grid ranges must be nondegenerate");
    }
}

std::size_t HillRegionMask::allowed_count() const
{
    return static_cast<std::size_t>(std::count(allowed.begin(), allowed.end(), std::uint8_t{1}));
}

HillRegionMask hill_region_mask(const GridSpec &grid, double C, const ModelParams &params)
{
    grid.validate();
    HillRegionMask mask{grid, C, params.mu(), params.frame(), {}};
    mask.allowed.resize(grid.size());
    const auto q = tidal_form(params);
    for (std::size_t j = 0; j < grid.ny; ++j) {
        const double y = grid.y_at(j);
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const double x = grid.x_at(i);
            const double r = std::hypot(x, y);
            bool ok = true;
            if (r > 0.0) {
                const double omega =
                    0.5 * (q.xx * x * x + 2.0 * q.xy * x * y + q.yy * y * y) + 1.0 / r;
                ok = 2.0 * omega >= C;
            }
            mask.allowed[j * grid.nx + i] = ok ? 1 : 0;
        }
    }
    return mask;
}

namespace {

std::vector<int> label_components(const HillRegionMask &mask, std::size_t &count)
{
    const auto nx = mask.grid.nx, ny = mask.grid.ny;
    std::vector<int> label(mask.allowed.size(), -1);
    count = 0;
    std::queue<std::size_t> q;
    for (std::size_t start = 0; start < label.size(); ++start) {
        if (!mask.allowed[start] || label[start] >= 0) {
            continue;
        }
        const int id = static_cast<int>(count++);
        label[start] = id;
        q.push(start);
        while (!q.empty()) {
            const auto k = q.front();
            q.pop();
            const auto i = k % nx, j = k / nx;
            auto visit = [&](std::size_t n) {
                if (mask.allowed[n] && label[n] < 0) {
                    label[n] = id;
                    q.push(n);
                }
            };
            if (i > 0) visit(k - 1);
            if (i + 1 < nx) visit(k + 1);
            if (j > 0) visit(k - nx);
            if (j + 1 < ny) visit(k + nx);
        }
    }
    return label;
}

std::size_t nearest_cell(const GridSpec &g, const Vec2 &p)
{
    auto idx = [](double v, const Interval &r, std::size_t n) {
        const double t = (v - r.lo) / (r.hi - r.lo) * double(n - 1);
        return static_cast<std::size_t>(std::clamp(std::lround(t), 0L, long(n - 1)));
    };
    return idx(p.y(), g.y, g.ny) * g.nx + idx(p.x(), g.x, g.nx);
}

} // namespace

std::size_t connected_components(const HillRegionMask &mask)
{
    std::size_t count = 0;
    label_components(mask, count);
    return count;
}

bool connected(const HillRegionMask &mask, const Vec2 &a, const Vec2 &b)
{
    std::size_t count = 0;
    const auto label = label_components(mask, count);
    const int la = label[nearest_cell(mask.grid, a)];
    const int lb = label[nearest_cell(mask.grid, b)];
    return la >= 0 && la == lb;
}

std::string mask_csv(const HillRegionMask &mask)
{
    std::ostringstream out;
    out << "x,y,allowed\n";
    for (std::size_t j = 0; j < mask.grid.ny; ++j) {
        for (std::size_t i = 0; i < mask.grid.nx; ++i) {
            out << io::fmt(mask.grid.x_at(i)) << ',' << io::fmt(mask.grid.y_at(j)) << ','
                << int(mask.at(i, j)) << '\n';
        }
    }
    return out.str();
}

io::json mask_descriptor(const HillRegionMask &mask)
{
    io::json j;
    j["mu"] = mask.mu;
    j["jacobi"] = mask.jacobi;
    j["frame"] = std::string(to_string(mask.frame));
    j["x_range"] = {mask.grid.x.lo, mask.grid.x.hi};
    j["y_range"] = {mask.grid.y.lo, mask.grid.y.hi};
    j["nx"] = mask.grid.nx;
    j["ny"] = mask.grid.ny;
    j["allowed_cells"] = mask.allowed_count();
    j["convention"] = "allowed iff 2*Omega(x,y) >= C; singular cells allowed";
    return j;
}

} // namespace hill4bp
