#pragma once

#include <cstddef>

namespace hill4bp {

struct Interval {
    double lo;
    double hi;
};

/// Regular sampling of a rectangle; both endpoints of each range are included.
struct GridSpec {
    Interval x;
    Interval y;
    std::size_t nx;
    std::size_t ny;

    /// Throws DomainError unless nx, ny >= 2 and both ranges are nondegenerate.
    void validate() const;
    double x_at(std::size_t i) const { return x.lo + (x.hi - x.lo) * double(i) / double(nx - 1); }
    double y_at(std::size_t j) const { return y.lo + (y.hi - y.lo) * double(j) / double(ny - 1); }
    std::size_t size() const { return nx * ny; }
};

} // namespace hill4bp
