#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hill4bp/grid.hpp"
#include "hill4bp/io.hpp"
#include "hill4bp/model.hpp"

namespace hill4bp {

/// Zero-velocity classification of a planar grid: a cell is allowed when
/// 2 Omega(x, y) >= C. Storage is row-major with x varying fastest.
struct HillRegionMask {
    GridSpec grid;
    double jacobi;
    double mu;
    Frame frame;
    std::vector<std::uint8_t> allowed;

    bool at(std::size_t i, std::size_t j) const { return allowed[j * grid.nx + i] != 0; }
    std::size_t allowed_count() const;
};

HillRegionMask hill_region_mask(const GridSpec &grid, double C, const ModelParams &params);

/// Number of 4-connected allowed components.
std::size_t connected_components(const HillRegionMask &mask);

/// Whether the allowed cells containing points a and b are 4-connected.
bool connected(const HillRegionMask &mask, const Vec2 &a, const Vec2 &b);

/// CSV with header `x,y,allowed`.
std::string mask_csv(const HillRegionMask &mask);
io::json mask_descriptor(const HillRegionMask &mask);

} // namespace hill4bp
