#ifndef PLAX_MAP_GRID_HPP
#define PLAX_MAP_GRID_HPP

#include <cstdint>
#include <vector>

#include "plax/errors.hpp"
#include "plax/estimation.hpp"

namespace plax {

/// Dense scalar grid with a validity mask (row-major, row 0 = top row).
struct MapGrid {
    int width = 0;
    int height = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> valid;

    MapGrid() = default;
    MapGrid(int w, int h)
        : width(w), height(h),
          values(static_cast<std::size_t>(w) * h, 0.0),
          valid(static_cast<std::size_t>(w) * h, 0) {
        if (w <= 0 || h <= 0) throw Error("grid dimensions must be positive");
    }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * width + x;
    }
    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    double at(int x, int y) const { return values[index(x, y)]; }
    bool is_valid(int x, int y) const { return valid[index(x, y)] != 0; }
    void set(int x, int y, double v) {
        values[index(x, y)] = v;
        valid[index(x, y)] = 1;
    }
    void set_invalid(int x, int y, double v = 0.0) {
        values[index(x, y)] = v;
        valid[index(x, y)] = 0;
    }
    std::size_t valid_count() const {
        std::size_t n = 0;
        for (auto v : valid) n += (v != 0);
        return n;
    }
};

/// Per-pixel projective structure gamma = H/Z (dimensionless).
struct StructureMap : MapGrid {
    Epipole epipole;
    double k_scale = 0.0; // T_Z / D_pi, 1/meters
    std::size_t n_out_of_range = 0;

    StructureMap() = default;
    StructureMap(int w, int h) : MapGrid(w, h) {}
};

/// Per-pixel depth Z in meters. Valid cells lie in [0.1, 100].
struct DepthMap : MapGrid {
    static constexpr double kMinDepth = 0.1;
    static constexpr double kMaxDepth = 100.0;

    DepthMap() = default;
    DepthMap(int w, int h) : MapGrid(w, h) {}
};

} // namespace plax

#endif
