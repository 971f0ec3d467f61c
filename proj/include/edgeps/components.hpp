#pragma once

#include <vector>

#include "edgeps/raster.hpp"

namespace edgeps {

enum class Connectivity { Four = 4, Eight = 8 };

struct Components {
    /// Component id per pixel, -1 on unset pixels. Ids are contiguous from 0 in raster scan order.
    Raster<int> ids;
    int count = 0;
};

inline Components connected_components(const BinaryMask& mask, Connectivity connectivity) {
    const int w = mask.width();
    const int h = mask.height();
    Components out{Raster<int>(w, h, -1), 0};
    std::vector<std::pair<int, int>> stack;
    const bool eight = connectivity == Connectivity::Eight;

    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            if (!mask(x0, y0) || out.ids(x0, y0) >= 0) continue;
            const int id = out.count++;
            out.ids(x0, y0) = id;
            stack.emplace_back(x0, y0);
            while (!stack.empty()) {
                const auto [x, y] = stack.back();
                stack.pop_back();
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        if (!eight && dx != 0 && dy != 0) continue;
                        const int nx = x + dx;
                        const int ny = y + dy;
                        if (!mask.contains(nx, ny) || !mask(nx, ny) || out.ids(nx, ny) >= 0) continue;
                        out.ids(nx, ny) = id;
                        stack.emplace_back(nx, ny);
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace edgeps
