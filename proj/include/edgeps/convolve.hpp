#pragma once

#include <algorithm>
#include <vector>

#include "edgeps/raster.hpp"

namespace edgeps {

namespace detail {

struct Tap {
    int dx;
    int dy;
    int weight;
};

inline std::vector<Tap> nonzero_taps(const Raster<int>& kernel) {
    if (kernel.width() % 2 == 0 || kernel.height() % 2 == 0 || kernel.empty()) {
        throw Error(ErrorKind::InvalidInput, "kernel side lengths must be odd");
    }
    const int rx = kernel.width() / 2;
    const int ry = kernel.height() / 2;
    std::vector<Tap> taps;
    for (int ky = 0; ky < kernel.height(); ++ky) {
        for (int kx = 0; kx < kernel.width(); ++kx) {
            if (int w = kernel(kx, ky); w != 0) taps.push_back({kx - rx, ky - ry, w});
        }
    }
    return taps;
}

}  // namespace detail

/// Same-size correlation with replicate (clamp-to-edge) padding.
/// `Acc` is the accumulator / output type; integer inputs with `Acc = int` are exact.
template <typename Acc, typename In>
Raster<Acc> correlate_replicate(const Raster<In>& image, const Raster<int>& kernel) {
    if (image.empty()) throw Error(ErrorKind::InvalidInput, "cannot convolve an empty raster");
    const auto taps = detail::nonzero_taps(kernel);
    const int w = image.width();
    const int h = image.height();
    Raster<Acc> out(w, h, Acc{});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            Acc acc{};
            for (const auto& t : taps) {
                const int sx = std::clamp(x + t.dx, 0, w - 1);
                const int sy = std::clamp(y + t.dy, 0, h - 1);
                acc += static_cast<Acc>(t.weight) * static_cast<Acc>(image(sx, sy));
            }
            out(x, y) = acc;
        }
    }
    return out;
}

/// Adjoint of correlate_replicate with respect to the image: scatters `grad_out`
/// back through the clamped taps.
template <typename In = double>
Raster<double> correlate_replicate_adjoint(const Raster<double>& grad_out, const Raster<int>& kernel) {
    const auto taps = detail::nonzero_taps(kernel);
    const int w = grad_out.width();
    const int h = grad_out.height();
    Raster<double> grad_in(w, h, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double g = grad_out(x, y);
            if (g == 0.0) continue;
            for (const auto& t : taps) {
                const int sx = std::clamp(x + t.dx, 0, w - 1);
                const int sy = std::clamp(y + t.dy, 0, h - 1);
                grad_in(sx, sy) += g * t.weight;
            }
        }
    }
    return grad_in;
}

/// Integer response of a binary mask against an odd-sided integer kernel.
inline Raster<int> convolve_same(const BinaryMask& mask, const Raster<int>& kernel) {
    return correlate_replicate<int>(mask, kernel);
}

}  // namespace edgeps
