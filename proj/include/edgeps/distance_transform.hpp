#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "edgeps/raster.hpp"

namespace edgeps {

namespace detail {

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) on one line of
// squared distances. Inputs are integers or +inf, so the result is exact.
inline double intersect(const double* f, int p, int q) {
    return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
}

inline void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    v.assign(static_cast<std::size_t>(n), 0);
    z.assign(static_cast<std::size_t>(n) + 1, 0.0);
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == inf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
            continue;
        }
        double s = intersect(f, v[k], q);
        while (s <= z[k]) {
            --k;
            s = intersect(f, v[k], q);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = inf;
    }
    if (k < 0) {
        for (int q = 0; q < n; ++q) d[q] = inf;
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) ++j;
        const double diff = q - v[j];
        d[q] = diff * diff + f[v[j]];
    }
}

}  // namespace detail

/// Squared Euclidean distance from every pixel to the nearest set pixel of `sources`.
/// Exact in double precision for any raster whose squared diagonal fits in 2^53.
inline Raster<double> squared_edt(const BinaryMask& sources) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const int w = sources.width();
    const int h = sources.height();
    bool any = false;
    Raster<double> g(w, h, inf);
    for (std::size_t i = 0; i < sources.size(); ++i) {
        if (sources[i]) {
            g[i] = 0.0;
            any = true;
        }
    }
    if (!any) throw Error(ErrorKind::EmptySourceSet, "distance transform needs at least one source pixel");

    std::vector<int> v;
    std::vector<double> z;
    std::vector<double> col_in(static_cast<std::size_t>(h));
    std::vector<double> col_out(static_cast<std::size_t>(h));
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) col_in[y] = g(x, y);
        detail::edt_1d(col_in.data(), col_out.data(), h, v, z);
        for (int y = 0; y < h; ++y) g(x, y) = col_out[y];
    }
    std::vector<double> row_in(static_cast<std::size_t>(w));
    std::vector<double> row_out(static_cast<std::size_t>(w));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) row_in[x] = g(x, y);
        detail::edt_1d(row_in.data(), row_out.data(), w, v, z);
        for (int x = 0; x < w; ++x) g(x, y) = row_out[x];
    }
    return g;
}

/// Exact Euclidean distance to the nearest source pixel; zero on sources.
inline DistanceMap exact_edt(const BinaryMask& sources) {
    Raster<double> d = squared_edt(sources);
    for (auto& v : d.pixels()) v = std::sqrt(v);
    return d;
}

}  // namespace edgeps
