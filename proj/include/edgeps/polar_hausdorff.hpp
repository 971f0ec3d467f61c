#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "edgeps/edge_extract.hpp"
#include "edgeps/raster.hpp"

namespace edgeps {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Hyperparameters of the polar Hausdorff distance. Defaults are sigma 0.1 rad,
/// delta 2 px, binarization threshold 0.5 and the recommended 8 rays.
struct PhdConfig {
    int rays = 8;
    double sigma = 0.1;
    double delta = 2.0;
    double threshold = 0.5;
};

struct PolarPoint {
    double rho;
    double alpha;  // [0, 2pi)
};

/// Contour pixels in polar form around their centroid.
struct PolarContour {
    double center_x = 0.0;
    double center_y = 0.0;
    std::vector<PolarPoint> points;
};

struct RayBin {
    int index = 0;
    double theta = 0.0;
    std::vector<double> member_distances;
};

struct InnerOuterSplit {
    std::vector<double> inner;
    std::vector<double> outer;
};

/// One entry per ray, used or skipped.
struct RayDiagnostic {
    int index = 0;
    double theta = 0.0;
    int members = 0;
    bool used = false;
    double inner_max = std::numeric_limits<double>::quiet_NaN();
    double outer_min = std::numeric_limits<double>::quiet_NaN();
    double gap = std::numeric_limits<double>::quiet_NaN();
};

struct PhdResult {
    double value = 0.0;
    int rays_used = 0;
    std::vector<RayDiagnostic> rays;
};

inline BinaryMask binarize(const SoftMask& prediction, double threshold = 0.5) {
    BinaryMask out(prediction.width(), prediction.height(), 0);
    for (std::size_t i = 0; i < prediction.size(); ++i) out[i] = prediction[i] > threshold ? 1 : 0;
    return out;
}

/// Thickness-1 edge of a binarized band: for an annulus, its inner and outer contours.
inline BinaryMask contour_of_band(const BinaryMask& band) {
    if (count_set(band) == 0) throw Error(ErrorKind::NoEdgePixels, "prediction band is empty");
    return extract_edge_mask(band, 1);
}

inline PolarContour to_polar(const BinaryMask& contour) {
    PolarContour pc;
    double sx = 0.0, sy = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < contour.height(); ++y) {
        for (int x = 0; x < contour.width(); ++x) {
            if (!contour(x, y)) continue;
            sx += x;
            sy += y;
            ++n;
        }
    }
    if (n == 0) throw Error(ErrorKind::NoEdgePixels, "contour has no pixels");
    pc.center_x = sx / static_cast<double>(n);
    pc.center_y = sy / static_cast<double>(n);
    pc.points.reserve(n);
    for (int y = 0; y < contour.height(); ++y) {
        for (int x = 0; x < contour.width(); ++x) {
            if (!contour(x, y)) continue;
            const double dx = x - pc.center_x;
            const double dy = y - pc.center_y;
            const double rho = std::hypot(dx, dy);
            double alpha = 0.0;
            if (rho > 0.0) {
                alpha = std::atan2(dy, dx);
                if (alpha < 0.0) alpha += kTwoPi;
                if (alpha >= kTwoPi) alpha -= kTwoPi;
            }
            pc.points.push_back({rho, alpha});
        }
    }
    return pc;
}

inline double ray_angle(int index, int rays) { return kTwoPi * index / rays; }

/// Shortest angular distance on the circle, in [0, pi].
inline double circular_distance(double a, double b) {
    double d = std::fmod(std::fabs(a - b), kTwoPi);
    return std::min(d, kTwoPi - d);
}

inline std::vector<RayBin> bin_by_ray(const PolarContour& pc, int rays, double sigma) {
    if (rays < 1) throw Error(ErrorKind::InvalidInput, "ray count must be positive");
    if (!(sigma > 0.0)) throw Error(ErrorKind::InvalidInput, "sigma must be positive");
    std::vector<RayBin> bins(static_cast<std::size_t>(rays));
    for (int j = 0; j < rays; ++j) {
        bins[j].index = j;
        bins[j].theta = ray_angle(j, rays);
    }
    for (const auto& p : pc.points) {
        for (auto& bin : bins) {
            if (circular_distance(p.alpha, bin.theta) < sigma) bin.member_distances.push_back(p.rho);
        }
    }
    return bins;
}

/// Members within delta of the closest member are inner intersections, the rest outer.
inline InnerOuterSplit split_inner_outer(const RayBin& bin, double delta = 2.0) {
    if (bin.member_distances.empty()) throw Error(ErrorKind::EmptyRay, "ray has no contour intersections");
    const double dmin = *std::min_element(bin.member_distances.begin(), bin.member_distances.end());
    InnerOuterSplit split;
    for (double d : bin.member_distances) (d - dmin < delta ? split.inner : split.outer).push_back(d);
    return split;
}

/// Polar Hausdorff distance between the inner and outer contours of a predicted band.
/// Rays without intersections or without outer intersections are skipped and reported.
inline PhdResult phd_exact(const SoftMask& prediction, const PhdConfig& cfg = {}) {
    const BinaryMask band = binarize(prediction, cfg.threshold);
    const BinaryMask contour = contour_of_band(band);
    if (count_set(contour) == 0) throw Error(ErrorKind::NoEdgePixels, "band has no contour pixels");
    const PolarContour pc = to_polar(contour);
    const auto bins = bin_by_ray(pc, cfg.rays, cfg.sigma);

    PhdResult result;
    result.value = -std::numeric_limits<double>::infinity();
    result.rays.reserve(bins.size());
    for (const auto& bin : bins) {
        RayDiagnostic diag;
        diag.index = bin.index;
        diag.theta = bin.theta;
        diag.members = static_cast<int>(bin.member_distances.size());
        if (!bin.member_distances.empty()) {
            const auto split = split_inner_outer(bin, cfg.delta);
            diag.inner_max = *std::max_element(split.inner.begin(), split.inner.end());
            if (!split.outer.empty()) {
                diag.outer_min = *std::min_element(split.outer.begin(), split.outer.end());
                diag.gap = diag.outer_min - diag.inner_max;
                diag.used = true;
                result.value = std::max(result.value, diag.gap);
                ++result.rays_used;
            }
        }
        result.rays.push_back(diag);
    }
    if (result.rays_used == 0) {
        throw Error(ErrorKind::DegeneratePrediction, "no ray crosses both an inner and an outer contour");
    }
    return result;
}

/// |PHD - d_e|.
inline double ph_loss(const SoftMask& prediction, double thickness, const PhdConfig& cfg = {}) {
    return std::fabs(phd_exact(prediction, cfg).value - thickness);
}

/// Analytic PHD of a star-shaped band given its inner and outer radius functions:
/// the largest radial gap over the n sampled ray angles.
inline double phd_oracle_star(const std::function<double(double)>& r_inner,
                              const std::function<double(double)>& r_outer, int rays) {
    if (rays < 1) throw Error(ErrorKind::InvalidInput, "ray count must be positive");
    double best = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < rays; ++j) {
        const double theta = ray_angle(j, rays);
        best = std::max(best, r_outer(theta) - r_inner(theta));
    }
    return best;
}

}  // namespace edgeps
