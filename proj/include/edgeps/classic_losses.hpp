#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "edgeps/distance_transform.hpp"
#include "edgeps/polar_hausdorff.hpp"
#include "edgeps/raster.hpp"

namespace edgeps {

/// phi_G: negative inside G, positive outside, |phi| = distance to G's boundary pixels.
using SignedLevelSet = Raster<double>;

struct PixelPoint {
    int x;
    int y;
    friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

struct BoundaryPointSet {
    std::vector<PixelPoint> points;
};

/// Region pixels with a 4-neighbour outside the region. Pixels past the frame are
/// not treated as outside.
inline BinaryMask boundary_mask(const BinaryMask& region) {
    BinaryMask out(region.width(), region.height(), 0);
    for (int y = 0; y < region.height(); ++y) {
        for (int x = 0; x < region.width(); ++x) {
            if (!region(x, y)) continue;
            const bool edge = (x > 0 && !region(x - 1, y)) || (x + 1 < region.width() && !region(x + 1, y)) ||
                              (y > 0 && !region(x, y - 1)) || (y + 1 < region.height() && !region(x, y + 1));
            out(x, y) = edge ? 1 : 0;
        }
    }
    return out;
}

inline BoundaryPointSet boundary_points(const BinaryMask& region) {
    const BinaryMask b = boundary_mask(region);
    BoundaryPointSet set;
    for (int y = 0; y < b.height(); ++y) {
        for (int x = 0; x < b.width(); ++x) {
            if (b(x, y)) set.points.push_back({x, y});
        }
    }
    return set;
}

inline SignedLevelSet signed_level_set(const BinaryMask& region) {
    const std::size_t inside = count_set(region);
    if (inside == 0 || inside == region.size()) {
        throw Error(ErrorKind::DegenerateRegion, "level set needs a region that is neither empty nor full");
    }
    SignedLevelSet phi = exact_edt(boundary_mask(region));
    for (std::size_t i = 0; i < phi.size(); ++i) {
        if (region[i]) phi[i] = -phi[i];
    }
    return phi;
}

/// Mean over pixels of phi_G * S (the boundary-loss integral normalized by pixel count).
inline double bd_loss(const SoftMask& prediction, const SignedLevelSet& phi) {
    if (!prediction.same_shape(phi)) throw Error(ErrorKind::ShapeError, "prediction and level set differ in shape");
    double sum = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) sum += phi[i] * prediction[i];
    return sum / static_cast<double>(phi.size());
}

inline double bd_loss(const SoftMask& prediction, const BinaryMask& region) {
    if (!prediction.same_shape(region)) throw Error(ErrorKind::ShapeError, "prediction and GT differ in shape");
    return bd_loss(prediction, signed_level_set(region));
}

/// max over a in `from` of the distance to the nearest point of `to`.
inline double directed_hausdorff(const BoundaryPointSet& from, const BoundaryPointSet& to) {
    if (from.points.empty() || to.points.empty()) throw Error(ErrorKind::EmptyBoundary, "empty point set");
    int x0 = std::numeric_limits<int>::max(), y0 = x0;
    int x1 = std::numeric_limits<int>::min(), y1 = x1;
    for (const auto* set : {&from, &to}) {
        for (const auto& p : set->points) {
            x0 = std::min(x0, p.x);
            y0 = std::min(y0, p.y);
            x1 = std::max(x1, p.x);
            y1 = std::max(y1, p.y);
        }
    }
    BinaryMask target(x1 - x0 + 1, y1 - y0 + 1, 0);
    for (const auto& p : to.points) target(p.x - x0, p.y - y0) = 1;
    const Raster<double> d2 = squared_edt(target);
    double worst = 0.0;
    for (const auto& p : from.points) worst = std::max(worst, d2(p.x - x0, p.y - y0));
    return std::sqrt(worst);
}

/// Symmetric Hausdorff distance between the boundary of the binarized prediction and
/// the boundary of the GT region.
inline double hd_loss(const SoftMask& prediction, const BinaryMask& region, double threshold = 0.5) {
    if (!prediction.same_shape(region)) throw Error(ErrorKind::ShapeError, "prediction and GT differ in shape");
    const BoundaryPointSet predicted = boundary_points(binarize(prediction, threshold));
    const BoundaryPointSet truth = boundary_points(region);
    if (predicted.points.empty()) throw Error(ErrorKind::EmptyBoundary, "prediction has no boundary");
    if (truth.points.empty()) throw Error(ErrorKind::EmptyBoundary, "GT has no boundary");
    return std::max(directed_hausdorff(predicted, truth), directed_hausdorff(truth, predicted));
}

/// Per-pixel softmax over channels.
inline Planes<double> softmax(const Planes<double>& logits) {
    Planes<double> probs(logits.channels(), logits.width(), logits.height());
    const std::size_t n = logits.plane_size();
    const int c_count = logits.channels();
    for (std::size_t i = 0; i < n; ++i) {
        double top = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < c_count; ++c) top = std::max(top, logits(c, i));
        double sum = 0.0;
        for (int c = 0; c < c_count; ++c) {
            const double e = std::exp(logits(c, i) - top);
            probs(c, i) = e;
            sum += e;
        }
        for (int c = 0; c < c_count; ++c) probs(c, i) /= sum;
    }
    return probs;
}

struct CrossEntropy {
    double loss = 0.0;
    /// d loss / d logits, assuming `probs` is the softmax of those logits.
    Planes<double> grad_logits;
    std::size_t counted = 0;
};

/// Mean -log p(target) over non-ignored pixels.
inline CrossEntropy ce_loss(const Planes<double>& probs, const LabelMap& target) {
    if (probs.width() != target.width() || probs.height() != target.height()) {
        throw Error(ErrorKind::ShapeError, "probabilities and target differ in shape");
    }
    if (probs.channels() != target.classes()) {
        throw Error(ErrorKind::ShapeError, "channel count differs from class count");
    }
    const std::size_t n = probs.plane_size();
    const int c_count = probs.channels();
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int c = 0; c < c_count; ++c) sum += probs(c, i);
        if (std::fabs(sum - 1.0) > 1e-6) throw Error(ErrorKind::InvalidInput, "probabilities do not sum to 1");
    }
    CrossEntropy out;
    out.grad_logits = Planes<double>(c_count, probs.width(), probs.height(), 0.0);
    for (std::size_t i = 0; i < n; ++i) out.counted += !target.ignored(i);
    if (out.counted == 0) throw Error(ErrorKind::EmptyTarget, "every target pixel is ignored");

    const double scale = 1.0 / static_cast<double>(out.counted);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (target.ignored(i)) continue;
        const int t = target[i];
        total -= std::log(std::max(probs(t, i), std::numeric_limits<double>::min()));
        for (int c = 0; c < c_count; ++c) out.grad_logits(c, i) = (probs(c, i) - (c == t ? 1.0 : 0.0)) * scale;
    }
    out.loss = total * scale;
    return out;
}

}  // namespace edgeps
