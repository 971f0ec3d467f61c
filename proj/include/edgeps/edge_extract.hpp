#pragma once

#include <string>

#include "edgeps/convolve.hpp"
#include "edgeps/raster.hpp"

namespace edgeps {

/// Cross-shaped edge kernel for a band thickness d_e.
///
/// Side n = 2*d_e + 1. The center weight is 4*d_e, the 4*d_e other taps on the
/// central row and column are -1, everything else is 0, so the weights sum to 0
/// and any constant region responds with exactly 0.
class EdgeKernel {
public:
    explicit EdgeKernel(int thickness) : thickness_(thickness) {
        if (thickness < 1) {
            throw Error(ErrorKind::InvalidThickness,
                        "edge thickness must be >= 1, got " + std::to_string(thickness));
        }
        const int n = side();
        weights_ = Raster<int>(n, n, 0);
        for (int i = 0; i < n; ++i) {
            weights_(i, thickness) = -1;
            weights_(thickness, i) = -1;
        }
        weights_(thickness, thickness) = 4 * thickness;
    }

    int thickness() const noexcept { return thickness_; }
    int side() const noexcept { return 2 * thickness_ + 1; }
    const Raster<int>& weights() const noexcept { return weights_; }
    int operator()(int col, int row) const noexcept { return weights_(col, row); }

    friend bool operator==(const EdgeKernel&, const EdgeKernel&) = default;

private:
    int thickness_;
    Raster<int> weights_;
};

inline EdgeKernel kernel_for_thickness(int thickness) { return EdgeKernel(thickness); }

inline Raster<int> convolve_same(const BinaryMask& mask, const EdgeKernel& kernel) {
    return convolve_same(mask, kernel.weights());
}

/// Inner edge band of `region`: pixels whose cross-kernel response is strictly positive.
/// These are region pixels with a complement pixel within `thickness` steps along
/// their row or column. Frame borders never count as boundary (replicate padding).
inline BinaryMask extract_edge_mask(const BinaryMask& region, int thickness) {
    const EdgeKernel kernel(thickness);
    const Raster<int> response = convolve_same(region, kernel);
    BinaryMask edges(region.width(), region.height(), 0);
    for (std::size_t i = 0; i < region.size(); ++i) edges[i] = response[i] > 0 ? 1 : 0;
    return edges;
}

/// Edge GT: each class keeps its id on its own inner band, every other pixel is ignore_index.
/// Ignored GT pixels are not part of any class region and so act as complement.
inline LabelMap extract_edge_label_map(const LabelMap& gt, int thickness) {
    [[maybe_unused]] const EdgeKernel validated(thickness);
    bool any_labelled = false;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (!gt.ignored(i)) {
            any_labelled = true;
            break;
        }
    }
    if (!any_labelled) throw Error(ErrorKind::EmptyGT, "ground truth contains only ignore_index");

    Raster<int> out(gt.width(), gt.height(), gt.ignore_index());
    for (int c = 0; c < gt.classes(); ++c) {
        const BinaryMask region = gt.class_mask(c);
        if (count_set(region) == 0) continue;
        const BinaryMask band = extract_edge_mask(region, thickness);
        for (std::size_t i = 0; i < band.size(); ++i) {
            if (!band[i]) continue;
            if (out[i] != gt.ignore_index()) {
                // Inner bands of disjoint regions cannot overlap.
                throw Error(ErrorKind::InvalidInput, "overlapping class edge bands");
            }
            out[i] = c;
        }
    }
    return LabelMap(std::move(out), gt.classes(), gt.ignore_index());
}

}  // namespace edgeps
