#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "edgeps/pgm.hpp"
#include "edgeps/polar_hausdorff.hpp"
#include "edgeps/raster.hpp"
#include "edgeps/rng.hpp"

namespace edgeps {

enum class ShapeKind { Disk, Rectangle, Ellipse };

/// Star-shaped instance around (cx, cy). Disks use `a` as radius; rectangles use
/// half-sizes (a, b); ellipses use semi-axes (a, b) rotated by `angle`.
struct ShapeInstance {
    int cls = 1;
    ShapeKind kind = ShapeKind::Disk;
    double cx = 0.0;
    double cy = 0.0;
    double a = 1.0;
    double b = 1.0;
    double angle = 0.0;

    bool contains(double x, double y) const noexcept {
        const double dx = x - cx;
        const double dy = y - cy;
        switch (kind) {
            case ShapeKind::Disk: return dx * dx + dy * dy <= a * a;
            case ShapeKind::Rectangle: return std::fabs(dx) <= a && std::fabs(dy) <= b;
            case ShapeKind::Ellipse: {
                const double c = std::cos(angle), s = std::sin(angle);
                const double u = c * dx + s * dy;
                const double v = -s * dx + c * dy;
                return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
            }
        }
        return false;
    }

    double area() const noexcept {
        switch (kind) {
            case ShapeKind::Disk: return std::numbers::pi * a * a;
            case ShapeKind::Rectangle: return (2 * std::floor(a) + 1) * (2 * std::floor(b) + 1);
            case ShapeKind::Ellipse: return std::numbers::pi * a * b;
        }
        return 0.0;
    }
};

struct SceneSpec {
    int size = 64;
    int classes = 3;
    std::vector<ShapeKind> shapes{ShapeKind::Disk, ShapeKind::Rectangle, ShapeKind::Ellipse};
    double min_scale = 7.0;
    double max_scale = 14.0;
    /// Mean intensity per class; empty means evenly spaced in [0.3, 0.7].
    std::vector<double> intensity;
    double noise_sigma = 0.15;
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
};

struct Scene {
    SoftMask image;
    LabelMap gt;
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
    std::vector<ShapeInstance> instances;  // not persisted

    friend bool operator==(const Scene& l, const Scene& r) {
        return l.image == r.image && l.gt == r.gt && l.seed == r.seed && l.index == r.index;
    }
};

inline std::vector<double> class_intensities(const SceneSpec& spec) {
    if (!spec.intensity.empty()) {
        if (static_cast<int>(spec.intensity.size()) != spec.classes) {
            throw Error(ErrorKind::InvalidInput, "one intensity per class required");
        }
        return spec.intensity;
    }
    std::vector<double> out(static_cast<std::size_t>(spec.classes));
    for (int c = 0; c < spec.classes; ++c) {
        out[c] = spec.classes == 1 ? 0.5 : 0.3 + 0.4 * c / (spec.classes - 1);
    }
    return out;
}

/// Background is class 0; each foreground class gets exactly one instance. Instances
/// keep a one-pixel gap from each other and from the frame. The image is intensity plus
/// clipped Gaussian noise, snapped to the 16-bit PGM grid so persistence is lossless.
inline Scene gen_scene(const SceneSpec& spec) {
    if (spec.size < 8 || spec.classes < 1 || spec.min_scale < 1.0 || spec.max_scale < spec.min_scale ||
        spec.shapes.empty() || spec.noise_sigma < 0.0) {
        throw Error(ErrorKind::InvalidInput, "invalid scene spec");
    }
    const auto means = class_intensities(spec);
    CounterRng rng = CounterRng::stream(spec.seed, spec.index);
    const int n = spec.size;
    Raster<int> ids(n, n, 0);
    Scene scene;
    scene.seed = spec.seed;
    scene.index = spec.index;

    for (int c = 1; c < spec.classes; ++c) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            ShapeInstance s;
            s.cls = c;
            s.kind = spec.shapes[rng.below(spec.shapes.size())];
            s.a = rng.uniform(spec.min_scale, spec.max_scale);
            s.b = s.kind == ShapeKind::Disk ? s.a : rng.uniform(spec.min_scale, spec.max_scale);
            s.angle = s.kind == ShapeKind::Ellipse ? rng.uniform(0.0, std::numbers::pi) : 0.0;
            const double reach = std::max(s.a, s.b);
            const double lo = reach + 1.0;
            const double hi = n - 2.0 - reach;
            if (hi <= lo) continue;
            s.cx = rng.uniform(lo, hi);
            s.cy = rng.uniform(lo, hi);

            std::vector<std::size_t> cells;
            bool ok = true;
            for (int y = 0; y < n && ok; ++y) {
                for (int x = 0; x < n && ok; ++x) {
                    if (!s.contains(x, y)) continue;
                    if (x == 0 || y == 0 || x == n - 1 || y == n - 1) ok = false;
                    for (int dy = -1; dy <= 1 && ok; ++dy) {
                        for (int dx = -1; dx <= 1 && ok; ++dx) {
                            if (ids.contains(x + dx, y + dy) && ids(x + dx, y + dy) != 0) ok = false;
                        }
                    }
                    cells.push_back(ids.index(x, y));
                }
            }
            if (!ok || cells.empty()) continue;
            for (auto i : cells) ids[i] = c;
            scene.instances.push_back(s);
            placed = true;
        }
        if (!placed) throw Error(ErrorKind::PlacementError, "could not place instance after 1000 attempts");
    }

    scene.image = SoftMask(n, n);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        double v = means[ids[i]];
        if (spec.noise_sigma > 0.0) v += spec.noise_sigma * rng.normal();
        scene.image[i] = quantized(std::clamp(v, 0.0, 1.0));
    }
    scene.gt = LabelMap(std::move(ids), spec.classes);
    return scene;
}

/// Scenes 0..count-1 of `spec`, each on its own RNG stream.
inline std::vector<Scene> gen_scenes(SceneSpec spec, int count) {
    std::vector<Scene> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
        spec.index = static_cast<std::uint64_t>(i);
        out.push_back(gen_scene(spec));
    }
    return out;
}

// ---- parametric bands ----------------------------------------------------------

struct BandSpec {
    int width = 64;
    int height = 64;
    double cx = 32.0;
    double cy = 32.0;
    std::function<double(double)> r_inner;
    std::function<double(double)> r_outer;

    static BandSpec annulus(double r_in, double r_out, int size) {
        return BandSpec{size, size, size / 2.0, size / 2.0, [r_in](double) { return r_in; },
                        [r_out](double) { return r_out; }};
    }
};

/// Pixels p with r_inner(theta) <= |p - center| <= r_outer(theta), theta the pixel's angle.
inline BinaryMask gen_band(const BandSpec& spec) {
    if (!spec.r_inner || !spec.r_outer) throw Error(ErrorKind::InvalidInput, "band radii not set");
    constexpr int kSamples = 1440;
    for (int k = 0; k < kSamples; ++k) {
        const double t = kTwoPi * k / kSamples;
        const double ri = spec.r_inner(t);
        const double ro = spec.r_outer(t);
        if (!(ri >= 1.0) || !(ro > ri)) throw Error(ErrorKind::InvalidInput, "need r_outer > r_inner >= 1");
        const double x = spec.cx + ro * std::cos(t);
        const double y = spec.cy + ro * std::sin(t);
        if (x <= 0.0 || y <= 0.0 || x >= spec.width - 1.0 || y >= spec.height - 1.0) {
            throw Error(ErrorKind::FrameError, "band reaches the frame");
        }
    }
    BinaryMask out(spec.width, spec.height, 0);
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const double dx = x - spec.cx;
            const double dy = y - spec.cy;
            const double r = std::hypot(dx, dy);
            double t = std::atan2(dy, dx);
            if (t < 0.0) t += kTwoPi;
            if (r >= spec.r_inner(t) && r <= spec.r_outer(t)) {
                if (x == 0 || y == 0 || x == spec.width - 1 || y == spec.height - 1) {
                    throw Error(ErrorKind::FrameError, "band reaches the frame");
                }
                out(x, y) = 1;
            }
        }
    }
    return out;
}

inline SoftMask to_soft(const BinaryMask& m) {
    SoftMask out(m.width(), m.height());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 1.0 : 0.0;
    return out;
}

// ---- dataset directory -----------------------------------------------------------

inline std::string scene_stem(std::uint64_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04llu", static_cast<unsigned long long>(index));
    return buf;
}

/// Writes NNNN_img.pgm (16-bit intensities), NNNN_gt.pgm (labels) and dataset.csv
/// with columns index,seed,C.
inline void save_dataset(const std::filesystem::path& dir, const std::vector<Scene>& scenes) {
    std::filesystem::create_directories(dir);
    std::ostringstream manifest;
    manifest << "index,seed,C\n";
    for (const auto& s : scenes) {
        const std::string stem = scene_stem(s.index);
        save_pgm(s.image, dir / (stem + "_img.pgm"));
        save_pgm(s.gt, dir / (stem + "_gt.pgm"));
        manifest << s.index << ',' << s.seed << ',' << s.gt.classes() << '\n';
    }
    std::ofstream out(dir / "dataset.csv", std::ios::binary);
    if (!out) throw Error(ErrorKind::CorruptDataset, "cannot write manifest in " + dir.string());
    out << manifest.str();
}

/// Scenes in manifest order.
inline std::vector<Scene> load_dataset(const std::filesystem::path& dir) {
    std::ifstream in(dir / "dataset.csv", std::ios::binary);
    if (!in) throw Error(ErrorKind::CorruptDataset, "missing dataset.csv in " + dir.string());
    std::string line;
    if (!std::getline(in, line) || line != "index,seed,C") {
        throw Error(ErrorKind::CorruptDataset, "bad manifest header");
    }
    std::vector<Scene> scenes;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string f_index, f_seed, f_classes;
        if (!std::getline(row, f_index, ',') || !std::getline(row, f_seed, ',') || !std::getline(row, f_classes)) {
            throw Error(ErrorKind::CorruptDataset, "bad manifest row: " + line);
        }
        Scene s;
        int classes = 0;
        try {
            s.index = std::stoull(f_index);
            s.seed = std::stoull(f_seed);
            classes = std::stoi(f_classes);
        } catch (const std::exception&) {
            throw Error(ErrorKind::CorruptDataset, "bad manifest row: " + line);
        }
        const std::string stem = scene_stem(s.index);
        try {
            s.image = load_soft_mask(dir / (stem + "_img.pgm"));
            s.gt = load_label_map(dir / (stem + "_gt.pgm"), classes);
        } catch (const Error& e) {
            throw Error(ErrorKind::CorruptDataset, "scene " + stem + ": " + e.what());
        }
        if (!s.image.same_shape(s.gt)) throw Error(ErrorKind::CorruptDataset, "scene " + stem + ": size mismatch");
        scenes.push_back(std::move(s));
    }
    return scenes;
}

}  // namespace edgeps
