#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "edgeps/classic_losses.hpp"
#include "edgeps/phd_smooth.hpp"
#include "edgeps/trainer.hpp"

namespace edgeps {

/// Central-difference step and pass threshold used by every suite.
struct GradCheckConfig {
    double step = 1e-4;
    double tolerance = 1e-3;
    /// Denominator floor for the relative error, as a fraction of the largest analytic
    /// gradient magnitude; entries below it compare against that scale.
    double floor_fraction = 1e-2;
};

struct GradCheckResult {
    std::string suite;
    std::uint64_t seed = 0;
    std::size_t checked = 0;
    double max_rel_error = 0.0;
    bool passed = false;
};

inline double gradcheck_relative_error(double analytic, double numeric, double floor) {
    return std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), floor});
}

namespace detail {

template <typename F>
double central(F&& f, double& x, double h) {
    const double saved = x;
    x = saved + h;
    const double up = f();
    x = saved - h;
    const double down = f();
    x = saved;
    return (up - down) / (2.0 * h);
}

inline void finish(GradCheckResult& r, const GradCheckConfig& cfg) { r.passed = r.max_rel_error <= cfg.tolerance; }

template <typename Range>
double error_floor(const Range& analytic, const GradCheckConfig& cfg) {
    double top = 0.0;
    for (double v : analytic) top = std::max(top, std::fabs(v));
    return std::max(cfg.floor_fraction * top, 1e-300);
}

}  // namespace detail

/// Cross-entropy gradient w.r.t. logits on a random 4x4, 3-class problem.
inline GradCheckResult gradcheck_ce(std::uint64_t seed, const GradCheckConfig& cfg = {}) {
    CounterRng rng = CounterRng::stream(seed, 0xce);
    constexpr int kClasses = 3, kSide = 4;
    Planes<double> logits(kClasses, kSide, kSide);
    for (auto& v : logits.flat()) v = rng.uniform(-2.0, 2.0);
    Raster<int> ids(kSide, kSide);
    for (auto& v : ids.pixels()) v = rng.uniform() < 0.15 ? kDefaultIgnoreIndex : static_cast<int>(rng.below(kClasses));
    ids[0] = 0;
    const LabelMap target(std::move(ids), kClasses);

    const CrossEntropy analytic = ce_loss(softmax(logits), target);
    GradCheckResult r{"ce_loss", seed, 0, 0.0, false};
    const double floor = detail::error_floor(analytic.grad_logits.flat(), cfg);
    for (std::size_t k = 0; k < logits.size(); ++k) {
        const double numeric =
            detail::central([&] { return ce_loss(softmax(logits), target).loss; }, logits.flat()[k], cfg.step);
        r.max_rel_error = std::max(r.max_rel_error,
                                   gradcheck_relative_error(analytic.grad_logits.flat()[k], numeric, floor));
        ++r.checked;
    }
    detail::finish(r, cfg);
    return r;
}

/// Soft ring prediction: a radial bump between two random radii around a jittered center.
inline SoftMask soft_ring(std::uint64_t seed, int size) {
    CounterRng rng = CounterRng::stream(seed, 0x41);
    const double c = size / 2.0 + rng.uniform(-1.0, 1.0);
    const double r_in = rng.uniform(0.15, 0.22) * size;
    const double r_out = r_in + rng.uniform(0.15, 0.22) * size;
    SoftMask p(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double r = std::hypot(x - c, y - c);
            const double bump = detail::logistic((r - r_in) / 0.3) * detail::logistic((r_out - r) / 0.3);
            p(x, y) = 0.05 + 0.9 * bump;
        }
    }
    return p;
}

/// phd_smooth gradient w.r.t. every pixel of a soft ring prediction.
inline GradCheckResult gradcheck_phd_smooth(std::uint64_t seed, const GradCheckConfig& cfg = {}) {
    CounterRng rng = CounterRng::stream(seed, 0x9d);
    SoftMask p = soft_ring(seed, 32);
    PhdConfig phd;
    phd.rays = 8;
    phd.sigma = 0.3;
    SmoothConfig smooth;
    smooth.tau = rng.uniform(0.14, 0.16);
    smooth.beta = rng.uniform(2.0, 3.0);

    const PhdSmoothResult analytic = phd_smooth(p, phd, smooth);
    GradCheckResult r{"phd_smooth", seed, 0, 0.0, false};
    const double floor = detail::error_floor(analytic.gradient.pixels(), cfg);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double numeric = detail::central([&] { return phd_smooth(p, phd, smooth).value; }, p[i], cfg.step);
        r.max_rel_error = std::max(r.max_rel_error, gradcheck_relative_error(analytic.gradient[i], numeric, floor));
        ++r.checked;
    }
    detail::finish(r, cfg);
    return r;
}

struct CompositeFixture {
    std::vector<TrainSample> samples;
    TrainConfig config;
    ModelParams model;

    std::vector<const TrainSample*> batch() const {
        std::vector<const TrainSample*> out;
        for (const auto& s : samples) out.push_back(&s);
        return out;
    }
};

namespace detail {

inline CompositeFixture build_composite(std::uint64_t seed) {
    SceneSpec spec;
    spec.size = 16;
    spec.classes = 3;
    spec.min_scale = 2.0;
    spec.max_scale = 3.5;
    spec.seed = seed;
    std::vector<TrainSample> samples;
    for (const auto& s : gen_scenes(spec, 2)) samples.push_back(make_sample(s, 1));

    TrainConfig tc;
    tc.edge_thickness = 1;
    tc.width1 = 4;
    tc.width2 = 4;
    tc.smooth.tau = 0.4;
    tc.smooth.beta = 1.0;
    ModelParams model = copy_decoder_head(init_model(spec.classes, tc.width1, tc.width2, seed));
    // Decouple the auxiliary head from the main one.
    CounterRng rng = CounterRng::stream(seed, 0xa0);
    for (auto& b : model.head.bias) b = rng.uniform(-0.1, 0.1);
    for (auto& w : model.aux_head->weight) w += 0.5 * rng.normal();
    for (auto& b : model.aux_head->bias) b = rng.uniform(-1.0, 1.0);

    // Shift each encoder channel's bias so that zero sits in the widest gap between its
    // pre-activations (within the middle 60%), keeping every ReLU input off the kink.
    std::vector<Planes<double>> acts;
    for (const TrainSample& sample : samples) acts.push_back(as_planes(sample.image));
    for (Conv2d* conv : {&model.conv1, &model.conv2}) {
        std::vector<Planes<double>> pre;
        for (const auto& a : acts) pre.push_back(conv_forward(*conv, a));
        for (int c = 0; c < conv->out_channels; ++c) {
            std::vector<double> z;
            for (const auto& p : pre) z.insert(z.end(), p.plane(c).begin(), p.plane(c).end());
            std::sort(z.begin(), z.end());
            const std::size_t lo = z.size() / 5, hi = z.size() - z.size() / 5;
            std::size_t best = lo;
            for (std::size_t i = lo; i + 1 < hi; ++i) {
                if (z[i + 1] - z[i] > z[best + 1] - z[best]) best = i;
            }
            const double shift = 0.5 * (z[best] + z[best + 1]);
            conv->bias[c] -= shift;
            for (auto& p : pre) {
                for (auto& v : p.plane(c)) v -= shift;
            }
        }
        for (auto& p : pre) relu_inplace(p);
        acts = std::move(pre);
    }

    // Place the PH qualification threshold away from every observed edge-pixel count so
    // that no finite-difference step flips a class in or out.
    std::vector<int> counts;
    for (const TrainSample& sample : samples) {
        const Planes<double> probs = softmax(*forward(model, sample.image).aux_logits);
        for (int c = 0; c < probs.channels(); ++c) {
            int n = 0;
            for (double v : probs.plane(c)) n += v > tc.ph.threshold;
            counts.push_back(n);
        }
    }
    int best_gap = -1;
    const int top = *std::max_element(counts.begin(), counts.end());
    for (int t = 4; t <= std::max(4, top); ++t) {
        int gap = 1 << 30;
        for (int n : counts) gap = std::min(gap, n >= t ? n - t : t - 1 - n);
        if (gap > best_gap) {
            best_gap = gap;
            tc.min_edge_pixels = t;
        }
    }
    tc.ph.sigma = 0.3;
    return {std::move(samples), tc, std::move(model)};
}

}  // namespace detail

/// Two 16x16 scenes and a small randomized model with both heads, redrawn from derived
/// seeds until at least one PH term is active.
inline CompositeFixture composite_fixture(std::uint64_t seed) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        try {
            CompositeFixture fx = detail::build_composite(seed * 1000 + attempt);
            if (composite_loss(fx.model, fx.batch(), fx.config, false).losses.ph_terms > 0) return fx;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::PlacementError) throw;
        }
        if (attempt == 999) throw Error(ErrorKind::InvalidInput, "no composite fixture with an active PH term");
    }
}

/// Full trainer objective (main CE + aux CE + aux PH) w.r.t. every parameter.
inline GradCheckResult gradcheck_composite(std::uint64_t seed, const GradCheckConfig& cfg = {}) {
    CompositeFixture fx = composite_fixture(seed);
    ModelParams& model = fx.model;
    const TrainConfig& tc = fx.config;
    const std::vector<const TrainSample*> batch = fx.batch();
    const CompositeResult analytic = composite_loss(model, batch, tc, true);
    GradCheckResult r{"composite", seed, 0, 0.0, false};
    ModelParams grad = analytic.gradient;
    std::vector<std::vector<double>*> params, grads;
    for_each_tensor(model, [&](const char*, std::vector<double>& t) { params.push_back(&t); });
    for_each_tensor(grad, [&](const char*, std::vector<double>& t) { grads.push_back(&t); });
    std::vector<double> all;
    for (const auto* t : grads) all.insert(all.end(), t->begin(), t->end());
    const double floor = detail::error_floor(all, cfg);
    for (std::size_t t = 0; t < params.size(); ++t) {
        for (std::size_t k = 0; k < params[t]->size(); ++k) {
            const double numeric = detail::central([&] { return composite_loss(model, batch, tc, false).losses.total; },
                                                   (*params[t])[k], cfg.step);
            r.max_rel_error = std::max(r.max_rel_error, gradcheck_relative_error((*grads[t])[k], numeric, floor));
            ++r.checked;
        }
    }
    detail::finish(r, cfg);
    return r;
}

}  // namespace edgeps
