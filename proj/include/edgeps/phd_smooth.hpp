#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "edgeps/convolve.hpp"
#include "edgeps/edge_extract.hpp"
#include "edgeps/polar_hausdorff.hpp"

namespace edgeps {

/// Smoothing controls for the differentiable polar Hausdorff surrogate.
///
/// `tau` is the logistic width used both for binarizing the prediction and for
/// thresholding the contour response; `beta` is the log-sum-exp sharpness (1/px)
/// used for every per-ray max/min and the max over rays. The inner/outer split ramps
/// over 2/beta px and is complete 1/beta px before delta.
struct SmoothConfig {
    double tau = 0.05;
    double beta = 20.0;
    /// Rays with soft outer mass at or below this are skipped; above it the ray's weight in
    /// the max over rays ramps up as onset((mass - min) / min).
    double min_outer_mass = 0.5;
};

struct PhdSmoothResult {
    double value = 0.0;
    int rays_used = 0;
    /// d value / d prediction, same shape as the input.
    Raster<double> gradient;
};

namespace detail {

inline double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// 0 for x <= 0, 1 - exp(-x^2) above: quadratic onset, no upper breakpoint.
inline double onset(double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x * x); }

inline double onset_derivative(double x) { return x <= 0.0 ? 0.0 : 2.0 * x * std::exp(-x * x); }

// t^2 / (t^2 + (1 - t)^2) on [0,1], clamped outside; quadratic at both ends.
inline double rational_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t / (t * t + (1.0 - t) * (1.0 - t));
}

inline double rational_step_derivative(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double d = t * t + (1.0 - t) * (1.0 - t);
    return 2.0 * t * (1.0 - t) / (d * d);
}

// log(sum_k c_k exp(beta v_k)) for non-negative c, with normalized weights
// c_k exp(beta v_k) / sum. Zero-weight entries are skipped.
inline double weighted_log_sum_exp(const std::vector<double>& v, const std::vector<double>& c, double beta,
                                   std::vector<double>& weights) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (c[k] > 0.0) top = std::max(top, beta * v[k] + std::log(c[k]));
    }
    weights.assign(v.size(), 0.0);
    double sum = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (c[k] > 0.0) {
            weights[k] = std::exp(beta * v[k] + std::log(c[k]) - top);
            sum += weights[k];
        }
    }
    for (auto& w : weights) w /= sum;
    return top + std::log(sum);
}

}  // namespace detail

/// Differentiable surrogate of phd_exact.
///
/// Hard steps are replaced as follows:
///   binarize        -> b = logistic((p - threshold) / tau)
///   contour         -> m = logistic((K1 * b - 1/2) / tau), K1 the thickness-1 cross kernel,
///                      then g = 1 - exp(-((m - 1/4) / (1/4))^2) for m > 1/4, else 0;
///                      clear non-members get exactly 0
///   centroid        -> g-weighted mean of pixel coordinates
///   ray windows     -> weight onset((sigma^2 - da^2) / (sigma eps / 2)), 0 from |da| = sigma on,
///                      eps = sigma * min(1/2, 2/beta)
///   min / max       -> log-sum-exp at sharpness beta with weights g times window weight
///   inner/outer     -> weights g u and g (1 - u), u a rational step of width 2/beta ending
///                      at rho - soft_min = delta - 1/beta
///   max over rays   -> log-sum-exp over rays weighted by onset of their soft outer mass
/// The surrogate is continuously differentiable; the returned gradient is its exact gradient.
inline PhdSmoothResult phd_smooth(const SoftMask& prediction, const PhdConfig& cfg = {},
                                  const SmoothConfig& smooth = {}) {
    using detail::logistic;
    if (!(smooth.tau > 0.0) || !(smooth.beta > 0.0)) {
        throw Error(ErrorKind::InvalidInput, "tau and beta must be positive");
    }
    if (cfg.rays < 1 || !(cfg.sigma > 0.0)) throw Error(ErrorKind::InvalidInput, "bad ray configuration");
    if (prediction.empty()) throw Error(ErrorKind::NoEdgePixels, "empty prediction");

    const int w = prediction.width();
    const int h = prediction.height();
    const std::size_t npx = prediction.size();
    const double tau = smooth.tau;
    const double beta = smooth.beta;
    const EdgeKernel k1(1);

    Raster<double> b(w, h);
    for (std::size_t i = 0; i < npx; ++i) b[i] = logistic((prediction[i] - cfg.threshold) / tau);
    const Raster<double> response = correlate_replicate<double>(b, k1.weights());
    Raster<double> m(w, h), gm(w, h), dgm(w, h);
    double mass = 0.0, cx = 0.0, cy = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = logistic((response(x, y) - 0.5) / tau);
            const double gate = detail::onset((v - 0.25) / 0.75);
            m(x, y) = v;
            gm(x, y) = gate;
            dgm(x, y) = detail::onset_derivative((v - 0.25) / 0.75) / 0.75;
            mass += gate;
            cx += gate * x;
            cy += gate * y;
        }
    }
    if (mass < 1e-6) throw Error(ErrorKind::DegeneratePrediction, "soft contour mass below 1e-6");
    cx /= mass;
    cy /= mass;

    // Angular windows: near 1 within sigma - eps of the ray, 0 from sigma on.
    const double eps = cfg.sigma * std::min(0.5, 2.0 / beta);
    struct Member {
        std::size_t i;
        double omega;   // angular weight
        double domega;  // d omega / d alpha
    };
    std::vector<double> rho(npx), ux(npx), uy(npx);
    std::vector<std::vector<Member>> window(static_cast<std::size_t>(cfg.rays));
    const bool disjoint = cfg.sigma < std::numbers::pi / cfg.rays;
    auto try_add = [&](std::size_t i, double a, int j) {
        double s = a - ray_angle(j, cfg.rays);
        s -= kTwoPi * std::round(s / kTwoPi);
        const double d = std::fabs(s);
        if (!(d < cfg.sigma)) return;
        const double scale = 0.5 * cfg.sigma * eps;
        const double x = (cfg.sigma * cfg.sigma - s * s) / scale;
        const double omega = detail::onset(x);
        if (omega <= 0.0) return;
        const double domega = -detail::onset_derivative(x) * 2.0 * s / scale;
        window[j].push_back({i, omega, domega});
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = m.index(x, y);
            ux[i] = x - cx;
            uy[i] = y - cy;
            rho[i] = std::hypot(ux[i], uy[i]);
            if (gm[i] <= 0.0) continue;
            double a = rho[i] > 0.0 ? std::atan2(uy[i], ux[i]) : 0.0;
            if (a < 0.0) a += kTwoPi;
            if (disjoint) {
                try_add(i, a, static_cast<int>(std::lround(a * cfg.rays / kTwoPi)) % cfg.rays);
            } else {
                for (int j = 0; j < cfg.rays; ++j) try_add(i, a, j);
            }
        }
    }

    // Inner/outer split: u = 1 - rational_step over [delta - 3/beta, delta - 1/beta]. A
    // member delta from the minimum is fully outer even when sub-unit weights lift the soft minimum.
    const double ramp = 2.0 / beta;
    const double ramp_start = cfg.delta - 1.5 * ramp;
    // exp(beta * (v - V)) / beta, the derivative of a weighted log-sum-exp w.r.t. a weight.
    auto weight_slope = [beta](double z) { return std::exp(std::min(beta * z, 700.0)) / beta; };

    struct RayState {
        std::vector<Member> members;
        std::vector<double> cw;          // contour weight g * omega
        std::vector<double> wd, wp, wq;  // soft-min / inner-max / outer-min weights
        std::vector<double> u, du;       // inner share and d u / d (rho - dmin)
        double dmin = 0.0, inner_max = 0.0, outer_min = 0.0;
        double gap = 0.0;
        double weight = 0.0, dweight = 0.0;  // ray weight and d weight / d outer mass
    };
    std::vector<RayState> used;
    std::vector<double> v, c;
    for (int j = 0; j < cfg.rays; ++j) {
        if (window[j].empty()) continue;
        RayState st;
        st.members = window[j];
        const std::size_t k = st.members.size();
        st.cw.resize(k);
        for (std::size_t t = 0; t < k; ++t) st.cw[t] = gm[st.members[t].i] * st.members[t].omega;

        v.resize(k);
        for (std::size_t t = 0; t < k; ++t) v[t] = -rho[st.members[t].i];
        st.dmin = -detail::weighted_log_sum_exp(v, st.cw, beta, st.wd) / beta;

        st.u.resize(k);
        st.du.resize(k);
        double outer_mass = 0.0, inner_mass = 0.0;
        for (std::size_t t = 0; t < k; ++t) {
            const double x = (rho[st.members[t].i] - st.dmin - ramp_start) / ramp;
            st.u[t] = 1.0 - detail::rational_step(x);
            st.du[t] = -detail::rational_step_derivative(x) / ramp;
            outer_mass += st.cw[t] * (1.0 - st.u[t]);
            inner_mass += st.cw[t] * st.u[t];
        }
        const double mass_x = (outer_mass - smooth.min_outer_mass) / smooth.min_outer_mass;
        st.weight = detail::onset(mass_x);
        st.dweight = detail::onset_derivative(mass_x) / smooth.min_outer_mass;
        if (st.weight <= 0.0 || inner_mass <= 0.0) continue;

        c.resize(k);
        for (std::size_t t = 0; t < k; ++t) {
            v[t] = rho[st.members[t].i];
            c[t] = st.cw[t] * st.u[t];
        }
        st.inner_max = detail::weighted_log_sum_exp(v, c, beta, st.wp) / beta;
        for (std::size_t t = 0; t < k; ++t) {
            v[t] = -rho[st.members[t].i];
            c[t] = st.cw[t] * (1.0 - st.u[t]);
        }
        st.outer_min = -detail::weighted_log_sum_exp(v, c, beta, st.wq) / beta;
        st.gap = st.outer_min - st.inner_max;
        used.push_back(std::move(st));
    }
    if (used.empty()) throw Error(ErrorKind::DegeneratePrediction, "no ray has a soft outer contour");

    std::vector<double> gaps(used.size()), ray_mass(used.size()), ray_weights;
    for (std::size_t r = 0; r < used.size(); ++r) {
        gaps[r] = used[r].gap;
        ray_mass[r] = used[r].weight;
    }
    PhdSmoothResult result;
    result.value = detail::weighted_log_sum_exp(gaps, ray_mass, beta, ray_weights) / beta;
    result.rays_used = static_cast<int>(used.size());

    // Backward pass.
    std::vector<double> g_rho(npx, 0.0), g_gate(npx, 0.0), g_alpha(npx, 0.0);
    for (std::size_t r = 0; r < used.size(); ++r) {
        const RayState& st = used[r];
        const double g_outer = ray_weights[r];
        const double g_inner = -ray_weights[r];
        const double g_mass = weight_slope(st.gap - result.value) * st.dweight;
        const std::size_t k = st.members.size();
        std::vector<double> g_cw(k, 0.0);
        double g_dmin = 0.0;
        for (std::size_t t = 0; t < k; ++t) {
            const std::size_t i = st.members[t].i;
            g_rho[i] += g_inner * st.wp[t] + g_outer * st.wq[t];
            const double e_in = st.u[t] > 0.0 || st.du[t] != 0.0 ? weight_slope(rho[i] - st.inner_max) : 0.0;
            const double e_out =
                st.u[t] < 1.0 || st.du[t] != 0.0 ? -weight_slope(st.outer_min - rho[i]) : 0.0;
            g_cw[t] += g_inner * e_in * st.u[t] + (g_outer * e_out + g_mass) * (1.0 - st.u[t]);
            if (st.du[t] != 0.0) {
                const double g_u = (g_inner * e_in - g_outer * e_out - g_mass) * st.cw[t];
                g_rho[i] += g_u * st.du[t];
                g_dmin -= g_u * st.du[t];
            }
        }
        for (std::size_t t = 0; t < k; ++t) {
            const Member& mb = st.members[t];
            g_rho[mb.i] += g_dmin * st.wd[t];
            g_cw[t] -= g_dmin * weight_slope(st.dmin - rho[mb.i]);
            g_gate[mb.i] += g_cw[t] * mb.omega;
            g_alpha[mb.i] += g_cw[t] * gm[mb.i] * mb.domega;
        }
    }

    double g_cx = 0.0, g_cy = 0.0;
    for (std::size_t i = 0; i < npx; ++i) {
        if (rho[i] == 0.0) continue;
        const double r2 = rho[i] * rho[i];
        g_cx += -g_rho[i] * ux[i] / rho[i] + g_alpha[i] * uy[i] / r2;
        g_cy += -g_rho[i] * uy[i] / rho[i] - g_alpha[i] * ux[i] / r2;
    }
    Raster<double> g_response(w, h);
    for (std::size_t i = 0; i < npx; ++i) {
        const double g = g_gate[i] + (g_cx * ux[i] + g_cy * uy[i]) / mass;
        g_response[i] = g * dgm[i] * m[i] * (1.0 - m[i]) / tau;
    }
    Raster<double> g_b = correlate_replicate_adjoint(g_response, k1.weights());
    result.gradient = Raster<double>(w, h);
    for (std::size_t i = 0; i < npx; ++i) result.gradient[i] = g_b[i] * b[i] * (1.0 - b[i]) / tau;
    return result;
}

/// |smooth PHD - d_e| and its gradient.
inline PhdSmoothResult ph_loss_smooth(const SoftMask& prediction, double thickness, const PhdConfig& cfg = {},
                                      const SmoothConfig& smooth = {}) {
    PhdSmoothResult r = phd_smooth(prediction, cfg, smooth);
    const double diff = r.value - thickness;
    const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    r.value = std::fabs(diff);
    for (auto& g : r.gradient.pixels()) g *= sign;
    return r;
}

}  // namespace edgeps
