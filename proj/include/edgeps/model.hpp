#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "edgeps/raster.hpp"
#include "edgeps/rng.hpp"

namespace edgeps {

/// Square convolution with replicate padding and stride 1. Weights are laid out
/// [out][in][ky][kx].
struct Conv2d {
    int in_channels = 0;
    int out_channels = 0;
    int ksize = 1;
    std::vector<double> weight;
    std::vector<double> bias;

    Conv2d() = default;
    Conv2d(int in, int out, int k)
        : in_channels(in), out_channels(out), ksize(k),
          weight(static_cast<std::size_t>(in) * out * k * k, 0.0), bias(static_cast<std::size_t>(out), 0.0) {
        if (in < 1 || out < 1 || k < 1 || k % 2 == 0) throw Error(ErrorKind::InvalidInput, "bad conv shape");
    }

    std::size_t widx(int o, int i, int ky, int kx) const noexcept {
        return ((static_cast<std::size_t>(o) * in_channels + i) * ksize + ky) * ksize + kx;
    }

    bool same_shape(const Conv2d& other) const noexcept {
        return in_channels == other.in_channels && out_channels == other.out_channels && ksize == other.ksize;
    }

    std::size_t parameter_count() const noexcept { return weight.size() + bias.size(); }

    friend bool operator==(const Conv2d&, const Conv2d&) = default;
};

/// Two 3x3 conv+ReLU encoder layers, a 1x1 decoder head and an optional auxiliary head
/// of identical shape.
struct ModelParams {
    Conv2d conv1;
    Conv2d conv2;
    Conv2d head;
    std::optional<Conv2d> aux_head;

    int classes() const noexcept { return head.out_channels; }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// He-normal weights from the counter RNG, zero biases, no auxiliary head.
inline ModelParams init_model(int classes, int width1, int width2, std::uint64_t seed) {
    ModelParams m{Conv2d(1, width1, 3), Conv2d(width1, width2, 3), Conv2d(width2, classes, 1), std::nullopt};
    CounterRng rng = CounterRng::stream(seed, 0x1217);
    for (Conv2d* layer : {&m.conv1, &m.conv2, &m.head}) {
        const double scale = std::sqrt(2.0 / (layer->in_channels * layer->ksize * layer->ksize));
        for (auto& w : layer->weight) w = scale * rng.normal();
    }
    return m;
}

/// Adds an auxiliary head whose values equal the decoder head's; the two never share storage.
inline ModelParams copy_decoder_head(ModelParams model) {
    model.aux_head = model.head;
    return model;
}

namespace detail {

// Replicate-padded copy of one plane, side (w + 2r) x (h + 2r).
inline void pad_plane(std::span<const double> src, int w, int h, int r, std::vector<double>& dst) {
    const int pw = w + 2 * r;
    const int ph = h + 2 * r;
    dst.resize(static_cast<std::size_t>(pw) * ph);
    for (int y = 0; y < ph; ++y) {
        const int sy = std::clamp(y - r, 0, h - 1);
        for (int x = 0; x < pw; ++x) {
            const int sx = std::clamp(x - r, 0, w - 1);
            dst[static_cast<std::size_t>(y) * pw + x] = src[static_cast<std::size_t>(sy) * w + sx];
        }
    }
}

}  // namespace detail

inline Planes<double> conv_forward(const Conv2d& conv, const Planes<double>& in) {
    if (in.channels() != conv.in_channels) throw Error(ErrorKind::ShapeError, "conv input channel mismatch");
    const int w = in.width(), h = in.height(), r = conv.ksize / 2, pw = w + 2 * r;
    Planes<double> out(conv.out_channels, w, h, 0.0);
    for (int o = 0; o < conv.out_channels; ++o) {
        auto plane = out.plane(o);
        std::fill(plane.begin(), plane.end(), conv.bias[o]);
    }
    std::vector<double> padded;
    for (int i = 0; i < conv.in_channels; ++i) {
        detail::pad_plane(in.plane(i), w, h, r, padded);
        for (int o = 0; o < conv.out_channels; ++o) {
            auto dst = out.plane(o);
            for (int ky = 0; ky < conv.ksize; ++ky) {
                for (int kx = 0; kx < conv.ksize; ++kx) {
                    const double wt = conv.weight[conv.widx(o, i, ky, kx)];
                    for (int y = 0; y < h; ++y) {
                        const double* src = padded.data() + static_cast<std::size_t>(y + ky) * pw + kx;
                        double* row = dst.data() + static_cast<std::size_t>(y) * w;
                        for (int x = 0; x < w; ++x) row[x] += wt * src[x];
                    }
                }
            }
        }
    }
    return out;
}

/// Accumulates parameter gradients into `grad` and, when requested, returns d loss / d input.
inline void conv_backward(const Conv2d& conv, const Planes<double>& in, const Planes<double>& grad_out,
                          Conv2d& grad, Planes<double>* grad_in) {
    const int w = in.width(), h = in.height(), r = conv.ksize / 2, pw = w + 2 * r, ph = h + 2 * r;
    for (int o = 0; o < conv.out_channels; ++o) {
        double s = 0.0;
        for (double g : grad_out.plane(o)) s += g;
        grad.bias[o] += s;
    }
    if (grad_in) *grad_in = Planes<double>(conv.in_channels, w, h, 0.0);
    std::vector<double> padded, grad_padded;
    for (int i = 0; i < conv.in_channels; ++i) {
        detail::pad_plane(in.plane(i), w, h, r, padded);
        if (grad_in) grad_padded.assign(static_cast<std::size_t>(pw) * ph, 0.0);
        for (int o = 0; o < conv.out_channels; ++o) {
            auto g = grad_out.plane(o);
            for (int ky = 0; ky < conv.ksize; ++ky) {
                for (int kx = 0; kx < conv.ksize; ++kx) {
                    const std::size_t wi = conv.widx(o, i, ky, kx);
                    const double wt = conv.weight[wi];
                    double acc = 0.0;
                    for (int y = 0; y < h; ++y) {
                        const double* src = padded.data() + static_cast<std::size_t>(y + ky) * pw + kx;
                        const double* grow = g.data() + static_cast<std::size_t>(y) * w;
                        for (int x = 0; x < w; ++x) acc += grow[x] * src[x];
                        if (grad_in) {
                            double* gp = grad_padded.data() + static_cast<std::size_t>(y + ky) * pw + kx;
                            for (int x = 0; x < w; ++x) gp[x] += wt * grow[x];
                        }
                    }
                    grad.weight[wi] += acc;
                }
            }
        }
        if (grad_in) {
            auto dst = grad_in->plane(i);
            for (int y = 0; y < ph; ++y) {
                const int sy = std::clamp(y - r, 0, h - 1);
                for (int x = 0; x < pw; ++x) {
                    const int sx = std::clamp(x - r, 0, w - 1);
                    dst[static_cast<std::size_t>(sy) * w + sx] += grad_padded[static_cast<std::size_t>(y) * pw + x];
                }
            }
        }
    }
}

inline void relu_inplace(Planes<double>& p) {
    for (auto& v : p.flat()) v = v > 0.0 ? v : 0.0;
}

/// Zeroes gradient entries where the forward activation was clipped.
inline void relu_backward_inplace(const Planes<double>& activated, Planes<double>& grad) {
    auto a = activated.flat();
    auto g = grad.flat();
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!(a[k] > 0.0)) g[k] = 0.0;
    }
}

/// Activations kept for the backward pass.
struct ForwardCache {
    Planes<double> input;
    Planes<double> act1;
    Planes<double> act2;
    Planes<double> main_logits;
    std::optional<Planes<double>> aux_logits;
};

inline Planes<double> as_planes(const SoftMask& image) {
    Planes<double> p(1, image.width(), image.height());
    std::copy(image.pixels().begin(), image.pixels().end(), p.flat().begin());
    return p;
}

inline ForwardCache forward_cached(const ModelParams& model, const SoftMask& image, bool with_aux) {
    if (image.empty()) throw Error(ErrorKind::ShapeError, "empty input image");
    ForwardCache c;
    c.input = as_planes(image);
    c.act1 = conv_forward(model.conv1, c.input);
    relu_inplace(c.act1);
    c.act2 = conv_forward(model.conv2, c.act1);
    relu_inplace(c.act2);
    c.main_logits = conv_forward(model.head, c.act2);
    if (with_aux && model.aux_head) c.aux_logits = conv_forward(*model.aux_head, c.act2);
    return c;
}

struct ForwardOutput {
    Planes<double> main_logits;
    std::optional<Planes<double>> aux_logits;
};

/// Shared encoder features feed both heads.
inline ForwardOutput forward(const ModelParams& model, const SoftMask& image) {
    ForwardCache c = forward_cached(model, image, true);
    return {std::move(c.main_logits), std::move(c.aux_logits)};
}

/// Argmax of the decoder head; ties go to the lowest class id. The auxiliary head is never evaluated.
inline LabelMap infer(const ModelParams& model, const SoftMask& image) {
    const ForwardCache c = forward_cached(model, image, false);
    const auto& logits = c.main_logits;
    Raster<int> ids(image.width(), image.height(), 0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        int best = 0;
        for (int k = 1; k < logits.channels(); ++k) {
            if (logits(k, i) > logits(best, i)) best = k;
        }
        ids[i] = best;
    }
    return LabelMap(std::move(ids), model.classes());
}

/// Same-shaped zero tensors for gradient accumulation.
inline ModelParams zeros_like(const ModelParams& m) {
    ModelParams z{Conv2d(m.conv1.in_channels, m.conv1.out_channels, m.conv1.ksize),
                  Conv2d(m.conv2.in_channels, m.conv2.out_channels, m.conv2.ksize),
                  Conv2d(m.head.in_channels, m.head.out_channels, m.head.ksize), std::nullopt};
    if (m.aux_head) z.aux_head = Conv2d(m.aux_head->in_channels, m.aux_head->out_channels, m.aux_head->ksize);
    return z;
}

/// Every parameter tensor, in a fixed order: conv1, conv2, head, aux head.
template <typename Model, typename Fn>
void for_each_tensor(Model& m, Fn&& fn) {
    fn("conv1.weight", m.conv1.weight);
    fn("conv1.bias", m.conv1.bias);
    fn("conv2.weight", m.conv2.weight);
    fn("conv2.bias", m.conv2.bias);
    fn("head.weight", m.head.weight);
    fn("head.bias", m.head.bias);
    if (m.aux_head) {
        fn("aux_head.weight", m.aux_head->weight);
        fn("aux_head.bias", m.aux_head->bias);
    }
}

}  // namespace edgeps
