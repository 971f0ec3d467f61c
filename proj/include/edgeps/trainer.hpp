#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "edgeps/classic_losses.hpp"
#include "edgeps/edge_extract.hpp"
#include "edgeps/metrics.hpp"
#include "edgeps/model.hpp"
#include "edgeps/phd_smooth.hpp"
#include "edgeps/synthgen.hpp"

namespace edgeps {

struct TrainConfig {
    int edge_thickness = 2;
    double aux_weight = 0.4;  // lambda
    double ph_weight = 0.003; // mu
    PhdConfig ph{};
    SmoothConfig smooth{};
    double learning_rate = 0.5;
    int steps = 300;
    int batch_size = 8;
    std::uint64_t seed = 0;
    int min_edge_pixels = 32;
    int width1 = 8;
    int width2 = 8;
    /// Global gradient-norm cap per step; 0 disables clipping.
    double grad_clip = 2.0;

    void validate() const {
        if (edge_thickness < 1) throw Error(ErrorKind::InvalidThickness, "edge thickness must be >= 1");
        if (aux_weight < 0.0 || ph_weight < 0.0) throw Error(ErrorKind::InvalidInput, "loss weights must be >= 0");
        if (!(learning_rate > 0.0) || steps < 0 || batch_size < 1) {
            throw Error(ErrorKind::InvalidInput, "learning rate and batch size must be positive");
        }
        if (ph.rays < 4) throw Error(ErrorKind::InvalidInput, "need at least 4 rays");
        if (!(smooth.tau > 0.0) || !(smooth.beta > 0.0)) throw Error(ErrorKind::InvalidInput, "tau, beta must be > 0");
        if (width1 < 1 || width2 < 1) throw Error(ErrorKind::InvalidInput, "layer widths must be positive");
        if (grad_clip < 0.0) throw Error(ErrorKind::InvalidInput, "grad_clip must be >= 0");
    }
};

/// One training image with its GT and Edge GT.
struct TrainSample {
    SoftMask image;
    LabelMap gt;
    LabelMap edge_gt;
};

inline TrainSample make_sample(const Scene& scene, int edge_thickness) {
    return {scene.image, scene.gt, extract_edge_label_map(scene.gt, edge_thickness)};
}

struct LossRecord {
    int step = 0;
    double main_ce = 0.0;
    double aux_ce = 0.0;
    double aux_ph = 0.0;
    double total = 0.0;
    int ph_terms = 0;    // class maps that contributed a PH value
    int ph_skipped = 0;  // qualifying class maps whose PH was degenerate
};

struct CompositeResult {
    LossRecord losses;
    ModelParams gradient;
};

namespace detail {

// d loss / d logits given d loss / d probs, through a per-pixel softmax.
inline void softmax_backward_add(const Planes<double>& probs, const Planes<double>& grad_probs,
                                 Planes<double>& grad_logits) {
    const std::size_t n = probs.plane_size();
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (int c = 0; c < probs.channels(); ++c) dot += probs(c, i) * grad_probs(c, i);
        for (int c = 0; c < probs.channels(); ++c) {
            grad_logits(c, i) += probs(c, i) * (grad_probs(c, i) - dot);
        }
    }
}

inline void scale_add(std::span<double> dst, std::span<const double> src, double s) {
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += s * src[k];
}

}  // namespace detail

/// Batch-mean loss main_ce + lambda * aux_ce + mu * aux_ph and, if requested, its exact
/// gradient. The auxiliary branch is skipped entirely when lambda == mu == 0 or the
/// model has no auxiliary head, so such runs follow the baseline bit for bit.
inline CompositeResult composite_loss(const ModelParams& model, const std::vector<const TrainSample*>& batch,
                                      const TrainConfig& cfg, bool want_gradient = true) {
    if (batch.empty()) throw Error(ErrorKind::InvalidInput, "empty batch");
    const bool use_aux = model.aux_head.has_value() && (cfg.aux_weight > 0.0 || cfg.ph_weight > 0.0);
    const double inv_batch = 1.0 / static_cast<double>(batch.size());

    CompositeResult out;
    if (want_gradient) out.gradient = zeros_like(model);
    LossRecord& rec = out.losses;

    for (const TrainSample* sample : batch) {
        const ForwardCache fc = forward_cached(model, sample->image, use_aux);
        const Planes<double> main_probs = softmax(fc.main_logits);
        const CrossEntropy main_ce = ce_loss(main_probs, sample->gt);
        rec.main_ce += main_ce.loss * inv_batch;

        Planes<double> grad_act2;
        if (want_gradient) {
            Planes<double> g_main = main_ce.grad_logits;
            for (auto& v : g_main.flat()) v *= inv_batch;
            conv_backward(model.head, fc.act2, g_main, out.gradient.head, &grad_act2);
        }

        if (use_aux) {
            const Planes<double> aux_probs = softmax(*fc.aux_logits);
            Planes<double> g_aux(aux_probs.channels(), aux_probs.width(), aux_probs.height(), 0.0);

            bool has_edges = false;
            for (std::size_t i = 0; i < sample->edge_gt.size(); ++i) {
                if (!sample->edge_gt.ignored(i)) {
                    has_edges = true;
                    break;
                }
            }
            if (cfg.aux_weight > 0.0 && has_edges) {
                const CrossEntropy aux_ce = ce_loss(aux_probs, sample->edge_gt);
                rec.aux_ce += aux_ce.loss * inv_batch;
                detail::scale_add(g_aux.flat(), aux_ce.grad_logits.flat(), cfg.aux_weight * inv_batch);
            }

            if (cfg.ph_weight > 0.0) {
                std::vector<std::pair<int, PhdSmoothResult>> terms;
                for (int c = 0; c < aux_probs.channels(); ++c) {
                    SoftMask prob = aux_probs.plane_raster(c);
                    int predicted = 0;
                    for (double v : prob.pixels()) predicted += v > cfg.ph.threshold;
                    if (predicted < cfg.min_edge_pixels) continue;
                    try {
                        terms.emplace_back(c, ph_loss_smooth(prob, cfg.edge_thickness, cfg.ph, cfg.smooth));
                    } catch (const Error& e) {
                        if (e.kind() != ErrorKind::DegeneratePrediction && e.kind() != ErrorKind::NoEdgePixels) throw;
                        ++rec.ph_skipped;
                    }
                }
                if (!terms.empty()) {
                    const double inv_terms = 1.0 / static_cast<double>(terms.size());
                    Planes<double> g_probs(aux_probs.channels(), aux_probs.width(), aux_probs.height(), 0.0);
                    for (const auto& [c, term] : terms) {
                        rec.aux_ph += term.value * inv_terms * inv_batch;
                        detail::scale_add(g_probs.plane(c), term.gradient.pixels(),
                                          cfg.ph_weight * inv_terms * inv_batch);
                    }
                    rec.ph_terms += static_cast<int>(terms.size());
                    detail::softmax_backward_add(aux_probs, g_probs, g_aux);
                }
            }

            if (want_gradient) {
                Planes<double> grad_act2_aux;
                conv_backward(*model.aux_head, fc.act2, g_aux, *out.gradient.aux_head, &grad_act2_aux);
                detail::scale_add(grad_act2.flat(), grad_act2_aux.flat(), 1.0);
            }
        }

        if (want_gradient) {
            relu_backward_inplace(fc.act2, grad_act2);
            Planes<double> grad_act1;
            conv_backward(model.conv2, fc.act1, grad_act2, out.gradient.conv2, &grad_act1);
            relu_backward_inplace(fc.act1, grad_act1);
            conv_backward(model.conv1, fc.input, grad_act1, out.gradient.conv1, nullptr);
        }
    }
    rec.total = rec.main_ce + cfg.aux_weight * rec.aux_ce + cfg.ph_weight * rec.aux_ph;
    return out;
}

/// One plain gradient-descent step.
inline std::pair<ModelParams, LossRecord> train_step(ModelParams model, const std::vector<const TrainSample*>& batch,
                                                     const TrainConfig& cfg) {
    CompositeResult r = composite_loss(model, batch, cfg, true);
    double step = cfg.learning_rate;
    if (cfg.grad_clip > 0.0) {
        double sq = 0.0;
        for_each_tensor(r.gradient, [&](const char*, const std::vector<double>& t) {
            for (double v : t) sq += v * v;
        });
        const double norm = std::sqrt(sq);
        if (norm > cfg.grad_clip) step *= cfg.grad_clip / norm;
    }
    auto apply = [&](std::vector<double>& param, const std::vector<double>& grad) {
        for (std::size_t k = 0; k < param.size(); ++k) param[k] -= step * grad[k];
    };
    apply(model.conv1.weight, r.gradient.conv1.weight);
    apply(model.conv1.bias, r.gradient.conv1.bias);
    apply(model.conv2.weight, r.gradient.conv2.weight);
    apply(model.conv2.bias, r.gradient.conv2.bias);
    apply(model.head.weight, r.gradient.head.weight);
    apply(model.head.bias, r.gradient.head.bias);
    if (model.aux_head && r.gradient.aux_head) {
        apply(model.aux_head->weight, r.gradient.aux_head->weight);
        apply(model.aux_head->bias, r.gradient.aux_head->bias);
    }
    return {std::move(model), r.losses};
}

/// Indices drawn for step `step`; a pure function of (seed, step).
inline std::vector<std::size_t> batch_indices(std::uint64_t seed, int step, std::size_t pool, int batch_size) {
    CounterRng rng = CounterRng::stream(seed ^ 0xba7c4ULL, static_cast<std::uint64_t>(step));
    std::vector<std::size_t> idx(static_cast<std::size_t>(batch_size));
    for (auto& i : idx) i = static_cast<std::size_t>(rng.below(pool));
    return idx;
}

struct TrainRun {
    ModelParams model;
    std::vector<LossRecord> steps;
};

inline TrainRun train(ModelParams model, const std::vector<TrainSample>& samples, const TrainConfig& cfg) {
    cfg.validate();
    if (samples.empty()) throw Error(ErrorKind::InvalidInput, "no training samples");
    TrainRun run;
    run.steps.reserve(static_cast<std::size_t>(cfg.steps));
    std::vector<const TrainSample*> batch;
    for (int s = 0; s < cfg.steps; ++s) {
        batch.clear();
        for (auto i : batch_indices(cfg.seed, s, samples.size(), cfg.batch_size)) batch.push_back(&samples[i]);
        auto [next, rec] = train_step(std::move(model), batch, cfg);
        model = std::move(next);
        rec.step = s;
        run.steps.push_back(rec);
    }
    run.model = std::move(model);
    return run;
}

inline ConfusionMatrix evaluate(const ModelParams& model, const std::vector<TrainSample>& samples) {
    ConfusionMatrix cm(model.classes());
    for (const auto& s : samples) cm = accumulate(std::move(cm), infer(model, s.image), s.gt);
    return cm;
}

struct ConditionReport {
    std::string name;
    double aux_weight = 0.0;
    double ph_weight = 0.0;
    std::vector<LossRecord> steps;
    ConfusionMatrix val{1};
    double miou = 0.0;
    double macc = 0.0;
    ModelParams model;
};

struct TrainReport {
    TrainConfig config;
    std::vector<ConditionReport> conditions;  // baseline, eps, eps_ph
};

/// Even-indexed scenes train, odd-indexed scenes validate.
inline std::pair<std::vector<TrainSample>, std::vector<TrainSample>> split_by_parity(const std::vector<Scene>& scenes,
                                                                                      int edge_thickness) {
    std::vector<TrainSample> train_set, val_set;
    for (const auto& s : scenes) {
        (s.index % 2 == 0 ? train_set : val_set).push_back(make_sample(s, edge_thickness));
    }
    return {std::move(train_set), std::move(val_set)};
}

/// Baseline, EPS and EPS+PH trained from the same initial weights and batch order.
inline TrainReport run_experiment(const TrainConfig& cfg, const std::vector<Scene>& dataset) {
    cfg.validate();
    if (dataset.empty()) throw Error(ErrorKind::InvalidInput, "empty dataset");
    const int classes = dataset.front().gt.classes();
    auto [train_set, val_set] = split_by_parity(dataset, cfg.edge_thickness);
    if (train_set.empty() || val_set.empty()) throw Error(ErrorKind::InvalidInput, "need both train and val scenes");

    const ModelParams init = init_model(classes, cfg.width1, cfg.width2, cfg.seed);
    struct Condition {
        const char* name;
        double lambda;
        double mu;
    };
    const Condition conditions[] = {
        {"baseline", 0.0, 0.0}, {"eps", cfg.aux_weight, 0.0}, {"eps_ph", cfg.aux_weight, cfg.ph_weight}};

    TrainReport report{cfg, {}};
    for (const auto& cond : conditions) {
        TrainConfig c = cfg;
        c.aux_weight = cond.lambda;
        c.ph_weight = cond.mu;
        const bool with_aux = cond.lambda > 0.0 || cond.mu > 0.0;
        TrainRun run = train(with_aux ? copy_decoder_head(init) : init, train_set, c);
        ConditionReport cr;
        cr.name = cond.name;
        cr.aux_weight = cond.lambda;
        cr.ph_weight = cond.mu;
        cr.steps = std::move(run.steps);
        cr.val = evaluate(run.model, val_set);
        cr.miou = miou(cr.val);
        cr.macc = macc(cr.val);
        cr.model = std::move(run.model);
        report.conditions.push_back(std::move(cr));
    }
    return report;
}

/// `step,main_ce,aux_ce,aux_ph,total`.
inline std::string steps_csv(const std::vector<LossRecord>& steps) {
    std::ostringstream out;
    out << "step,main_ce,aux_ce,aux_ph,total\n";
    for (const auto& r : steps) {
        out << r.step << ',' << format_fixed(r.main_ce, 9) << ',' << format_fixed(r.aux_ce, 9) << ','
            << format_fixed(r.aux_ph, 9) << ',' << format_fixed(r.total, 9) << '\n';
    }
    return out.str();
}

/// `condition,mIoU,mAcc`, one row per condition.
inline std::string summary_csv(const TrainReport& report) {
    std::ostringstream out;
    out << "condition,mIoU,mAcc\n";
    for (const auto& c : report.conditions) {
        out << c.name << ',' << format_fixed(c.miou, 4) << ',' << format_fixed(c.macc, 4) << '\n';
    }
    return out.str();
}

}  // namespace edgeps
