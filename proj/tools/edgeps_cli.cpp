#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "edgeps/edgeps.hpp"

namespace fs = std::filesystem;
using namespace edgeps;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDegenerate = 4;

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput:
        case ErrorKind::InvalidThickness:
            return kExitUsage;
        case ErrorKind::FormatError:
        case ErrorKind::ShapeError:
        case ErrorKind::CorruptDataset:
        case ErrorKind::FrameError:
            return kExitData;
        default:
            return kExitDegenerate;
    }
}

std::string num(double v) { return std::isnan(v) ? "nan" : format_fixed(v, 6); }

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::FormatError, "cannot write " + path.string());
    out << text;
}

struct PhdArgs {
    std::string input;
    PhdConfig cfg;
    bool smooth = false;
    SmoothConfig smooth_cfg;
    bool loss = false;
    int de = 2;
};

int run_phd(const PhdArgs& a) {
    const SoftMask pred = load_soft_mask(a.input);
    if (a.smooth) {
        const PhdSmoothResult r = phd_smooth(pred, a.cfg, a.smooth_cfg);
        std::cout << "phd," << num(r.value) << '\n';
        if (a.loss) std::cout << "ph_loss," << num(std::fabs(r.value - a.de)) << '\n';
        std::cout << "rays_used," << r.rays_used << '\n';
        return 0;
    }
    const PhdResult r = phd_exact(pred, a.cfg);
    std::cout << "phd," << num(r.value) << '\n';
    if (a.loss) std::cout << "ph_loss," << num(std::fabs(r.value - a.de)) << '\n';
    std::cout << "ray,theta,members,used,inner_max,outer_min,gap\n";
    for (const auto& d : r.rays) {
        std::cout << d.index << ',' << num(d.theta) << ',' << d.members << ',' << (d.used ? 1 : 0) << ','
                  << num(d.inner_max) << ',' << num(d.outer_min) << ',' << num(d.gap) << '\n';
    }
    return 0;
}

int run_loss(const std::string& kind, const std::string& pred_path, const std::string& gt_path, int cls,
             double threshold) {
    const SoftMask pred = load_soft_mask(pred_path);
    double value = 0.0;
    if (kind == "ce") {
        // Two-class problem: the prediction is p(class 1).
        const LabelMap gt = load_label_map(gt_path, 2);
        if (!pred.same_shape(gt)) throw Error(ErrorKind::ShapeError, "prediction and GT differ in shape");
        Planes<double> probs(2, pred.width(), pred.height());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            probs.plane(0)[i] = 1.0 - pred[i];
            probs.plane(1)[i] = pred[i];
        }
        value = ce_loss(probs, gt).loss;
    } else {
        const LabelMap gt = load_label_map(gt_path);
        if (!pred.same_shape(gt)) throw Error(ErrorKind::ShapeError, "prediction and GT differ in shape");
        const BinaryMask region = gt.class_mask(cls);
        value = kind == "bd" ? bd_loss(pred, region) : hd_loss(pred, region, threshold);
    }
    std::cout << "loss," << num(value) << '\n';
    return 0;
}

int run_sweep(int de, int tmin, int tmax, const std::string& out, double r_in, int size, const PhdConfig& cfg) {
    if (de < 1) throw Error(ErrorKind::InvalidThickness, "--de must be >= 1");
    if (tmin < 1 || tmin > tmax) throw Error(ErrorKind::InvalidInput, "need 1 <= --tmin <= --tmax");
    std::vector<double> losses;
    for (int t = tmin; t <= tmax; ++t) {
        const SoftMask band = to_soft(gen_band(BandSpec::annulus(r_in, r_in + t, size)));
        try {
            losses.push_back(ph_loss(band, de, cfg));
        } catch (const Error& e) {
            if (exit_code(e.kind()) != kExitDegenerate) throw;
            losses.push_back(std::nan(""));
        }
    }
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        if (!std::isnan(losses[i]) && (!best || losses[i] < losses[*best])) best = i;
    }
    std::string csv = "t,ph_loss,argmin\n";
    for (std::size_t i = 0; i < losses.size(); ++i) {
        csv += std::to_string(tmin + static_cast<int>(i)) + "," + num(losses[i]) + "," + (best == i ? "1" : "0") + "\n";
    }
    write_text(out, csv);
    if (!best) throw Error(ErrorKind::DegeneratePrediction, "every band in the sweep was degenerate");
    std::cout << "argmin," << tmin + static_cast<int>(*best) << '\n';
    return 0;
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& suffix) {
    if (!fs::is_directory(dir)) throw Error(ErrorKind::FormatError, "not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (e.is_regular_file() && name.size() >= suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
            out.push_back(e.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

int run_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& out, int classes) {
    const std::vector<fs::path> preds = sorted_files(pred_dir, ".pgm");
    if (preds.empty()) throw Error(ErrorKind::EmptyEvaluation, "no prediction images in " + pred_dir);

    // NNNN_pred.pgm pairs with NNNN_gt.pgm; any other name pairs with the same name.
    std::vector<std::pair<PgmImage, PgmImage>> pairs;
    int top = 0;
    for (const auto& p : preds) {
        const std::string name = p.filename().string();
        fs::path g = fs::path(gt_dir) / name;
        if (name.size() > 9 && name.ends_with("_pred.pgm")) {
            const fs::path alt = fs::path(gt_dir) / (name.substr(0, name.size() - 9) + "_gt.pgm");
            if (fs::exists(alt)) g = alt;
        }
        if (!fs::exists(g)) throw Error(ErrorKind::FormatError, "missing GT for " + name);
        pairs.emplace_back(read_pgm(p), read_pgm(g));
        for (const auto* img : {&pairs.back().first, &pairs.back().second}) {
            for (auto v : img->samples) {
                if (v != kDefaultIgnoreIndex) top = std::max<int>(top, v);
            }
        }
    }
    if (classes == 0) classes = top + 1;
    ConfusionMatrix cm(classes);
    for (const auto& [p, g] : pairs) cm = accumulate(std::move(cm), to_label_map(p, classes), to_label_map(g, classes));
    if (cm.total() == 0) throw Error(ErrorKind::EmptyEvaluation, "no labelled GT pixels");
    const std::string csv = metrics_csv(cm);
    write_text(out, csv);
    std::cout << csv;
    return 0;
}

int run_train(const std::string& data, const std::string& out, const TrainConfig& cfg) {
    const std::vector<Scene> scenes = load_dataset(data);
    const TrainReport report = run_experiment(cfg, scenes);
    const fs::path dir(out);
    fs::create_directories(dir);
    for (const auto& c : report.conditions) {
        write_text(dir / (c.name + "_steps.csv"), steps_csv(c.steps));
        write_text(dir / (c.name + "_metrics.csv"), metrics_csv(c.val));
        const fs::path pred_dir = dir / (c.name + "_pred");
        fs::create_directories(pred_dir);
        for (const auto& s : scenes) {
            if (s.index % 2 == 0) continue;
            save_pgm(infer(c.model, s.image), pred_dir / (scene_stem(s.index) + "_pred.pgm"));
        }
    }
    const std::string summary = summary_csv(report);
    write_text(dir / "summary.csv", summary);
    std::cout << summary;
    return 0;
}

int run_gradcheck(int seeds) {
    bool ok = true;
    std::cout << "suite,seed,checked,max_rel_error,passed\n";
    for (auto* suite : {&gradcheck_ce, &gradcheck_phd_smooth, &gradcheck_composite}) {
        for (int s = 0; s < seeds; ++s) {
            const GradCheckResult r = (*suite)(static_cast<std::uint64_t>(s), GradCheckConfig{});
            char err[32];
            std::snprintf(err, sizeof err, "%.3e", r.max_rel_error);
            std::cout << r.suite << ',' << r.seed << ',' << r.checked << ',' << err << ',' << (r.passed ? 1 : 0) << '\n';
            ok = ok && r.passed;
        }
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Edge-GT extraction, polar Hausdorff loss and EPS training on synthetic scenes"};
    app.require_subcommand(1);

    int kernel_de = 0;
    auto* kernel = app.add_subcommand("kernel", "print the edge kernel for thickness d_e");
    kernel->add_option("--de", kernel_de, "edge thickness")->required();

    std::string ee_in, ee_out;
    int ee_de = 0, ee_classes = 0;
    auto* extract = app.add_subcommand("extract-edges", "extract Edge GT from a label PGM");
    extract->add_option("--in", ee_in)->required();
    extract->add_option("--de", ee_de)->required();
    extract->add_option("--out", ee_out)->required();
    extract->add_option("--classes", ee_classes, "class count (default: max id + 1)");

    PhdArgs phd_args;
    auto* phd = app.add_subcommand("phd", "polar Hausdorff distance of a prediction PGM");
    phd->add_option("--in", phd_args.input)->required();
    phd->add_option("--n", phd_args.cfg.rays, "ray count")->capture_default_str();
    phd->add_option("--sigma", phd_args.cfg.sigma)->capture_default_str();
    phd->add_option("--delta", phd_args.cfg.delta)->capture_default_str();
    phd->add_option("--threshold", phd_args.cfg.threshold)->capture_default_str();
    phd->add_flag("--smooth", phd_args.smooth, "use the differentiable surrogate");
    phd->add_option("--tau", phd_args.smooth_cfg.tau)->capture_default_str();
    phd->add_option("--beta", phd_args.smooth_cfg.beta)->capture_default_str();
    phd->add_flag("--loss", phd_args.loss, "also print |phd - d_e|");
    phd->add_option("--de", phd_args.de)->capture_default_str();

    std::string loss_kind, loss_pred, loss_gt;
    int loss_class = 1;
    double loss_threshold = 0.5;
    auto* loss = app.add_subcommand("loss", "boundary, Hausdorff or cross-entropy loss");
    loss->add_option("--kind", loss_kind)->required()->check(CLI::IsMember({"bd", "hd", "ce"}));
    loss->add_option("--pred", loss_pred)->required();
    loss->add_option("--gt", loss_gt)->required();
    loss->add_option("--class", loss_class, "GT class used as the region for bd/hd")->capture_default_str();
    loss->add_option("--threshold", loss_threshold, "hd binarization threshold")->capture_default_str();

    int sw_de = 0, sw_tmin = 1, sw_tmax = 10, sw_size = 64;
    double sw_rin = 10.0;
    std::string sw_out;
    PhdConfig sw_cfg;
    auto* sweep = app.add_subcommand("sweep-thickness", "PH loss of annulus bands over a thickness range");
    sweep->add_option("--de", sw_de)->required();
    sweep->add_option("--tmin", sw_tmin)->required();
    sweep->add_option("--tmax", sw_tmax)->required();
    sweep->add_option("--out", sw_out)->required();
    sweep->add_option("--rin", sw_rin, "inner radius")->capture_default_str();
    sweep->add_option("--size", sw_size, "image side")->capture_default_str();
    sweep->add_option("--n", sw_cfg.rays)->capture_default_str();
    sweep->add_option("--sigma", sw_cfg.sigma)->capture_default_str();
    sweep->add_option("--delta", sw_cfg.delta)->capture_default_str();

    SceneSpec gen_spec;
    int gen_count = 200;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen-data", "write a synthetic segmentation dataset");
    gen->add_option("--out", gen_out)->required();
    gen->add_option("--count", gen_count)->capture_default_str();
    gen->add_option("--size", gen_spec.size)->capture_default_str();
    gen->add_option("--classes", gen_spec.classes)->capture_default_str();
    gen->add_option("--noise", gen_spec.noise_sigma)->capture_default_str();
    gen->add_option("--min-scale", gen_spec.min_scale)->capture_default_str();
    gen->add_option("--max-scale", gen_spec.max_scale)->capture_default_str();
    gen->add_option("--seed", gen_spec.seed)->capture_default_str();

    TrainConfig tc;
    std::string train_data, train_out;
    auto* train_cmd = app.add_subcommand("train", "train baseline, EPS and EPS+PH on a dataset");
    train_cmd->add_option("--data", train_data)->required();
    train_cmd->add_option("--out", train_out)->required();
    train_cmd->add_option("--steps", tc.steps)->capture_default_str();
    train_cmd->add_option("--batch", tc.batch_size)->capture_default_str();
    train_cmd->add_option("--lr", tc.learning_rate)->capture_default_str();
    train_cmd->add_option("--seed", tc.seed)->capture_default_str();
    train_cmd->add_option("--de", tc.edge_thickness)->capture_default_str();
    train_cmd->add_option("--lambda", tc.aux_weight, "aux CE weight")->capture_default_str();
    train_cmd->add_option("--mu", tc.ph_weight, "aux PH weight")->capture_default_str();
    train_cmd->add_option("--n", tc.ph.rays)->capture_default_str();
    train_cmd->add_option("--sigma", tc.ph.sigma)->capture_default_str();
    train_cmd->add_option("--delta", tc.ph.delta)->capture_default_str();
    train_cmd->add_option("--tau", tc.smooth.tau)->capture_default_str();
    train_cmd->add_option("--beta", tc.smooth.beta)->capture_default_str();
    train_cmd->add_option("--min-edge-pixels", tc.min_edge_pixels)->capture_default_str();
    train_cmd->add_option("--width1", tc.width1)->capture_default_str();
    train_cmd->add_option("--width2", tc.width2)->capture_default_str();
    train_cmd->add_option("--grad-clip", tc.grad_clip, "global gradient-norm cap, 0 disables")->capture_default_str();

    std::string ev_pred, ev_gt, ev_out;
    int ev_classes = 0;
    auto* eval = app.add_subcommand("eval", "mIoU / mAcc of prediction PGMs against GT PGMs");
    eval->add_option("--pred", ev_pred)->required();
    eval->add_option("--gt", ev_gt)->required();
    eval->add_option("--out", ev_out)->required();
    eval->add_option("--classes", ev_classes, "class count (default: max id + 1)");

    int gc_seeds = 10;
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference checks of every analytic gradient");
    gradcheck->add_option("--seeds", gc_seeds, "configurations per suite")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*kernel) {
            const EdgeKernel k = kernel_for_thickness(kernel_de);
            for (int r = 0; r < k.side(); ++r) {
                for (int c = 0; c < k.side(); ++c) std::cout << (c ? " " : "") << k(c, r);
                std::cout << '\n';
            }
            return 0;
        }
        if (*extract) {
            const LabelMap gt = load_label_map(ee_in, ee_classes);
            const LabelMap edges = extract_edge_label_map(gt, ee_de);
            save_pgm(edges, ee_out);
            std::cout << "class,edge_pixels\n";
            for (int c = 0; c < edges.classes(); ++c) {
                std::size_t n = 0;
                for (int id : edges.ids().pixels()) n += id == c;
                std::cout << c << ',' << n << '\n';
            }
            return 0;
        }
        if (*phd) return run_phd(phd_args);
        if (*loss) return run_loss(loss_kind, loss_pred, loss_gt, loss_class, loss_threshold);
        if (*sweep) return run_sweep(sw_de, sw_tmin, sw_tmax, sw_out, sw_rin, sw_size, sw_cfg);
        if (*gen) {
            if (gen_count < 1) throw Error(ErrorKind::InvalidInput, "--count must be positive");
            save_dataset(gen_out, gen_scenes(gen_spec, gen_count));
            std::cout << "scenes," << gen_count << '\n';
            return 0;
        }
        if (*train_cmd) return run_train(train_data, train_out, tc);
        if (*eval) return run_eval(ev_pred, ev_gt, ev_out, ev_classes);
        if (*gradcheck) return run_gradcheck(gc_seeds);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
