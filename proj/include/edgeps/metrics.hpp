#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "edgeps/raster.hpp"

namespace edgeps {

/// Entry (g, p) counts pixels of GT class g predicted as p; ignored GT pixels are skipped.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int classes) : classes_(classes) {
        if (classes < 1) throw Error(ErrorKind::InvalidInput, "confusion matrix needs at least one class");
        counts_.assign(static_cast<std::size_t>(classes) * classes, 0);
    }

    int classes() const noexcept { return classes_; }
    std::uint64_t operator()(int gt, int pred) const noexcept { return counts_[gt * classes_ + pred]; }

    std::uint64_t total() const noexcept {
        std::uint64_t t = 0;
        for (auto v : counts_) t += v;
        return t;
    }
    std::uint64_t row(int c) const noexcept {
        std::uint64_t t = 0;
        for (int p = 0; p < classes_; ++p) t += (*this)(c, p);
        return t;
    }
    std::uint64_t col(int c) const noexcept {
        std::uint64_t t = 0;
        for (int g = 0; g < classes_; ++g) t += (*this)(g, c);
        return t;
    }

    void add(int gt, int pred, std::uint64_t n = 1) { counts_[gt * classes_ + pred] += n; }

    ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
        if (other.classes_ != classes_) throw Error(ErrorKind::ShapeError, "class count mismatch");
        for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
        return *this;
    }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    int classes_;
    std::vector<std::uint64_t> counts_;
};

inline ConfusionMatrix accumulate(ConfusionMatrix cm, const LabelMap& pred, const LabelMap& gt) {
    if (pred.width() != gt.width() || pred.height() != gt.height()) {
        throw Error(ErrorKind::ShapeError, "prediction and GT differ in shape");
    }
    if (pred.classes() != cm.classes() || gt.classes() != cm.classes()) {
        throw Error(ErrorKind::ShapeError, "class count mismatch");
    }
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt.ignored(i)) continue;
        if (pred.ignored(i)) throw Error(ErrorKind::InvalidInput, "prediction contains ignore_index");
        cm.add(gt[i], pred[i]);
    }
    return cm;
}

struct ClassScore {
    int cls;
    bool present;  // appears in GT or prediction
    double iou;
    double acc;
};

inline std::vector<ClassScore> class_scores(const ConfusionMatrix& cm) {
    std::vector<ClassScore> out;
    for (int c = 0; c < cm.classes(); ++c) {
        const double tp = static_cast<double>(cm(c, c));
        const double row = static_cast<double>(cm.row(c));
        const double col = static_cast<double>(cm.col(c));
        ClassScore s{c, row + col > 0, 0.0, 0.0};
        if (s.present) {
            s.iou = tp / (row + col - tp);
            s.acc = row > 0 ? tp / row : 0.0;
        }
        out.push_back(s);
    }
    return out;
}

namespace detail {
inline double mean_over_present(const ConfusionMatrix& cm, bool iou) {
    if (cm.total() == 0) throw Error(ErrorKind::EmptyEvaluation, "confusion matrix is empty");
    double sum = 0.0;
    int n = 0;
    for (const auto& s : class_scores(cm)) {
        if (!s.present) continue;
        sum += iou ? s.iou : s.acc;
        ++n;
    }
    return sum / n;
}
}  // namespace detail

inline double miou(const ConfusionMatrix& cm) { return detail::mean_over_present(cm, true); }

/// Mean per-class recall.
inline double macc(const ConfusionMatrix& cm) { return detail::mean_over_present(cm, false); }

inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

/// `class,iou,acc` rows for present classes, then `mIoU,<v>` and `mAcc,<v>`; 4 decimals.
inline std::string metrics_csv(const ConfusionMatrix& cm) {
    std::string out = "class,iou,acc\n";
    for (const auto& s : class_scores(cm)) {
        if (!s.present) continue;
        out += std::to_string(s.cls) + "," + format_fixed(s.iou, 4) + "," + format_fixed(s.acc, 4) + "\n";
    }
    out += "mIoU," + format_fixed(miou(cm), 4) + "\n";
    out += "mAcc," + format_fixed(macc(cm), 4) + "\n";
    return out;
}

}  // namespace edgeps
