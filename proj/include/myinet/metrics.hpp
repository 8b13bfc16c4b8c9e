#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "myinet/labelmap.hpp"

namespace myinet {

/// Pixel-count confusion accumulator: at(a, b) counts pixels with ground
/// truth a predicted as b. Row sums M_a, column sums H_b.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int num_classes = kNumClasses);

    void accumulate(const LabelMap& pred, const LabelMap& truth);
    ConfusionMatrix& operator+=(const ConfusionMatrix& o);

    int num_classes() const { return n_; }
    int64_t at(int truth, int pred) const { return p_[static_cast<size_t>(truth) * n_ + pred]; }
    int64_t& cell(int truth, int pred) { return p_[static_cast<size_t>(truth) * n_ + pred]; }
    int64_t truth_total(int a) const;  // M_a
    int64_t pred_total(int b) const;   // H_b
    int64_t total() const;
    std::vector<std::vector<double>> row_normalized() const;

private:
    int n_;
    std::vector<int64_t> p_;
};

struct AccuracyScores {
    double global = 0.0;  // gAcc
    double mean = 0.0;    // aAcc over classes present in the ground truth
    std::vector<std::optional<double>> per_class;
};

AccuracyScores accuracies(const ConfusionMatrix& cm);

struct PixelCoord {
    int y, x;
};

/// Pixels of class `cls` with at least one in-image 4-neighbor of a different
/// class. The image border alone does not create boundary pixels.
struct BoundarySet {
    int cls = 0;
    std::vector<PixelCoord> pixels;
};

BoundarySet extract_boundary(const LabelMap& labels, int cls);

/// Exact squared Euclidean distance from every pixel to the nearest set pixel
/// of `sites` (two-pass transform). Pixels are sited where sites[i] != 0.
/// Returns int64 squared distances; kUnreachable where no site exists.
inline constexpr int64_t kEdtUnreachable = INT64_MAX;
std::vector<int64_t> squared_distance_transform(int h, int w, const std::vector<uint8_t>& sites);

/// Tolerance = 0.75% of the image diagonal.
double bfscore_auto_tolerance(int h, int w);

struct BfScores {
    // A class absent from both maps is excluded (nullopt); a class with
    // exactly one empty boundary scores 0.
    std::vector<std::optional<double>> per_class;
    std::optional<double> mean;
};

/// Boundary F1: precision = fraction of predicted-boundary pixels strictly
/// within distance `tolerance` of the truth boundary, recall symmetric,
/// F = harmonic mean. tolerance <= 0 selects the auto tolerance.
BfScores bfscore(const LabelMap& pred, const LabelMap& truth, double tolerance = 0.0);

struct IouScores {
    std::vector<std::optional<double>> per_class;  // undefined when union empty
    std::optional<double> mean;
    double weighted = 0.0;  // wIoU, ground-truth-size weighted
};

IouScores iou_scores(const ConfusionMatrix& cm);

struct PerImageScores {
    double g_acc = 0.0;
    double a_acc = 0.0;
    std::optional<double> bf_mean;
    std::vector<std::optional<double>> bf_per_class;
    std::vector<std::optional<double>> iou;
    int64_t scar_truth_px = 0;
    int64_t scar_tp_px = 0;
    int64_t scar_pred_px = 0;
};

struct MetricsReport {
    int num_classes = kNumClasses;
    ConfusionMatrix pooled{kNumClasses};
    AccuracyScores accuracy;          // from the pooled confusion matrix
    IouScores iou;                    // from the pooled confusion matrix
    std::optional<double> bf_mean;    // mean of per-image mean bfscores
    std::vector<std::optional<double>> bf_per_class;  // per-image means per class
    std::vector<PerImageScores> images;
};

/// Dataset scoring: accuracy/IoU from the pooled confusion matrix, bfscore as
/// the mean of per-image scores.
MetricsReport per_image_scores(const std::vector<LabelMap>& preds,
                               const std::vector<LabelMap>& truths);

}  // namespace myinet
