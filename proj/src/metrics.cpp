#include "myinet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "myinet/errors.hpp"

namespace myinet {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : n_(num_classes), p_(static_cast<size_t>(num_classes) * num_classes, 0) {}

void ConfusionMatrix::accumulate(const LabelMap& pred, const LabelMap& truth) {
    if (!pred.same_extents(truth))
        throw DataError("confusion: prediction and truth extents differ");
    for (int64_t i = 0; i < truth.size(); ++i) {
        const uint8_t a = truth.v[static_cast<size_t>(i)];
        const uint8_t b = pred.v[static_cast<size_t>(i)];
        if (a >= n_ || b >= n_)
            throw DataError("confusion: label value outside 0.." + std::to_string(n_ - 1));
        ++p_[static_cast<size_t>(a) * n_ + b];
    }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
    if (o.n_ != n_) throw ConfigError("confusion: class-count mismatch");
    for (size_t i = 0; i < p_.size(); ++i) p_[i] += o.p_[i];
    return *this;
}

int64_t ConfusionMatrix::truth_total(int a) const {
    int64_t s = 0;
    for (int b = 0; b < n_; ++b) s += at(a, b);
    return s;
}

int64_t ConfusionMatrix::pred_total(int b) const {
    int64_t s = 0;
    for (int a = 0; a < n_; ++a) s += at(a, b);
    return s;
}

int64_t ConfusionMatrix::total() const { return std::accumulate(p_.begin(), p_.end(), int64_t{0}); }

std::vector<std::vector<double>> ConfusionMatrix::row_normalized() const {
    std::vector<std::vector<double>> rows(static_cast<size_t>(n_),
                                          std::vector<double>(static_cast<size_t>(n_), 0.0));
    for (int a = 0; a < n_; ++a) {
        const int64_t m = truth_total(a);
        if (m == 0) continue;
        for (int b = 0; b < n_; ++b)
            rows[static_cast<size_t>(a)][static_cast<size_t>(b)] =
                static_cast<double>(at(a, b)) / static_cast<double>(m);
    }
    return rows;
}

AccuracyScores accuracies(const ConfusionMatrix& cm) {
    const int n = cm.num_classes();
    const int64_t total = cm.total();
    if (total == 0) throw DomainError("accuracies: empty confusion matrix");
    AccuracyScores out;
    out.per_class.assign(static_cast<size_t>(n), std::nullopt);
    int64_t diag = 0;
    double mean_sum = 0.0;
    int present = 0;
    for (int a = 0; a < n; ++a) {
        diag += cm.at(a, a);
        const int64_t m = cm.truth_total(a);
        if (m > 0) {
            const double acc = static_cast<double>(cm.at(a, a)) / static_cast<double>(m);
            out.per_class[static_cast<size_t>(a)] = acc;
            mean_sum += acc;
            ++present;
        }
    }
    out.global = static_cast<double>(diag) / static_cast<double>(total);
    out.mean = mean_sum / static_cast<double>(present);
    return out;
}

BoundarySet extract_boundary(const LabelMap& labels, int cls) {
    BoundarySet bs;
    bs.cls = cls;
    const int h = labels.h, w = labels.w;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (labels.at(y, x) != cls) continue;
            const bool edge = (y > 0 && labels.at(y - 1, x) != cls) ||
                              (y + 1 < h && labels.at(y + 1, x) != cls) ||
                              (x > 0 && labels.at(y, x - 1) != cls) ||
                              (x + 1 < w && labels.at(y, x + 1) != cls);
            if (edge) bs.pixels.push_back({y, x});
        }
    }
    return bs;
}

std::vector<int64_t> squared_distance_transform(int h, int w, const std::vector<uint8_t>& sites) {
    // Pass 1: per column, distance in rows to the nearest site in that column.
    // kNoSite marks columns without any site.
    constexpr int32_t kNoSite = INT32_MAX / 4;
    std::vector<int32_t> row_dist(static_cast<size_t>(h) * w, kNoSite);
    for (int x = 0; x < w; ++x) {
        int last = -1;
        for (int y = 0; y < h; ++y) {
            if (sites[static_cast<size_t>(y) * w + x]) last = y;
            if (last >= 0) row_dist[static_cast<size_t>(y) * w + x] = y - last;
        }
        last = -1;
        for (int y = h - 1; y >= 0; --y) {
            if (sites[static_cast<size_t>(y) * w + x]) last = y;
            if (last >= 0)
                row_dist[static_cast<size_t>(y) * w + x] =
                    std::min(row_dist[static_cast<size_t>(y) * w + x], last - y);
        }
    }

    // Pass 2: per row, lower envelope of the parabolas (x - v)^2 + g(v) over
    // candidate columns v. The envelope only selects the minimizing column;
    // the value is recomputed in integer arithmetic, so a rounding error in
    // an envelope boundary can only matter at an exact tie where both
    // candidates give the same distance.
    std::vector<int64_t> d2(static_cast<size_t>(h) * w, kEdtUnreachable);
    std::vector<int> cand_x(static_cast<size_t>(w));
    std::vector<int64_t> cand_g(static_cast<size_t>(w));
    std::vector<int> hull(static_cast<size_t>(w));
    std::vector<double> z(static_cast<size_t>(w) + 1);
    for (int y = 0; y < h; ++y) {
        int m = 0;
        for (int x = 0; x < w; ++x) {
            const int32_t rd = row_dist[static_cast<size_t>(y) * w + x];
            if (rd != kNoSite) {
                cand_x[static_cast<size_t>(m)] = x;
                cand_g[static_cast<size_t>(m)] = static_cast<int64_t>(rd) * rd;
                ++m;
            }
        }
        if (m == 0) continue;
        auto intersect = [&](int i, int j) {
            const double xi = cand_x[static_cast<size_t>(i)], xj = cand_x[static_cast<size_t>(j)];
            return ((static_cast<double>(cand_g[static_cast<size_t>(i)]) + xi * xi) -
                    (static_cast<double>(cand_g[static_cast<size_t>(j)]) + xj * xj)) /
                   (2.0 * (xi - xj));
        };
        int k = 0;
        hull[0] = 0;
        z[0] = -std::numeric_limits<double>::infinity();
        z[1] = std::numeric_limits<double>::infinity();
        for (int i = 1; i < m; ++i) {
            double s = intersect(i, hull[static_cast<size_t>(k)]);
            while (k > 0 && s <= z[static_cast<size_t>(k)]) {
                --k;
                s = intersect(i, hull[static_cast<size_t>(k)]);
            }
            ++k;
            hull[static_cast<size_t>(k)] = i;
            z[static_cast<size_t>(k)] = s;
            z[static_cast<size_t>(k) + 1] = std::numeric_limits<double>::infinity();
        }
        int j = 0;
        for (int x = 0; x < w; ++x) {
            while (z[static_cast<size_t>(j) + 1] < x) ++j;
            const int cand = hull[static_cast<size_t>(j)];
            const int64_t dx = x - cand_x[static_cast<size_t>(cand)];
            d2[static_cast<size_t>(y) * w + x] = dx * dx + cand_g[static_cast<size_t>(cand)];
        }
    }
    return d2;
}

double bfscore_auto_tolerance(int h, int w) {
    return 0.0075 * std::sqrt(static_cast<double>(h) * h + static_cast<double>(w) * w);
}

namespace {

std::vector<uint8_t> boundary_mask(const LabelMap& labels, int cls, int64_t& count) {
    std::vector<uint8_t> mask(static_cast<size_t>(labels.h) * labels.w, 0);
    const BoundarySet bs = extract_boundary(labels, cls);
    for (const auto& p : bs.pixels) mask[static_cast<size_t>(p.y) * labels.w + p.x] = 1;
    count = static_cast<int64_t>(bs.pixels.size());
    return mask;
}

// Fraction of set pixels of `from` strictly within tolerance of `to_dist2`.
double boundary_match_fraction(const std::vector<uint8_t>& from, const std::vector<int64_t>& to_dist2,
                               int64_t from_count, double tol2) {
    int64_t hits = 0;
    for (size_t i = 0; i < from.size(); ++i) {
        if (!from[i]) continue;
        if (to_dist2[i] != kEdtUnreachable && static_cast<double>(to_dist2[i]) < tol2) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(from_count);
}

}  // namespace

BfScores bfscore(const LabelMap& pred, const LabelMap& truth, double tolerance) {
    if (!pred.same_extents(truth)) throw DataError("bfscore: prediction and truth extents differ");
    const double tol = tolerance > 0.0 ? tolerance : bfscore_auto_tolerance(truth.h, truth.w);
    const double tol2 = tol * tol;

    BfScores out;
    out.per_class.assign(kNumClasses, std::nullopt);
    double sum = 0.0;
    int included = 0;
    for (int cls = 0; cls < kNumClasses; ++cls) {
        int64_t n_pred = 0, n_truth = 0;
        const auto pred_mask = boundary_mask(pred, cls, n_pred);
        const auto truth_mask = boundary_mask(truth, cls, n_truth);
        if (n_pred == 0 && n_truth == 0) continue;  // class absent from both maps
        double f = 0.0;
        if (n_pred > 0 && n_truth > 0) {
            const auto dist_truth = squared_distance_transform(truth.h, truth.w, truth_mask);
            const auto dist_pred = squared_distance_transform(pred.h, pred.w, pred_mask);
            const double precision = boundary_match_fraction(pred_mask, dist_truth, n_pred, tol2);
            const double recall = boundary_match_fraction(truth_mask, dist_pred, n_truth, tol2);
            f = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        }
        out.per_class[static_cast<size_t>(cls)] = f;
        sum += f;
        ++included;
    }
    if (included > 0) out.mean = sum / static_cast<double>(included);
    return out;
}

IouScores iou_scores(const ConfusionMatrix& cm) {
    const int n = cm.num_classes();
    if (cm.total() == 0) throw DomainError("iou_scores: empty confusion matrix");
    IouScores out;
    out.per_class.assign(static_cast<size_t>(n), std::nullopt);
    double mean_sum = 0.0;
    int defined = 0;
    double weighted_sum = 0.0;
    for (int a = 0; a < n; ++a) {
        const int64_t m = cm.truth_total(a);
        const int64_t uni = m + cm.pred_total(a) - cm.at(a, a);
        if (uni == 0) continue;
        const double iou = static_cast<double>(cm.at(a, a)) / static_cast<double>(uni);
        out.per_class[static_cast<size_t>(a)] = iou;
        mean_sum += iou;
        ++defined;
        weighted_sum += static_cast<double>(m) * iou;
    }
    if (defined > 0) out.mean = mean_sum / static_cast<double>(defined);
    out.weighted = weighted_sum / static_cast<double>(cm.total());
    return out;
}

MetricsReport per_image_scores(const std::vector<LabelMap>& preds,
                               const std::vector<LabelMap>& truths) {
    if (preds.empty() || preds.size() != truths.size())
        throw DomainError("per_image_scores: collections empty or size-mismatched");

    MetricsReport rep;
    rep.images.reserve(preds.size());
    std::vector<double> bf_class_sum(kNumClasses, 0.0);
    std::vector<int> bf_class_n(kNumClasses, 0);
    double bf_mean_sum = 0.0;
    int bf_mean_n = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        const LabelMap& p = preds[i];
        const LabelMap& t = truths[i];
        ConfusionMatrix cm;
        cm.accumulate(p, t);
        rep.pooled += cm;

        PerImageScores s;
        const AccuracyScores acc = accuracies(cm);
        s.g_acc = acc.global;
        s.a_acc = acc.mean;
        const IouScores iou = iou_scores(cm);
        s.iou = iou.per_class;
        const BfScores bf = bfscore(p, t);
        s.bf_per_class = bf.per_class;
        s.bf_mean = bf.mean;
        s.scar_truth_px = cm.truth_total(kScar);
        s.scar_pred_px = cm.pred_total(kScar);
        s.scar_tp_px = cm.at(kScar, kScar);
        if (s.bf_mean) {
            bf_mean_sum += *s.bf_mean;
            ++bf_mean_n;
        }
        for (int c = 0; c < kNumClasses; ++c) {
            if (bf.per_class[static_cast<size_t>(c)]) {
                bf_class_sum[static_cast<size_t>(c)] += *bf.per_class[static_cast<size_t>(c)];
                ++bf_class_n[static_cast<size_t>(c)];
            }
        }
        rep.images.push_back(std::move(s));
    }
    rep.accuracy = accuracies(rep.pooled);
    rep.iou = iou_scores(rep.pooled);
    rep.bf_per_class.assign(kNumClasses, std::nullopt);
    for (int c = 0; c < kNumClasses; ++c)
        if (bf_class_n[static_cast<size_t>(c)] > 0)
            rep.bf_per_class[static_cast<size_t>(c)] =
                bf_class_sum[static_cast<size_t>(c)] / bf_class_n[static_cast<size_t>(c)];
    if (bf_mean_n > 0) rep.bf_mean = bf_mean_sum / bf_mean_n;
    return rep;
}

}  // namespace myinet
