#include "myinet/loss.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "myinet/errors.hpp"

namespace myinet {

FrequencyVector class_frequencies(const std::vector<LabelMap>& labels, int num_classes) {
    FrequencyVector fv;
    fv.counts.assign(static_cast<size_t>(num_classes), 0);
    fv.freq.assign(static_cast<size_t>(num_classes), 0.0);
    int64_t total = 0;
    for (const auto& lm : labels) {
        for (uint8_t v : lm.v) {
            if (v >= num_classes)
                throw DataError("class_frequencies: label value " + std::to_string(v) +
                                " outside 0.." + std::to_string(num_classes - 1));
            ++fv.counts[v];
        }
        total += lm.size();
    }
    if (total == 0) throw DomainError("class_frequencies: empty label collection");
    for (int i = 0; i < num_classes; ++i)
        fv.freq[static_cast<size_t>(i)] =
            static_cast<double>(fv.counts[static_cast<size_t>(i)]) / static_cast<double>(total);
    return fv;
}

ClassWeightVector median_frequency_weights(const FrequencyVector& freq) {
    const int n = freq.num_classes();
    if (n == 0) throw DomainError("median_frequency_weights: no classes");
    std::vector<double> sorted(freq.freq);
    std::sort(sorted.begin(), sorted.end());
    const double median = n % 2 == 1
                              ? sorted[static_cast<size_t>(n / 2)]
                              : 0.5 * (sorted[static_cast<size_t>(n / 2 - 1)] +
                                       sorted[static_cast<size_t>(n / 2)]);
    ClassWeightVector cw;
    cw.w.assign(static_cast<size_t>(n), 0.0);
    double max_defined = 0.0;
    bool any_zero = false;
    for (int i = 0; i < n; ++i) {
        const double f = freq.freq[static_cast<size_t>(i)];
        if (f > 0.0) {
            cw.w[static_cast<size_t>(i)] = median / f;
            max_defined = std::max(max_defined, cw.w[static_cast<size_t>(i)]);
        } else {
            any_zero = true;
        }
    }
    if (any_zero) {
        if (max_defined <= 0.0) throw DomainError("median_frequency_weights: all frequencies zero");
        for (int i = 0; i < n; ++i) {
            if (freq.freq[static_cast<size_t>(i)] == 0.0) {
                cw.w[static_cast<size_t>(i)] = max_defined;
                std::cerr << "warning: class " << i
                          << " absent from the label set; weight set to max defined weight "
                          << max_defined << "\n";
            }
        }
    }
    return cw;
}

LossResult weighted_cross_entropy(const Tensor& scores, const std::vector<LabelMap>& truth,
                                  const ClassWeightVector& weights, bool want_grad) {
    const int n_cls = scores.c();
    if (weights.num_classes() != n_cls)
        throw ConfigError("weighted_cross_entropy: weight vector length != score channels");
    if (static_cast<int>(truth.size()) != scores.n())
        throw ConfigError("weighted_cross_entropy: truth count != batch size");
    for (const auto& lm : truth)
        if (lm.h != scores.h() || lm.w != scores.w())
            throw ConfigError("weighted_cross_entropy: truth extents do not match scores");

    LossResult res;
    if (want_grad) res.grad = Tensor(scores.n(), n_cls, scores.h(), scores.w());
    double num = 0.0, denom = 0.0;
    std::vector<double> prob(static_cast<size_t>(n_cls));
    for (int n = 0; n < scores.n(); ++n) {
        const LabelMap& lm = truth[static_cast<size_t>(n)];
        for (int y = 0; y < scores.h(); ++y) {
            for (int x = 0; x < scores.w(); ++x) {
                const int t = lm.at(y, x);
                if (t < 0 || t >= n_cls)
                    throw DataError("weighted_cross_entropy: truth label " + std::to_string(t) +
                                    " outside 0.." + std::to_string(n_cls - 1));
                double max_s = scores.at(n, 0, y, x);
                for (int c = 1; c < n_cls; ++c) max_s = std::max(max_s, scores.at(n, c, y, x));
                double z = 0.0;
                for (int c = 0; c < n_cls; ++c) {
                    prob[static_cast<size_t>(c)] = std::exp(scores.at(n, c, y, x) - max_s);
                    z += prob[static_cast<size_t>(c)];
                }
                for (int c = 0; c < n_cls; ++c) prob[static_cast<size_t>(c)] /= z;
                const double wt = weights.w[static_cast<size_t>(t)];
                num += wt * -std::log(std::max(prob[static_cast<size_t>(t)], 1e-300));
                denom += wt;
                if (want_grad)
                    for (int c = 0; c < n_cls; ++c)
                        res.grad.at(n, c, y, x) =
                            wt * (prob[static_cast<size_t>(c)] - (c == t ? 1.0 : 0.0));
            }
        }
    }
    if (denom <= 0.0) throw DomainError("weighted_cross_entropy: zero total pixel weight");
    res.loss = num / denom;
    res.weight_sum = denom;
    if (want_grad) {
        double* g = res.grad.data();
        for (int64_t i = 0; i < res.grad.numel(); ++i) g[i] /= denom;
    }
    return res;
}

Tensor softmax_channels(const Tensor& scores) {
    Tensor out(scores.n(), scores.c(), scores.h(), scores.w());
    for (int n = 0; n < scores.n(); ++n) {
        for (int y = 0; y < scores.h(); ++y) {
            for (int x = 0; x < scores.w(); ++x) {
                double max_s = scores.at(n, 0, y, x);
                for (int c = 1; c < scores.c(); ++c) max_s = std::max(max_s, scores.at(n, c, y, x));
                double z = 0.0;
                for (int c = 0; c < scores.c(); ++c) {
                    const double e = std::exp(scores.at(n, c, y, x) - max_s);
                    out.at(n, c, y, x) = e;
                    z += e;
                }
                for (int c = 0; c < scores.c(); ++c) out.at(n, c, y, x) /= z;
            }
        }
    }
    return out;
}

}  // namespace myinet
