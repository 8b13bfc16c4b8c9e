#pragma once

#include <cstdint>
#include <vector>

#include "myinet/labelmap.hpp"
#include "myinet/tensor.hpp"

namespace myinet {

/// Per-class pixel counts and normalized frequencies F_i = N_i / sum(N).
struct FrequencyVector {
    std::vector<int64_t> counts;
    std::vector<double> freq;
    int num_classes() const { return static_cast<int>(freq.size()); }
};

/// Class weights W_i = median(F) / F_i.
struct ClassWeightVector {
    std::vector<double> w;
    int num_classes() const { return static_cast<int>(w.size()); }
};

FrequencyVector class_frequencies(const std::vector<LabelMap>& labels,
                                  int num_classes = kNumClasses);

/// Median-frequency balancing. Even class counts use the mean of the two
/// middle order statistics. A class with zero frequency gets the largest
/// defined weight (with a warning) instead of dividing by zero.
ClassWeightVector median_frequency_weights(const FrequencyVector& freq);

struct LossResult {
    double loss = 0.0;
    Tensor grad;         // same shape as scores
    double weight_sum = 0.0;  // normalizer: sum of per-pixel weights
};

/// Pixel-weighted softmax cross entropy, normalized by total pixel weight:
///   loss = sum_z W[t(z)] * (-log softmax(s)_t(z)) / sum_z W[t(z)].
LossResult weighted_cross_entropy(const Tensor& scores, const std::vector<LabelMap>& truth,
                                  const ClassWeightVector& weights, bool want_grad = true);

/// Channel-wise softmax (numerically stabilized); used for score inspection.
Tensor softmax_channels(const Tensor& scores);

}  // namespace myinet
