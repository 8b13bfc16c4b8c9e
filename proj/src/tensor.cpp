#include "myinet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "myinet/errors.hpp"
#include "myinet/rng.hpp"

namespace myinet {

Tensor::Tensor(int n, int c, int h, int w) : n_(n), c_(c), h_(h), w_(w) {
    if (n < 0 || c < 0 || h < 0 || w < 0)
        throw ConfigError("tensor extents must be non-negative");
    data_.assign(static_cast<size_t>(numel()), 0.0);
}

Tensor Tensor::full(int n, int c, int h, int w, double value) {
    Tensor t(n, c, h, w);
    t.fill(value);
    return t;
}

Tensor Tensor::randn(int n, int c, int h, int w, Rng& rng, double stddev) {
    Tensor t(n, c, h, w);
    for (auto& v : t.data_) v = rng.normal(0.0, stddev);
    return t;
}

Tensor Tensor::from_values(const std::vector<double>& values) {
    Tensor t(1, 1, 1, static_cast<int>(values.size()));
    t.data_ = values;
    return t;
}

void Tensor::ensure_grad() {
    if (grad_.size() != data_.size()) grad_.assign(data_.size(), 0.0);
}

void Tensor::zero_grad() {
    if (grad_.empty())
        grad_.assign(data_.size(), 0.0);
    else
        std::fill(grad_.begin(), grad_.end(), 0.0);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::check_shape_matches(const Tensor& o, const char* what) const {
    if (!same_shape(o))
        throw ConfigError(std::string(what) + ": shape mismatch (" + std::to_string(n_) + "," +
                          std::to_string(c_) + "," + std::to_string(h_) + "," + std::to_string(w_) +
                          ") vs (" + std::to_string(o.n_) + "," + std::to_string(o.c_) + "," +
                          std::to_string(o.h_) + "," + std::to_string(o.w_) + ")");
}

}  // namespace myinet
