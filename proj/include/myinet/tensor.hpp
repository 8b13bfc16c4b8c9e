#pragma once

#include <cstdint>
#include <vector>

namespace myinet {

class Rng;

/// Dense 4-D array (batch, channel, height, width), row-major, double storage,
/// with an optional same-shape gradient buffer. The universal carrier for
/// images, feature maps and scores.
class Tensor {
public:
    Tensor() = default;
    Tensor(int n, int c, int h, int w);

    static Tensor zeros(int n, int c, int h, int w) { return Tensor(n, c, h, w); }
    static Tensor full(int n, int c, int h, int w, double value);
    static Tensor randn(int n, int c, int h, int w, Rng& rng, double stddev = 1.0);
    /// 1-D convenience (shape 1x1x1xk).
    static Tensor from_values(const std::vector<double>& values);

    int n() const { return n_; }
    int c() const { return c_; }
    int h() const { return h_; }
    int w() const { return w_; }
    int64_t numel() const { return static_cast<int64_t>(n_) * c_ * h_ * w_; }
    int64_t plane() const { return static_cast<int64_t>(h_) * w_; }

    bool same_shape(const Tensor& o) const {
        return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
    }

    int64_t index(int n, int c, int y, int x) const {
        return ((static_cast<int64_t>(n) * c_ + c) * h_ + y) * w_ + x;
    }
    double& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
    double at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool has_grad() const { return !grad_.empty(); }
    void ensure_grad();
    void zero_grad();
    void drop_grad() { grad_.clear(); }
    double* grad() { return grad_.data(); }
    const double* grad() const { return grad_.data(); }
    std::vector<double>& grad_values() { return grad_; }
    const std::vector<double>& grad_values() const { return grad_; }

    void fill(double value);
    bool all_finite() const;

    /// Throws ConfigError unless both value arrays match this shape exactly.
    void check_shape_matches(const Tensor& o, const char* what) const;

private:
    int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
    std::vector<double> data_;
    std::vector<double> grad_;
};

}  // namespace myinet
