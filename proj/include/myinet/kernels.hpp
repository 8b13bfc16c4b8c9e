#pragma once

#include <cstdint>
#include <vector>

#include "myinet/tensor.hpp"

namespace myinet {

enum class Padding { Same, Valid };

/// Convolution parameters plus its tensors. kernel_size is odd and square;
/// dilation 1 is a standard convolution. For depthwise use one filter per
/// input channel (weights (C,1,k,k)) and the depthwise_* entry points.
struct ConvSpec {
    int in_channels = 0;
    int out_channels = 0;
    int kernel_size = 1;
    int stride = 1;
    int dilation = 1;
    Padding padding = Padding::Same;
    Tensor weights;  // (out, in, k, k)
    Tensor bias;     // (1, 1, 1, out)

    void validate() const;
    int pad() const;  // per-side zero padding implied by the padding mode
};

ConvSpec make_conv_spec(int in_ch, int out_ch, int kernel, int stride = 1, int dilation = 1,
                        Padding padding = Padding::Same);

int conv_out_extent(int in, int kernel, int stride, int dilation, int pad);

/// Dilated cross-correlation with zero padding: out(y,x) accumulates
/// f(y + k*(ky-c), x + k*(kx-c)) * w(ky,kx) over taps, c = (kernel-1)/2.
Tensor atrous_conv2d(const Tensor& input, const ConvSpec& spec);

/// Accumulates into the grad buffers of spec.weights/spec.bias (when
/// allocated) and returns grad wrt input when want_grad_input.
Tensor atrous_conv2d_backward(const Tensor& input, ConvSpec& spec, const Tensor& grad_out,
                              bool want_grad_input = true);

/// Per-channel spatial convolution, weights (C, 1, k, k).
Tensor depthwise_conv2d(const Tensor& input, const ConvSpec& spec);
Tensor depthwise_conv2d_backward(const Tensor& input, ConvSpec& spec, const Tensor& grad_out,
                                 bool want_grad_input = true);

enum class DscMode {
    KernelTest,  // bare depthwise -> pointwise composition
    Fused,       // BN + ReLU after both stages, transient train-mode statistics
};

/// Depthwise separable convolution as a single op. Fused mode uses identity
/// affine BN (gamma 1, beta 0) with batch statistics; model code composes the
/// stateful layers instead.
Tensor depthwise_separable_conv(const Tensor& input, const ConvSpec& depthwise,
                                const ConvSpec& pointwise, DscMode mode = DscMode::KernelTest);

enum class BnMode { Train, Infer };

struct BatchNormState {
    Tensor gamma;         // (1, C, 1, 1)
    Tensor beta;          // (1, C, 1, 1)
    Tensor running_mean;  // (1, C, 1, 1)
    Tensor running_var;   // (1, C, 1, 1), population variance
    double eps = 1e-5;
    double momentum = 0.9;

    static BatchNormState make(int channels, double eps = 1e-5, double momentum = 0.9);
};

struct BatchNormCache {
    BnMode mode = BnMode::Train;
    Tensor x_hat;              // normalized input
    std::vector<double> inv_std;  // per channel
};

/// Per-channel standardization then affine. Train mode uses batch statistics
/// and updates the running ones by exponential moving average.
Tensor batch_norm(const Tensor& input, BatchNormState& state, BnMode mode,
                  BatchNormCache* cache = nullptr);
Tensor batch_norm_backward(const Tensor& grad_out, const BatchNormCache& cache,
                           BatchNormState& state);

enum class ActKind { Relu, Relu6 };

Tensor activation(const Tensor& input, ActKind kind);
Tensor activation_backward(const Tensor& grad_out, const Tensor& input, ActKind kind);

/// Corner-aligned bilinear interpolation to (out_h, out_w).
Tensor bilinear_upsample(const Tensor& input, int out_h, int out_w);
Tensor bilinear_upsample_backward(const Tensor& grad_out, int in_h, int in_w);

/// Max pooling; argmax (input flat indices, first-max tie-break) feeds backward.
Tensor max_pool2d(const Tensor& input, int kernel, int stride, int pad,
                  std::vector<int64_t>* argmax = nullptr);
Tensor max_pool2d_backward(const Tensor& grad_out, const Tensor& input,
                           const std::vector<int64_t>& argmax);

Tensor concat_channels(const std::vector<const Tensor*>& parts);
/// Inverse of concat_channels for the gradient.
std::vector<Tensor> split_channels(const Tensor& whole, const std::vector<int>& channel_counts);

Tensor add(const Tensor& a, const Tensor& b);

}  // namespace myinet
