#pragma once

#include <memory>
#include <string>
#include <vector>

#include "myinet/layers.hpp"

namespace myinet {

class Rng;

/// Basic two-conv residual block: out = relu(inner(x) + shortcut(x)).
/// A 1x1 projection shortcut is inserted exactly when the stride or the
/// channel count changes.
class ResidualBlock : public Layer {
public:
    ResidualBlock(int in_ch, int out_ch, int stride = 1, int dilation = 1);
    void init(Rng& rng);

    Tensor forward(const Tensor& input) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;
    void set_training(bool training) override;

    bool has_projection() const { return static_cast<bool>(proj_); }

private:
    Conv2d conv1_;
    BatchNorm2d bn1_;
    Activation relu1_;
    Conv2d conv2_;
    BatchNorm2d bn2_;
    std::unique_ptr<Conv2d> proj_;
    std::unique_ptr<BatchNorm2d> proj_bn_;
    Activation relu_out_;
    Tensor cached_sum_;
};

/// Three-conv residual block (1x1 reduce, 3x3, 1x1 expand) used by the
/// 50-layer extractor.
class ResNetBottleneckBlock : public Layer {
public:
    ResNetBottleneckBlock(int in_ch, int mid_ch, int out_ch, int stride = 1, int dilation = 1);
    void init(Rng& rng);

    Tensor forward(const Tensor& input) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;
    void set_training(bool training) override;

private:
    Conv2d conv1_;
    BatchNorm2d bn1_;
    Activation relu1_;
    Conv2d conv2_;
    BatchNorm2d bn2_;
    Activation relu2_;
    Conv2d conv3_;
    BatchNorm2d bn3_;
    std::unique_ptr<Conv2d> proj_;
    std::unique_ptr<BatchNorm2d> proj_bn_;
    Activation relu_out_;
    Tensor cached_sum_;
};

/// MobileNetV2 bottleneck: 1x1 expansion (ReLU6), depthwise (ReLU6), linear
/// 1x1 projection without activation. The input is added back exactly when
/// stride is 1 and channel counts match.
class InvertedBottleneck : public Layer {
public:
    InvertedBottleneck(int in_ch, int out_ch, int expansion, int stride = 1, int dilation = 1);
    void init(Rng& rng);

    Tensor forward(const Tensor& input) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;
    void set_training(bool training) override;

    bool residual_add() const { return residual_add_; }

private:
    Conv2d expand_;
    BatchNorm2d bn1_;
    Activation relu6_1_;
    DepthwiseConv2d dw_;
    BatchNorm2d bn2_;
    Activation relu6_2_;
    Conv2d project_;
    BatchNorm2d bn3_;
    bool residual_add_;
};

enum class BackboneKind { ResNet18, ResNet50, MobileNetV2 };

struct BackboneConfig {
    BackboneKind kind = BackboneKind::ResNet18;
    double width_multiplier = 1.0;       // epsilon in (0, 1]
    double resolution_multiplier = 1.0;  // delta in (0, 1]
    int output_stride = 16;              // 16 or 32
    bool reduced_depth = false;          // halve stage repeats (desk scale)
    int low_level_tap = -1;              // stage index; -1 = first stride-4 stage
};

struct BackboneFeatures {
    Tensor low;   // tap output X
    Tensor high;  // final stage output
};

/// Feature extractor emitting a low-level tap and the high-level output.
class Backbone {
public:
    BackboneFeatures forward(const Tensor& input);
    Tensor backward(const Tensor& grad_low, const Tensor& grad_high);

    void collect_params(const std::string& prefix, std::vector<NamedParam>& out);
    void set_training(bool training);

    int low_channels() const { return low_channels_; }
    int high_channels() const { return high_channels_; }
    int low_stride() const { return low_stride_; }
    int high_stride() const { return high_stride_; }
    const BackboneConfig& config() const { return config_; }

private:
    friend std::unique_ptr<Backbone> build_backbone(const BackboneConfig&, uint64_t);
    BackboneConfig config_;
    std::vector<std::unique_ptr<Sequential>> stages_;
    int tap_index_ = 0;
    int low_channels_ = 0, high_channels_ = 0;
    int low_stride_ = 4, high_stride_ = 16;
};

/// Channel count after width scaling: round to nearest, at least 1.
int scale_channels(int channels, double multiplier);

std::unique_ptr<Backbone> build_backbone(const BackboneConfig& cfg, uint64_t seed);

/// Computation cost of one depthwise separable convolution under width
/// multiplier eps and resolution multiplier delta:
///   eps*D_I * (delta*D_F)^2  +  eps*D_I * eps*D_O * (delta*D_F)^2.
double dsc_cost_estimate(double eps, double delta, int d_in, int d_out, int d_f);

}  // namespace myinet
