#pragma once

#include <memory>
#include <string>
#include <vector>

#include "myinet/backbones.hpp"
#include "myinet/labelmap.hpp"
#include "myinet/layers.hpp"

namespace myinet {

struct AsppConfig {
    int base_rate = 6;        // atrous branch rates are k, 2k, 3k
    int branch_channels = 256;
};

/// Atrous spatial pyramid pooling: a 1x1 branch plus three atrous branches at
/// rates k, 2k, 3k, concatenated and fused by a 1x1 projection.
class Aspp : public Layer {
public:
    Aspp(int in_ch, const AsppConfig& cfg);
    void init(Rng& rng);

    Tensor forward(const Tensor& input) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;
    void set_training(bool training) override;

    int out_channels() const { return cfg_.branch_channels; }
    std::vector<int> branch_rates() const;

private:
    struct Branch {
        std::unique_ptr<Conv2d> conv;
        std::unique_ptr<BatchNorm2d> bn;
        std::unique_ptr<Activation> relu;
    };
    AsppConfig cfg_;
    std::vector<Branch> branches_;
    Conv2d projection_;
};

struct SegModelConfig {
    std::string name = "mi-resnet18-ac";
    BackboneConfig backbone;
    AsppConfig aspp;
    int low_proj_channels = 48;
    int decoder_channels = 256;
    int num_classes = kNumClasses;
    int input_size = 256;
};

/// Named presets: mi-resnet50-ac, mi-resnet18-ac, mi-mobilenet-ac.
/// Throws ConfigError listing the valid names on anything else.
SegModelConfig default_model_config(const std::string& name);

/// Full pipeline: backbone -> ASPP -> low/high fusion -> decoder ->
/// classifier -> bilinear upsample of scores to input resolution.
class SegmentationModel : public Layer {
public:
    SegmentationModel(const SegModelConfig& cfg, uint64_t seed);

    /// Scores at input resolution, N x num_classes x H x W.
    Tensor forward(const Tensor& image) override;
    Tensor backward(const Tensor& grad_scores) override;
    void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;
    void set_training(bool training) override;

    const SegModelConfig& config() const { return cfg_; }
    Backbone& backbone() { return *backbone_; }

private:
    SegModelConfig cfg_;
    std::unique_ptr<Backbone> backbone_;
    Aspp aspp_;
    Conv2d low_proj_;
    BatchNorm2d low_proj_bn_;
    Activation low_proj_relu_;
    Sequential decoder_;
    Conv2d classifier_;

    // forward-pass geometry needed by backward
    int low_h_ = 0, low_w_ = 0, high_h_ = 0, high_w_ = 0, in_h_ = 0, in_w_ = 0;
};

struct Segmentation {
    Tensor scores;               // N x num_classes x H x W
    std::vector<LabelMap> labels;  // argmax per batch item, lowest index wins ties
};

/// Inference entry point (eval mode, running statistics).
Segmentation segment(SegmentationModel& model, const Tensor& image);

LabelMap argmax_labels(const Tensor& scores, int batch_index);

}  // namespace myinet
