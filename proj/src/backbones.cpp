#include "myinet/backbones.hpp"

#include <cmath>

#include "myinet/errors.hpp"
#include "myinet/rng.hpp"

namespace myinet {

ResidualBlock::ResidualBlock(int in_ch, int out_ch, int stride, int dilation)
    : conv1_(in_ch, out_ch, 3, stride, dilation),
      bn1_(out_ch),
      relu1_(ActKind::Relu),
      conv2_(out_ch, out_ch, 3, 1, dilation),
      bn2_(out_ch),
      relu_out_(ActKind::Relu) {
    if (stride > 1 || in_ch != out_ch) {
        proj_ = std::make_unique<Conv2d>(in_ch, out_ch, 1, stride);
        proj_bn_ = std::make_unique<BatchNorm2d>(out_ch);
    }
}

void ResidualBlock::init(Rng& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    if (proj_) proj_->init(rng);
}

Tensor ResidualBlock::forward(const Tensor& input) {
    Tensor inner = bn1_.forward(conv1_.forward(input));
    inner = relu1_.forward(inner);
    inner = bn2_.forward(conv2_.forward(inner));
    Tensor shortcut = proj_ ? proj_bn_->forward(proj_->forward(input)) : input;
    inner.check_shape_matches(shortcut, "residual block add");
    cached_sum_ = add(inner, shortcut);
    return relu_out_.forward(cached_sum_);
}

Tensor ResidualBlock::backward(const Tensor& grad_out) {
    Tensor g_sum = relu_out_.backward(grad_out);
    Tensor g_inner = bn2_.backward(g_sum);
    g_inner = conv2_.backward(g_inner);
    g_inner = relu1_.backward(g_inner);
    g_inner = bn1_.backward(g_inner);
    Tensor g_in = conv1_.backward(g_inner);
    if (proj_) {
        Tensor g_short = proj_bn_->backward(g_sum);
        g_short = proj_->backward(g_short);
        return add(g_in, g_short);
    }
    return add(g_in, g_sum);
}

void ResidualBlock::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
    conv1_.collect_params(join_name(prefix, "conv1"), out);
    bn1_.collect_params(join_name(prefix, "bn1"), out);
    conv2_.collect_params(join_name(prefix, "conv2"), out);
    bn2_.collect_params(join_name(prefix, "bn2"), out);
    if (proj_) {
        proj_->collect_params(join_name(prefix, "proj"), out);
        proj_bn_->collect_params(join_name(prefix, "proj_bn"), out);
    }
}

void ResidualBlock::set_training(bool training) {
    Layer::set_training(training);
    conv1_.set_training(training);
    bn1_.set_training(training);
    relu1_.set_training(training);
    conv2_.set_training(training);
    bn2_.set_training(training);
    if (proj_) {
        proj_->set_training(training);
        proj_bn_->set_training(training);
    }
    relu_out_.set_training(training);
}

ResNetBottleneckBlock::ResNetBottleneckBlock(int in_ch, int mid_ch, int out_ch, int stride, int dilation)
    : conv1_(in_ch, mid_ch, 1),
      bn1_(mid_ch),
      relu1_(ActKind::Relu),
      conv2_(mid_ch, mid_ch, 3, stride, dilation),
      bn2_(mid_ch),
      relu2_(ActKind::Relu),
      conv3_(mid_ch, out_ch, 1),
      bn3_(out_ch),
      relu_out_(ActKind::Relu) {
    if (stride > 1 || in_ch != out_ch) {
        proj_ = std::make_unique<Conv2d>(in_ch, out_ch, 1, stride);
        proj_bn_ = std::make_unique<BatchNorm2d>(out_ch);
    }
}

void ResNetBottleneckBlock::init(Rng& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    conv3_.init(rng);
    if (proj_) proj_->init(rng);
}

Tensor ResNetBottleneckBlock::forward(const Tensor& input) {
    Tensor t = relu1_.forward(bn1_.forward(conv1_.forward(input)));
    t = relu2_.forward(bn2_.forward(conv2_.forward(t)));
    t = bn3_.forward(conv3_.forward(t));
    Tensor shortcut = proj_ ? proj_bn_->forward(proj_->forward(input)) : input;
    t.check_shape_matches(shortcut, "bottleneck add");
    cached_sum_ = add(t, shortcut);
    return relu_out_.forward(cached_sum_);
}

Tensor ResNetBottleneckBlock::backward(const Tensor& grad_out) {
    Tensor g_sum = relu_out_.backward(grad_out);
    Tensor g = bn3_.backward(g_sum);
    g = conv3_.backward(g);
    g = relu2_.backward(g);
    g = bn2_.backward(g);
    g = conv2_.backward(g);
    g = relu1_.backward(g);
    g = bn1_.backward(g);
    Tensor g_in = conv1_.backward(g);
    if (proj_) {
        Tensor g_short = proj_bn_->backward(g_sum);
        g_short = proj_->backward(g_short);
        return add(g_in, g_short);
    }
    return add(g_in, g_sum);
}

void ResNetBottleneckBlock::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
    conv1_.collect_params(join_name(prefix, "conv1"), out);
    bn1_.collect_params(join_name(prefix, "bn1"), out);
    conv2_.collect_params(join_name(prefix, "conv2"), out);
    bn2_.collect_params(join_name(prefix, "bn2"), out);
    conv3_.collect_params(join_name(prefix, "conv3"), out);
    bn3_.collect_params(join_name(prefix, "bn3"), out);
    if (proj_) {
        proj_->collect_params(join_name(prefix, "proj"), out);
        proj_bn_->collect_params(join_name(prefix, "proj_bn"), out);
    }
}

void ResNetBottleneckBlock::set_training(bool training) {
    Layer::set_training(training);
    for (Layer* l : {static_cast<Layer*>(&conv1_), static_cast<Layer*>(&bn1_),
                     static_cast<Layer*>(&relu1_), static_cast<Layer*>(&conv2_),
                     static_cast<Layer*>(&bn2_), static_cast<Layer*>(&relu2_),
                     static_cast<Layer*>(&conv3_), static_cast<Layer*>(&bn3_),
                     static_cast<Layer*>(&relu_out_)})
        l->set_training(training);
    if (proj_) {
        proj_->set_training(training);
        proj_bn_->set_training(training);
    }
}

InvertedBottleneck::InvertedBottleneck(int in_ch, int out_ch, int expansion, int stride, int dilation)
    : expand_(in_ch, in_ch * expansion, 1),
      bn1_(in_ch * expansion),
      relu6_1_(ActKind::Relu6),
      dw_(in_ch * expansion, 3, stride, dilation),
      bn2_(in_ch * expansion),
      relu6_2_(ActKind::Relu6),
      project_(in_ch * expansion, out_ch, 1),
      bn3_(out_ch),
      residual_add_(stride == 1 && in_ch == out_ch) {
    if (expansion < 1) throw ConfigError("inverted bottleneck: expansion ratio must be >= 1");
}

void InvertedBottleneck::init(Rng& rng) {
    expand_.init(rng);
    dw_.init(rng);
    project_.init(rng);
}

Tensor InvertedBottleneck::forward(const Tensor& input) {
    Tensor t = relu6_1_.forward(bn1_.forward(expand_.forward(input)));
    t = relu6_2_.forward(bn2_.forward(dw_.forward(t)));
    t = bn3_.forward(project_.forward(t));
    if (!residual_add_) return t;
    t.check_shape_matches(input, "inverted bottleneck add");
    return add(t, input);
}

Tensor InvertedBottleneck::backward(const Tensor& grad_out) {
    Tensor g = bn3_.backward(grad_out);
    g = project_.backward(g);
    g = relu6_2_.backward(g);
    g = bn2_.backward(g);
    g = dw_.backward(g);
    g = relu6_1_.backward(g);
    g = bn1_.backward(g);
    Tensor g_in = expand_.backward(g);
    if (residual_add_) return add(g_in, grad_out);
    return g_in;
}

void InvertedBottleneck::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
    expand_.collect_params(join_name(prefix, "expand"), out);
    bn1_.collect_params(join_name(prefix, "bn1"), out);
    dw_.collect_params(join_name(prefix, "dw"), out);
    bn2_.collect_params(join_name(prefix, "bn2"), out);
    project_.collect_params(join_name(prefix, "project"), out);
    bn3_.collect_params(join_name(prefix, "bn3"), out);
}

void InvertedBottleneck::set_training(bool training) {
    Layer::set_training(training);
    for (Layer* l : {static_cast<Layer*>(&expand_), static_cast<Layer*>(&bn1_),
                     static_cast<Layer*>(&relu6_1_), static_cast<Layer*>(&dw_),
                     static_cast<Layer*>(&bn2_), static_cast<Layer*>(&relu6_2_),
                     static_cast<Layer*>(&project_), static_cast<Layer*>(&bn3_)})
        l->set_training(training);
}

int scale_channels(int channels, double multiplier) {
    return std::max(1, static_cast<int>(std::lround(channels * multiplier)));
}

BackboneFeatures Backbone::forward(const Tensor& input) {
    Tensor t = input;
    BackboneFeatures out;
    for (size_t i = 0; i < stages_.size(); ++i) {
        t = stages_[i]->forward(t);
        if (static_cast<int>(i) == tap_index_) out.low = t;
    }
    out.high = std::move(t);
    return out;
}

Tensor Backbone::backward(const Tensor& grad_low, const Tensor& grad_high) {
    Tensor g = grad_high;
    for (int i = static_cast<int>(stages_.size()) - 1; i >= 0; --i) {
        if (i == tap_index_) g = add(g, grad_low);
        g = stages_[static_cast<size_t>(i)]->backward(g);
    }
    return g;
}

void Backbone::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
    for (size_t i = 0; i < stages_.size(); ++i)
        stages_[i]->collect_params(join_name(prefix, "stage" + std::to_string(i)), out);
}

void Backbone::set_training(bool training) {
    for (auto& s : stages_) s->set_training(training);
}

namespace {

void validate_config(const BackboneConfig& cfg) {
    if (cfg.width_multiplier <= 0.0 || cfg.width_multiplier > 1.0)
        throw ConfigError("backbone: width multiplier must lie in (0, 1]");
    if (cfg.resolution_multiplier <= 0.0 || cfg.resolution_multiplier > 1.0)
        throw ConfigError("backbone: resolution multiplier must lie in (0, 1]");
    if (cfg.output_stride != 16 && cfg.output_stride != 32)
        throw ConfigError("backbone: output stride must be 16 or 32");
}

int halved(int repeats) { return std::max(1, repeats / 2); }

std::unique_ptr<Backbone> build_resnet(const BackboneConfig& cfg, uint64_t seed, bool bottleneck) {
    auto bb = std::unique_ptr<Backbone>(new Backbone());
    bb->config_ = cfg;
    Rng rng(seed);
    const double eps = cfg.width_multiplier;

    const int stem_ch = scale_channels(64, eps);
    auto stem = std::make_unique<Sequential>();
    stem->emplace<Conv2d>("conv", 1, stem_ch, 7, 2).init(rng);
    stem->emplace<BatchNorm2d>("bn", stem_ch);
    stem->emplace<Activation>("relu", ActKind::Relu);
    stem->emplace<MaxPool2d>("pool", 3, 2, 1);
    bb->stages_.push_back(std::move(stem));

    const int base_repeats18[4] = {2, 2, 2, 2};
    const int base_repeats50[4] = {3, 4, 6, 3};
    const int mid_base[4] = {64, 128, 256, 512};

    int in_ch = stem_ch;
    int current_stride = 4;
    int dilation = 1;
    for (int s = 0; s < 4; ++s) {
        int repeats = bottleneck ? base_repeats50[s] : base_repeats18[s];
        if (cfg.reduced_depth) repeats = halved(repeats);
        const int mid = scale_channels(mid_base[s], eps);
        const int out_ch = bottleneck ? scale_channels(mid_base[s] * 4, eps) : mid;
        int stride = s == 0 ? 1 : 2;
        if (stride == 2 && current_stride >= cfg.output_stride) {
            stride = 1;
            dilation *= 2;
        }
        auto stage = std::make_unique<Sequential>();
        for (int b = 0; b < repeats; ++b) {
            const int block_stride = b == 0 ? stride : 1;
            if (bottleneck) {
                auto blk = std::make_unique<ResNetBottleneckBlock>(in_ch, mid, out_ch, block_stride, dilation);
                blk->init(rng);
                stage->add("block" + std::to_string(b), std::move(blk));
            } else {
                auto blk = std::make_unique<ResidualBlock>(in_ch, out_ch, block_stride, dilation);
                blk->init(rng);
                stage->add("block" + std::to_string(b), std::move(blk));
            }
            in_ch = out_ch;
        }
        current_stride *= stride;
        bb->stages_.push_back(std::move(stage));
        if (current_stride == 4 && bb->tap_index_ == 0) {
            bb->tap_index_ = static_cast<int>(bb->stages_.size()) - 1;
            bb->low_channels_ = in_ch;
        }
    }
    if (cfg.low_level_tap >= 0) {
        if (cfg.low_level_tap >= static_cast<int>(bb->stages_.size()))
            throw ConfigError("backbone: low_level_tap stage index out of range");
        bb->tap_index_ = cfg.low_level_tap;
    }
    bb->high_channels_ = in_ch;
    bb->low_stride_ = 4;
    bb->high_stride_ = current_stride;
    return bb;
}

std::unique_ptr<Backbone> build_mobilenet_v2(const BackboneConfig& cfg, uint64_t seed) {
    auto bb = std::unique_ptr<Backbone>(new Backbone());
    bb->config_ = cfg;
    Rng rng(seed);
    const double eps = cfg.width_multiplier;

    struct StageSpec {
        int expansion, channels, repeats, stride;
    };
    // MobileNetV2 bottleneck sequence (t, c, n, s).
    const StageSpec plan[7] = {{1, 16, 1, 1},  {6, 24, 2, 2},  {6, 32, 3, 2}, {6, 64, 4, 2},
                               {6, 96, 3, 1},  {6, 160, 3, 2}, {6, 320, 1, 1}};

    const int stem_ch = scale_channels(32, eps);
    auto stem = std::make_unique<Sequential>();
    stem->emplace<Conv2d>("conv", 1, stem_ch, 3, 2).init(rng);
    stem->emplace<BatchNorm2d>("bn", stem_ch);
    stem->emplace<Activation>("relu6", ActKind::Relu6);
    bb->stages_.push_back(std::move(stem));

    int in_ch = stem_ch;
    int current_stride = 2;
    int dilation = 1;
    for (const auto& sp : plan) {
        int repeats = cfg.reduced_depth ? halved(sp.repeats) : sp.repeats;
        int stride = sp.stride;
        if (stride == 2 && current_stride >= cfg.output_stride) {
            stride = 1;
            dilation *= 2;
        }
        const int out_ch = scale_channels(sp.channels, eps);
        auto stage = std::make_unique<Sequential>();
        for (int b = 0; b < repeats; ++b) {
            auto blk = std::make_unique<InvertedBottleneck>(in_ch, out_ch, sp.expansion,
                                                            b == 0 ? stride : 1, dilation);
            blk->init(rng);
            stage->add("block" + std::to_string(b), std::move(blk));
            in_ch = out_ch;
        }
        current_stride *= stride;
        bb->stages_.push_back(std::move(stage));
        if (current_stride == 4 && bb->tap_index_ == 0) {
            bb->tap_index_ = static_cast<int>(bb->stages_.size()) - 1;
            bb->low_channels_ = in_ch;
        }
    }

    const int head_ch = scale_channels(1280, eps);
    auto head = std::make_unique<Sequential>();
    head->emplace<Conv2d>("conv", in_ch, head_ch, 1).init(rng);
    head->emplace<BatchNorm2d>("bn", head_ch);
    head->emplace<Activation>("relu6", ActKind::Relu6);
    bb->stages_.push_back(std::move(head));

    if (cfg.low_level_tap >= 0) {
        if (cfg.low_level_tap >= static_cast<int>(bb->stages_.size()))
            throw ConfigError("backbone: low_level_tap stage index out of range");
        bb->tap_index_ = cfg.low_level_tap;
    }
    bb->high_channels_ = head_ch;
    bb->low_stride_ = 4;
    bb->high_stride_ = current_stride;
    return bb;
}

}  // namespace

std::unique_ptr<Backbone> build_backbone(const BackboneConfig& cfg, uint64_t seed) {
    validate_config(cfg);
    switch (cfg.kind) {
        case BackboneKind::ResNet18:
            return build_resnet(cfg, seed, false);
        case BackboneKind::ResNet50:
            return build_resnet(cfg, seed, true);
        case BackboneKind::MobileNetV2:
            return build_mobilenet_v2(cfg, seed);
    }
    throw ConfigError("backbone: unknown kind");
}

double dsc_cost_estimate(double eps, double delta, int d_in, int d_out, int d_f) {
    if (eps <= 0.0 || eps > 1.0 || delta <= 0.0 || delta > 1.0)
        throw ConfigError("dsc_cost_estimate: multipliers must lie in (0, 1]");
    if (d_in <= 0 || d_out <= 0 || d_f <= 0)
        throw ConfigError("dsc_cost_estimate: dimensions must be positive");
    const double df = delta * d_f;
    return eps * d_in * df * df + eps * d_in * eps * d_out * df * df;
}

}  // namespace myinet
