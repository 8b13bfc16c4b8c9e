#include "myinet/aspp.hpp"

#include "myinet/errors.hpp"
#include "myinet/rng.hpp"

namespace myinet {

Aspp::Aspp(int in_ch, const AsppConfig& cfg)
    : cfg_(cfg), projection_(4 * cfg.branch_channels, cfg.branch_channels, 1) {
    if (cfg.base_rate < 1) throw ConfigError("aspp: base rate must be >= 1");
    for (int rate : branch_rates()) {
        Branch b;
        if (rate == 1)
            b.conv = std::make_unique<Conv2d>(in_ch, cfg.branch_channels, 1);
        else
            b.conv = std::make_unique<Conv2d>(in_ch, cfg.branch_channels, 3, 1, rate);
        b.bn = std::make_unique<BatchNorm2d>(cfg.branch_channels);
        b.relu = std::make_unique<Activation>(ActKind::Relu);
        branches_.push_back(std::move(b));
    }
}

std::vector<int> Aspp::branch_rates() const {
    return {1, cfg_.base_rate, 2 * cfg_.base_rate, 3 * cfg_.base_rate};
}

void Aspp::init(Rng& rng) {
    for (auto& b : branches_) b.conv->init(rng);
    projection_.init(rng);
}

Tensor Aspp::forward(const Tensor& input) {
    std::vector<Tensor> outs;
    outs.reserve(branches_.size());
    for (auto& b : branches_) outs.push_back(b.relu->forward(b.bn->forward(b.conv->forward(input))));
    std::vector<const Tensor*> parts;
    for (const auto& t : outs) parts.push_back(&t);
    return projection_.forward(concat_channels(parts));
}

Tensor Aspp::backward(const Tensor& grad_out) {
    Tensor g_cat = projection_.backward(grad_out);
    std::vector<int> counts(branches_.size(), cfg_.branch_channels);
    std::vector<Tensor> parts = split_channels(g_cat, counts);
    Tensor g_in;
    for (size_t i = 0; i < branches_.size(); ++i) {
        Tensor g = branches_[i].relu->backward(parts[i]);
        g = branches_[i].bn->backward(g);
        g = branches_[i].conv->backward(g);
        g_in = i == 0 ? std::move(g) : add(g_in, g);
    }
    return g_in;
}

void Aspp::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
    const auto rates = branch_rates();
    for (size_t i = 0; i < branches_.size(); ++i) {
        const std::string base = join_name(prefix, "branch_r" + std::to_string(rates[i]));
        branches_[i].conv->collect_params(join_name(base, "conv"), out);
        branches_[i].bn->collect_params(join_name(base, "bn"), out);
    }
    projection_.collect_params(join_name(prefix, "projection"), out);
}

void Aspp::set_training(bool training) {
    Layer::set_training(training);
    for (auto& b : branches_) {
        b.conv->set_training(training);
        b.bn->set_training(training);
        b.relu->set_training(training);
    }
    projection_.set_training(training);
}

SegModelConfig default_model_config(const std::string& name) {
    SegModelConfig cfg;
    cfg.name = name;
    if (name == "mi-resnet18-ac") {
        cfg.backbone.kind = BackboneKind::ResNet18;
    } else if (name == "mi-resnet50-ac") {
        cfg.backbone.kind = BackboneKind::ResNet50;
    } else if (name == "mi-mobilenet-ac") {
        cfg.backbone.kind = BackboneKind::MobileNetV2;
    } else {
        throw ConfigError("unknown model '" + name +
                          "'; valid names: mi-resnet18-ac, mi-resnet50-ac, mi-mobilenet-ac");
    }
    return cfg;
}

SegmentationModel::SegmentationModel(const SegModelConfig& cfg, uint64_t seed)
    : cfg_(cfg),
      backbone_(build_backbone(cfg.backbone, seed)),
      aspp_(backbone_->high_channels(), cfg.aspp),
      low_proj_(backbone_->low_channels(), cfg.low_proj_channels, 1),
      low_proj_bn_(cfg.low_proj_channels),
      low_proj_relu_(ActKind::Relu),
      classifier_(cfg.decoder_channels, cfg.num_classes, 1) {
    if (cfg.num_classes != kNumClasses)
        throw ConfigError("segmentation model: classifier must emit one channel per class");
    Rng rng(derive_seed(seed, 0x5e9));
    aspp_.init(rng);
    low_proj_.init(rng);
    const int fused = cfg.low_proj_channels + cfg.aspp.branch_channels;
    decoder_.emplace<Conv2d>("conv1", fused, cfg.decoder_channels, 3).init(rng);
    decoder_.emplace<BatchNorm2d>("bn1", cfg.decoder_channels);
    decoder_.emplace<Activation>("relu1", ActKind::Relu);
    decoder_.emplace<Conv2d>("conv2", cfg.decoder_channels, cfg.decoder_channels, 3).init(rng);
    decoder_.emplace<BatchNorm2d>("bn2", cfg.decoder_channels);
    decoder_.emplace<Activation>("relu2", ActKind::Relu);
    classifier_.init(rng);
}

Tensor SegmentationModel::forward(const Tensor& image) {
    if (image.c() != 1)
        throw ConfigError("segmentation model: expected a single-channel image, got " +
                          std::to_string(image.c()) + " channels");
    in_h_ = image.h();
    in_w_ = image.w();
    BackboneFeatures feats = backbone_->forward(image);
    low_h_ = feats.low.h();
    low_w_ = feats.low.w();
    high_h_ = feats.high.h();
    high_w_ = feats.high.w();

    Tensor high = aspp_.forward(feats.high);
    Tensor high_up = bilinear_upsample(high, low_h_, low_w_);
    Tensor low = low_proj_relu_.forward(low_proj_bn_.forward(low_proj_.forward(feats.low)));
    Tensor fused = concat_channels({&low, &high_up});
    Tensor decoded = decoder_.forward(fused);
    Tensor logits = classifier_.forward(decoded);
    return bilinear_upsample(logits, in_h_, in_w_);
}

Tensor SegmentationModel::backward(const Tensor& grad_scores) {
    Tensor g = bilinear_upsample_backward(grad_scores, low_h_, low_w_);
    g = classifier_.backward(g);
    g = decoder_.backward(g);
    auto parts = split_channels(g, {cfg_.low_proj_channels, cfg_.aspp.branch_channels});
    Tensor g_low = low_proj_relu_.backward(parts[0]);
    g_low = low_proj_bn_.backward(g_low);
    g_low = low_proj_.backward(g_low);
    Tensor g_high = bilinear_upsample_backward(parts[1], high_h_, high_w_);
    g_high = aspp_.backward(g_high);
    return backbone_->backward(g_low, g_high);
}

void SegmentationModel::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
    backbone_->collect_params(join_name(prefix, "backbone"), out);
    aspp_.collect_params(join_name(prefix, "aspp"), out);
    low_proj_.collect_params(join_name(prefix, "low_proj"), out);
    low_proj_bn_.collect_params(join_name(prefix, "low_proj_bn"), out);
    decoder_.collect_params(join_name(prefix, "decoder"), out);
    classifier_.collect_params(join_name(prefix, "classifier"), out);
}

void SegmentationModel::set_training(bool training) {
    Layer::set_training(training);
    backbone_->set_training(training);
    aspp_.set_training(training);
    low_proj_.set_training(training);
    low_proj_bn_.set_training(training);
    low_proj_relu_.set_training(training);
    decoder_.set_training(training);
    classifier_.set_training(training);
}

LabelMap argmax_labels(const Tensor& scores, int batch_index) {
    LabelMap labels(scores.h(), scores.w());
    for (int y = 0; y < scores.h(); ++y) {
        for (int x = 0; x < scores.w(); ++x) {
            int best = 0;
            double best_v = scores.at(batch_index, 0, y, x);
            for (int c = 1; c < scores.c(); ++c) {
                const double v = scores.at(batch_index, c, y, x);
                if (v > best_v) {
                    best_v = v;
                    best = c;
                }
            }
            labels.at(y, x) = static_cast<uint8_t>(best);
        }
    }
    return labels;
}

Segmentation segment(SegmentationModel& model, const Tensor& image) {
    model.set_training(false);
    Segmentation out;
    out.scores = model.forward(image);
    out.labels.reserve(static_cast<size_t>(image.n()));
    for (int n = 0; n < image.n(); ++n) out.labels.push_back(argmax_labels(out.scores, n));
    return out;
}

}  // namespace myinet
