#include "myinet/layers.hpp"

#include <cmath>

#include "myinet/errors.hpp"
#include "myinet/rng.hpp"

namespace myinet {

std::string join_name(const std::string& prefix, const std::string& name) {
    return prefix.empty() ? name : prefix + "." + name;
}

void Layer::zero_grads() {
    for (auto& p : params()) p.tensor->zero_grad();
}

Conv2d::Conv2d(int in_ch, int out_ch, int kernel, int stride, int dilation, Padding padding,
               bool with_bias)
    : spec_(make_conv_spec(in_ch, out_ch, kernel, stride, dilation, padding)), with_bias_(with_bias) {}

void Conv2d::init(Rng& rng) {
    const double fan_in = static_cast<double>(spec_.in_channels) * spec_.kernel_size * spec_.kernel_size;
    const double stddev = std::sqrt(2.0 / fan_in);
    for (auto& v : spec_.weights.values()) v = rng.normal(0.0, stddev);
    spec_.bias.fill(0.0);
}

Tensor Conv2d::forward(const Tensor& input) {
    cached_input_ = input;
    return atrous_conv2d(input, spec_);
}

Tensor Conv2d::backward(const Tensor& grad_out) {
    return atrous_conv2d_backward(cached_input_, spec_, grad_out);
}

void Conv2d::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
    out.push_back({join_name(prefix, "weight"), &spec_.weights});
    if (with_bias_) out.push_back({join_name(prefix, "bias"), &spec_.bias});
}

DepthwiseConv2d::DepthwiseConv2d(int channels, int kernel, int stride, int dilation, Padding padding) {
    spec_ = make_conv_spec(channels, channels, kernel, stride, dilation, padding);
    spec_.weights = Tensor(channels, 1, kernel, kernel);
}

void DepthwiseConv2d::init(Rng& rng) {
    const double fan_in = static_cast<double>(spec_.kernel_size) * spec_.kernel_size;
    const double stddev = std::sqrt(2.0 / fan_in);
    for (auto& v : spec_.weights.values()) v = rng.normal(0.0, stddev);
    spec_.bias.fill(0.0);
}

Tensor DepthwiseConv2d::forward(const Tensor& input) {
    cached_input_ = input;
    return depthwise_conv2d(input, spec_);
}

Tensor DepthwiseConv2d::backward(const Tensor& grad_out) {
    return depthwise_conv2d_backward(cached_input_, spec_, grad_out);
}

void DepthwiseConv2d::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
    out.push_back({join_name(prefix, "weight"), &spec_.weights});
    out.push_back({join_name(prefix, "bias"), &spec_.bias});
}

BatchNorm2d::BatchNorm2d(int channels, double eps, double momentum)
    : state_(BatchNormState::make(channels, eps, momentum)) {}

Tensor BatchNorm2d::forward(const Tensor& input) {
    return batch_norm(input, state_, training_ ? BnMode::Train : BnMode::Infer, &cache_);
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
    return batch_norm_backward(grad_out, cache_, state_);
}

void BatchNorm2d::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
    out.push_back({join_name(prefix, "gamma"), &state_.gamma});
    out.push_back({join_name(prefix, "beta"), &state_.beta});
}

Tensor Activation::forward(const Tensor& input) {
    cached_input_ = input;
    return activation(input, kind_);
}

Tensor Activation::backward(const Tensor& grad_out) {
    return activation_backward(grad_out, cached_input_, kind_);
}

Tensor MaxPool2d::forward(const Tensor& input) {
    cached_input_ = input;
    return max_pool2d(input, kernel_, stride_, pad_, &argmax_);
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
    return max_pool2d_backward(grad_out, cached_input_, argmax_);
}

Tensor BilinearUpsample::forward(const Tensor& input) {
    in_h_ = input.h();
    in_w_ = input.w();
    return bilinear_upsample(input, out_h_, out_w_);
}

Tensor BilinearUpsample::backward(const Tensor& grad_out) {
    return bilinear_upsample_backward(grad_out, in_h_, in_w_);
}

DscBlock::DscBlock(int in_ch, int out_ch, int kernel, int stride, int dilation)
    : dw_(in_ch, kernel, stride, dilation),
      bn1_(in_ch),
      relu1_(ActKind::Relu),
      pw_(in_ch, out_ch, 1),
      bn2_(out_ch),
      relu2_(ActKind::Relu) {}

void DscBlock::init(Rng& rng) {
    dw_.init(rng);
    pw_.init(rng);
}

Tensor DscBlock::forward(const Tensor& input) {
    Tensor t = dw_.forward(input);
    t = bn1_.forward(t);
    t = relu1_.forward(t);
    t = pw_.forward(t);
    t = bn2_.forward(t);
    return relu2_.forward(t);
}

Tensor DscBlock::backward(const Tensor& grad_out) {
    Tensor g = relu2_.backward(grad_out);
    g = bn2_.backward(g);
    g = pw_.backward(g);
    g = relu1_.backward(g);
    g = bn1_.backward(g);
    return dw_.backward(g);
}

void DscBlock::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
    dw_.collect_params(join_name(prefix, "dw"), out);
    bn1_.collect_params(join_name(prefix, "bn1"), out);
    pw_.collect_params(join_name(prefix, "pw"), out);
    bn2_.collect_params(join_name(prefix, "bn2"), out);
}

void DscBlock::set_training(bool training) {
    Layer::set_training(training);
    dw_.set_training(training);
    bn1_.set_training(training);
    relu1_.set_training(training);
    pw_.set_training(training);
    bn2_.set_training(training);
    relu2_.set_training(training);
}

Layer& Sequential::add(const std::string& name, std::unique_ptr<Layer> layer) {
    children_.push_back({name, std::move(layer)});
    return *children_.back().layer;
}

Tensor Sequential::forward(const Tensor& input) {
    Tensor t = input;
    for (auto& c : children_) t = c.layer->forward(t);
    return t;
}

Tensor Sequential::backward(const Tensor& grad_out) {
    Tensor g = grad_out;
    for (auto it = children_.rbegin(); it != children_.rend(); ++it) g = it->layer->backward(g);
    return g;
}

void Sequential::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
    for (auto& c : children_) c.layer->collect_params(join_name(prefix, c.name), out);
}

void Sequential::set_training(bool training) {
    Layer::set_training(training);
    for (auto& c : children_) c.layer->set_training(training);
}

}  // namespace myinet
