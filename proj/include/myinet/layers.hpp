#pragma once

#include <memory>
#include <string>
#include <vector>

#include "myinet/kernels.hpp"
#include "myinet/tensor.hpp"

namespace myinet {

class Rng;

struct NamedParam {
    std::string name;
    Tensor* tensor;
};

/// Stateful module: forward caches whatever backward needs; backward
/// accumulates parameter gradients and returns the input gradient.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& input) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual void collect_params(const std::string& prefix, std::vector<NamedParam>& out) {}
    virtual void set_training(bool training) { training_ = training; }
    bool training() const { return training_; }

    std::vector<NamedParam> params(const std::string& prefix = "") {
        std::vector<NamedParam> out;
        collect_params(prefix, out);
        return out;
    }
    void zero_grads();

protected:
    bool training_ = true;
};

class Conv2d : public Layer {
public:
    Conv2d(int in_ch, int out_ch, int kernel, int stride = 1, int dilation = 1,
           Padding padding = Padding::Same, bool with_bias = true);

    /// Fan-in-scaled Gaussian weights, zero bias.
    void init(Rng& rng);

    Tensor forward(const Tensor& input) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;

    ConvSpec& spec() { return spec_; }
    const ConvSpec& spec() const { return spec_; }

private:
    ConvSpec spec_;
    bool with_bias_;
    Tensor cached_input_;
};

class DepthwiseConv2d : public Layer {
public:
    DepthwiseConv2d(int channels, int kernel, int stride = 1, int dilation = 1,
                    Padding padding = Padding::Same);
    void init(Rng& rng);

    Tensor forward(const Tensor& input) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;

    ConvSpec& spec() { return spec_; }

private:
    ConvSpec spec_;
    Tensor cached_input_;
};

class BatchNorm2d : public Layer {
public:
    explicit BatchNorm2d(int channels, double eps = 1e-5, double momentum = 0.9);

    Tensor forward(const Tensor& input) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;

    BatchNormState& state() { return state_; }

private:
    BatchNormState state_;
    BatchNormCache cache_;
};

class Activation : public Layer {
public:
    explicit Activation(ActKind kind) : kind_(kind) {}
    Tensor forward(const Tensor& input) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    ActKind kind_;
    Tensor cached_input_;
};

class MaxPool2d : public Layer {
public:
    MaxPool2d(int kernel, int stride, int pad) : kernel_(kernel), stride_(stride), pad_(pad) {}
    Tensor forward(const Tensor& input) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    int kernel_, stride_, pad_;
    Tensor cached_input_;
    std::vector<int64_t> argmax_;
};

class BilinearUpsample : public Layer {
public:
    BilinearUpsample(int out_h, int out_w) : out_h_(out_h), out_w_(out_w) {}
    Tensor forward(const Tensor& input) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    int out_h_, out_w_;
    int in_h_ = 0, in_w_ = 0;
};

/// Depthwise separable convolution block: DW -> BN -> ReLU -> PW -> BN -> ReLU.
class DscBlock : public Layer {
public:
    DscBlock(int in_ch, int out_ch, int kernel = 3, int stride = 1, int dilation = 1);
    void init(Rng& rng);

    Tensor forward(const Tensor& input) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;
    void set_training(bool training) override;

private:
    DepthwiseConv2d dw_;
    BatchNorm2d bn1_;
    Activation relu1_;
    Conv2d pw_;
    BatchNorm2d bn2_;
    Activation relu2_;
};

/// Ordered pipeline of layers; children are named by insertion label.
class Sequential : public Layer {
public:
    Sequential() = default;
    Layer& add(const std::string& name, std::unique_ptr<Layer> layer);

    template <typename L, typename... Args>
    L& emplace(const std::string& name, Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        add(name, std::move(layer));
        return ref;
    }

    Tensor forward(const Tensor& input) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;
    void set_training(bool training) override;

    size_t size() const { return children_.size(); }
    Layer& child(size_t i) { return *children_[i].layer; }

private:
    struct Child {
        std::string name;
        std::unique_ptr<Layer> layer;
    };
    std::vector<Child> children_;
};

std::string join_name(const std::string& prefix, const std::string& name);

}  // namespace myinet
