#include "myinet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "myinet/errors.hpp"
#include "myinet/threading.hpp"

namespace myinet {

namespace {

int div_floor(int a, int b) {
    int q = a / b, r = a % b;
    return (r != 0 && (r < 0) != (b < 0)) ? q - 1 : q;
}

int div_ceil(int a, int b) { return -div_floor(-a, b); }

// Output x range such that ix = x*stride - pad + tap stays inside [0, in_w).
void tap_range(int out_w, int in_w, int stride, int pad, int tap, int& x_lo, int& x_hi) {
    x_lo = std::max(0, div_ceil(pad - tap, stride));
    x_hi = std::min(out_w - 1, div_floor(in_w - 1 + pad - tap, stride));
}

}  // namespace

void ConvSpec::validate() const {
    if (in_channels <= 0 || out_channels <= 0) throw ConfigError("conv: channel counts must be positive");
    if (kernel_size <= 0 || kernel_size % 2 == 0) throw ConfigError("conv: kernel size must be positive odd");
    if (stride <= 0) throw ConfigError("conv: stride must be positive");
    if (dilation < 1) throw ConfigError("conv: dilation rate must be >= 1");
    if (weights.h() != kernel_size || weights.w() != kernel_size)
        throw ConfigError("conv: weight spatial extents do not match kernel_size");
    if (bias.numel() != out_channels) throw ConfigError("conv: bias length must equal out_channels");
}

int ConvSpec::pad() const {
    return padding == Padding::Same ? dilation * (kernel_size - 1) / 2 : 0;
}

ConvSpec make_conv_spec(int in_ch, int out_ch, int kernel, int stride, int dilation, Padding padding) {
    ConvSpec s;
    s.in_channels = in_ch;
    s.out_channels = out_ch;
    s.kernel_size = kernel;
    s.stride = stride;
    s.dilation = dilation;
    s.padding = padding;
    s.weights = Tensor(out_ch, in_ch, kernel, kernel);
    s.bias = Tensor(1, 1, 1, out_ch);
    return s;
}

int conv_out_extent(int in, int kernel, int stride, int dilation, int pad) {
    return (in + 2 * pad - dilation * (kernel - 1) - 1) / stride + 1;
}

Tensor atrous_conv2d(const Tensor& input, const ConvSpec& spec) {
    spec.validate();
    if (input.c() != spec.in_channels)
        throw ConfigError("atrous_conv2d: input has " + std::to_string(input.c()) +
                          " channels, spec expects " + std::to_string(spec.in_channels));
    if (input.h() == 0 || input.w() == 0) throw DomainError("atrous_conv2d: zero-sized spatial input");
    if (!spec.weights.all_finite()) throw ConfigError("atrous_conv2d: non-finite weights");

    const int pad = spec.pad();
    const int k = spec.kernel_size, stride = spec.stride, dil = spec.dilation;
    const int out_h = conv_out_extent(input.h(), k, stride, dil, pad);
    const int out_w = conv_out_extent(input.w(), k, stride, dil, pad);
    if (out_h <= 0 || out_w <= 0) throw DomainError("atrous_conv2d: kernel footprint exceeds input");

    Tensor out(input.n(), spec.out_channels, out_h, out_w);
    const int in_h = input.h(), in_w = input.w(), in_c = input.c();

    parallel_for(0, static_cast<int64_t>(input.n()) * spec.out_channels, [&](int64_t job) {
        const int n = static_cast<int>(job / spec.out_channels);
        const int co = static_cast<int>(job % spec.out_channels);
        double* out_plane = out.data() + out.index(n, co, 0, 0);
        const double b = spec.bias.data()[co];
        for (int64_t i = 0; i < static_cast<int64_t>(out_h) * out_w; ++i) out_plane[i] = b;

        for (int ci = 0; ci < in_c; ++ci) {
            const double* in_plane = input.data() + input.index(n, ci, 0, 0);
            const double* w_block = spec.weights.data() + spec.weights.index(co, ci, 0, 0);
            for (int ky = 0; ky < k; ++ky) {
                int y_lo, y_hi;
                tap_range(out_h, in_h, stride, pad, ky * dil, y_lo, y_hi);
                for (int kx = 0; kx < k; ++kx) {
                    const double wv = w_block[ky * k + kx];
                    int x_lo, x_hi;
                    tap_range(out_w, in_w, stride, pad, kx * dil, x_lo, x_hi);
                    for (int y = y_lo; y <= y_hi; ++y) {
                        const int iy = y * stride - pad + ky * dil;
                        double* out_row = out_plane + static_cast<int64_t>(y) * out_w;
                        const double* in_row = in_plane + static_cast<int64_t>(iy) * in_w - pad + kx * dil;
                        for (int x = x_lo; x <= x_hi; ++x) out_row[x] += wv * in_row[x * stride];
                    }
                }
            }
        }
    });
    return out;
}

Tensor atrous_conv2d_backward(const Tensor& input, ConvSpec& spec, const Tensor& grad_out,
                              bool want_grad_input) {
    const int pad = spec.pad();
    const int k = spec.kernel_size, stride = spec.stride, dil = spec.dilation;
    const int out_h = grad_out.h(), out_w = grad_out.w();
    const int in_h = input.h(), in_w = input.w(), in_c = input.c();
    const int out_c = spec.out_channels;

    if (spec.weights.has_grad() || spec.bias.has_grad()) {
        spec.weights.ensure_grad();
        spec.bias.ensure_grad();
        parallel_for(0, out_c, [&](int64_t co) {
            double bias_acc = 0.0;
            for (int n = 0; n < input.n(); ++n) {
                const double* go_plane = grad_out.data() + grad_out.index(n, static_cast<int>(co), 0, 0);
                for (int64_t i = 0; i < static_cast<int64_t>(out_h) * out_w; ++i) bias_acc += go_plane[i];
            }
            spec.bias.grad()[co] += bias_acc;

            for (int ci = 0; ci < in_c; ++ci) {
                double* gw_block = spec.weights.grad() + spec.weights.index(static_cast<int>(co), ci, 0, 0);
                for (int ky = 0; ky < k; ++ky) {
                    int y_lo, y_hi;
                    tap_range(out_h, in_h, stride, pad, ky * dil, y_lo, y_hi);
                    for (int kx = 0; kx < k; ++kx) {
                        int x_lo, x_hi;
                        tap_range(out_w, in_w, stride, pad, kx * dil, x_lo, x_hi);
                        double acc = 0.0;
                        for (int n = 0; n < input.n(); ++n) {
                            const double* go_plane = grad_out.data() + grad_out.index(n, static_cast<int>(co), 0, 0);
                            const double* in_plane = input.data() + input.index(n, ci, 0, 0);
                            for (int y = y_lo; y <= y_hi; ++y) {
                                const int iy = y * stride - pad + ky * dil;
                                const double* go_row = go_plane + static_cast<int64_t>(y) * out_w;
                                const double* in_row = in_plane + static_cast<int64_t>(iy) * in_w - pad + kx * dil;
                                for (int x = x_lo; x <= x_hi; ++x) acc += go_row[x] * in_row[x * stride];
                            }
                        }
                        gw_block[ky * k + kx] += acc;
                    }
                }
            }
        });
    }

    if (!want_grad_input) return Tensor();
    Tensor grad_in(input.n(), in_c, in_h, in_w);
    parallel_for(0, static_cast<int64_t>(input.n()) * in_c, [&](int64_t job) {
        const int n = static_cast<int>(job / in_c);
        const int ci = static_cast<int>(job % in_c);
        double* gi_plane = grad_in.data() + grad_in.index(n, ci, 0, 0);
        for (int co = 0; co < out_c; ++co) {
            const double* go_plane = grad_out.data() + grad_out.index(n, co, 0, 0);
            const double* w_block = spec.weights.data() + spec.weights.index(co, ci, 0, 0);
            for (int ky = 0; ky < k; ++ky) {
                int y_lo, y_hi;
                tap_range(out_h, in_h, stride, pad, ky * dil, y_lo, y_hi);
                for (int kx = 0; kx < k; ++kx) {
                    const double wv = w_block[ky * k + kx];
                    int x_lo, x_hi;
                    tap_range(out_w, in_w, stride, pad, kx * dil, x_lo, x_hi);
                    for (int y = y_lo; y <= y_hi; ++y) {
                        const int iy = y * stride - pad + ky * dil;
                        const double* go_row = go_plane + static_cast<int64_t>(y) * out_w;
                        double* gi_row = gi_plane + static_cast<int64_t>(iy) * in_w - pad + kx * dil;
                        for (int x = x_lo; x <= x_hi; ++x) gi_row[x * stride] += wv * go_row[x];
                    }
                }
            }
        }
    });
    return grad_in;
}

Tensor depthwise_conv2d(const Tensor& input, const ConvSpec& spec) {
    if (spec.weights.n() != spec.out_channels || spec.weights.c() != 1 ||
        spec.in_channels != spec.out_channels)
        throw ConfigError("depthwise_conv2d: expects one (k,k) filter per input channel");
    if (input.c() != spec.in_channels) throw ConfigError("depthwise_conv2d: channel mismatch");
    if (input.h() == 0 || input.w() == 0) throw DomainError("depthwise_conv2d: zero-sized spatial input");

    const int pad = spec.pad();
    const int k = spec.kernel_size, stride = spec.stride, dil = spec.dilation;
    const int out_h = conv_out_extent(input.h(), k, stride, dil, pad);
    const int out_w = conv_out_extent(input.w(), k, stride, dil, pad);
    if (out_h <= 0 || out_w <= 0) throw DomainError("depthwise_conv2d: kernel footprint exceeds input");

    Tensor out(input.n(), input.c(), out_h, out_w);
    const int in_h = input.h(), in_w = input.w();
    parallel_for(0, static_cast<int64_t>(input.n()) * input.c(), [&](int64_t job) {
        const int n = static_cast<int>(job / input.c());
        const int c = static_cast<int>(job % input.c());
        double* out_plane = out.data() + out.index(n, c, 0, 0);
        const double b = spec.bias.data()[c];
        for (int64_t i = 0; i < static_cast<int64_t>(out_h) * out_w; ++i) out_plane[i] = b;
        const double* in_plane = input.data() + input.index(n, c, 0, 0);
        const double* w_block = spec.weights.data() + spec.weights.index(c, 0, 0, 0);
        for (int ky = 0; ky < k; ++ky) {
            int y_lo, y_hi;
            tap_range(out_h, in_h, stride, pad, ky * dil, y_lo, y_hi);
            for (int kx = 0; kx < k; ++kx) {
                const double wv = w_block[ky * k + kx];
                int x_lo, x_hi;
                tap_range(out_w, in_w, stride, pad, kx * dil, x_lo, x_hi);
                for (int y = y_lo; y <= y_hi; ++y) {
                    const int iy = y * stride - pad + ky * dil;
                    double* out_row = out_plane + static_cast<int64_t>(y) * out_w;
                    const double* in_row = in_plane + static_cast<int64_t>(iy) * in_w - pad + kx * dil;
                    for (int x = x_lo; x <= x_hi; ++x) out_row[x] += wv * in_row[x * stride];
                }
            }
        }
    });
    return out;
}

Tensor depthwise_conv2d_backward(const Tensor& input, ConvSpec& spec, const Tensor& grad_out,
                                 bool want_grad_input) {
    const int pad = spec.pad();
    const int k = spec.kernel_size, stride = spec.stride, dil = spec.dilation;
    const int out_h = grad_out.h(), out_w = grad_out.w();
    const int in_h = input.h(), in_w = input.w();
    const int channels = input.c();

    if (spec.weights.has_grad() || spec.bias.has_grad()) {
        spec.weights.ensure_grad();
        spec.bias.ensure_grad();
        parallel_for(0, channels, [&](int64_t c) {
            double bias_acc = 0.0;
            for (int n = 0; n < input.n(); ++n) {
                const double* go_plane = grad_out.data() + grad_out.index(n, static_cast<int>(c), 0, 0);
                for (int64_t i = 0; i < static_cast<int64_t>(out_h) * out_w; ++i) bias_acc += go_plane[i];
            }
            spec.bias.grad()[c] += bias_acc;
            double* gw_block = spec.weights.grad() + spec.weights.index(static_cast<int>(c), 0, 0, 0);
            for (int ky = 0; ky < k; ++ky) {
                int y_lo, y_hi;
                tap_range(out_h, in_h, stride, pad, ky * dil, y_lo, y_hi);
                for (int kx = 0; kx < k; ++kx) {
                    int x_lo, x_hi;
                    tap_range(out_w, in_w, stride, pad, kx * dil, x_lo, x_hi);
                    double acc = 0.0;
                    for (int n = 0; n < input.n(); ++n) {
                        const double* go_plane = grad_out.data() + grad_out.index(n, static_cast<int>(c), 0, 0);
                        const double* in_plane = input.data() + input.index(n, static_cast<int>(c), 0, 0);
                        for (int y = y_lo; y <= y_hi; ++y) {
                            const int iy = y * stride - pad + ky * dil;
                            const double* go_row = go_plane + static_cast<int64_t>(y) * out_w;
                            const double* in_row = in_plane + static_cast<int64_t>(iy) * in_w - pad + kx * dil;
                            for (int x = x_lo; x <= x_hi; ++x) acc += go_row[x] * in_row[x * stride];
                        }
                    }
                    gw_block[ky * k + kx] += acc;
                }
            }
        });
    }

    if (!want_grad_input) return Tensor();
    Tensor grad_in(input.n(), channels, in_h, in_w);
    parallel_for(0, static_cast<int64_t>(input.n()) * channels, [&](int64_t job) {
        const int n = static_cast<int>(job / channels);
        const int c = static_cast<int>(job % channels);
        double* gi_plane = grad_in.data() + grad_in.index(n, c, 0, 0);
        const double* go_plane = grad_out.data() + grad_out.index(n, c, 0, 0);
        const double* w_block = spec.weights.data() + spec.weights.index(c, 0, 0, 0);
        for (int ky = 0; ky < k; ++ky) {
            int y_lo, y_hi;
            tap_range(out_h, in_h, stride, pad, ky * dil, y_lo, y_hi);
            for (int kx = 0; kx < k; ++kx) {
                const double wv = w_block[ky * k + kx];
                int x_lo, x_hi;
                tap_range(out_w, in_w, stride, pad, kx * dil, x_lo, x_hi);
                for (int y = y_lo; y <= y_hi; ++y) {
                    const int iy = y * stride - pad + ky * dil;
                    const double* go_row = go_plane + static_cast<int64_t>(y) * out_w;
                    double* gi_row = gi_plane + static_cast<int64_t>(iy) * in_w - pad + kx * dil;
                    for (int x = x_lo; x <= x_hi; ++x) gi_row[x * stride] += wv * go_row[x];
                }
            }
        }
    });
    return grad_in;
}

Tensor depthwise_separable_conv(const Tensor& input, const ConvSpec& depthwise,
                                const ConvSpec& pointwise, DscMode mode) {
    if (pointwise.kernel_size != 1) throw ConfigError("depthwise_separable_conv: pointwise kernel must be 1x1");
    if (pointwise.in_channels != depthwise.out_channels)
        throw ConfigError("depthwise_separable_conv: depthwise output channels (" +
                          std::to_string(depthwise.out_channels) + ") do not feed pointwise input (" +
                          std::to_string(pointwise.in_channels) + ")");
    Tensor mid = depthwise_conv2d(input, depthwise);
    if (mode == DscMode::KernelTest) return atrous_conv2d(mid, pointwise);

    BatchNormState bn1 = BatchNormState::make(depthwise.out_channels);
    mid = activation(batch_norm(mid, bn1, BnMode::Train), ActKind::Relu);
    Tensor out = atrous_conv2d(mid, pointwise);
    BatchNormState bn2 = BatchNormState::make(pointwise.out_channels);
    return activation(batch_norm(out, bn2, BnMode::Train), ActKind::Relu);
}

BatchNormState BatchNormState::make(int channels, double eps, double momentum) {
    BatchNormState s;
    s.gamma = Tensor::full(1, channels, 1, 1, 1.0);
    s.beta = Tensor(1, channels, 1, 1);
    s.running_mean = Tensor(1, channels, 1, 1);
    s.running_var = Tensor::full(1, channels, 1, 1, 1.0);
    s.eps = eps;
    s.momentum = momentum;
    return s;
}

Tensor batch_norm(const Tensor& input, BatchNormState& state, BnMode mode, BatchNormCache* cache) {
    const int channels = input.c();
    if (state.gamma.numel() != channels || state.beta.numel() != channels)
        throw ConfigError("batch_norm: gamma/beta length must equal channel count");
    const int64_t cnt = static_cast<int64_t>(input.n()) * input.h() * input.w();
    if (cnt == 0) throw DomainError("batch_norm: zero batch*spatial count");

    Tensor out(input.n(), channels, input.h(), input.w());
    if (cache) {
        cache->mode = mode;
        cache->x_hat = Tensor(input.n(), channels, input.h(), input.w());
        cache->inv_std.assign(channels, 0.0);
    }
    const int64_t plane = input.plane();

    parallel_for(0, channels, [&](int64_t c) {
        double mean, var;
        if (mode == BnMode::Train) {
            double sum = 0.0;
            for (int n = 0; n < input.n(); ++n) {
                const double* p = input.data() + input.index(n, static_cast<int>(c), 0, 0);
                for (int64_t i = 0; i < plane; ++i) sum += p[i];
            }
            mean = sum / static_cast<double>(cnt);
            double sq = 0.0;
            for (int n = 0; n < input.n(); ++n) {
                const double* p = input.data() + input.index(n, static_cast<int>(c), 0, 0);
                for (int64_t i = 0; i < plane; ++i) {
                    const double d = p[i] - mean;
                    sq += d * d;
                }
            }
            var = sq / static_cast<double>(cnt);
            state.running_mean.data()[c] = state.momentum * state.running_mean.data()[c] +
                                           (1.0 - state.momentum) * mean;
            state.running_var.data()[c] = state.momentum * state.running_var.data()[c] +
                                          (1.0 - state.momentum) * var;
        } else {
            mean = state.running_mean.data()[c];
            var = state.running_var.data()[c];
        }
        const double inv_std = 1.0 / std::sqrt(var + state.eps);
        const double g = state.gamma.data()[c], b = state.beta.data()[c];
        if (cache) cache->inv_std[c] = inv_std;
        for (int n = 0; n < input.n(); ++n) {
            const double* p = input.data() + input.index(n, static_cast<int>(c), 0, 0);
            double* o = out.data() + out.index(n, static_cast<int>(c), 0, 0);
            double* xh = cache ? cache->x_hat.data() + cache->x_hat.index(n, static_cast<int>(c), 0, 0)
                               : nullptr;
            for (int64_t i = 0; i < plane; ++i) {
                const double norm = (p[i] - mean) * inv_std;
                if (xh) xh[i] = norm;
                o[i] = g * norm + b;
            }
        }
    });
    return out;
}

Tensor batch_norm_backward(const Tensor& grad_out, const BatchNormCache& cache, BatchNormState& state) {
    const int channels = grad_out.c();
    const int64_t cnt = static_cast<int64_t>(grad_out.n()) * grad_out.h() * grad_out.w();
    const int64_t plane = grad_out.plane();
    Tensor grad_in(grad_out.n(), channels, grad_out.h(), grad_out.w());
    state.gamma.ensure_grad();
    state.beta.ensure_grad();

    parallel_for(0, channels, [&](int64_t c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int n = 0; n < grad_out.n(); ++n) {
            const double* dy = grad_out.data() + grad_out.index(n, static_cast<int>(c), 0, 0);
            const double* xh = cache.x_hat.data() + cache.x_hat.index(n, static_cast<int>(c), 0, 0);
            for (int64_t i = 0; i < plane; ++i) {
                sum_dy += dy[i];
                sum_dy_xhat += dy[i] * xh[i];
            }
        }
        state.beta.grad()[c] += sum_dy;
        state.gamma.grad()[c] += sum_dy_xhat;

        const double g = state.gamma.data()[c];
        const double inv_std = cache.inv_std[c];
        if (cache.mode == BnMode::Infer) {
            // Running statistics are constants here.
            const double scale = g * inv_std;
            for (int n = 0; n < grad_out.n(); ++n) {
                const double* dy = grad_out.data() + grad_out.index(n, static_cast<int>(c), 0, 0);
                double* dx = grad_in.data() + grad_in.index(n, static_cast<int>(c), 0, 0);
                for (int64_t i = 0; i < plane; ++i) dx[i] = scale * dy[i];
            }
            return;
        }
        const double mean_dy = sum_dy / static_cast<double>(cnt);
        const double mean_dy_xhat = sum_dy_xhat / static_cast<double>(cnt);
        for (int n = 0; n < grad_out.n(); ++n) {
            const double* dy = grad_out.data() + grad_out.index(n, static_cast<int>(c), 0, 0);
            const double* xh = cache.x_hat.data() + cache.x_hat.index(n, static_cast<int>(c), 0, 0);
            double* dx = grad_in.data() + grad_in.index(n, static_cast<int>(c), 0, 0);
            for (int64_t i = 0; i < plane; ++i)
                dx[i] = g * inv_std * (dy[i] - mean_dy - xh[i] * mean_dy_xhat);
        }
    });
    return grad_in;
}

Tensor activation(const Tensor& input, ActKind kind) {
    Tensor out(input.n(), input.c(), input.h(), input.w());
    const double* p = input.data();
    double* o = out.data();
    const int64_t total = input.numel();
    if (kind == ActKind::Relu) {
        for (int64_t i = 0; i < total; ++i) o[i] = p[i] > 0.0 ? p[i] : 0.0;
    } else {
        for (int64_t i = 0; i < total; ++i) o[i] = std::min(std::max(p[i], 0.0), 6.0);
    }
    return out;
}

Tensor activation_backward(const Tensor& grad_out, const Tensor& input, ActKind kind) {
    Tensor grad_in(input.n(), input.c(), input.h(), input.w());
    const double* p = input.data();
    const double* dy = grad_out.data();
    double* dx = grad_in.data();
    const int64_t total = input.numel();
    if (kind == ActKind::Relu) {
        for (int64_t i = 0; i < total; ++i) dx[i] = p[i] > 0.0 ? dy[i] : 0.0;
    } else {
        for (int64_t i = 0; i < total; ++i) dx[i] = (p[i] > 0.0 && p[i] < 6.0) ? dy[i] : 0.0;
    }
    return grad_in;
}

namespace {

struct Lerp {
    int lo, hi;
    double frac;
};

std::vector<Lerp> lerp_axis(int out_extent, int in_extent) {
    std::vector<Lerp> m(out_extent);
    const double scale = out_extent > 1 ? static_cast<double>(in_extent - 1) / (out_extent - 1) : 0.0;
    for (int i = 0; i < out_extent; ++i) {
        const double src = i * scale;
        int lo = static_cast<int>(src);
        lo = std::min(lo, in_extent - 1);
        const int hi = std::min(lo + 1, in_extent - 1);
        m[i] = {lo, hi, src - lo};
    }
    return m;
}

}  // namespace

Tensor bilinear_upsample(const Tensor& input, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw ConfigError("bilinear_upsample: output extents must be >= 1");
    const auto ym = lerp_axis(out_h, input.h());
    const auto xm = lerp_axis(out_w, input.w());
    Tensor out(input.n(), input.c(), out_h, out_w);
    const int in_w = input.w();
    parallel_for(0, static_cast<int64_t>(input.n()) * input.c(), [&](int64_t job) {
        const int n = static_cast<int>(job / input.c());
        const int c = static_cast<int>(job % input.c());
        const double* in_plane = input.data() + input.index(n, c, 0, 0);
        double* out_plane = out.data() + out.index(n, c, 0, 0);
        for (int y = 0; y < out_h; ++y) {
            const auto& my = ym[y];
            const double* r0 = in_plane + static_cast<int64_t>(my.lo) * in_w;
            const double* r1 = in_plane + static_cast<int64_t>(my.hi) * in_w;
            double* o = out_plane + static_cast<int64_t>(y) * out_w;
            for (int x = 0; x < out_w; ++x) {
                const auto& mx = xm[x];
                const double top = r0[mx.lo] + (r0[mx.hi] - r0[mx.lo]) * mx.frac;
                const double bot = r1[mx.lo] + (r1[mx.hi] - r1[mx.lo]) * mx.frac;
                o[x] = top + (bot - top) * my.frac;
            }
        }
    });
    return out;
}

Tensor bilinear_upsample_backward(const Tensor& grad_out, int in_h, int in_w) {
    const int out_h = grad_out.h(), out_w = grad_out.w();
    const auto ym = lerp_axis(out_h, in_h);
    const auto xm = lerp_axis(out_w, in_w);
    Tensor grad_in(grad_out.n(), grad_out.c(), in_h, in_w);
    parallel_for(0, static_cast<int64_t>(grad_out.n()) * grad_out.c(), [&](int64_t job) {
        const int n = static_cast<int>(job / grad_out.c());
        const int c = static_cast<int>(job % grad_out.c());
        const double* go_plane = grad_out.data() + grad_out.index(n, c, 0, 0);
        double* gi_plane = grad_in.data() + grad_in.index(n, c, 0, 0);
        for (int y = 0; y < out_h; ++y) {
            const auto& my = ym[y];
            for (int x = 0; x < out_w; ++x) {
                const auto& mx = xm[x];
                const double g = go_plane[static_cast<int64_t>(y) * out_w + x];
                const double w00 = (1.0 - my.frac) * (1.0 - mx.frac);
                const double w01 = (1.0 - my.frac) * mx.frac;
                const double w10 = my.frac * (1.0 - mx.frac);
                const double w11 = my.frac * mx.frac;
                gi_plane[static_cast<int64_t>(my.lo) * in_w + mx.lo] += w00 * g;
                gi_plane[static_cast<int64_t>(my.lo) * in_w + mx.hi] += w01 * g;
                gi_plane[static_cast<int64_t>(my.hi) * in_w + mx.lo] += w10 * g;
                gi_plane[static_cast<int64_t>(my.hi) * in_w + mx.hi] += w11 * g;
            }
        }
    });
    return grad_in;
}

Tensor max_pool2d(const Tensor& input, int kernel, int stride, int pad, std::vector<int64_t>* argmax) {
    const int out_h = conv_out_extent(input.h(), kernel, stride, 1, pad);
    const int out_w = conv_out_extent(input.w(), kernel, stride, 1, pad);
    if (out_h <= 0 || out_w <= 0) throw DomainError("max_pool2d: window exceeds input");
    Tensor out(input.n(), input.c(), out_h, out_w);
    if (argmax) argmax->assign(static_cast<size_t>(out.numel()), -1);
    const int in_h = input.h(), in_w = input.w();
    parallel_for(0, static_cast<int64_t>(input.n()) * input.c(), [&](int64_t job) {
        const int n = static_cast<int>(job / input.c());
        const int c = static_cast<int>(job % input.c());
        const double* in_plane = input.data() + input.index(n, c, 0, 0);
        double* out_plane = out.data() + out.index(n, c, 0, 0);
        for (int y = 0; y < out_h; ++y) {
            for (int x = 0; x < out_w; ++x) {
                double best = -std::numeric_limits<double>::infinity();
                int64_t best_idx = -1;
                for (int ky = 0; ky < kernel; ++ky) {
                    const int iy = y * stride - pad + ky;
                    if (iy < 0 || iy >= in_h) continue;
                    for (int kx = 0; kx < kernel; ++kx) {
                        const int ix = x * stride - pad + kx;
                        if (ix < 0 || ix >= in_w) continue;
                        const double v = in_plane[static_cast<int64_t>(iy) * in_w + ix];
                        if (v > best) {
                            best = v;
                            best_idx = input.index(n, c, iy, ix);
                        }
                    }
                }
                out_plane[static_cast<int64_t>(y) * out_w + x] = best;
                if (argmax) (*argmax)[out.index(n, c, y, x)] = best_idx;
            }
        }
    });
    return out;
}

Tensor max_pool2d_backward(const Tensor& grad_out, const Tensor& input,
                           const std::vector<int64_t>& argmax) {
    Tensor grad_in(input.n(), input.c(), input.h(), input.w());
    const int64_t out_plane = grad_out.plane();
    parallel_for(0, static_cast<int64_t>(grad_out.n()) * grad_out.c(), [&](int64_t job) {
        const int64_t base = job * out_plane;
        for (int64_t i = 0; i < out_plane; ++i) {
            const int64_t src = argmax[base + i];
            if (src >= 0) grad_in.data()[src] += grad_out.data()[base + i];
        }
    });
    return grad_in;
}

Tensor concat_channels(const std::vector<const Tensor*>& parts) {
    if (parts.empty()) throw ConfigError("concat_channels: nothing to concatenate");
    const Tensor& first = *parts.front();
    int total_c = 0;
    for (const Tensor* p : parts) {
        if (p->n() != first.n() || p->h() != first.h() || p->w() != first.w())
            throw ConfigError("concat_channels: spatial/batch extents differ between parts");
        total_c += p->c();
    }
    Tensor out(first.n(), total_c, first.h(), first.w());
    const int64_t plane = first.plane();
    for (int n = 0; n < first.n(); ++n) {
        int c_off = 0;
        for (const Tensor* p : parts) {
            std::copy_n(p->data() + p->index(n, 0, 0, 0), static_cast<int64_t>(p->c()) * plane,
                        out.data() + out.index(n, c_off, 0, 0));
            c_off += p->c();
        }
    }
    return out;
}

std::vector<Tensor> split_channels(const Tensor& whole, const std::vector<int>& channel_counts) {
    std::vector<Tensor> parts;
    parts.reserve(channel_counts.size());
    const int64_t plane = whole.plane();
    int c_off = 0;
    for (int c : channel_counts) {
        Tensor part(whole.n(), c, whole.h(), whole.w());
        for (int n = 0; n < whole.n(); ++n)
            std::copy_n(whole.data() + whole.index(n, c_off, 0, 0), static_cast<int64_t>(c) * plane,
                        part.data() + part.index(n, 0, 0, 0));
        c_off += c;
        parts.push_back(std::move(part));
    }
    if (c_off != whole.c()) throw ConfigError("split_channels: channel counts do not cover tensor");
    return parts;
}

Tensor add(const Tensor& a, const Tensor& b) {
    a.check_shape_matches(b, "add");
    Tensor out(a.n(), a.c(), a.h(), a.w());
    const double* pa = a.data();
    const double* pb = b.data();
    double* o = out.data();
    for (int64_t i = 0; i < a.numel(); ++i) o[i] = pa[i] + pb[i];
    return out;
}

}  // namespace myinet
