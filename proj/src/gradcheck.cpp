#include "myinet/gradcheck.hpp"

#include <cmath>

#include "myinet/errors.hpp"
#include "myinet/rng.hpp"

namespace myinet {

double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), floor});
    return std::fabs(analytic - numeric) / denom;
}

double gradient_check_fn(const std::function<double()>& loss,
                         const std::vector<std::pair<Tensor*, const Tensor*>>& analytic,
                         GradCheckOptions opt) {
    double max_rel = 0.0;
    for (const auto& [tensor, grad] : analytic) {
        for (int64_t i = 0; i < tensor->numel(); ++i) {
            double& v = tensor->values()[static_cast<size_t>(i)];
            const double saved = v;
            const double h = opt.step * std::max(1.0, std::fabs(saved));
            v = saved + h;
            const double up = loss();
            v = saved - h;
            const double down = loss();
            v = saved;
            if (!std::isfinite(up) || !std::isfinite(down))
                throw DomainError("gradient_check: non-finite loss at element " + std::to_string(i));
            const double numeric = (up - down) / (2.0 * h);
            max_rel = std::max(max_rel, relative_error(grad->values()[static_cast<size_t>(i)],
                                                       numeric, opt.floor));
        }
    }
    return max_rel;
}

double gradient_check(Layer& op, const Tensor& input, uint64_t seed, GradCheckOptions opt) {
    op.set_training(true);
    Tensor x = input;

    Tensor probe = op.forward(x);
    if (!probe.all_finite()) throw DomainError("gradient_check: non-finite forward output");
    Rng rng(seed);
    Tensor proj = Tensor::randn(probe.n(), probe.c(), probe.h(), probe.w(), rng);

    op.zero_grads();
    op.forward(x);
    Tensor grad_in = op.backward(proj);

    // Snapshot analytic gradients before numeric probing overwrites caches.
    std::vector<Tensor> param_grads;
    auto named = op.params();
    param_grads.reserve(named.size());
    for (auto& p : named) {
        Tensor g(p.tensor->n(), p.tensor->c(), p.tensor->h(), p.tensor->w());
        g.values() = p.tensor->grad_values();
        param_grads.push_back(std::move(g));
    }

    auto loss = [&]() {
        Tensor out = op.forward(x);
        double acc = 0.0;
        for (int64_t i = 0; i < out.numel(); ++i)
            acc += out.values()[static_cast<size_t>(i)] * proj.values()[static_cast<size_t>(i)];
        return acc;
    };

    std::vector<std::pair<Tensor*, const Tensor*>> pairs;
    pairs.emplace_back(&x, &grad_in);
    for (size_t i = 0; i < named.size(); ++i) pairs.emplace_back(named[i].tensor, &param_grads[i]);
    return gradient_check_fn(loss, pairs, opt);
}

}  // namespace myinet
