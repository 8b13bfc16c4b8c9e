#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "myinet/layers.hpp"
#include "myinet/tensor.hpp"

namespace myinet {

struct GradCheckOptions {
    double step = 1e-4;   // central-difference step, scaled by value magnitude
    double floor = 1e-6;  // denominator floor, guards near-zero gradients
};

/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
double relative_error(double analytic, double numeric, double floor);

/// Central-difference check of a layer's input and parameter gradients
/// against a random-projection scalar loss. Returns the max relative error;
/// throws DomainError naming the location if an intermediate is non-finite.
double gradient_check(Layer& op, const Tensor& input, uint64_t seed,
                      GradCheckOptions opt = {});

/// Same machinery for hand-assembled pipelines: `loss` re-evaluates the
/// scalar objective from current tensor contents; `analytic` pairs each
/// checked tensor with its analytic gradient.
double gradient_check_fn(const std::function<double()>& loss,
                         const std::vector<std::pair<Tensor*, const Tensor*>>& analytic,
                         GradCheckOptions opt = {});

}  // namespace myinet
