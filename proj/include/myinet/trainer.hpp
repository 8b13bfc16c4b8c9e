#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "myinet/aspp.hpp"
#include "myinet/dataset.hpp"
#include "myinet/loss.hpp"

namespace myinet {

struct TrainConfig {
    double initial_lr = 1e-3;     // Table-2 "e^-3" read as 1e-3; the literal
                                  // value exp(-3) stays reachable by config.
    int lr_drop_period = 10;
    double lr_drop_divisor = 3.0;
    double momentum = 0.9;
    int max_epochs = 50;
    int batch_size = 10;
    int patience = 4;
    uint64_t seed = 0;
    bool augment = true;
    AugmentationPolicy augmentation;

    void validate() const;
};

/// Piecewise-constant decay: initial_lr / divisor^floor(epoch / period).
double lr_schedule(int epoch, const TrainConfig& cfg);

struct SgdmState {
    std::vector<Tensor> velocity;  // parallel to the parameter list
};

/// v <- momentum*v + grad;  p <- p - lr*v. Velocity tensors are created on
/// first use. Throws on non-finite gradients.
void sgdm_step(std::vector<NamedParam>& params, SgdmState& state, double lr, double momentum);

struct EpochStats {
    int epoch = 0;  // 1-based
    double lr = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    int best_epoch = 0;  // 1-based; 0 when no epoch ran
    double best_val_loss = std::numeric_limits<double>::infinity();
};

using ImproveCallback = std::function<void(const TrainResult& so_far)>;

/// SGDM loop: per-epoch reshuffled mini-batches (last partial batch kept),
/// on-the-fly augmentation seeded by (seed, epoch, sample index), weighted CE,
/// validation after each epoch, patience-based early stopping. The model ends
/// up with the best-validation-epoch parameters.
TrainResult train(SegmentationModel& model, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const ClassWeightVector& weights,
                  const TrainConfig& cfg, SgdmState* opt_state = nullptr,
                  const ImproveCallback& on_improve = {});

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history);

}  // namespace myinet
