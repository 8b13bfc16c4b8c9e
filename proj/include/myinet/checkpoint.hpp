#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "myinet/layers.hpp"
#include "myinet/tensor.hpp"
#include "myinet/trainer.hpp"

namespace myinet {

/// Versioned binary container: magic, config hash, embedded resolved-config
/// JSON, training history, then named little-endian float64 tensor sections
/// for parameters and optimizer velocity. Round trips are bit-exact.
struct Checkpoint {
    uint64_t config_hash = 0;
    std::string config_json;
    int best_epoch = 0;
    std::vector<EpochStats> history;
    std::vector<std::pair<std::string, Tensor>> params;
    std::vector<std::pair<std::string, Tensor>> velocity;
};

uint64_t fnv1a64(std::string_view s);

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

/// Copies the model's named parameters (values only) into a checkpoint list.
std::vector<std::pair<std::string, Tensor>> capture_params(Layer& model);

/// Writes stored values back into the model by name; throws DataError on
/// missing names or shape mismatches.
void restore_params(Layer& model, const std::vector<std::pair<std::string, Tensor>>& stored);

}  // namespace myinet
