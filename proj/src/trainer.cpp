#include "myinet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "myinet/errors.hpp"

namespace myinet {

void TrainConfig::validate() const {
    if (initial_lr <= 0.0 || lr_drop_period <= 0 || lr_drop_divisor < 1.0 || momentum < 0.0 ||
        max_epochs < 0 || batch_size <= 0 || patience < 1)
        throw ConfigError("train config: all parameters must be positive (patience >= 1, "
                          "drop divisor >= 1 so the rate never increases)");
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
    return cfg.initial_lr / std::pow(cfg.lr_drop_divisor, epoch / cfg.lr_drop_period);
}

void sgdm_step(std::vector<NamedParam>& params, SgdmState& state, double lr, double momentum) {
    if (state.velocity.empty()) {
        state.velocity.reserve(params.size());
        for (auto& p : params)
            state.velocity.emplace_back(p.tensor->n(), p.tensor->c(), p.tensor->h(), p.tensor->w());
    }
    if (state.velocity.size() != params.size())
        throw ConfigError("sgdm_step: optimizer state does not match parameter list");
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i].tensor;
        Tensor& v = state.velocity[i];
        if (!p.same_shape(v)) throw ConfigError("sgdm_step: velocity shape mismatch");
        p.ensure_grad();
        const double* g = p.grad();
        double* vel = v.data();
        double* val = p.data();
        for (int64_t k = 0; k < p.numel(); ++k) {
            if (!std::isfinite(g[k]))
                throw DomainError("sgdm_step: non-finite gradient in " + params[i].name);
            vel[k] = momentum * vel[k] + g[k];
            val[k] -= lr * vel[k];
        }
    }
}

namespace {

struct Batch {
    Tensor images;
    std::vector<LabelMap> labels;
};

Batch assemble(const std::vector<Sample>& set, const std::vector<size_t>& idx, size_t lo, size_t hi) {
    const Sample& first = set[idx[lo]];
    Batch b;
    b.images = Tensor(static_cast<int>(hi - lo), 1, first.image.h(), first.image.w());
    for (size_t i = lo; i < hi; ++i) {
        const Sample& s = set[idx[i]];
        std::copy_n(s.image.data(), s.image.numel(),
                    b.images.data() + b.images.index(static_cast<int>(i - lo), 0, 0, 0));
        b.labels.push_back(s.labels);
    }
    return b;
}

double dataset_loss(SegmentationModel& model, const std::vector<Sample>& set,
                    const ClassWeightVector& weights, int batch_size) {
    model.set_training(false);
    std::vector<size_t> idx(set.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    double num = 0.0, denom = 0.0;
    for (size_t lo = 0; lo < set.size(); lo += static_cast<size_t>(batch_size)) {
        const size_t hi = std::min(set.size(), lo + static_cast<size_t>(batch_size));
        Batch b = assemble(set, idx, lo, hi);
        Tensor scores = model.forward(b.images);
        LossResult lr = weighted_cross_entropy(scores, b.labels, weights, /*want_grad=*/false);
        num += lr.loss * lr.weight_sum;
        denom += lr.weight_sum;
    }
    return num / denom;
}

}  // namespace

TrainResult train(SegmentationModel& model, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const ClassWeightVector& weights,
                  const TrainConfig& cfg, SgdmState* opt_state, const ImproveCallback& on_improve) {
    cfg.validate();
    if (train_set.empty() || val_set.empty())
        throw DomainError("train: training and validation sets must be non-empty");

    TrainResult res;
    if (cfg.max_epochs == 0) return res;

    auto params = model.params("model");
    SgdmState local_state;
    SgdmState& opt = opt_state ? *opt_state : local_state;

    std::vector<std::vector<double>> best_params;
    int stall = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double lr = lr_schedule(epoch, cfg);
        std::vector<size_t> order(train_set.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng(derive_seed(cfg.seed, static_cast<uint64_t>(epoch), 0x3A70));
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);

        model.set_training(true);
        double num = 0.0, denom = 0.0;
        for (size_t lo = 0; lo < order.size(); lo += static_cast<size_t>(cfg.batch_size)) {
            const size_t hi = std::min(order.size(), lo + static_cast<size_t>(cfg.batch_size));
            Batch b;
            if (cfg.augment) {
                std::vector<Sample> augmented;
                augmented.reserve(hi - lo);
                for (size_t i = lo; i < hi; ++i) {
                    Rng draw_rng(derive_seed(cfg.seed, static_cast<uint64_t>(epoch),
                                             static_cast<uint64_t>(order[i])));
                    augmented.push_back(
                        augment_sample(train_set[order[i]], draw_augmentation(cfg.augmentation, draw_rng)));
                }
                std::vector<size_t> seq(augmented.size());
                for (size_t i = 0; i < seq.size(); ++i) seq[i] = i;
                b = assemble(augmented, seq, 0, augmented.size());
            } else {
                b = assemble(train_set, order, lo, hi);
            }

            for (auto& p : params) p.tensor->zero_grad();
            Tensor scores = model.forward(b.images);
            LossResult loss = weighted_cross_entropy(scores, b.labels, weights);
            if (!std::isfinite(loss.loss))
                throw DomainError("train: loss diverged (non-finite) at epoch " +
                                  std::to_string(epoch + 1));
            model.backward(loss.grad);
            sgdm_step(params, opt, lr, cfg.momentum);
            num += loss.loss * loss.weight_sum;
            denom += loss.weight_sum;
        }

        const double val_loss = dataset_loss(model, val_set, weights, cfg.batch_size);
        res.history.push_back({epoch + 1, lr, num / denom, val_loss});

        if (val_loss < res.best_val_loss) {
            res.best_val_loss = val_loss;
            res.best_epoch = epoch + 1;
            stall = 0;
            best_params.clear();
            for (auto& p : params) best_params.push_back(p.tensor->values());
            if (on_improve) on_improve(res);
        } else {
            ++stall;
            if (stall >= cfg.patience) break;
        }
    }

    if (!best_params.empty())
        for (size_t i = 0; i < params.size(); ++i) params[i].tensor->values() = best_params[i];
    return res;
}

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write history: " + path);
    out << "epoch,lr,train_loss,val_loss\n";
    char buf[160];
    for (const auto& e : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", e.epoch, e.lr, e.train_loss,
                      e.val_loss);
        out << buf;
    }
}

}  // namespace myinet
