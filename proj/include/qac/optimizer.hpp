#pragma once

#include <cstddef>
#include <span>

#include "qac/model.hpp"

namespace qac {

struct AdamWConfig {
    double learning_rate = 2e-3;
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Decoupled-weight-decay Adam update of one block. `step` is the 1-based
/// step number used for bias correction. Decay is skipped when `decay` is false.
void adamw_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                  std::span<double> v, std::size_t step, const AdamWConfig& config, bool decay);

/// Optimizer state for a full ModelParams. Weight decay applies to weight
/// matrices and the LSTMEmb vector, never to gate biases or the normalizer.
class AdamW {
public:
    AdamW(const ModelParams& shape, AdamWConfig config = {});

    void step(ModelParams& params, const ModelParams& grads);

    std::size_t step_count() const noexcept { return step_; }
    const AdamWConfig& config() const noexcept { return config_; }

private:
    AdamWConfig config_;
    ModelParams first_moment_;
    ModelParams second_moment_;
    std::size_t step_ = 0;
};

}  // namespace qac
