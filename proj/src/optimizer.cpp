#include "qac/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace qac {

void adamw_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                  std::span<double> v, std::size_t step, const AdamWConfig& config, bool decay) {
    if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
        throw std::invalid_argument("adamw_update: shape mismatch");
    }
    if (step == 0) throw std::invalid_argument("adamw_update: step is 1-based");
    if (!(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0)) {
        throw std::invalid_argument("adamw_update: betas must lie in [0, 1)");
    }
    const double t = static_cast<double>(step);
    const double correction1 = 1.0 - std::pow(config.beta1, t);
    const double correction2 = 1.0 - std::pow(config.beta2, t);
    const double lr = config.learning_rate;
    const double decay_rate = decay ? config.weight_decay : 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        params[i] -= lr * (m_hat / (std::sqrt(v_hat) + config.epsilon)) + lr * decay_rate * params[i];
    }
}

AdamW::AdamW(const ModelParams& shape, AdamWConfig config)
    : config_(config),
      first_moment_(ModelParams::zeros(shape.vocab_size, shape.dim, shape.layers.size())),
      second_moment_(first_moment_) {}

void AdamW::step(ModelParams& params, const ModelParams& grads) {
    ++step_;
    std::vector<std::span<double>> p, m, v;
    std::vector<std::span<const double>> g;
    std::vector<bool> decayed;
    ModelParams::for_each_block(params, [&](std::string_view, std::span<double> block, bool decay) {
        p.push_back(block);
        decayed.push_back(decay);
    });
    ModelParams::for_each_block(grads, [&](std::string_view, std::span<const double> block, bool) {
        g.push_back(block);
    });
    ModelParams::for_each_block(first_moment_, [&](std::string_view, std::span<double> block, bool) {
        m.push_back(block);
    });
    ModelParams::for_each_block(second_moment_, [&](std::string_view, std::span<double> block, bool) {
        v.push_back(block);
    });
    if (g.size() != p.size()) throw std::invalid_argument("AdamW::step: gradient layout mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
        adamw_update(p[i], g[i], m[i], v[i], step_, config_, decayed[i]);
    }
}

}  // namespace qac
