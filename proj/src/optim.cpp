#include "treid/optim.hpp"

#include <cmath>

#include "treid/errors.hpp"

namespace treid {

void LarsConfig::validate() const {
    if (learning_rate <= 0.0) throw ConfigError("lars: learning rate must be positive");
    if (trust_coefficient <= 0.0) throw ConfigError("lars: trust coefficient must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("lars: momentum must be in [0, 1)");
}

void lars_step(const std::vector<NamedParam>& params, OptimizerState& state,
               const LarsConfig& cfg) {
    cfg.validate();
    for (const auto& p : params) {
        Tensor2D& w = *p.value;
        const Tensor2D& g = *p.grad;
        require_same_shape(w, g, "lars_step(" + p.name + ")");

        Tensor2D adjusted = g;
        if (cfg.weight_decay != 0.0) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                adjusted.data()[i] += cfg.weight_decay * w.data()[i];
            }
        }

        double lambda = 1.0;
        if (cfg.use_trust_ratio) {
            const double wnorm = frobenius_norm(w);
            const double gnorm = frobenius_norm(adjusted);
            if (wnorm > 0.0 && gnorm > 0.0) {
                lambda = cfg.trust_coefficient * wnorm / (gnorm + cfg.epsilon);
            }
        }

        auto [it, inserted] = state.velocity.try_emplace(p.name, w.rows(), w.cols(), 0.0);
        Tensor2D& vel = it->second;
        require_same_shape(w, vel, "lars_step velocity(" + p.name + ")");
        const double step_scale = cfg.learning_rate * lambda;
        for (std::size_t i = 0; i < w.size(); ++i) {
            vel.data()[i] = cfg.momentum * vel.data()[i] + step_scale * adjusted.data()[i];
            w.data()[i] -= vel.data()[i];
        }
    }
}

void adam_step(const std::vector<NamedParam>& params, OptimizerState& state,
               const AdamConfig& cfg) {
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (const auto& p : params) {
        Tensor2D& w = *p.value;
        const Tensor2D& g = *p.grad;
        require_same_shape(w, g, "adam_step(" + p.name + ")");

        auto [mit, m_inserted] = state.m.try_emplace(p.name, w.rows(), w.cols(), 0.0);
        auto [vit, v_inserted] = state.v.try_emplace(p.name, w.rows(), w.cols(), 0.0);
        Tensor2D& m = mit->second;
        Tensor2D& v = vit->second;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = g.data()[i];
            m.data()[i] = cfg.beta1 * m.data()[i] + (1.0 - cfg.beta1) * gi;
            v.data()[i] = cfg.beta2 * v.data()[i] + (1.0 - cfg.beta2) * gi * gi;
            const double mhat = m.data()[i] / bc1;
            const double vhat = v.data()[i] / bc2;
            w.data()[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    }
}

}  // namespace treid
