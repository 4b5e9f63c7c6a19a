#pragma once

#include <map>
#include <string>
#include <vector>

#include "treid/layers.hpp"
#include "treid/tensor.hpp"

namespace treid {

// Layer-wise adaptive rate scaling with momentum.
struct LarsConfig {
    double learning_rate = 0.01;   // gamma
    double trust_coefficient = 0.001;  // eta
    double momentum = 0.9;         // beta
    double weight_decay = 0.0;
    double epsilon = 1e-9;
    // When false the trust ratio is pinned to 1, which reduces the update
    // to SGD with momentum.
    bool use_trust_ratio = true;

    void validate() const;
};

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Per-parameter optimizer buffers, keyed by parameter name.
struct OptimizerState {
    std::map<std::string, Tensor2D> velocity;  // LARS momentum
    std::map<std::string, Tensor2D> m, v;      // Adam moments
    std::size_t step = 0;
};

// One LARS update over named parameters (gradients read from the params'
// grad tensors). Per tensor w with gradient g:
//   g' = g + wd * w
//   lambda = eta * ||w|| / (||g'|| + eps)   when both norms > 0, else 1
//   v <- beta * v + gamma * lambda * g';  w <- w - v
void lars_step(const std::vector<NamedParam>& params, OptimizerState& state,
               const LarsConfig& cfg);

// One Adam update with bias correction.
void adam_step(const std::vector<NamedParam>& params, OptimizerState& state,
               const AdamConfig& cfg);

}  // namespace treid
