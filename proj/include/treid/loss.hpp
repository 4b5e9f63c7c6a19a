#pragma once

#include "treid/tensor.hpp"

namespace treid {

struct LossConfig {
    double temperature = 0.1;  // tau; similarity is the dot product of unit vectors
};

struct NtXentResult {
    double loss = 0.0;
    Tensor2D grad;  // d(loss)/d(embeddings), same shape as the input
};

// Normalized temperature-scaled cross-entropy over a batch of 2N unit-norm
// embeddings where rows k and k+N are the positive pair. For each ordered
// positive pair (i, j):
//
//   l(i,j) = -log( exp(sim(i,j)/tau) / sum_{k != i} exp(sim(i,k)/tau) )
//
// with the sum over all 2N-1 other samples (self excluded, positive
// included); the result is the mean over all 2N ordered pairs.
//
// Throws ContractError on non-unit-norm rows, ConfigError on tau <= 0,
// DimensionError on fewer than 4 or an odd number of rows.
NtXentResult nt_xent_loss(const Tensor2D& embeddings, const LossConfig& cfg);

}  // namespace treid
