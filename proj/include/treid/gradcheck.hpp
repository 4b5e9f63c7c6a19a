#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "treid/layers.hpp"
#include "treid/tensor.hpp"

namespace treid {

// Central finite-difference step used by all checks (64-bit precision).
inline constexpr double kGradCheckStep = 1e-5;

// Relative-or-absolute error, whichever is looser near zero.
double relative_error(double analytic, double numeric);

// Compares the layer's analytic input and parameter gradients of a
// scalarized output (random projection, seeded) against central finite
// differences. Returns the maximum relative error.
double grad_check(Layer& layer, const Tensor2D& input, std::uint64_t seed);

// Same comparison for an arbitrary scalar graph: `eval` recomputes the
// scalar from the current parameter values; `grads` holds the analytic
// gradients (precomputed by the caller). Perturbs every parameter element.
double grad_check_scalar(const std::function<double()>& eval,
                         const std::vector<NamedParam>& params,
                         const std::vector<Tensor2D>& grads);

struct LayerCheckResult {
    std::string layer;
    double max_rel_err = 0.0;
};

// Builds every layer used by the encoders plus the composed graphs
// (frame encoder, joint encoder, contrastive loss over the joint encoder)
// with seeded random parameters and inputs, and grad-checks each.
std::vector<LayerCheckResult> run_gradient_suite(std::uint64_t seed);

}  // namespace treid
