#include "treid/loss.hpp"

#include <cmath>

#include "treid/errors.hpp"

namespace treid {

NtXentResult nt_xent_loss(const Tensor2D& embeddings, const LossConfig& cfg) {
    if (cfg.temperature <= 0.0) throw ConfigError("nt_xent_loss: temperature must be positive");
    const std::size_t total = embeddings.rows();
    if (total < 4 || total % 2 != 0) {
        throw DimensionError("nt_xent_loss: need an even batch of at least 4 embeddings, got " +
                             std::to_string(total));
    }
    for (std::size_t i = 0; i < total; ++i) {
        const double norm = l2_norm(embeddings.row_copy(i));
        if (std::abs(norm - 1.0) > 1e-6) {
            throw ContractError("nt_xent_loss: embedding " + std::to_string(i) +
                                " has norm " + std::to_string(norm) + ", expected unit norm");
        }
    }

    const std::size_t n = total / 2;
    const double inv_tau = 1.0 / cfg.temperature;

    // Pairwise similarities; unit-norm rows make the dot product the cosine.
    Tensor2D sim = matmul_nt(embeddings, embeddings);

    // dL/dS accumulated per anchor; every sample anchors exactly one
    // ordered positive pair.
    Tensor2D dsim(total, total);
    double loss = 0.0;
    const double pair_weight = 1.0 / static_cast<double>(total);
    for (std::size_t i = 0; i < total; ++i) {
        const std::size_t positive = (i + n) % total;

        // log-sum-exp over k != i, max-subtracted.
        double mx = -INFINITY;
        for (std::size_t k = 0; k < total; ++k) {
            if (k != i) mx = std::max(mx, sim(i, k) * inv_tau);
        }
        double denom = 0.0;
        for (std::size_t k = 0; k < total; ++k) {
            if (k != i) denom += std::exp(sim(i, k) * inv_tau - mx);
        }
        const double lse = mx + std::log(denom);
        loss += pair_weight * (lse - sim(i, positive) * inv_tau);

        for (std::size_t k = 0; k < total; ++k) {
            if (k == i) continue;
            const double p = std::exp(sim(i, k) * inv_tau - mx) / denom;
            double g = p;
            if (k == positive) g -= 1.0;
            dsim(i, k) += pair_weight * inv_tau * g;
        }
    }

    // S = E E^T, so dE = (dS + dS^T) E.
    NtXentResult result;
    result.loss = loss;
    result.grad = matmul(dsim, embeddings);
    add_inplace(result.grad, matmul_tn(dsim, embeddings));
    return result;
}

}  // namespace treid
