#include "treid/gradcheck.hpp"

#include <cmath>

#include "treid/encoders.hpp"
#include "treid/errors.hpp"
#include "treid/loss.hpp"

namespace treid {

double relative_error(double analytic, double numeric) {
    const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    return std::abs(analytic - numeric) / scale;
}

namespace {

Tensor2D random_tensor(std::size_t rows, std::size_t cols, Rng& rng) {
    Tensor2D t(rows, cols);
    for (double& v : t.data()) v = rng.normal();
    return t;
}

// Random input pushed away from the ReLU kink so central differences stay
// on one side of it.
Tensor2D random_tensor_off_kink(std::size_t rows, std::size_t cols, Rng& rng) {
    Tensor2D t = random_tensor(rows, cols, rng);
    for (double& v : t.data()) v += v >= 0.0 ? 0.5 : -0.5;
    return t;
}

// Moves parameters to a generic point. Zero-initialized biases would leave
// projection outputs near the origin, where the normalization layer's
// curvature drowns a finite-difference probe.
void jitter_params(Layer& layer, Rng& rng, double sigma = 0.25) {
    for (auto& p : layer.params()) {
        for (double& v : p.value->data()) v += rng.normal(0.0, sigma);
    }
}

// Central differences assume the graph is smooth around the test point:
// no ReLU preactivation inside the probe band, and no normalization input
// so short that its curvature dominates the probe. Margins are scaled so
// "safe" means > 1; fixtures are resampled until they are.
constexpr double kKinkBand = 1e-4;
constexpr double kNormBand = 0.05;

template <typename EncoderT>
double fixture_margin(const EncoderT& enc) {
    const double kink = std::min({enc.backbone.a1.min_abs_input(),
                                  enc.backbone.a2.min_abs_input(),
                                  enc.head.act.min_abs_input()});
    return std::min(kink / kKinkBand, enc.norm.min_input_norm() / kNormBand);
}

// Regenerates `input` until one forward pass through `layer` reports a
// safe smoothness margin.
template <typename LayerT, typename MarginFn>
Tensor2D generic_input(LayerT& layer, std::size_t rows, std::size_t cols, Rng& rng,
                       const MarginFn& margin) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        Tensor2D input = random_tensor(rows, cols, rng);
        layer.forward(input);
        if (margin() > 1.0) return input;
    }
    throw ContractError("gradient suite: could not find a generic test point");
}

double projected_sum(const Tensor2D& out, const Tensor2D& proj) {
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.data()[i] * proj.data()[i];
    return s;
}

}  // namespace

double grad_check(Layer& layer, const Tensor2D& input, std::uint64_t seed) {
    Rng rng(seed);

    layer.zero_grad();
    Tensor2D out = layer.forward(input);
    const Tensor2D proj = random_tensor(out.rows(), out.cols(), rng);
    const Tensor2D input_grad = layer.backward(proj);

    auto params = layer.params();
    std::vector<Tensor2D> analytic_grads;
    analytic_grads.reserve(params.size());
    for (const auto& p : params) analytic_grads.push_back(*p.grad);

    Tensor2D x = input;
    auto eval = [&]() { return projected_sum(layer.forward(x), proj); };

    double max_err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x.data()[i];
        x.data()[i] = orig + kGradCheckStep;
        const double up = eval();
        x.data()[i] = orig - kGradCheckStep;
        const double down = eval();
        x.data()[i] = orig;
        const double numeric = (up - down) / (2.0 * kGradCheckStep);
        max_err = std::max(max_err, relative_error(input_grad.data()[i], numeric));
    }

    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor2D& value = *params[p].value;
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double orig = value.data()[i];
            value.data()[i] = orig + kGradCheckStep;
            const double up = eval();
            value.data()[i] = orig - kGradCheckStep;
            const double down = eval();
            value.data()[i] = orig;
            const double numeric = (up - down) / (2.0 * kGradCheckStep);
            max_err = std::max(max_err, relative_error(analytic_grads[p].data()[i], numeric));
        }
    }
    return max_err;
}

double grad_check_scalar(const std::function<double()>& eval,
                         const std::vector<NamedParam>& params,
                         const std::vector<Tensor2D>& grads) {
    double max_err = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor2D& value = *params[p].value;
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double orig = value.data()[i];
            value.data()[i] = orig + kGradCheckStep;
            const double up = eval();
            value.data()[i] = orig - kGradCheckStep;
            const double down = eval();
            value.data()[i] = orig;
            const double numeric = (up - down) / (2.0 * kGradCheckStep);
            max_err = std::max(max_err, relative_error(grads[p].data()[i], numeric));
        }
    }
    return max_err;
}

namespace {

EncoderConfig tiny_config() {
    EncoderConfig cfg;
    cfg.feature_dim = 5;
    cfg.hidden_dim = 8;
    cfg.embed_dim = 6;
    cfg.blocks = 2;
    cfg.heads = 2;
    cfg.ffn_mult = 2;
    cfg.max_views = 4;
    return cfg;
}

double check_nt_xent_over_encoder(std::uint64_t seed) {
    Rng rng(seed);
    const EncoderConfig cfg = tiny_config();
    JointEncoder enc(cfg);
    enc.init(rng);
    jitter_params(enc, rng);

    // N=2 pairs, three views per sample.
    std::vector<Tensor2D> views(4);
    const LossConfig loss_cfg{0.5};

    auto embed_all = [&]() {
        Tensor2D embs(4, cfg.embed_dim);
        for (std::size_t s = 0; s < 4; ++s) {
            embs.set_row(s, enc.forward(views[s]).row_copy(0));
        }
        return embs;
    };

    // Resample the batch until every sample's forward reports a safe
    // smoothness margin (parameter probes shift activations by the step).
    for (int attempt = 0;; ++attempt) {
        for (auto& v : views) v = random_tensor(3, cfg.feature_dim, rng);
        double margin = INFINITY;
        for (std::size_t s = 0; s < 4; ++s) {
            enc.forward(views[s]);
            margin = std::min(margin, fixture_margin(enc));
        }
        if (margin > 1.0) break;
        if (attempt >= 64) {
            throw ContractError("gradient suite: could not find a generic batch");
        }
    }

    enc.zero_grad();
    const NtXentResult res = nt_xent_loss(embed_all(), loss_cfg);
    // The encoder caches one sample at a time: re-run each forward right
    // before its backward pass.
    for (std::size_t s = 0; s < 4; ++s) {
        enc.forward(views[s]);
        Tensor2D g(1, cfg.embed_dim);
        g.set_row(0, res.grad.row_copy(s));
        enc.backward(g);
    }

    auto params = enc.params();
    std::vector<Tensor2D> grads;
    grads.reserve(params.size());
    for (const auto& p : params) grads.push_back(*p.grad);

    auto eval = [&]() { return nt_xent_loss(embed_all(), loss_cfg).loss; };
    return grad_check_scalar(eval, params, grads);
}

}  // namespace

std::vector<LayerCheckResult> run_gradient_suite(std::uint64_t seed) {
    std::vector<LayerCheckResult> results;
    Rng rng(seed);
    const EncoderConfig cfg = tiny_config();

    {
        Linear layer(5, 3);
        layer.init(rng);
        jitter_params(layer, rng);
        results.push_back({"linear", grad_check(layer, random_tensor(4, 5, rng), seed)});
    }
    {
        Relu layer;
        results.push_back({"relu", grad_check(layer, random_tensor_off_kink(4, 5, rng), seed)});
    }
    {
        Gelu layer;
        results.push_back({"gelu", grad_check(layer, random_tensor(4, 5, rng), seed)});
    }
    {
        LayerNorm layer(6);
        for (double& v : layer.gain.data()) v = rng.uniform(0.5, 1.5);
        for (double& v : layer.shift.data()) v = rng.normal(0.0, 0.2);
        results.push_back({"layer_norm", grad_check(layer, random_tensor(4, 6, rng), seed)});
    }
    {
        Softmax layer;
        results.push_back({"softmax", grad_check(layer, random_tensor(4, 5, rng), seed)});
    }
    {
        L2Normalize layer;
        results.push_back({"l2_normalize", grad_check(layer, random_tensor(4, 5, rng), seed)});
    }
    {
        MultiHeadAttention layer(8, 2);
        layer.init(rng);
        jitter_params(layer, rng);
        results.push_back(
            {"multi_head_attention", grad_check(layer, random_tensor(5, 8, rng), seed)});
    }
    {
        TransformerBlock layer(8, 2, 16);
        layer.init(rng);
        jitter_params(layer, rng);
        results.push_back(
            {"transformer_block", grad_check(layer, random_tensor(5, 8, rng), seed)});
    }
    {
        ProjectionHead layer(6, 8, 4);
        layer.init(rng);
        jitter_params(layer, rng);
        const Tensor2D input = generic_input(
            layer, 4, 6, rng, [&] { return layer.act.min_abs_input() / kKinkBand; });
        results.push_back({"projection_head", grad_check(layer, input, seed)});
    }
    {
        FrameEncoder layer(cfg);
        layer.init(rng);
        jitter_params(layer, rng);
        const Tensor2D input = generic_input(layer, 4, cfg.feature_dim, rng,
                                             [&] { return fixture_margin(layer); });
        results.push_back({"frame_encoder", grad_check(layer, input, seed)});
    }
    {
        JointEncoder layer(cfg);
        layer.init(rng);
        jitter_params(layer, rng);
        const Tensor2D input = generic_input(layer, 3, cfg.feature_dim, rng,
                                             [&] { return fixture_margin(layer); });
        results.push_back({"joint_encoder", grad_check(layer, input, seed)});
    }
    results.push_back({"nt_xent_over_encoder", check_nt_xent_over_encoder(seed)});
    return results;
}

}  // namespace treid
