#pragma once

#include <memory>
#include <string>
#include <vector>

#include "treid/rng.hpp"
#include "treid/tensor.hpp"

namespace treid {

// A named parameter tensor and its gradient accumulator.
struct NamedParam {
    std::string name;
    Tensor2D* value = nullptr;
    Tensor2D* grad = nullptr;
};

// Forward/backward unit with analytic reverse-mode gradients.
//
// forward() caches whatever backward() needs, so one instance serves one
// caller at a time; clone the layer (plain copy) for parallel use.
// backward() takes d(scalar)/d(output), returns d(scalar)/d(input) and
// accumulates parameter gradients until zero_grad().
class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string kind() const = 0;
    virtual Tensor2D forward(const Tensor2D& input) = 0;
    virtual Tensor2D backward(const Tensor2D& upstream) = 0;
    virtual std::vector<NamedParam> params() { return {}; }
    void zero_grad();
};

// Appends `layer`'s params to `out` with their names prefixed.
void collect_params(std::vector<NamedParam>& out, const std::string& prefix, Layer& layer);

// y = x W + b
class Linear : public Layer {
public:
    Linear() = default;
    Linear(std::size_t in_dim, std::size_t out_dim);
    void init(Rng& rng);  // W ~ U(-sqrt(1/fan_in), +sqrt(1/fan_in)), b = 0

    std::string kind() const override { return "linear"; }
    Tensor2D forward(const Tensor2D& input) override;
    Tensor2D backward(const Tensor2D& upstream) override;
    std::vector<NamedParam> params() override;

    Tensor2D w, b;        // b is 1 x out_dim
    Tensor2D gw, gb;

private:
    Tensor2D x_;
};

class Relu : public Layer {
public:
    std::string kind() const override { return "relu"; }
    Tensor2D forward(const Tensor2D& input) override;
    Tensor2D backward(const Tensor2D& upstream) override;

    // Distance of the last forward's inputs to the kink at zero; gradient
    // checks probe a finite band and need test points clear of it.
    double min_abs_input() const;

private:
    Tensor2D x_;
};

// Exact GELU: x * Phi(x) with the Gaussian CDF.
class Gelu : public Layer {
public:
    std::string kind() const override { return "gelu"; }
    Tensor2D forward(const Tensor2D& input) override;
    Tensor2D backward(const Tensor2D& upstream) override;

private:
    Tensor2D x_;
};

// Row-wise normalization with population variance and eps inside the
// square root; learnable gain/shift.
class LayerNorm : public Layer {
public:
    LayerNorm() = default;
    explicit LayerNorm(std::size_t dim, double eps = 1e-5);

    std::string kind() const override { return "layer_norm"; }
    Tensor2D forward(const Tensor2D& input) override;
    Tensor2D backward(const Tensor2D& upstream) override;
    std::vector<NamedParam> params() override;

    Tensor2D gain, shift;  // 1 x dim
    Tensor2D ggain, gshift;
    double eps = 1e-5;

    // Smallest sqrt(var + eps) of the last forward's rows; near-constant
    // rows make the map stiff for finite-difference probes.
    double min_input_std() const;

private:
    Tensor2D xhat_;
    std::vector<double> inv_std_;
};

// Row-wise softmax, computed with max-subtraction.
class Softmax : public Layer {
public:
    std::string kind() const override { return "softmax"; }
    Tensor2D forward(const Tensor2D& input) override;
    Tensor2D backward(const Tensor2D& upstream) override;

private:
    Tensor2D y_;
};

// Row-wise x / ||x||. Throws ContractError on rows with norm < 1e-12.
class L2Normalize : public Layer {
public:
    std::string kind() const override { return "l2_normalize"; }
    Tensor2D forward(const Tensor2D& input) override;
    Tensor2D backward(const Tensor2D& upstream) override;

    // Smallest input row norm of the last forward. The map's curvature
    // grows as 1/norm^2, which finite-difference checks must stay clear of.
    double min_input_norm() const;

private:
    Tensor2D y_;
    std::vector<double> inv_norm_;
};

// Scaled dot-product attention over the full token set: per-head scale
// 1/sqrt(width/heads), no mask and no positional encoding.
class MultiHeadAttention : public Layer {
public:
    MultiHeadAttention() = default;
    MultiHeadAttention(std::size_t width, std::size_t heads);
    void init(Rng& rng);

    std::string kind() const override { return "multi_head_attention"; }
    Tensor2D forward(const Tensor2D& input) override;
    Tensor2D backward(const Tensor2D& upstream) override;
    std::vector<NamedParam> params() override;

    std::size_t heads = 1;
    Linear q, k, v, o;

private:
    std::size_t width_ = 0;
    Tensor2D q_, k_, v_;
    std::vector<Tensor2D> attn_;  // per-head softmax outputs
};

// linear -> GELU -> linear
class FeedForward : public Layer {
public:
    FeedForward() = default;
    FeedForward(std::size_t width, std::size_t inner);
    void init(Rng& rng);

    std::string kind() const override { return "feed_forward"; }
    Tensor2D forward(const Tensor2D& input) override;
    Tensor2D backward(const Tensor2D& upstream) override;
    std::vector<NamedParam> params() override;

    Linear l1, l2;

private:
    Gelu act_;
};

// Pre-norm transformer encoder block:
//   c = x + attn(ln1(x)); out = c + ffn(ln2(c))
class TransformerBlock : public Layer {
public:
    TransformerBlock() = default;
    TransformerBlock(std::size_t width, std::size_t heads, std::size_t ffn_inner);
    void init(Rng& rng);

    std::string kind() const override { return "transformer_block"; }
    Tensor2D forward(const Tensor2D& input) override;
    Tensor2D backward(const Tensor2D& upstream) override;
    std::vector<NamedParam> params() override;

    LayerNorm ln1, ln2;
    MultiHeadAttention attn;
    FeedForward ffn;
};

// linear -> ReLU -> linear; maps representations to embedding space.
class ProjectionHead : public Layer {
public:
    ProjectionHead() = default;
    ProjectionHead(std::size_t in_dim, std::size_t mid_dim, std::size_t out_dim);
    void init(Rng& rng);

    std::string kind() const override { return "projection_head"; }
    Tensor2D forward(const Tensor2D& input) override;
    Tensor2D backward(const Tensor2D& upstream) override;
    std::vector<NamedParam> params() override;

    Linear l1, l2;
    Relu act;
};

}  // namespace treid
