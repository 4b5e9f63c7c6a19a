#pragma once

#include <cstdint>
#include <vector>

#include "treid/layers.hpp"
#include "treid/rng.hpp"
#include "treid/tensor.hpp"

namespace treid {

// Unit-norm embedding row.
using Embedding = std::vector<double>;

struct EncoderConfig {
    std::size_t feature_dim = 32;  // F: precomputed frame feature width
    std::size_t hidden_dim = 64;   // H: representation width
    std::size_t embed_dim = 128;   // D: embedding width
    std::size_t blocks = 3;
    std::size_t heads = 4;
    std::size_t ffn_mult = 4;
    std::size_t max_views = 8;
    double cls_init_std = 0.02;

    void validate() const;
};

// MLP mapping frame features to the H-dimensional representation:
// linear -> ReLU -> linear -> ReLU.
class FrameBackbone : public Layer {
public:
    FrameBackbone() = default;
    explicit FrameBackbone(const EncoderConfig& cfg);
    void init(Rng& rng);

    std::string kind() const override { return "frame_backbone"; }
    Tensor2D forward(const Tensor2D& input) override;
    Tensor2D backward(const Tensor2D& upstream) override;
    std::vector<NamedParam> params() override;

    Linear mlp1, mlp2;
    Relu a1, a2;
};

// Single-frame embedding model: backbone -> projection head -> L2 norm.
// Rows of the input are frames; rows of the output are unit-norm
// D-dimensional embeddings.
class FrameEncoder : public Layer {
public:
    FrameEncoder() = default;
    explicit FrameEncoder(const EncoderConfig& cfg);
    void init(Rng& rng);

    std::string kind() const override { return "frame_encoder"; }
    Tensor2D forward(const Tensor2D& input) override;
    Tensor2D backward(const Tensor2D& upstream) override;
    std::vector<NamedParam> params() override;

    // Pre-projection H-vectors, as consumed by the joint encoder.
    Tensor2D representation(const Tensor2D& input);

    const EncoderConfig& config() const { return cfg_; }

    FrameBackbone backbone;
    ProjectionHead head;
    L2Normalize norm;

private:
    EncoderConfig cfg_;
};

// Joint multi-view encoder: per-frame representations are stacked, a
// learned CLS token is prepended, the token set runs through transformer
// blocks, and the contextualized CLS row is projected and normalized.
//
// Views form an unordered set (no positional encoding). Input rows are
// sorted into a canonical order before attention, which makes the forward
// pass bitwise invariant under view permutations.
class JointEncoder : public Layer {
public:
    JointEncoder() = default;
    explicit JointEncoder(const EncoderConfig& cfg);
    void init(Rng& rng);

    std::string kind() const override { return "joint_encoder"; }
    Tensor2D forward(const Tensor2D& views);     // m x F -> 1 x D
    Tensor2D backward(const Tensor2D& upstream) override;  // 1 x D -> m x F
    std::vector<NamedParam> params() override;

    // Copies backbone weights from a trained single-frame encoder.
    void init_backbone_from(const FrameEncoder& frame);

    const EncoderConfig& config() const { return cfg_; }

    FrameBackbone backbone;
    Tensor2D cls, gcls;  // 1 x H learned token and its gradient
    std::vector<TransformerBlock> blocks;
    ProjectionHead head;
    L2Normalize norm;

private:
    EncoderConfig cfg_;
    std::vector<std::size_t> perm_;  // canonical view order of the last forward
};

// Embeds one frame feature vector. Throws DimensionError on wrong length.
Embedding encode_frame(const std::vector<double>& features, FrameEncoder& encoder);

// Joint multi-view embedding of 1..max_views frames (rows of `views`).
// Throws DataError on an empty view set, DimensionError beyond max_views.
Embedding encode_tracklet_joint(const Tensor2D& views, JointEncoder& encoder);

// Mean of per-frame embeddings, re-normalized. Throws ContractError when
// the mean vector is degenerate (norm < 1e-12).
Embedding encode_tracklet_average(const Tensor2D& views, FrameEncoder& encoder);

}  // namespace treid
