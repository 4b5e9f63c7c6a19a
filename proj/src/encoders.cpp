#include "treid/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "treid/errors.hpp"

namespace treid {

void EncoderConfig::validate() const {
    if (feature_dim == 0 || hidden_dim == 0 || embed_dim == 0 || blocks == 0 ||
        heads == 0 || ffn_mult == 0 || max_views == 0) {
        throw ConfigError("encoder config: all dimensions must be positive");
    }
    if (hidden_dim % heads != 0) {
        throw ConfigError("encoder config: hidden_dim " + std::to_string(hidden_dim) +
                          " not divisible by heads " + std::to_string(heads));
    }
}

// ---------------------------------------------------------------------------
// FrameBackbone

FrameBackbone::FrameBackbone(const EncoderConfig& cfg)
    : mlp1(cfg.feature_dim, cfg.hidden_dim), mlp2(cfg.hidden_dim, cfg.hidden_dim) {}

void FrameBackbone::init(Rng& rng) {
    mlp1.init(rng);
    mlp2.init(rng);
}

Tensor2D FrameBackbone::forward(const Tensor2D& input) {
    return a2.forward(mlp2.forward(a1.forward(mlp1.forward(input))));
}

Tensor2D FrameBackbone::backward(const Tensor2D& upstream) {
    return mlp1.backward(a1.backward(mlp2.backward(a2.backward(upstream))));
}

std::vector<NamedParam> FrameBackbone::params() {
    std::vector<NamedParam> out;
    collect_params(out, "mlp1.", mlp1);
    collect_params(out, "mlp2.", mlp2);
    return out;
}

// ---------------------------------------------------------------------------
// FrameEncoder

FrameEncoder::FrameEncoder(const EncoderConfig& cfg)
    : backbone(cfg), head(cfg.hidden_dim, cfg.hidden_dim, cfg.embed_dim), cfg_(cfg) {
    cfg.validate();
}

void FrameEncoder::init(Rng& rng) {
    backbone.init(rng);
    head.init(rng);
}

Tensor2D FrameEncoder::forward(const Tensor2D& input) {
    return norm.forward(head.forward(backbone.forward(input)));
}

Tensor2D FrameEncoder::backward(const Tensor2D& upstream) {
    return backbone.backward(head.backward(norm.backward(upstream)));
}

Tensor2D FrameEncoder::representation(const Tensor2D& input) {
    return backbone.forward(input);
}

std::vector<NamedParam> FrameEncoder::params() {
    std::vector<NamedParam> out;
    collect_params(out, "backbone.", backbone);
    collect_params(out, "head.", head);
    return out;
}

// ---------------------------------------------------------------------------
// JointEncoder

JointEncoder::JointEncoder(const EncoderConfig& cfg)
    : backbone(cfg), cls(1, cfg.hidden_dim), gcls(1, cfg.hidden_dim),
      head(cfg.hidden_dim, cfg.hidden_dim, cfg.embed_dim), cfg_(cfg) {
    cfg.validate();
    blocks.reserve(cfg.blocks);
    for (std::size_t i = 0; i < cfg.blocks; ++i) {
        blocks.emplace_back(cfg.hidden_dim, cfg.heads, cfg.ffn_mult * cfg.hidden_dim);
    }
}

void JointEncoder::init(Rng& rng) {
    backbone.init(rng);
    for (double& x : cls.data()) x = rng.normal(0.0, cfg_.cls_init_std);
    for (auto& b : blocks) b.init(rng);
    head.init(rng);
}

void JointEncoder::init_backbone_from(const FrameEncoder& frame) {
    backbone.mlp1.w = frame.backbone.mlp1.w;
    backbone.mlp1.b = frame.backbone.mlp1.b;
    backbone.mlp2.w = frame.backbone.mlp2.w;
    backbone.mlp2.b = frame.backbone.mlp2.b;
}

namespace {

// Lexicographic order over rows; stable, so duplicate views keep their
// relative order.
std::vector<std::size_t> canonical_row_order(const Tensor2D& x) {
    std::vector<std::size_t> perm(x.rows());
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
        const double* ra = x.row_ptr(a);
        const double* rb = x.row_ptr(b);
        return std::lexicographical_compare(ra, ra + x.cols(), rb, rb + x.cols());
    });
    return perm;
}

}  // namespace

Tensor2D JointEncoder::forward(const Tensor2D& views) {
    if (views.rows() == 0) throw DataError("joint encoder: empty view set");
    perm_ = canonical_row_order(views);
    Tensor2D ordered(views.rows(), views.cols());
    for (std::size_t i = 0; i < views.rows(); ++i) {
        std::copy(views.row_ptr(perm_[i]), views.row_ptr(perm_[i]) + views.cols(),
                  ordered.row_ptr(i));
    }

    Tensor2D tokens = vstack(cls, backbone.forward(ordered));
    for (auto& b : blocks) tokens = b.forward(tokens);
    Tensor2D cls_out = take_rows(tokens, 0, 1);
    return norm.forward(head.forward(cls_out));
}

Tensor2D JointEncoder::backward(const Tensor2D& upstream) {
    Tensor2D dcls_out = head.backward(norm.backward(upstream));

    const std::size_t m = perm_.size();
    Tensor2D dtokens(m + 1, cfg_.hidden_dim);
    std::copy(dcls_out.row_ptr(0), dcls_out.row_ptr(0) + cfg_.hidden_dim,
              dtokens.row_ptr(0));
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
        dtokens = it->backward(dtokens);
    }
    add_inplace(gcls, take_rows(dtokens, 0, 1));
    Tensor2D dordered = backbone.backward(take_rows(dtokens, 1, m + 1));

    // Undo the canonical reordering.
    Tensor2D dviews(m, cfg_.feature_dim);
    for (std::size_t i = 0; i < m; ++i) {
        std::copy(dordered.row_ptr(i), dordered.row_ptr(i) + cfg_.feature_dim,
                  dviews.row_ptr(perm_[i]));
    }
    return dviews;
}

std::vector<NamedParam> JointEncoder::params() {
    std::vector<NamedParam> out;
    collect_params(out, "backbone.", backbone);
    out.push_back({"cls", &cls, &gcls});
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        collect_params(out, "block" + std::to_string(i) + ".", blocks[i]);
    }
    collect_params(out, "head.", head);
    return out;
}

// ---------------------------------------------------------------------------
// Encoding entry points

Embedding encode_frame(const std::vector<double>& features, FrameEncoder& encoder) {
    if (features.size() != encoder.config().feature_dim) {
        throw DimensionError("encode_frame: got " + std::to_string(features.size()) +
                             " features, expected " +
                             std::to_string(encoder.config().feature_dim));
    }
    return encoder.forward(Tensor2D::from_row(features)).row_copy(0);
}

Embedding encode_tracklet_joint(const Tensor2D& views, JointEncoder& encoder) {
    if (views.rows() == 0) throw DataError("encode_tracklet_joint: empty tracklet");
    if (views.rows() > encoder.config().max_views) {
        throw DimensionError("encode_tracklet_joint: " + std::to_string(views.rows()) +
                             " views exceed the configured maximum " +
                             std::to_string(encoder.config().max_views));
    }
    return encoder.forward(views).row_copy(0);
}

Embedding encode_tracklet_average(const Tensor2D& views, FrameEncoder& encoder) {
    if (views.rows() == 0) throw DataError("encode_tracklet_average: empty tracklet");
    Tensor2D embs = encoder.forward(views);
    std::vector<double> mean(embs.cols(), 0.0);
    for (std::size_t i = 0; i < embs.rows(); ++i) {
        for (std::size_t j = 0; j < embs.cols(); ++j) mean[j] += embs(i, j);
    }
    for (double& v : mean) v /= static_cast<double>(embs.rows());
    const double norm = l2_norm(mean);
    if (norm < 1e-12) {
        throw ContractError("encode_tracklet_average: mean embedding is degenerate");
    }
    for (double& v : mean) v /= norm;
    return mean;
}

}  // namespace treid
