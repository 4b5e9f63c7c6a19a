#include "treid/layers.hpp"

#include <cmath>

#include "treid/errors.hpp"

namespace treid {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double gauss_cdf(double x) { return 0.5 * (1.0 + std::erf(x * kInvSqrt2)); }
double gauss_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// Row-wise softmax with max-subtraction, in place.
void softmax_rows(Tensor2D& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double* row = m.row_ptr(i);
        double mx = row[0];
        for (std::size_t j = 1; j < m.cols(); ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < m.cols(); ++j) row[j] *= inv;
    }
}

// d(scalar)/d(softmax input) from cached outputs y and upstream g:
// dx = y .* (g - sum(g .* y)) per row.
Tensor2D softmax_backward_rows(const Tensor2D& y, const Tensor2D& g) {
    Tensor2D dx(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.rows(); ++i) {
        const double* yr = y.row_ptr(i);
        const double* gr = g.row_ptr(i);
        double dotgy = 0.0;
        for (std::size_t j = 0; j < y.cols(); ++j) dotgy += gr[j] * yr[j];
        double* dr = dx.row_ptr(i);
        for (std::size_t j = 0; j < y.cols(); ++j) dr[j] = yr[j] * (gr[j] - dotgy);
    }
    return dx;
}

}  // namespace

void Layer::zero_grad() {
    for (auto& p : params()) {
        if (p.grad != nullptr) p.grad->fill(0.0);
    }
}

void collect_params(std::vector<NamedParam>& out, const std::string& prefix, Layer& layer) {
    for (auto p : layer.params()) {
        p.name = prefix + p.name;
        out.push_back(p);
    }
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(std::size_t in_dim, std::size_t out_dim)
    : w(in_dim, out_dim), b(1, out_dim), gw(in_dim, out_dim), gb(1, out_dim) {}

void Linear::init(Rng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(w.rows()));
    for (double& x : w.data()) x = rng.uniform(-bound, bound);
    b.fill(0.0);
}

Tensor2D Linear::forward(const Tensor2D& input) {
    if (input.cols() != w.rows()) {
        throw DimensionError("linear: input " + input.shape_str() + " vs weights " +
                             w.shape_str());
    }
    x_ = input;
    Tensor2D out = matmul(input, w);
    add_row_broadcast(out, b);
    return out;
}

Tensor2D Linear::backward(const Tensor2D& upstream) {
    add_inplace(gw, matmul_tn(x_, upstream));
    add_inplace(gb, column_sums(upstream));
    return matmul_nt(upstream, w);
}

std::vector<NamedParam> Linear::params() {
    return {{"W", &w, &gw}, {"b", &b, &gb}};
}

// ---------------------------------------------------------------------------
// Activations

Tensor2D Relu::forward(const Tensor2D& input) {
    x_ = input;
    Tensor2D out = input;
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor2D Relu::backward(const Tensor2D& upstream) {
    require_same_shape(x_, upstream, "relu backward");
    Tensor2D dx = upstream;
    for (std::size_t i = 0; i < dx.size(); ++i) {
        if (x_.data()[i] <= 0.0) dx.data()[i] = 0.0;
    }
    return dx;
}

double Relu::min_abs_input() const {
    double best = INFINITY;
    for (double v : x_.data()) best = std::min(best, std::abs(v));
    return best;
}

Tensor2D Gelu::forward(const Tensor2D& input) {
    x_ = input;
    Tensor2D out = input;
    for (double& v : out.data()) v = v * gauss_cdf(v);
    return out;
}

Tensor2D Gelu::backward(const Tensor2D& upstream) {
    require_same_shape(x_, upstream, "gelu backward");
    Tensor2D dx = upstream;
    for (std::size_t i = 0; i < dx.size(); ++i) {
        const double x = x_.data()[i];
        dx.data()[i] *= gauss_cdf(x) + x * gauss_pdf(x);
    }
    return dx;
}

// ---------------------------------------------------------------------------
// LayerNorm

LayerNorm::LayerNorm(std::size_t dim, double eps_)
    : gain(1, dim, 1.0), shift(1, dim, 0.0), ggain(1, dim), gshift(1, dim), eps(eps_) {}

Tensor2D LayerNorm::forward(const Tensor2D& input) {
    if (input.cols() != gain.cols()) {
        throw DimensionError("layer_norm: input " + input.shape_str() + " vs dim " +
                             std::to_string(gain.cols()));
    }
    const std::size_t d = input.cols();
    xhat_ = Tensor2D(input.rows(), d);
    inv_std_.assign(input.rows(), 0.0);
    Tensor2D out(input.rows(), d);
    for (std::size_t i = 0; i < input.rows(); ++i) {
        const double* x = input.row_ptr(i);
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += x[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (x[j] - mean) * (x[j] - mean);
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + eps);
        inv_std_[i] = inv;
        double* xh = xhat_.row_ptr(i);
        double* o = out.row_ptr(i);
        for (std::size_t j = 0; j < d; ++j) {
            xh[j] = (x[j] - mean) * inv;
            o[j] = gain(0, j) * xh[j] + shift(0, j);
        }
    }
    return out;
}

Tensor2D LayerNorm::backward(const Tensor2D& upstream) {
    require_same_shape(xhat_, upstream, "layer_norm backward");
    const std::size_t d = upstream.cols();
    Tensor2D dx(upstream.rows(), d);
    for (std::size_t i = 0; i < upstream.rows(); ++i) {
        const double* g = upstream.row_ptr(i);
        const double* xh = xhat_.row_ptr(i);
        double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double dxhat = g[j] * gain(0, j);
            ggain(0, j) += g[j] * xh[j];
            gshift(0, j) += g[j];
            mean_dxhat += dxhat;
            mean_dxhat_xhat += dxhat * xh[j];
        }
        mean_dxhat /= static_cast<double>(d);
        mean_dxhat_xhat /= static_cast<double>(d);
        double* dxr = dx.row_ptr(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double dxhat = g[j] * gain(0, j);
            dxr[j] = inv_std_[i] * (dxhat - mean_dxhat - xh[j] * mean_dxhat_xhat);
        }
    }
    return dx;
}

double LayerNorm::min_input_std() const {
    double best = INFINITY;
    for (double inv : inv_std_) best = std::min(best, 1.0 / inv);
    return best;
}

std::vector<NamedParam> LayerNorm::params() {
    return {{"gain", &gain, &ggain}, {"shift", &shift, &gshift}};
}

// ---------------------------------------------------------------------------
// Softmax

Tensor2D Softmax::forward(const Tensor2D& input) {
    y_ = input;
    softmax_rows(y_);
    return y_;
}

Tensor2D Softmax::backward(const Tensor2D& upstream) {
    require_same_shape(y_, upstream, "softmax backward");
    return softmax_backward_rows(y_, upstream);
}

// ---------------------------------------------------------------------------
// L2Normalize

Tensor2D L2Normalize::forward(const Tensor2D& input) {
    y_ = input;
    inv_norm_.assign(input.rows(), 0.0);
    for (std::size_t i = 0; i < input.rows(); ++i) {
        double* row = y_.row_ptr(i);
        double s = 0.0;
        for (std::size_t j = 0; j < input.cols(); ++j) s += row[j] * row[j];
        const double norm = std::sqrt(s);
        if (norm < 1e-12) {
            throw ContractError("l2_normalize: row " + std::to_string(i) +
                                " has near-zero norm");
        }
        inv_norm_[i] = 1.0 / norm;
        for (std::size_t j = 0; j < input.cols(); ++j) row[j] *= inv_norm_[i];
    }
    return y_;
}

double L2Normalize::min_input_norm() const {
    double best = INFINITY;
    for (double inv : inv_norm_) best = std::min(best, 1.0 / inv);
    return best;
}

Tensor2D L2Normalize::backward(const Tensor2D& upstream) {
    require_same_shape(y_, upstream, "l2_normalize backward");
    Tensor2D dx(upstream.rows(), upstream.cols());
    for (std::size_t i = 0; i < upstream.rows(); ++i) {
        const double* g = upstream.row_ptr(i);
        const double* y = y_.row_ptr(i);
        double gy = 0.0;
        for (std::size_t j = 0; j < upstream.cols(); ++j) gy += g[j] * y[j];
        double* d = dx.row_ptr(i);
        for (std::size_t j = 0; j < upstream.cols(); ++j) {
            d[j] = (g[j] - gy * y[j]) * inv_norm_[i];
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// MultiHeadAttention

MultiHeadAttention::MultiHeadAttention(std::size_t width, std::size_t heads_)
    : heads(heads_), q(width, width), k(width, width), v(width, width), o(width, width),
      width_(width) {
    if (heads == 0 || width % heads != 0) {
        throw ConfigError("multi_head_attention: width " + std::to_string(width) +
                          " not divisible by heads " + std::to_string(heads));
    }
}

void MultiHeadAttention::init(Rng& rng) {
    q.init(rng);
    k.init(rng);
    v.init(rng);
    o.init(rng);
}

Tensor2D MultiHeadAttention::forward(const Tensor2D& input) {
    if (input.cols() != width_) {
        throw DimensionError("multi_head_attention: input " + input.shape_str() +
                             " vs width " + std::to_string(width_));
    }
    q_ = q.forward(input);
    k_ = k.forward(input);
    v_ = v.forward(input);
    const std::size_t dh = width_ / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    attn_.assign(heads, Tensor2D());
    Tensor2D context(input.rows(), width_);
    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t c0 = h * dh;
        Tensor2D qh = take_cols(q_, c0, c0 + dh);
        Tensor2D kh = take_cols(k_, c0, c0 + dh);
        Tensor2D vh = take_cols(v_, c0, c0 + dh);
        Tensor2D scores = matmul_nt(qh, kh);
        scale_inplace(scores, scale);
        softmax_rows(scores);
        attn_[h] = scores;
        put_cols(context, matmul(scores, vh), c0);
    }
    return o.forward(context);
}

Tensor2D MultiHeadAttention::backward(const Tensor2D& upstream) {
    Tensor2D dcontext = o.backward(upstream);
    const std::size_t dh = width_ / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor2D dq(q_.rows(), width_), dk(k_.rows(), width_), dv(v_.rows(), width_);
    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t c0 = h * dh;
        Tensor2D kh = take_cols(k_, c0, c0 + dh);
        Tensor2D qh = take_cols(q_, c0, c0 + dh);
        Tensor2D vh = take_cols(v_, c0, c0 + dh);
        Tensor2D dch = take_cols(dcontext, c0, c0 + dh);

        Tensor2D dattn = matmul_nt(dch, vh);
        Tensor2D dvh = matmul_tn(attn_[h], dch);
        Tensor2D dscores = softmax_backward_rows(attn_[h], dattn);
        scale_inplace(dscores, scale);
        put_cols(dq, matmul(dscores, kh), c0);
        put_cols(dk, matmul_tn(dscores, qh), c0);
        put_cols(dv, dvh, c0);
    }
    Tensor2D dx = q.backward(dq);
    add_inplace(dx, k.backward(dk));
    add_inplace(dx, v.backward(dv));
    return dx;
}

std::vector<NamedParam> MultiHeadAttention::params() {
    std::vector<NamedParam> out;
    collect_params(out, "q.", q);
    collect_params(out, "k.", k);
    collect_params(out, "v.", v);
    collect_params(out, "o.", o);
    return out;
}

// ---------------------------------------------------------------------------
// FeedForward

FeedForward::FeedForward(std::size_t width, std::size_t inner)
    : l1(width, inner), l2(inner, width) {}

void FeedForward::init(Rng& rng) {
    l1.init(rng);
    l2.init(rng);
}

Tensor2D FeedForward::forward(const Tensor2D& input) {
    return l2.forward(act_.forward(l1.forward(input)));
}

Tensor2D FeedForward::backward(const Tensor2D& upstream) {
    return l1.backward(act_.backward(l2.backward(upstream)));
}

std::vector<NamedParam> FeedForward::params() {
    std::vector<NamedParam> out;
    collect_params(out, "l1.", l1);
    collect_params(out, "l2.", l2);
    return out;
}

// ---------------------------------------------------------------------------
// TransformerBlock

TransformerBlock::TransformerBlock(std::size_t width, std::size_t heads, std::size_t ffn_inner)
    : ln1(width), ln2(width), attn(width, heads), ffn(width, ffn_inner) {}

void TransformerBlock::init(Rng& rng) {
    attn.init(rng);
    ffn.init(rng);
}

Tensor2D TransformerBlock::forward(const Tensor2D& input) {
    Tensor2D c = attn.forward(ln1.forward(input));
    add_inplace(c, input);
    Tensor2D e = ffn.forward(ln2.forward(c));
    add_inplace(e, c);
    return e;
}

Tensor2D TransformerBlock::backward(const Tensor2D& upstream) {
    // out = c + ffn(ln2(c)); c = x + attn(ln1(x))
    Tensor2D dc = ln2.backward(ffn.backward(upstream));
    add_inplace(dc, upstream);
    Tensor2D dx = ln1.backward(attn.backward(dc));
    add_inplace(dx, dc);
    return dx;
}

std::vector<NamedParam> TransformerBlock::params() {
    std::vector<NamedParam> out;
    collect_params(out, "ln1.", ln1);
    collect_params(out, "attn.", attn);
    collect_params(out, "ln2.", ln2);
    collect_params(out, "ffn.", ffn);
    return out;
}

// ---------------------------------------------------------------------------
// ProjectionHead

ProjectionHead::ProjectionHead(std::size_t in_dim, std::size_t mid_dim, std::size_t out_dim)
    : l1(in_dim, mid_dim), l2(mid_dim, out_dim) {}

void ProjectionHead::init(Rng& rng) {
    l1.init(rng);
    l2.init(rng);
}

Tensor2D ProjectionHead::forward(const Tensor2D& input) {
    return l2.forward(act.forward(l1.forward(input)));
}

Tensor2D ProjectionHead::backward(const Tensor2D& upstream) {
    return l1.backward(act.backward(l2.backward(upstream)));
}

std::vector<NamedParam> ProjectionHead::params() {
    std::vector<NamedParam> out;
    collect_params(out, "l1.", l1);
    collect_params(out, "l2.", l2);
    return out;
}

}  // namespace treid
