#include "tavp/nn.hpp"

#include <cmath>

#include "tavp/common.hpp"

namespace tavp::nn {

namespace {

Tensor xavier_uniform(Shape shape, int64_t fan_in, int64_t fan_out, Rng& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return Tensor::rand_uniform(std::move(shape), rng, -limit, limit, true);
}

} // namespace

Linear::Linear(int64_t in, int64_t out, Rng& rng)
    : weight(xavier_uniform({in, out}, in, out, rng)), bias(Tensor::zeros({out}, true)) {}

Tensor Linear::forward(const Tensor& x) const { return add(matmul(x, weight), bias); }

void Linear::params(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".w", weight});
    out.push_back({prefix + ".b", bias});
}

LayerNorm::LayerNorm(int64_t dim)
    : gamma(Tensor::full({dim}, 1.0, true)), beta(Tensor::zeros({dim}, true)) {}

Tensor LayerNorm::forward(const Tensor& x) const { return layer_norm(x, gamma, beta, -1); }

void LayerNorm::params(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".g", gamma});
    out.push_back({prefix + ".b", beta});
}

Mlp::Mlp(int64_t dim, int64_t hidden, Rng& rng) : fc1(dim, hidden, rng), fc2(hidden, dim, rng) {}

Tensor Mlp::forward(const Tensor& x) const { return fc2.forward(gelu(fc1.forward(x))); }

void Mlp::params(const std::string& prefix, ParamList& out) const {
    fc1.params(prefix + ".fc1", out);
    fc2.params(prefix + ".fc2", out);
}

Conv2d::Conv2d(int64_t cin, int64_t cout, int64_t kernel, int64_t stride, int64_t padding, Rng& rng)
    : weight(xavier_uniform({cout, cin, kernel, kernel}, cin * kernel * kernel,
                            cout * kernel * kernel, rng)),
      bias(Tensor::zeros({cout}, true)),
      stride(stride),
      padding(padding) {}

Tensor Conv2d::forward(const Tensor& x) const {
    Tensor y = conv2d(x, weight, stride, padding);
    return add(y, reshape(bias, {bias.numel(), 1, 1}));
}

void Conv2d::params(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".w", weight});
    out.push_back({prefix + ".b", bias});
}

ConvTranspose2d::ConvTranspose2d(int64_t cin, int64_t cout, int64_t kernel, int64_t stride,
                                 int64_t padding, Rng& rng)
    : weight(xavier_uniform({cin, cout, kernel, kernel}, cin * kernel * kernel,
                            cout * kernel * kernel, rng)),
      bias(Tensor::zeros({cout}, true)),
      stride(stride),
      padding(padding) {}

Tensor ConvTranspose2d::forward(const Tensor& x) const {
    Tensor y = conv_transpose2d(x, weight, stride, padding);
    return add(y, reshape(bias, {bias.numel(), 1, 1}));
}

void ConvTranspose2d::params(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".w", weight});
    out.push_back({prefix + ".b", bias});
}

GroupNorm::GroupNorm(int64_t channels, int64_t groups)
    : gamma(Tensor::full({channels}, 1.0, true)), beta(Tensor::zeros({channels}, true)),
      groups(groups) {
    if (channels % groups != 0) {
        throw ConfigError("group norm: " + std::to_string(groups) + " groups do not divide " +
                          std::to_string(channels) + " channels");
    }
}

Tensor GroupNorm::forward(const Tensor& x) const {
    if (x.dim() != 4) throw ShapeError("group norm expects [B,C,H,W], got " + shape_str(x.shape()));
    const int64_t B = x.size(0), C = x.size(1), H = x.size(2), W = x.size(3);
    Tensor xg = reshape(x, {B, groups, (C / groups) * H * W});
    Tensor unit_g = Tensor::full({(C / groups) * H * W}, 1.0);
    Tensor unit_b = Tensor::zeros({(C / groups) * H * W});
    Tensor normed = layer_norm(xg, unit_g, unit_b, -1);
    Tensor y = reshape(normed, {B, C, H, W});
    y = mul(y, reshape(gamma, {C, 1, 1}));
    return add(y, reshape(beta, {C, 1, 1}));
}

void GroupNorm::params(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".g", gamma});
    out.push_back({prefix + ".b", beta});
}

MultiHeadAttention::MultiHeadAttention(int64_t dim, int64_t heads, Rng& rng)
    : q_proj(dim, dim, rng), k_proj(dim, dim, rng), v_proj(dim, dim, rng),
      out_proj(dim, dim, rng), heads(heads) {
    if (dim % heads != 0) {
        throw ConfigError("attention width " + std::to_string(dim) + " is not divisible by " +
                          std::to_string(heads) + " heads");
    }
}

Tensor MultiHeadAttention::forward(const Tensor& queries, const Tensor& kv, const Tensor* mask,
                                   Tensor* attn_out) const {
    const int64_t nq = queries.size(0);
    const int64_t nk = kv.size(0);
    const int64_t dim = queries.size(1);
    const int64_t dk = dim / heads;

    auto to_heads = [&](const Tensor& t, int64_t n) {
        return permute(reshape(t, {n, heads, dk}), {1, 0, 2}); // [H, n, dk]
    };
    Tensor q = to_heads(q_proj.forward(queries), nq);
    Tensor k = to_heads(k_proj.forward(kv), nk);
    Tensor v = to_heads(v_proj.forward(kv), nk);

    Tensor scores = mul_scalar(matmul(q, transpose(k, 1, 2)), 1.0 / std::sqrt(static_cast<double>(dk)));
    Tensor probs = mask ? masked_softmax(scores, *mask) : softmax(scores, -1);
    if (attn_out) *attn_out = probs;

    Tensor ctx = matmul(probs, v);                        // [H, nq, dk]
    Tensor merged = reshape(permute(ctx, {1, 0, 2}), {nq, dim});
    return out_proj.forward(merged);
}

void MultiHeadAttention::params(const std::string& prefix, ParamList& out) const {
    q_proj.params(prefix + ".q", out);
    k_proj.params(prefix + ".k", out);
    v_proj.params(prefix + ".v", out);
    out_proj.params(prefix + ".o", out);
}

} // namespace tavp::nn
