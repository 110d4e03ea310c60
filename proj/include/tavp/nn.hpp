#pragma once

#include <string>
#include <vector>

#include "tavp/rng.hpp"
#include "tavp/tensor.hpp"

namespace tavp::nn {

struct ParamRef {
    std::string name;
    Tensor tensor;
};
using ParamList = std::vector<ParamRef>;

/// y = x @ weight + bias, weight stored [in, out].
struct Linear {
    Tensor weight;
    Tensor bias;

    Linear() = default;
    Linear(int64_t in, int64_t out, Rng& rng);

    Tensor forward(const Tensor& x) const;
    void params(const std::string& prefix, ParamList& out) const;
};

struct LayerNorm {
    Tensor gamma;
    Tensor beta;

    LayerNorm() = default;
    explicit LayerNorm(int64_t dim);

    Tensor forward(const Tensor& x) const;
    void params(const std::string& prefix, ParamList& out) const;
};

/// Two-layer MLP with GELU: dim -> hidden -> dim.
struct Mlp {
    Linear fc1;
    Linear fc2;

    Mlp() = default;
    Mlp(int64_t dim, int64_t hidden, Rng& rng);

    Tensor forward(const Tensor& x) const;
    void params(const std::string& prefix, ParamList& out) const;
};

struct Conv2d {
    Tensor weight; // [Cout, Cin, kh, kw]
    Tensor bias;   // [Cout]
    int64_t stride = 1;
    int64_t padding = 0;

    Conv2d() = default;
    Conv2d(int64_t cin, int64_t cout, int64_t kernel, int64_t stride, int64_t padding, Rng& rng);

    Tensor forward(const Tensor& x) const;
    void params(const std::string& prefix, ParamList& out) const;
};

struct ConvTranspose2d {
    Tensor weight; // [Cin, Cout, kh, kw]
    Tensor bias;   // [Cout]
    int64_t stride = 1;
    int64_t padding = 0;

    ConvTranspose2d() = default;
    ConvTranspose2d(int64_t cin, int64_t cout, int64_t kernel, int64_t stride, int64_t padding,
                    Rng& rng);

    Tensor forward(const Tensor& x) const;
    void params(const std::string& prefix, ParamList& out) const;
};

/// Per-channel group normalization over [B, C, H, W].
struct GroupNorm {
    Tensor gamma; // [C]
    Tensor beta;  // [C]
    int64_t groups = 1;

    GroupNorm() = default;
    GroupNorm(int64_t channels, int64_t groups);

    Tensor forward(const Tensor& x) const;
    void params(const std::string& prefix, ParamList& out) const;
};

/// Multi-head attention over token matrices [n, dim]. Supports distinct
/// query and key/value token sets (cross-attention, frozen-messenger mode)
/// and an optional multiplicative mask over [nq, nk].
struct MultiHeadAttention {
    Linear q_proj;
    Linear k_proj;
    Linear v_proj;
    Linear out_proj;
    int64_t heads = 1;

    MultiHeadAttention() = default;
    MultiHeadAttention(int64_t dim, int64_t heads, Rng& rng);

    /// queries: [nq, dim], kv: [nk, dim]; mask (optional): [nq, nk] of 0/1.
    /// attn_out, when given, receives the attention probabilities [heads, nq, nk].
    Tensor forward(const Tensor& queries, const Tensor& kv, const Tensor* mask = nullptr,
                   Tensor* attn_out = nullptr) const;

    void params(const std::string& prefix, ParamList& out) const;
};

} // namespace tavp::nn
