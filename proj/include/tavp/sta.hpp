#pragma once

#include "tavp/nn.hpp"
#include "tavp/tensor.hpp"

namespace tavp {

/// Layer-normed multi-head self-attention over a branch's token matrix with
/// optional messenger rows joined. This is the shared machinery behind the
/// video branch's spatial attention and the motion branch's collecting step:
/// LN([tokens; messengers]) -> MHSA -> split rows back.
///
/// collect == true:  messengers attend and are updated (split of the MHSA
///                   output, as in the full ISM collecting phase).
/// collect == false: messengers are visible as context (keys/values) but do
///                   not gather updates; they pass through unchanged.
struct BranchAttention {
    nn::LayerNorm norm;
    nn::MultiHeadAttention attn;

    BranchAttention() = default;
    BranchAttention(int64_t dim, int64_t heads, Rng& rng);

    struct Out {
        Tensor tokens;     // [n, dim] attention result for the branch rows
        Tensor messengers; // [m, dim] updated (or passed-through) messengers
        Tensor probs;      // [heads, nq, nk] attention rows (for inspection)
    };

    Out forward(const Tensor& tokens, const Tensor* messengers, bool collect = true) const;

    void params(const std::string& prefix, nn::ParamList& out) const;
};

/// Squeeze-excitation channel gate: mean over spatial tokens, bottleneck
/// dim -> dim/r -> dim with GELU between, sigmoid out. Gates lie in (0,1).
struct TemporalAttention {
    nn::Linear fc1;
    nn::Linear fc2;

    TemporalAttention() = default;
    TemporalAttention(int64_t dim, int64_t reduction, Rng& rng);

    Tensor forward(const Tensor& tokens) const; // [n, dim] -> [dim]

    void params(const std::string& prefix, nn::ParamList& out) const;
};

/// Spatiotemporal attention block: F' = (A_t (x) A_s) (.) F, where A_t is the
/// channel gate broadcast over all spatial rows (rank-1 joint gate) and A_s is
/// the spatial attention result. The residual addition is the caller's job.
struct StaBlock {
    BranchAttention spatial;
    TemporalAttention temporal;

    StaBlock() = default;
    StaBlock(int64_t dim, int64_t heads, int64_t se_reduction, Rng& rng);

    struct Out {
        Tensor tokens;     // F'
        Tensor messengers; // updated ROI messengers
    };

    Out forward(const Tensor& tokens, const Tensor* messengers, bool collect = true) const;

    /// The rank-1 gate product: (channel_gate (x) spatial_result) (.) tokens,
    /// with the [dim] gate broadcast over all rows.
    static Tensor combine(const Tensor& spatial_result, const Tensor& channel_gate,
                          const Tensor& tokens);

    void params(const std::string& prefix, nn::ParamList& out) const;
};

} // namespace tavp
