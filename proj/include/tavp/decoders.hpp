#pragma once

#include <vector>

#include "tavp/nn.hpp"
#include "tavp/tensor.hpp"

namespace tavp {

/// Video decoder: a learned channel bridge on the folded token axis maps the
/// T observed frames to T' prediction slots, then four transposed-conv layers
/// (strides 2/1/2/1) restore the input resolution; a 1x1 conv plus sigmoid
/// emits pixels in (0,1).
struct VideoDecoder {
    nn::Linear bridge; // T*C_hid -> T'*C_dec, the only piece whose shape depends on T'
    nn::ConvTranspose2d up1, up2, up3, up4;
    nn::GroupNorm norm1, norm2, norm3, norm4;
    nn::Conv2d to_pixels;
    int64_t pred_frames = 0;
    int64_t dec_channels = 0;

    VideoDecoder() = default;
    VideoDecoder(int64_t obs_frames, int64_t hidden_channels, int64_t pred_frames,
                 int64_t dec_channels, int64_t out_channels, Rng& rng);

    Tensor forward(const Tensor& video_features) const; // [T,C_hid,h,w] -> [T',C,H,W]
    void params(const std::string& prefix, nn::ParamList& out) const;
};

struct MotionDecoderLayer {
    nn::LayerNorm self_norm;
    nn::MultiHeadAttention self_attn;
    nn::LayerNorm cross_norm;
    nn::MultiHeadAttention cross_attn;
    nn::LayerNorm mlp_norm;
    nn::Mlp mlp;

    MotionDecoderLayer() = default;
    MotionDecoderLayer(int64_t dim, int64_t heads, int64_t mlp_ratio, Rng& rng);
    void params(const std::string& prefix, nn::ParamList& out) const;
};

/// Autoregressive box decoder: queries are embedded previously-known boxes
/// (box embedding + continued sinusoidal positions), each layer runs causally
/// masked self-attention, cross-attention into the encoded motion states and
/// an MLP. The head emits deltas added to each query's box; widths/heights
/// are clamped non-negative.
struct MotionDecoder {
    nn::Linear query_proj; // 4 -> C'
    nn::LayerNorm memory_norm;
    std::vector<MotionDecoderLayer> layers;
    nn::LayerNorm final_norm;
    nn::Linear head; // C' -> 4
    int64_t width = 0;
    int64_t obs_frames = 0; // query positions continue the observed timeline

    MotionDecoder() = default;
    MotionDecoder(int64_t dim, int64_t heads, int64_t mlp_ratio, int64_t depth, int64_t obs_frames,
                  Rng& rng);

    /// Teacher-forced parallel pass. queries row j is the ground-truth box of
    /// step j-1 (the last observed box for j = 0).
    /// memory: [T, C']; last_box: [1,4]; teacher: [T',4]; all boxes normalized.
    Tensor forward_teacher(const Tensor& memory, const Tensor& last_box,
                           const Tensor& teacher) const;

    /// Greedy rollout: emits one box per step, feeding predictions back.
    Tensor forward_autoregressive(const Tensor& memory, const Tensor& last_box,
                                  int64_t steps) const;

    /// One causally-masked decode of the given query boxes; returns the
    /// per-row predicted boxes. attn_out (optional) receives the last layer's
    /// self-attention probabilities.
    Tensor decode(const Tensor& memory, const Tensor& query_boxes, Tensor* attn_out = nullptr) const;

    void params(const std::string& prefix, nn::ParamList& out) const;
};

/// Lower-triangular ones matrix [n, n] (causal attention mask).
Tensor causal_mask(int64_t n);

} // namespace tavp
