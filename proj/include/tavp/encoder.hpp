#pragma once

#include <optional>
#include <vector>

#include "tavp/ism.hpp"
#include "tavp/model_config.hpp"
#include "tavp/nn.hpp"
#include "tavp/sta.hpp"
#include "tavp/tensor.hpp"

namespace tavp {

/// Fold [T, C_hid, h, w] features into the token grid [(h*w), T*C_hid]
/// (frames arranged sequentially along the channel axis) and back.
Tensor fold_tokens(const Tensor& features);
Tensor unfold_tokens(const Tensor& tokens, int64_t frames, int64_t channels, int64_t grid_h,
                     int64_t grid_w);

/// One target-aware encoder layer: video sub-block (spatial attention with
/// ROI messengers, optional temporal gate, MLP), motion sub-block (attention
/// with state messengers, MLP), then message passing. Pre-LN residual
/// convention throughout; the attention LN lives inside BranchAttention.
struct EncoderLayer {
    std::optional<StaBlock> video_sta;         // gate enabled
    std::optional<BranchAttention> video_attn; // gate disabled (classical layer)
    std::optional<nn::LayerNorm> video_mlp_norm;
    std::optional<nn::Mlp> video_mlp;

    std::optional<BranchAttention> motion_attn;
    std::optional<nn::LayerNorm> motion_mlp_norm;
    std::optional<nn::Mlp> motion_mlp;

    std::optional<MessagePasser> passer;

    EncoderLayer() = default;
    EncoderLayer(const ModelConfig& cfg, Rng& rng);

    void params(const std::string& prefix, nn::ParamList& out) const;
};

/// The full encoder stack. Messengers are initialized once per forward pass,
/// then flow layer to layer through collecting and passing.
struct Encoder {
    ModelConfig cfg;
    Tensor pos_embed; // [(h*w), C'], zero-initialized, learned
    std::optional<RoiTokenizer> roi_tokenizer;
    std::optional<StateTokenizer> state_tokenizer;
    std::vector<EncoderLayer> layers;

    Encoder() = default;
    Encoder(const ModelConfig& cfg, Rng& rng);

    struct Out {
        Tensor video_features; // [T, C_hid, h, w]
        Tensor motion_states;  // [T, C']
    };

    /// spatial: [T, C_hid, h, w] (video branch); motion: [T, C'] (motion
    /// branch); boxes_px/boxes_norm feed messenger initialization.
    Out forward(const Tensor* spatial, const Tensor* motion, const Tensor* boxes_px,
                const Tensor* boxes_norm) const;

    void params(const std::string& prefix, nn::ParamList& out) const;
};

} // namespace tavp
