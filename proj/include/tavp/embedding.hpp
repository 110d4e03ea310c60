#pragma once

#include "tavp/nn.hpp"
#include "tavp/tensor.hpp"

namespace tavp {

/// Maps observed frames [T, C, H, W] to compact spatial features
/// [T, C_hid, H/4, W/4]: four conv layers, strides 2/1/2/1, each followed by
/// group normalization and GELU.
struct SpatialEmbedder {
    nn::Conv2d conv1, conv2, conv3, conv4;
    nn::GroupNorm norm1, norm2, norm3, norm4;

    SpatialEmbedder() = default;
    SpatialEmbedder(int64_t in_channels, int64_t hidden_channels, Rng& rng);

    Tensor forward(const Tensor& frames) const;
    void params(const std::string& prefix, nn::ParamList& out) const;
};

/// Fixed sinusoidal temporal encoding table:
///   pe[t, 2i]   = sin(t / 10000^(2i/dim))
///   pe[t, 2i+1] = cos(t / 10000^(2i/dim))
/// Positions run from `first_pos` to `first_pos + steps - 1`.
Tensor sinusoidal_encoding(int64_t steps, int64_t dim, int64_t first_pos = 0);

/// Normalize pixel boxes (cx, cy, w, h) by frame extents into [0,1] and back.
Tensor normalize_boxes(const Tensor& boxes_px, int64_t frame_w, int64_t frame_h);
Tensor denormalize_boxes(const Tensor& boxes_norm, int64_t frame_w, int64_t frame_h);

/// Embeds normalized box states [T, 4] into motion tokens [T, width]:
/// a linear layer plus the sinusoidal position encoding.
struct BoxEmbedder {
    nn::Linear proj;
    int64_t width = 0;

    BoxEmbedder() = default;
    BoxEmbedder(int64_t width, Rng& rng);

    /// first_pos offsets the position table (the motion decoder continues the
    /// observed timeline).
    Tensor forward(const Tensor& boxes_norm, int64_t first_pos = 0) const;
    void params(const std::string& prefix, nn::ParamList& out) const;
};

} // namespace tavp
