#pragma once

#include <utility>
#include <vector>

#include "tavp/nn.hpp"
#include "tavp/tensor.hpp"

namespace tavp {

enum class RoiInit { Random, Roi };
enum class StateInit { Random, States };

/// Integer cell range of a feature map covered by a box. Cells belong to the
/// box when their center (c + 0.5, r + 0.5) lies strictly inside it; a box
/// smaller than one cell falls back to the cell containing its center, so the
/// pooled region is never empty.
struct CellRange {
    int64_t row0, rows;
    int64_t col0, cols;
};
CellRange roi_cell_range(double cx, double cy, double w, double h, int64_t grid_h, int64_t grid_w);

/// Builds the M ROI messenger tokens. In Roi mode each observed frame's
/// feature map is average-pooled inside the (1/4-scaled, clamped) box, the T
/// pooled vectors are concatenated to a C' vector and M independent linear
/// maps produce the tokens. In Random mode the tokens are a learned [M, C']
/// parameter.
struct RoiTokenizer {
    RoiInit mode = RoiInit::Roi;
    int64_t count = 0;
    std::vector<nn::Linear> maps;
    Tensor random_tokens;

    RoiTokenizer() = default;
    RoiTokenizer(int64_t count, int64_t width, RoiInit mode, Rng& rng);

    /// features: [T, C_hid, h, w]; boxes_px: [T, 4] in original pixel coords.
    Tensor forward(const Tensor& features, const Tensor& boxes_px, int64_t downsample = 4) const;
    void params(const std::string& prefix, nn::ParamList& out) const;
};

/// Builds the N state messenger tokens from the flattened normalized box
/// sequence through N independent two-layer maps (4T -> C' -> C', GELU), or a
/// learned [N, C'] parameter in Random mode.
struct StateTokenizer {
    StateInit mode = StateInit::States;
    int64_t count = 0;
    struct TwoLayer {
        nn::Linear in;
        nn::Linear out;
    };
    std::vector<TwoLayer> maps;
    Tensor random_tokens;

    StateTokenizer() = default;
    StateTokenizer(int64_t count, int64_t obs_steps, int64_t width, StateInit mode, Rng& rng);

    Tensor forward(const Tensor& boxes_norm) const; // [T,4] -> [N, C']
    void params(const std::string& prefix, nn::ParamList& out) const;
};

/// Message passing across branches: LN([T_R; T_S]) -> two-layer GELU MLP over
/// the token axis (K -> 4K -> K for K = M + N, shared across channels) ->
/// residual -> split. Mixing along the token axis is what lets ROI and state
/// messengers exchange information; a per-row MLP could not connect them.
struct MessagePasser {
    nn::LayerNorm norm;
    nn::Linear mix_in;  // K -> 4K
    nn::Linear mix_out; // 4K -> K

    MessagePasser() = default;
    MessagePasser(int64_t width, int64_t token_count, Rng& rng);

    std::pair<Tensor, Tensor> forward(const Tensor& roi_tokens, const Tensor& state_tokens) const;
    void params(const std::string& prefix, nn::ParamList& out) const;
};

} // namespace tavp
