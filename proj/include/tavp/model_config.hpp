#pragma once

#include <cstdint>

#include "tavp/ism.hpp"

namespace tavp {

/// Architecture hyperparameters plus the ablation lattice (branch toggles,
/// messenger init sources/counts, ISM phase switches).
struct ModelConfig {
    int64_t obs_frames = 4;  // T
    int64_t pred_frames = 4; // T'
    int64_t channels = 1;
    int64_t height = 32;
    int64_t width = 32;
    int64_t hidden_channels = 8;  // per-frame feature channels C_hid
    int64_t decoder_channels = 8; // video decoder width
    int64_t depth = 2;            // encoder layers
    int64_t heads = 4;
    int64_t mlp_ratio = 4;
    int64_t se_reduction = 4;
    int64_t motion_decoder_depth = 4;

    bool video_branch = true;
    bool motion_branch = true;
    bool sta_gate = true; // temporal/channel gate; off = classical encoder layer

    bool ism = true;
    int64_t roi_tokens = 4;   // M
    int64_t state_tokens = 1; // N
    RoiInit roi_init = RoiInit::Roi;
    StateInit state_init = StateInit::States;
    bool ism_collect = true;
    bool ism_pass = true;

    /// Encoder token width C' = T * C_hid (frames folded into channels).
    int64_t token_width() const { return obs_frames * hidden_channels; }
    int64_t grid_h() const { return height / 4; }
    int64_t grid_w() const { return width / 4; }

    void validate() const;
};

} // namespace tavp
