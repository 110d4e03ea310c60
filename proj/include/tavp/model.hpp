#pragma once

#include <optional>

#include "tavp/decoders.hpp"
#include "tavp/embedding.hpp"
#include "tavp/encoder.hpp"
#include "tavp/model_config.hpp"

namespace tavp {

/// End-to-end joint predictor: observed frames + observed target boxes in,
/// future frames + future boxes out.
struct Model {
    ModelConfig cfg;
    std::optional<SpatialEmbedder> embedder;
    std::optional<BoxEmbedder> box_embedder;
    Encoder encoder;
    std::optional<VideoDecoder> video_decoder;
    std::optional<MotionDecoder> motion_decoder;

    Model() = default;
    Model(const ModelConfig& config, Rng& rng);

    struct Output {
        Tensor frames;     // [T', C, H, W], defined when the video branch is on
        Tensor boxes_norm; // [T', 4] normalized, defined when the motion branch is on
    };

    /// frames_obs: [T, C, H, W] in [0,1]; boxes_obs_px: [T, 4] center-format
    /// pixels. teacher_norm ([T',4], normalized) enables the teacher-forced
    /// parallel pass; without it box decoding is autoregressive.
    Output forward(const Tensor& frames_obs, const Tensor& boxes_obs_px,
                   const Tensor* teacher_norm = nullptr) const;

    nn::ParamList params() const;
    void zero_grad() const;
    int64_t param_count() const;
};

} // namespace tavp
