#include "tavp/model.hpp"

#include "tavp/common.hpp"

namespace tavp {

Model::Model(const ModelConfig& config, Rng& rng) : cfg(config) {
    cfg.validate();
    if (cfg.video_branch) embedder.emplace(cfg.channels, cfg.hidden_channels, rng);
    if (cfg.motion_branch) box_embedder.emplace(cfg.token_width(), rng);
    encoder = Encoder(cfg, rng);
    if (cfg.video_branch) {
        video_decoder.emplace(cfg.obs_frames, cfg.hidden_channels, cfg.pred_frames,
                              cfg.decoder_channels, cfg.channels, rng);
    }
    if (cfg.motion_branch) {
        motion_decoder.emplace(cfg.token_width(), cfg.heads, cfg.mlp_ratio,
                               cfg.motion_decoder_depth, cfg.obs_frames, rng);
    }
}

Model::Output Model::forward(const Tensor& frames_obs, const Tensor& boxes_obs_px,
                             const Tensor* teacher_norm) const {
    if (cfg.video_branch) {
        if (frames_obs.dim() != 4 || frames_obs.size(0) != cfg.obs_frames ||
            frames_obs.size(1) != cfg.channels || frames_obs.size(2) != cfg.height ||
            frames_obs.size(3) != cfg.width) {
            throw ShapeError("model: observed frames " + shape_str(frames_obs.shape()) +
                             " do not match the configured " + std::to_string(cfg.obs_frames) +
                             "x" + std::to_string(cfg.channels) + "x" + std::to_string(cfg.height) +
                             "x" + std::to_string(cfg.width));
        }
    }
    if (boxes_obs_px.dim() != 2 || boxes_obs_px.size(0) != cfg.obs_frames ||
        boxes_obs_px.size(1) != 4) {
        throw ShapeError("model: observed boxes " + shape_str(boxes_obs_px.shape()) +
                         " must be [" + std::to_string(cfg.obs_frames) + ",4]");
    }

    Tensor boxes_norm = normalize_boxes(boxes_obs_px, cfg.width, cfg.height);

    Tensor spatial, motion;
    if (cfg.video_branch) spatial = embedder->forward(frames_obs);
    if (cfg.motion_branch) motion = box_embedder->forward(boxes_norm);

    auto encoded = encoder.forward(cfg.video_branch ? &spatial : nullptr,
                                   cfg.motion_branch ? &motion : nullptr, &boxes_obs_px,
                                   &boxes_norm);

    Output out;
    if (cfg.video_branch) out.frames = video_decoder->forward(encoded.video_features);
    if (cfg.motion_branch) {
        Tensor last_box = slice(boxes_norm, 0, cfg.obs_frames - 1, 1);
        if (teacher_norm) {
            out.boxes_norm =
                motion_decoder->forward_teacher(encoded.motion_states, last_box, *teacher_norm);
        } else {
            out.boxes_norm = motion_decoder->forward_autoregressive(encoded.motion_states,
                                                                    last_box, cfg.pred_frames);
        }
    }
    return out;
}

nn::ParamList Model::params() const {
    nn::ParamList list;
    if (embedder) embedder->params("embed", list);
    if (box_embedder) box_embedder->params("box_embed", list);
    encoder.params("enc", list);
    if (video_decoder) video_decoder->params("vdec", list);
    if (motion_decoder) motion_decoder->params("mdec", list);
    return list;
}

void Model::zero_grad() const {
    for (auto& p : params()) {
        Tensor t = p.tensor;
        t.zero_grad();
    }
}

int64_t Model::param_count() const {
    int64_t count = 0;
    for (const auto& p : params()) count += p.tensor.numel();
    return count;
}

} // namespace tavp
