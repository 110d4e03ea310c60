#include "tavp/encoder.hpp"

#include "tavp/common.hpp"

namespace tavp {

void ModelConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ConfigError("config field '" + field + "': " + why);
    };
    if (obs_frames < 1) fail("obs_frames", "must be >= 1");
    if (pred_frames < 1) fail("pred_frames", "must be >= 1");
    if (channels < 1) fail("channels", "must be >= 1");
    if (height % 4 != 0 || height < 4) fail("height", "must be a positive multiple of 4");
    if (width % 4 != 0 || width < 4) fail("width", "must be a positive multiple of 4");
    if (hidden_channels < 1) fail("hidden_channels", "must be >= 1");
    if (decoder_channels < 1) fail("decoder_channels", "must be >= 1");
    if (depth < 1) fail("depth", "must be >= 1");
    if (heads < 1) fail("heads", "must be >= 1");
    if (token_width() % heads != 0) {
        fail("heads", std::to_string(heads) + " does not divide token width " +
                          std::to_string(token_width()));
    }
    if (mlp_ratio < 1) fail("mlp_ratio", "must be >= 1");
    if (se_reduction < 1) fail("se_reduction", "must be >= 1");
    if (motion_decoder_depth < 1) fail("motion_decoder_depth", "must be >= 1");
    if (!video_branch && !motion_branch) fail("video_branch", "at least one branch must be enabled");
    if (ism) {
        if (!video_branch || !motion_branch) fail("ism", "requires both branches");
        if (roi_tokens < 1) fail("roi_tokens", "must be >= 1 when ISM is enabled");
        if (state_tokens < 1) fail("state_tokens", "must be >= 1 when ISM is enabled");
    }
}

Tensor fold_tokens(const Tensor& features) {
    if (features.dim() != 4) {
        throw ShapeError("fold_tokens expects [T,C,h,w], got " + shape_str(features.shape()));
    }
    const int64_t T = features.size(0), C = features.size(1);
    const int64_t h = features.size(2), w = features.size(3);
    return reshape(permute(features, {2, 3, 0, 1}), {h * w, T * C});
}

Tensor unfold_tokens(const Tensor& tokens, int64_t frames, int64_t channels, int64_t grid_h,
                     int64_t grid_w) {
    if (tokens.dim() != 2 || tokens.size(0) != grid_h * grid_w ||
        tokens.size(1) != frames * channels) {
        throw ShapeError("unfold_tokens: " + shape_str(tokens.shape()) + " does not match " +
                         std::to_string(grid_h * grid_w) + " tokens of width " +
                         std::to_string(frames * channels));
    }
    return permute(reshape(tokens, {grid_h, grid_w, frames, channels}), {2, 3, 0, 1});
}

EncoderLayer::EncoderLayer(const ModelConfig& cfg, Rng& rng) {
    const int64_t dim = cfg.token_width();
    if (cfg.video_branch) {
        if (cfg.sta_gate) {
            video_sta.emplace(dim, cfg.heads, cfg.se_reduction, rng);
        } else {
            video_attn.emplace(dim, cfg.heads, rng);
        }
        video_mlp_norm.emplace(dim);
        video_mlp.emplace(dim, cfg.mlp_ratio * dim, rng);
    }
    if (cfg.motion_branch) {
        motion_attn.emplace(dim, cfg.heads, rng);
        motion_mlp_norm.emplace(dim);
        motion_mlp.emplace(dim, cfg.mlp_ratio * dim, rng);
    }
    if (cfg.ism && cfg.ism_pass) passer.emplace(dim, cfg.roi_tokens + cfg.state_tokens, rng);
}

void EncoderLayer::params(const std::string& prefix, nn::ParamList& out) const {
    if (video_sta) video_sta->params(prefix + ".sta", out);
    if (video_attn) video_attn->params(prefix + ".vattn", out);
    if (video_mlp_norm) video_mlp_norm->params(prefix + ".vmlp_ln", out);
    if (video_mlp) video_mlp->params(prefix + ".vmlp", out);
    if (motion_attn) motion_attn->params(prefix + ".mattn", out);
    if (motion_mlp_norm) motion_mlp_norm->params(prefix + ".mmlp_ln", out);
    if (motion_mlp) motion_mlp->params(prefix + ".mmlp", out);
    if (passer) passer->params(prefix + ".pass", out);
}

Encoder::Encoder(const ModelConfig& config, Rng& rng) : cfg(config) {
    cfg.validate();
    const int64_t dim = cfg.token_width();
    if (cfg.video_branch) {
        pos_embed = Tensor::zeros({cfg.grid_h() * cfg.grid_w(), dim}, true);
    }
    if (cfg.ism) {
        roi_tokenizer.emplace(cfg.roi_tokens, dim, cfg.roi_init, rng);
        state_tokenizer.emplace(cfg.state_tokens, cfg.obs_frames, dim, cfg.state_init, rng);
    }
    layers.reserve(static_cast<size_t>(cfg.depth));
    for (int64_t l = 0; l < cfg.depth; ++l) layers.emplace_back(cfg, rng);
}

Encoder::Out Encoder::forward(const Tensor* spatial, const Tensor* motion, const Tensor* boxes_px,
                              const Tensor* boxes_norm) const {
    if (cfg.video_branch && spatial == nullptr) {
        throw ShapeError("encoder: video branch enabled but no spatial features given");
    }
    if (cfg.motion_branch && motion == nullptr) {
        throw ShapeError("encoder: motion branch enabled but no motion embedding given");
    }

    Tensor tokens; // F^l
    Tensor states; // S^l
    if (cfg.video_branch) {
        tokens = add(fold_tokens(*spatial), pos_embed);
    }
    if (cfg.motion_branch) states = *motion;

    Tensor roi_msgs, state_msgs;
    if (cfg.ism) {
        roi_msgs = roi_tokenizer->forward(*spatial, *boxes_px);
        state_msgs = state_tokenizer->forward(*boxes_norm);
    }

    const bool collect = cfg.ism && cfg.ism_collect;
    for (const auto& layer : layers) {
        if (cfg.video_branch) {
            const Tensor* msgs = cfg.ism ? &roi_msgs : nullptr;
            Tensor branch, new_msgs;
            if (layer.video_sta) {
                auto sta = layer.video_sta->forward(tokens, msgs, collect);
                branch = sta.tokens;
                new_msgs = sta.messengers;
            } else {
                auto att = layer.video_attn->forward(tokens, msgs, collect);
                branch = att.tokens;
                new_msgs = att.messengers;
            }
            tokens = add(tokens, branch);
            if (collect) roi_msgs = add(roi_msgs, new_msgs);
            tokens = add(tokens, layer.video_mlp->forward(layer.video_mlp_norm->forward(tokens)));
        }
        if (cfg.motion_branch) {
            const Tensor* msgs = cfg.ism ? &state_msgs : nullptr;
            auto att = layer.motion_attn->forward(states, msgs, collect);
            states = add(states, att.tokens);
            if (collect) state_msgs = add(state_msgs, att.messengers);
            states = add(states, layer.motion_mlp->forward(layer.motion_mlp_norm->forward(states)));
        }
        if (layer.passer) {
            std::tie(roi_msgs, state_msgs) = layer.passer->forward(roi_msgs, state_msgs);
        }
    }

    Out out;
    if (cfg.video_branch) {
        out.video_features = unfold_tokens(tokens, cfg.obs_frames, cfg.hidden_channels,
                                           cfg.grid_h(), cfg.grid_w());
    }
    if (cfg.motion_branch) out.motion_states = states;
    return out;
}

void Encoder::params(const std::string& prefix, nn::ParamList& out) const {
    if (pos_embed.defined()) out.push_back({prefix + ".pos", pos_embed});
    if (roi_tokenizer) roi_tokenizer->params(prefix + ".roi_init", out);
    if (state_tokenizer) state_tokenizer->params(prefix + ".state_init", out);
    for (size_t l = 0; l < layers.size(); ++l) {
        layers[l].params(prefix + ".layer" + std::to_string(l), out);
    }
}

} // namespace tavp
