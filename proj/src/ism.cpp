#include "tavp/ism.hpp"

#include <algorithm>
#include <cmath>

#include "tavp/common.hpp"

namespace tavp {

CellRange roi_cell_range(double cx, double cy, double w, double h, int64_t grid_h, int64_t grid_w) {
    double x0 = std::clamp(cx - w / 2.0, 0.0, static_cast<double>(grid_w));
    double x1 = std::clamp(cx + w / 2.0, 0.0, static_cast<double>(grid_w));
    double y0 = std::clamp(cy - h / 2.0, 0.0, static_cast<double>(grid_h));
    double y1 = std::clamp(cy + h / 2.0, 0.0, static_cast<double>(grid_h));

    auto span = [](double lo, double hi, int64_t extent) {
        int64_t first = -1, count = 0;
        for (int64_t c = 0; c < extent; ++c) {
            double center = static_cast<double>(c) + 0.5;
            if (center > lo && center < hi) {
                if (first < 0) first = c;
                ++count;
            }
        }
        return std::pair<int64_t, int64_t>(first, count);
    };

    auto [c0, nc] = span(x0, x1, grid_w);
    auto [r0, nr] = span(y0, y1, grid_h);
    if (nc == 0 || nr == 0) {
        // degenerate box: pool the single cell containing the box center
        int64_t cc = std::clamp<int64_t>(static_cast<int64_t>(std::floor(cx)), 0, grid_w - 1);
        int64_t rc = std::clamp<int64_t>(static_cast<int64_t>(std::floor(cy)), 0, grid_h - 1);
        return CellRange{rc, 1, cc, 1};
    }
    return CellRange{r0, nr, c0, nc};
}

RoiTokenizer::RoiTokenizer(int64_t count, int64_t width, RoiInit mode, Rng& rng)
    : mode(mode), count(count) {
    if (mode == RoiInit::Roi) {
        maps.reserve(static_cast<size_t>(count));
        for (int64_t m = 0; m < count; ++m) maps.emplace_back(width, width, rng);
    } else {
        random_tokens = Tensor::randn({count, width}, rng, 0.02, true);
    }
}

Tensor RoiTokenizer::forward(const Tensor& features, const Tensor& boxes_px, int64_t downsample) const {
    if (mode == RoiInit::Random) return random_tokens;

    const int64_t T = features.size(0);
    const int64_t grid_h = features.size(2);
    const int64_t grid_w = features.size(3);
    if (boxes_px.size(0) != T) {
        throw ShapeError("roi tokens: " + shape_str(boxes_px.shape()) + " boxes for " +
                         std::to_string(T) + " frames");
    }
    const double inv = 1.0 / static_cast<double>(downsample);

    std::vector<Tensor> pooled;
    pooled.reserve(static_cast<size_t>(T));
    for (int64_t t = 0; t < T; ++t) {
        CellRange r = roi_cell_range(boxes_px.at({t, 0}) * inv, boxes_px.at({t, 1}) * inv,
                                     boxes_px.at({t, 2}) * inv, boxes_px.at({t, 3}) * inv, grid_h,
                                     grid_w);
        Tensor cells = slice(slice(slice(features, 0, t, 1), 2, r.row0, r.rows), 3, r.col0, r.cols);
        Tensor vec = mean_axis(mean_axis(cells, 3), 2); // [1, C_hid]
        pooled.push_back(vec);
    }
    Tensor flat = reshape(concat(pooled, 1), {1, T * features.size(1)}); // [1, C']

    std::vector<Tensor> tokens;
    tokens.reserve(maps.size());
    for (const auto& m : maps) tokens.push_back(m.forward(flat));
    return concat(tokens, 0); // [M, C']
}

void RoiTokenizer::params(const std::string& prefix, nn::ParamList& out) const {
    if (mode == RoiInit::Roi) {
        for (size_t m = 0; m < maps.size(); ++m) {
            maps[m].params(prefix + ".fc" + std::to_string(m), out);
        }
    } else {
        out.push_back({prefix + ".tokens", random_tokens});
    }
}

StateTokenizer::StateTokenizer(int64_t count, int64_t obs_steps, int64_t width, StateInit mode,
                               Rng& rng)
    : mode(mode), count(count) {
    if (mode == StateInit::States) {
        maps.reserve(static_cast<size_t>(count));
        for (int64_t n = 0; n < count; ++n) {
            maps.push_back(TwoLayer{nn::Linear(4 * obs_steps, width, rng),
                                    nn::Linear(width, width, rng)});
        }
    } else {
        random_tokens = Tensor::randn({count, width}, rng, 0.02, true);
    }
}

Tensor StateTokenizer::forward(const Tensor& boxes_norm) const {
    if (mode == StateInit::Random) return random_tokens;
    Tensor flat = reshape(boxes_norm, {1, boxes_norm.numel()});
    std::vector<Tensor> tokens;
    tokens.reserve(maps.size());
    for (const auto& m : maps) tokens.push_back(m.out.forward(gelu(m.in.forward(flat))));
    return concat(tokens, 0); // [N, C']
}

void StateTokenizer::params(const std::string& prefix, nn::ParamList& out) const {
    if (mode == StateInit::States) {
        for (size_t n = 0; n < maps.size(); ++n) {
            maps[n].in.params(prefix + ".fc" + std::to_string(n) + "a", out);
            maps[n].out.params(prefix + ".fc" + std::to_string(n) + "b", out);
        }
    } else {
        out.push_back({prefix + ".tokens", random_tokens});
    }
}

MessagePasser::MessagePasser(int64_t width, int64_t token_count, Rng& rng)
    : norm(width), mix_in(token_count, 4 * token_count, rng),
      mix_out(4 * token_count, token_count, rng) {}

std::pair<Tensor, Tensor> MessagePasser::forward(const Tensor& roi_tokens,
                                                 const Tensor& state_tokens) const {
    const bool has_roi = roi_tokens.defined();
    const bool has_state = state_tokens.defined();
    if (!has_roi && !has_state) return {roi_tokens, state_tokens};

    Tensor joint;
    if (has_roi && has_state) {
        joint = concat({roi_tokens, state_tokens}, 0);
    } else {
        joint = has_roi ? roi_tokens : state_tokens;
    }
    Tensor channels_major = transpose(norm.forward(joint), 0, 1); // [C', K]
    Tensor mixed_t = mix_out.forward(gelu(mix_in.forward(channels_major)));
    Tensor mixed = add(joint, transpose(mixed_t, 0, 1));
    if (!has_roi) return {roi_tokens, mixed};
    if (!has_state) return {mixed, state_tokens};
    const int64_t m = roi_tokens.size(0);
    const int64_t n = state_tokens.size(0);
    return {slice(mixed, 0, 0, m), slice(mixed, 0, m, n)};
}

void MessagePasser::params(const std::string& prefix, nn::ParamList& out) const {
    norm.params(prefix + ".ln", out);
    mix_in.params(prefix + ".mix1", out);
    mix_out.params(prefix + ".mix2", out);
}

} // namespace tavp
