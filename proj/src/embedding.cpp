#include "tavp/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "tavp/common.hpp"

namespace tavp {

SpatialEmbedder::SpatialEmbedder(int64_t in_channels, int64_t hidden_channels, Rng& rng)
    : conv1(in_channels, hidden_channels, 3, 2, 1, rng),
      conv2(hidden_channels, hidden_channels, 3, 1, 1, rng),
      conv3(hidden_channels, hidden_channels, 3, 2, 1, rng),
      conv4(hidden_channels, hidden_channels, 3, 1, 1, rng),
      norm1(hidden_channels, std::min<int64_t>(8, hidden_channels)),
      norm2(hidden_channels, std::min<int64_t>(8, hidden_channels)),
      norm3(hidden_channels, std::min<int64_t>(8, hidden_channels)),
      norm4(hidden_channels, std::min<int64_t>(8, hidden_channels)) {}

Tensor SpatialEmbedder::forward(const Tensor& frames) const {
    if (frames.dim() != 4) {
        throw ShapeError("spatial embedder expects [T,C,H,W], got " + shape_str(frames.shape()));
    }
    if (frames.size(2) % 4 != 0 || frames.size(3) % 4 != 0) {
        throw ConfigError("frame size " + shape_str(frames.shape()) + " is not divisible by 4");
    }
    Tensor z = gelu(norm1.forward(conv1.forward(frames)));
    z = gelu(norm2.forward(conv2.forward(z)));
    z = gelu(norm3.forward(conv3.forward(z)));
    z = gelu(norm4.forward(conv4.forward(z)));
    return z;
}

void SpatialEmbedder::params(const std::string& prefix, nn::ParamList& out) const {
    conv1.params(prefix + ".conv1", out);
    norm1.params(prefix + ".norm1", out);
    conv2.params(prefix + ".conv2", out);
    norm2.params(prefix + ".norm2", out);
    conv3.params(prefix + ".conv3", out);
    norm3.params(prefix + ".norm3", out);
    conv4.params(prefix + ".conv4", out);
    norm4.params(prefix + ".norm4", out);
}

Tensor sinusoidal_encoding(int64_t steps, int64_t dim, int64_t first_pos) {
    std::vector<double> pe(static_cast<size_t>(steps * dim));
    for (int64_t t = 0; t < steps; ++t) {
        double pos = static_cast<double>(t + first_pos);
        for (int64_t i = 0; i < dim; ++i) {
            double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(dim);
            double angle = pos / std::pow(10000.0, exponent);
            pe[static_cast<size_t>(t * dim + i)] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return Tensor::from_vector({steps, dim}, std::move(pe));
}

Tensor normalize_boxes(const Tensor& boxes_px, int64_t frame_w, int64_t frame_h) {
    if (boxes_px.dim() != 2 || boxes_px.size(1) != 4) {
        throw ShapeError("boxes must be [T,4], got " + shape_str(boxes_px.shape()));
    }
    Tensor scale = Tensor::from_vector(
        {4}, {1.0 / static_cast<double>(frame_w), 1.0 / static_cast<double>(frame_h),
              1.0 / static_cast<double>(frame_w), 1.0 / static_cast<double>(frame_h)});
    return mul(boxes_px, scale);
}

Tensor denormalize_boxes(const Tensor& boxes_norm, int64_t frame_w, int64_t frame_h) {
    if (boxes_norm.dim() != 2 || boxes_norm.size(1) != 4) {
        throw ShapeError("boxes must be [T,4], got " + shape_str(boxes_norm.shape()));
    }
    Tensor scale = Tensor::from_vector(
        {4}, {static_cast<double>(frame_w), static_cast<double>(frame_h),
              static_cast<double>(frame_w), static_cast<double>(frame_h)});
    return mul(boxes_norm, scale);
}

BoxEmbedder::BoxEmbedder(int64_t width, Rng& rng) : proj(4, width, rng), width(width) {}

Tensor BoxEmbedder::forward(const Tensor& boxes_norm, int64_t first_pos) const {
    if (boxes_norm.dim() != 2 || boxes_norm.size(1) != 4) {
        throw ShapeError("box embedder expects [T,4], got " + shape_str(boxes_norm.shape()));
    }
    for (double v : boxes_norm.data()) {
        if (!std::isfinite(v)) throw ValueError("box embedder: non-finite box coordinate");
    }
    Tensor pe = sinusoidal_encoding(boxes_norm.size(0), width, first_pos);
    return add(proj.forward(boxes_norm), pe);
}

void BoxEmbedder::params(const std::string& prefix, nn::ParamList& out) const {
    proj.params(prefix + ".proj", out);
}

} // namespace tavp
