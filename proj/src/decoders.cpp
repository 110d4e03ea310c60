#include "tavp/decoders.hpp"

#include "tavp/common.hpp"
#include "tavp/embedding.hpp"
#include "tavp/encoder.hpp"

namespace tavp {

VideoDecoder::VideoDecoder(int64_t obs_frames, int64_t hidden_channels, int64_t pred_frames,
                           int64_t dec_channels, int64_t out_channels, Rng& rng)
    : bridge(obs_frames * hidden_channels, pred_frames * dec_channels, rng),
      up1(dec_channels, dec_channels, 4, 2, 1, rng),
      up2(dec_channels, dec_channels, 3, 1, 1, rng),
      up3(dec_channels, dec_channels, 4, 2, 1, rng),
      up4(dec_channels, dec_channels, 3, 1, 1, rng),
      norm1(dec_channels, std::min<int64_t>(8, dec_channels)),
      norm2(dec_channels, std::min<int64_t>(8, dec_channels)),
      norm3(dec_channels, std::min<int64_t>(8, dec_channels)),
      norm4(dec_channels, std::min<int64_t>(8, dec_channels)),
      to_pixels(dec_channels, out_channels, 1, 1, 0, rng),
      pred_frames(pred_frames),
      dec_channels(dec_channels) {}

Tensor VideoDecoder::forward(const Tensor& video_features) const {
    const int64_t h = video_features.size(2);
    const int64_t w = video_features.size(3);
    Tensor folded = fold_tokens(video_features);              // [(h*w), T*C_hid]
    Tensor bridged = bridge.forward(folded);                  // [(h*w), T'*C_dec]
    Tensor grid = unfold_tokens(bridged, pred_frames, dec_channels, h, w); // [T',C_dec,h,w]

    Tensor y = gelu(norm1.forward(up1.forward(grid)));
    y = gelu(norm2.forward(up2.forward(y)));
    y = gelu(norm3.forward(up3.forward(y)));
    y = gelu(norm4.forward(up4.forward(y)));
    return sigmoid(to_pixels.forward(y)); // [T', C, H, W]
}

void VideoDecoder::params(const std::string& prefix, nn::ParamList& out) const {
    bridge.params(prefix + ".bridge", out);
    up1.params(prefix + ".up1", out);
    norm1.params(prefix + ".norm1", out);
    up2.params(prefix + ".up2", out);
    norm2.params(prefix + ".norm2", out);
    up3.params(prefix + ".up3", out);
    norm3.params(prefix + ".norm3", out);
    up4.params(prefix + ".up4", out);
    norm4.params(prefix + ".norm4", out);
    to_pixels.params(prefix + ".out", out);
}

MotionDecoderLayer::MotionDecoderLayer(int64_t dim, int64_t heads, int64_t mlp_ratio, Rng& rng)
    : self_norm(dim), self_attn(dim, heads, rng), cross_norm(dim), cross_attn(dim, heads, rng),
      mlp_norm(dim), mlp(dim, mlp_ratio * dim, rng) {}

void MotionDecoderLayer::params(const std::string& prefix, nn::ParamList& out) const {
    self_norm.params(prefix + ".self_ln", out);
    self_attn.params(prefix + ".self", out);
    cross_norm.params(prefix + ".cross_ln", out);
    cross_attn.params(prefix + ".cross", out);
    mlp_norm.params(prefix + ".mlp_ln", out);
    mlp.params(prefix + ".mlp", out);
}

MotionDecoder::MotionDecoder(int64_t dim, int64_t heads, int64_t mlp_ratio, int64_t depth,
                             int64_t obs_frames, Rng& rng)
    : query_proj(4, dim, rng), memory_norm(dim), final_norm(dim), head(dim, 4, rng), width(dim),
      obs_frames(obs_frames) {
    layers.reserve(static_cast<size_t>(depth));
    for (int64_t l = 0; l < depth; ++l) layers.emplace_back(dim, heads, mlp_ratio, rng);
    // zero-initialized head: the first predictions coincide with the previous
    // box, keeping the residual parameterization anchored at the observation
    for (double& v : head.weight.mutable_data()) v = 0.0;
}

Tensor causal_mask(int64_t n) {
    std::vector<double> m(static_cast<size_t>(n * n), 0.0);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j <= i; ++j) m[static_cast<size_t>(i * n + j)] = 1.0;
    return Tensor::from_vector({n, n}, std::move(m));
}

Tensor MotionDecoder::decode(const Tensor& memory, const Tensor& query_boxes,
                             Tensor* attn_out) const {
    const int64_t n = query_boxes.size(0);
    Tensor pe = sinusoidal_encoding(n, width, obs_frames);
    Tensor q = add(query_proj.forward(query_boxes), pe);
    Tensor mem = memory_norm.forward(memory);
    Tensor mask = causal_mask(n);

    for (size_t li = 0; li < layers.size(); ++li) {
        const auto& layer = layers[li];
        Tensor normed = layer.self_norm.forward(q);
        Tensor* probs = (li + 1 == layers.size()) ? attn_out : nullptr;
        q = add(q, layer.self_attn.forward(normed, normed, &mask, probs));
        q = add(q, layer.cross_attn.forward(layer.cross_norm.forward(q), mem));
        q = add(q, layer.mlp.forward(layer.mlp_norm.forward(q)));
    }
    Tensor deltas = head.forward(final_norm.forward(q));
    Tensor boxes = add(query_boxes, deltas);
    // widths/heights are folded non-negative; unlike a relu clamp this keeps
    // a live gradient when a delta overshoots
    Tensor centers = slice(boxes, 1, 0, 2);
    Tensor sizes = abs(slice(boxes, 1, 2, 2));
    return concat({centers, sizes}, 1);
}

Tensor MotionDecoder::forward_teacher(const Tensor& memory, const Tensor& last_box,
                                      const Tensor& teacher) const {
    if (!teacher.defined()) {
        throw ValueError("motion decoder: teacher boxes are required for the teacher-forced pass");
    }
    if (teacher.dim() != 2 || teacher.size(1) != 4) {
        throw ShapeError("teacher boxes must be [T',4], got " + shape_str(teacher.shape()));
    }
    const int64_t steps = teacher.size(0);
    Tensor queries = steps == 1
                         ? last_box
                         : concat({last_box, slice(teacher, 0, 0, steps - 1)}, 0);
    return decode(memory, queries);
}

Tensor MotionDecoder::forward_autoregressive(const Tensor& memory, const Tensor& last_box,
                                             int64_t steps) const {
    Tensor queries = last_box; // [1,4]
    Tensor preds;
    for (int64_t s = 0; s < steps; ++s) {
        Tensor boxes = decode(memory, queries);
        Tensor latest = slice(boxes, 0, boxes.size(0) - 1, 1);
        preds = preds.defined() ? concat({preds, latest}, 0) : latest;
        if (s + 1 < steps) queries = concat({queries, latest}, 0);
    }
    return preds; // [steps, 4]
}

void MotionDecoder::params(const std::string& prefix, nn::ParamList& out) const {
    query_proj.params(prefix + ".query", out);
    memory_norm.params(prefix + ".mem_ln", out);
    for (size_t l = 0; l < layers.size(); ++l) {
        layers[l].params(prefix + ".layer" + std::to_string(l), out);
    }
    final_norm.params(prefix + ".final_ln", out);
    head.params(prefix + ".head", out);
}

} // namespace tavp
