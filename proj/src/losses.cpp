#include "tavp/losses.hpp"

#include <cmath>

#include "tavp/common.hpp"

namespace tavp {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(who) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
}

} // namespace

Tensor video_loss(const Tensor& pred, const Tensor& truth) {
    require_same_shape(pred, truth, "video_loss");
    Tensor diff = sub(pred, truth);
    return mean_all(mul(diff, diff));
}

Tensor motion_loss(const Tensor& pred, const Tensor& truth) {
    require_same_shape(pred, truth, "motion_loss");
    return mean_all(smooth_l1(pred, truth));
}

Tensor gaussian_weight_field(double cx, double cy, double w, double h, int64_t height,
                             int64_t width, double sigma_x, double sigma_y) {
    std::vector<double> field(static_cast<size_t>(height * width));
    const double inv2sx = 1.0 / (2.0 * sigma_x * sigma_x);
    const double inv2sy = 1.0 / (2.0 * sigma_y * sigma_y);
    for (int64_t y = 0; y < height; ++y) {
        const double dy = static_cast<double>(y) - cy;
        for (int64_t x = 0; x < width; ++x) {
            const double dx = static_cast<double>(x) - cx;
            double v;
            if (std::fabs(dx) < w / 2.0 && std::fabs(dy) < h / 2.0) {
                v = 1.0;
            } else {
                v = std::exp(-(dx * dx * inv2sx + dy * dy * inv2sy));
            }
            field[static_cast<size_t>(y * width + x)] = v;
        }
    }
    return Tensor::from_vector({height, width}, std::move(field));
}

Tensor tsgl(const Tensor& pred_frames, const Tensor& true_frames, const Tensor& pred_boxes_px,
            const Tensor& true_boxes_px, double sigma_x, double sigma_y) {
    require_same_shape(pred_frames, true_frames, "tsgl");
    require_same_shape(pred_boxes_px, true_boxes_px, "tsgl boxes");
    const int64_t steps = pred_frames.size(0);
    if (pred_boxes_px.size(0) != steps) {
        throw ShapeError("tsgl: " + std::to_string(pred_boxes_px.size(0)) + " boxes for " +
                         std::to_string(steps) + " frames");
    }
    const int64_t height = pred_frames.size(2);
    const int64_t width = pred_frames.size(3);

    Tensor acc;
    for (int64_t i = 0; i < steps; ++i) {
        Tensor wp = gaussian_weight_field(pred_boxes_px.at({i, 0}), pred_boxes_px.at({i, 1}),
                                          pred_boxes_px.at({i, 2}), pred_boxes_px.at({i, 3}),
                                          height, width, sigma_x, sigma_y);
        Tensor wg = gaussian_weight_field(true_boxes_px.at({i, 0}), true_boxes_px.at({i, 1}),
                                          true_boxes_px.at({i, 2}), true_boxes_px.at({i, 3}),
                                          height, width, sigma_x, sigma_y);
        Tensor diff = sub(mul(slice(pred_frames, 0, i, 1), wp), mul(slice(true_frames, 0, i, 1), wg));
        Tensor frame_loss = mean_all(mul(diff, diff));
        acc = acc.defined() ? add(acc, frame_loss) : frame_loss;
    }
    return mul_scalar(acc, 1.0 / static_cast<double>(steps));
}

Tensor total_loss(const Tensor& video, const Tensor& motion, const Tensor& gaussian,
                  double lambda1, double lambda2) {
    if (lambda1 < 0.0 || lambda2 < 0.0) throw ValueError("loss weights must be non-negative");
    Tensor total = video.defined() ? video : Tensor::zeros({1});
    if (motion.defined()) total = add(total, mul_scalar(motion, lambda1));
    if (gaussian.defined()) total = add(total, mul_scalar(gaussian, lambda2));
    return total;
}

} // namespace tavp
