#pragma once

#include "tavp/tensor.hpp"

namespace tavp {

/// Mean squared error over all elements (per-pixel mean, averaged over frames).
Tensor video_loss(const Tensor& pred, const Tensor& truth);

/// Smooth-L1 (threshold 1) averaged over steps and coordinates.
Tensor motion_loss(const Tensor& pred, const Tensor& truth);

/// Gaussian weight field for one frame: exactly 1 inside the open box
/// |x-cx| < w/2, |y-cy| < h/2, and exp(-((x-cx)^2/sx^2 + (y-cy)^2/sy^2)/2)
/// outside, evaluated at integer pixel coordinates. Constant (no gradient).
/// Box in pixel coordinates.
Tensor gaussian_weight_field(double cx, double cy, double w, double h, int64_t height,
                             int64_t width, double sigma_x, double sigma_y);

/// Target-sensitive Gaussian loss: per future frame, weight prediction by the
/// predicted box's field and ground truth by the true box's field, then mean
/// squared difference, averaged over the horizon. The weight fields are
/// constants: no gradient flows into the predicted boxes through them.
/// Frames: [T',C,H,W]; boxes: [T',4] in pixels.
Tensor tsgl(const Tensor& pred_frames, const Tensor& true_frames, const Tensor& pred_boxes_px,
            const Tensor& true_boxes_px, double sigma_x, double sigma_y);

/// L = L_video + lambda1 * L_motion + lambda2 * L_gaussian. Undefined parts
/// (disabled branches) are treated as zero.
Tensor total_loss(const Tensor& video, const Tensor& motion, const Tensor& gaussian,
                  double lambda1, double lambda2);

} // namespace tavp
