#pragma once

#include <cstdint>
#include <span>

#include "tavp/tensor.hpp"

namespace tavp {

/// Center-format box (cx, cy, w, h).
struct Box {
    double cx = 0.0, cy = 0.0, w = 0.0, h = 0.0;
};

Box box_at(const Tensor& boxes, int64_t row);

// Frame metrics. Images are [C,H,W] (or any equal shapes for mse/mae),
// values in [0,1].

double mse(const Tensor& a, const Tensor& b);
double mae(const Tensor& a, const Tensor& b);

/// Windowed SSIM: 11x11 Gaussian window (sigma 1.5), C1 = (0.01)^2,
/// C2 = (0.03)^2 at dynamic range 1, averaged over valid window positions
/// and channels.
double ssim(const Tensor& a, const Tensor& b);

/// 10*log10(peak^2 / mse); identical images return +infinity.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

/// MSE restricted to the ground-truth box crop of each frame (integer
/// rounded, clamped, at least 1x1), averaged over the horizon.
/// Frames [T',C,H,W]; boxes [T',4] pixels.
double roi_mse(const Tensor& pred_frames, const Tensor& true_frames, const Tensor& boxes_px);

/// Intersection-over-union of two center-format boxes; 0 when disjoint or
/// when both boxes are degenerate (0/0 is defined as 0).
double iou(const Box& a, const Box& b);

/// Mean IoU over the horizon. Boxes [T',4].
double miou(const Tensor& pred_boxes, const Tensor& true_boxes);

/// Mean Euclidean distance between box centers over the horizon.
double ade(const Tensor& pred_boxes, const Tensor& true_boxes);

} // namespace tavp
