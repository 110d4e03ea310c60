#include "tavp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tavp/common.hpp"

namespace tavp {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(who) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
}

constexpr int64_t kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01; // (k1 * L)^2 at L = 1
constexpr double kSsimC2 = 0.03 * 0.03;

const std::vector<double>& ssim_window() {
    static const std::vector<double> win = [] {
        std::vector<double> w(kSsimWindow * kSsimWindow);
        const double half = (kSsimWindow - 1) / 2.0;
        double sum = 0.0;
        for (int64_t y = 0; y < kSsimWindow; ++y) {
            for (int64_t x = 0; x < kSsimWindow; ++x) {
                double dy = y - half, dx = x - half;
                double v = std::exp(-(dx * dx + dy * dy) / (2.0 * kSsimSigma * kSsimSigma));
                w[static_cast<size_t>(y * kSsimWindow + x)] = v;
                sum += v;
            }
        }
        for (double& v : w) v /= sum;
        return w;
    }();
    return win;
}

} // namespace

Box box_at(const Tensor& boxes, int64_t row) {
    return Box{boxes.at({row, 0}), boxes.at({row, 1}), boxes.at({row, 2}), boxes.at({row, 3})};
}

double mse(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mse");
    auto da = a.data();
    auto db = b.data();
    double acc = 0.0;
    for (size_t i = 0; i < da.size(); ++i) {
        double d = da[i] - db[i];
        acc += d * d;
    }
    return acc / static_cast<double>(da.size());
}

double mae(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mae");
    auto da = a.data();
    auto db = b.data();
    double acc = 0.0;
    for (size_t i = 0; i < da.size(); ++i) acc += std::fabs(da[i] - db[i]);
    return acc / static_cast<double>(da.size());
}

double ssim(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "ssim");
    if (a.dim() != 3) throw ShapeError("ssim expects [C,H,W], got " + shape_str(a.shape()));
    const int64_t C = a.size(0), H = a.size(1), W = a.size(2);
    if (H < kSsimWindow || W < kSsimWindow) {
        throw ShapeError("ssim: image " + shape_str(a.shape()) + " smaller than the 11x11 window");
    }
    const auto& win = ssim_window();
    const double* pa = a.data().data();
    const double* pb = b.data().data();

    double total = 0.0;
    int64_t count = 0;
    for (int64_t c = 0; c < C; ++c) {
        const double* ia = pa + c * H * W;
        const double* ib = pb + c * H * W;
        for (int64_t y = 0; y + kSsimWindow <= H; ++y) {
            for (int64_t x = 0; x + kSsimWindow <= W; ++x) {
                double mu_a = 0.0, mu_b = 0.0;
                for (int64_t wy = 0; wy < kSsimWindow; ++wy) {
                    const double* ra = ia + (y + wy) * W + x;
                    const double* rb = ib + (y + wy) * W + x;
                    const double* wrow = win.data() + wy * kSsimWindow;
                    for (int64_t wx = 0; wx < kSsimWindow; ++wx) {
                        mu_a += wrow[wx] * ra[wx];
                        mu_b += wrow[wx] * rb[wx];
                    }
                }
                double var_a = 0.0, var_b = 0.0, cov = 0.0;
                for (int64_t wy = 0; wy < kSsimWindow; ++wy) {
                    const double* ra = ia + (y + wy) * W + x;
                    const double* rb = ib + (y + wy) * W + x;
                    const double* wrow = win.data() + wy * kSsimWindow;
                    for (int64_t wx = 0; wx < kSsimWindow; ++wx) {
                        double da = ra[wx] - mu_a;
                        double db = rb[wx] - mu_b;
                        var_a += wrow[wx] * da * da;
                        var_b += wrow[wx] * db * db;
                        cov += wrow[wx] * da * db;
                    }
                }
                double num = (2.0 * mu_a * mu_b + kSsimC1) * (2.0 * cov + kSsimC2);
                double den = (mu_a * mu_a + mu_b * mu_b + kSsimC1) * (var_a + var_b + kSsimC2);
                total += num / den;
                ++count;
            }
        }
    }
    return total / static_cast<double>(count);
}

double psnr(const Tensor& a, const Tensor& b, double peak) {
    double err = mse(a, b);
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / err);
}

double roi_mse(const Tensor& pred_frames, const Tensor& true_frames, const Tensor& boxes_px) {
    require_same_shape(pred_frames, true_frames, "roi_mse");
    const int64_t steps = pred_frames.size(0);
    const int64_t C = pred_frames.size(1);
    const int64_t H = pred_frames.size(2);
    const int64_t W = pred_frames.size(3);
    if (boxes_px.size(0) != steps) {
        throw ShapeError("roi_mse: " + std::to_string(boxes_px.size(0)) + " boxes for " +
                         std::to_string(steps) + " frames");
    }
    const double* pp = pred_frames.data().data();
    const double* pt = true_frames.data().data();

    double acc = 0.0;
    for (int64_t i = 0; i < steps; ++i) {
        Box box = box_at(boxes_px, i);
        int64_t x0 = std::clamp<int64_t>(std::llround(box.cx - box.w / 2.0), 0, W - 1);
        int64_t x1 = std::clamp<int64_t>(std::llround(box.cx + box.w / 2.0), x0 + 1, W);
        int64_t y0 = std::clamp<int64_t>(std::llround(box.cy - box.h / 2.0), 0, H - 1);
        int64_t y1 = std::clamp<int64_t>(std::llround(box.cy + box.h / 2.0), y0 + 1, H);

        double frame_acc = 0.0;
        for (int64_t c = 0; c < C; ++c) {
            for (int64_t y = y0; y < y1; ++y) {
                const double* rp = pp + ((i * C + c) * H + y) * W;
                const double* rt = pt + ((i * C + c) * H + y) * W;
                for (int64_t x = x0; x < x1; ++x) {
                    double d = rp[x] - rt[x];
                    frame_acc += d * d;
                }
            }
        }
        acc += frame_acc / static_cast<double>(C * (y1 - y0) * (x1 - x0));
    }
    return acc / static_cast<double>(steps);
}

double iou(const Box& a, const Box& b) {
    if (a.w < 0.0 || a.h < 0.0 || b.w < 0.0 || b.h < 0.0) {
        throw ValueError("iou: negative box extent");
    }
    double ax0 = a.cx - a.w / 2.0, ax1 = a.cx + a.w / 2.0;
    double ay0 = a.cy - a.h / 2.0, ay1 = a.cy + a.h / 2.0;
    double bx0 = b.cx - b.w / 2.0, bx1 = b.cx + b.w / 2.0;
    double by0 = b.cy - b.h / 2.0, by1 = b.cy + b.h / 2.0;

    double ix = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
    double iy = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
    double inter = ix * iy;
    double uni = a.w * a.h + b.w * b.h - inter;
    if (uni <= 0.0) return 0.0; // includes the 0/0 degenerate pair
    return inter / uni;
}

double miou(const Tensor& pred_boxes, const Tensor& true_boxes) {
    require_same_shape(pred_boxes, true_boxes, "miou");
    const int64_t steps = pred_boxes.size(0);
    double acc = 0.0;
    for (int64_t i = 0; i < steps; ++i) acc += iou(box_at(pred_boxes, i), box_at(true_boxes, i));
    return acc / static_cast<double>(steps);
}

double ade(const Tensor& pred_boxes, const Tensor& true_boxes) {
    require_same_shape(pred_boxes, true_boxes, "ade");
    const int64_t steps = pred_boxes.size(0);
    double acc = 0.0;
    for (int64_t i = 0; i < steps; ++i) {
        double dx = pred_boxes.at({i, 0}) - true_boxes.at({i, 0});
        double dy = pred_boxes.at({i, 1}) - true_boxes.at({i, 1});
        acc += std::sqrt(dx * dx + dy * dy);
    }
    return acc / static_cast<double>(steps);
}

} // namespace tavp
