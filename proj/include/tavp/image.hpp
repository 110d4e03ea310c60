#pragma once

#include <filesystem>
#include <vector>

#include "tavp/metrics.hpp"
#include "tavp/tensor.hpp"

namespace tavp {

/// Plain pixel buffer, [C,H,W] row-major, values in [0,1].
struct Image {
    int64_t channels = 0;
    int64_t height = 0;
    int64_t width = 0;
    std::vector<double> pixels;

    double at(int64_t c, int64_t y, int64_t x) const {
        return pixels[static_cast<size_t>((c * height + y) * width + x)];
    }
    double& at(int64_t c, int64_t y, int64_t x) {
        return pixels[static_cast<size_t>((c * height + y) * width + x)];
    }
};

/// Reads an 8-bit PNM image (P2/P5 grayscale, P3/P6 RGB) into [0,1].
Image read_pnm(const std::filesystem::path& path);

/// Writes P5 (1 channel) or P6 (3 channels), 8-bit.
void write_pnm(const std::filesystem::path& path, const Image& img);

Image resize_bilinear(const Image& img, int64_t new_h, int64_t new_w);

/// Marks the box perimeter so every touched pixel provably differs from the
/// original (grayscale flips around mid-level; RGB flips the red channel and
/// clears green/blue).
void draw_box_outline(Image& img, const Box& box_px);

Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& chw);

/// Stacks T images of identical shape into [T,C,H,W].
Tensor stack_frames(const std::vector<Image>& frames);

} // namespace tavp
