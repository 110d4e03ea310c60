#include "tavp/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tavp/common.hpp"

namespace tavp {

namespace {

// Skips whitespace and '#' comment lines in a PNM header.
int next_header_int(std::istream& in, const std::filesystem::path& path) {
    while (true) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value = 0;
    if (!(in >> value)) throw IoError("malformed PNM header in " + path.string());
    return value;
}

} // namespace

Image read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image " + path.string());
    char p = 0, kind = 0;
    in >> p >> kind;
    if (p != 'P' || (kind != '2' && kind != '3' && kind != '5' && kind != '6')) {
        throw IoError("unsupported image format in " + path.string() +
                      " (PNM P2/P3/P5/P6 expected)");
    }
    const bool rgb = kind == '3' || kind == '6';
    const bool binary = kind == '5' || kind == '6';
    const int64_t w = next_header_int(in, path);
    const int64_t h = next_header_int(in, path);
    const int maxval = next_header_int(in, path);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
        throw IoError("unsupported PNM geometry/maxval in " + path.string());
    }

    Image img;
    img.channels = rgb ? 3 : 1;
    img.height = h;
    img.width = w;
    img.pixels.resize(static_cast<size_t>(img.channels * h * w));

    const int64_t count = img.channels * h * w;
    const double scale = 1.0 / static_cast<double>(maxval);
    if (binary) {
        in.get(); // single whitespace after maxval
        std::vector<unsigned char> raw(static_cast<size_t>(count));
        in.read(reinterpret_cast<char*>(raw.data()), count);
        if (in.gcount() != count) throw IoError("truncated image data in " + path.string());
        // interleaved -> planar
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x)
                for (int64_t c = 0; c < img.channels; ++c) {
                    img.at(c, y, x) =
                        raw[static_cast<size_t>((y * w + x) * img.channels + c)] * scale;
                }
    } else {
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x)
                for (int64_t c = 0; c < img.channels; ++c) {
                    int v = 0;
                    if (!(in >> v)) throw IoError("truncated image data in " + path.string());
                    img.at(c, y, x) = v * scale;
                }
    }
    return img;
}

void write_pnm(const std::filesystem::path& path, const Image& img) {
    if (img.channels != 1 && img.channels != 3) {
        throw IoError("write_pnm supports 1 or 3 channels, got " + std::to_string(img.channels));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image " + path.string());
    out << (img.channels == 1 ? "P5" : "P6") << "\n"
        << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> raw(static_cast<size_t>(img.channels * img.height * img.width));
    for (int64_t y = 0; y < img.height; ++y)
        for (int64_t x = 0; x < img.width; ++x)
            for (int64_t c = 0; c < img.channels; ++c) {
                double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
                raw[static_cast<size_t>((y * img.width + x) * img.channels + c)] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

Image resize_bilinear(const Image& img, int64_t new_h, int64_t new_w) {
    if (new_h == img.height && new_w == img.width) return img;
    Image out;
    out.channels = img.channels;
    out.height = new_h;
    out.width = new_w;
    out.pixels.resize(static_cast<size_t>(img.channels * new_h * new_w));
    const double sy = static_cast<double>(img.height) / static_cast<double>(new_h);
    const double sx = static_cast<double>(img.width) / static_cast<double>(new_w);
    for (int64_t y = 0; y < new_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int64_t y0 = std::clamp<int64_t>(static_cast<int64_t>(std::floor(fy)), 0, img.height - 1);
        int64_t y1 = std::min<int64_t>(y0 + 1, img.height - 1);
        double wy = std::clamp(fy - static_cast<double>(y0), 0.0, 1.0);
        for (int64_t x = 0; x < new_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int64_t x0 = std::clamp<int64_t>(static_cast<int64_t>(std::floor(fx)), 0, img.width - 1);
            int64_t x1 = std::min<int64_t>(x0 + 1, img.width - 1);
            double wx = std::clamp(fx - static_cast<double>(x0), 0.0, 1.0);
            for (int64_t c = 0; c < img.channels; ++c) {
                double top = img.at(c, y0, x0) * (1 - wx) + img.at(c, y0, x1) * wx;
                double bot = img.at(c, y1, x0) * (1 - wx) + img.at(c, y1, x1) * wx;
                out.at(c, y, x) = top * (1 - wy) + bot * wy;
            }
        }
    }
    return out;
}

void draw_box_outline(Image& img, const Box& box_px) {
    int64_t x0 = std::clamp<int64_t>(std::llround(box_px.cx - box_px.w / 2), 0, img.width - 1);
    int64_t x1 = std::clamp<int64_t>(std::llround(box_px.cx + box_px.w / 2), x0, img.width - 1);
    int64_t y0 = std::clamp<int64_t>(std::llround(box_px.cy - box_px.h / 2), 0, img.height - 1);
    int64_t y1 = std::clamp<int64_t>(std::llround(box_px.cy + box_px.h / 2), y0, img.height - 1);

    auto mark = [&](int64_t y, int64_t x) {
        if (img.channels == 1) {
            img.at(0, y, x) = img.at(0, y, x) < 0.5 ? 0.95 : 0.05;
        } else {
            img.at(0, y, x) = img.at(0, y, x) < 0.5 ? 1.0 : 0.25;
            img.at(1, y, x) = 0.0;
            img.at(2, y, x) = 0.0;
        }
    };
    for (int64_t x = x0; x <= x1; ++x) {
        mark(y0, x);
        mark(y1, x);
    }
    for (int64_t y = y0; y <= y1; ++y) {
        mark(y, x0);
        mark(y, x1);
    }
}

Tensor image_to_tensor(const Image& img) {
    return Tensor::from_vector({img.channels, img.height, img.width}, img.pixels);
}

Image tensor_to_image(const Tensor& chw) {
    if (chw.dim() != 3) throw ShapeError("tensor_to_image expects [C,H,W], got " + shape_str(chw.shape()));
    Image img;
    img.channels = chw.size(0);
    img.height = chw.size(1);
    img.width = chw.size(2);
    img.pixels.assign(chw.data().begin(), chw.data().end());
    return img;
}

Tensor stack_frames(const std::vector<Image>& frames) {
    if (frames.empty()) throw ValueError("stack_frames: no frames");
    const auto& f0 = frames[0];
    std::vector<double> data;
    data.reserve(frames.size() * f0.pixels.size());
    for (const auto& f : frames) {
        if (f.channels != f0.channels || f.height != f0.height || f.width != f0.width) {
            throw ShapeError("stack_frames: inconsistent frame shapes");
        }
        data.insert(data.end(), f.pixels.begin(), f.pixels.end());
    }
    return Tensor::from_vector(
        {static_cast<int64_t>(frames.size()), f0.channels, f0.height, f0.width}, std::move(data));
}

} // namespace tavp
