#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support/helpers.hpp"
#include "tavp/common.hpp"
#include "tavp/metrics.hpp"

using namespace tavp;
using namespace tavp::testing;

namespace {

// Rasterized area-counting IoU. Boxes with coordinates on a lattice aligned
// to `step` are counted exactly (sample points are cell centers).
double raster_iou(const Box& a, const Box& b, double step) {
    double lo_x = std::min(a.cx - a.w / 2, b.cx - b.w / 2) - step;
    double hi_x = std::max(a.cx + a.w / 2, b.cx + b.w / 2) + step;
    double lo_y = std::min(a.cy - a.h / 2, b.cy - b.h / 2) - step;
    double hi_y = std::max(a.cy + a.h / 2, b.cy + b.h / 2) + step;
    auto inside = [](const Box& box, double x, double y) {
        return x > box.cx - box.w / 2 && x < box.cx + box.w / 2 && y > box.cy - box.h / 2 &&
               y < box.cy + box.h / 2;
    };
    int64_t in_a = 0, in_b = 0, in_both = 0;
    for (double y = lo_y + step / 2; y < hi_y; y += step) {
        for (double x = lo_x + step / 2; x < hi_x; x += step) {
            bool ia = inside(a, x, y);
            bool ib = inside(b, x, y);
            in_a += ia;
            in_b += ib;
            in_both += ia && ib;
        }
    }
    int64_t uni = in_a + in_b - in_both;
    return uni == 0 ? 0.0 : static_cast<double>(in_both) / static_cast<double>(uni);
}

} // namespace

TEST_CASE("ssim: self-similarity, collapsed luminance, symmetry") {
    Rng rng(1);
    Tensor a = Tensor::rand_uniform({1, 16, 16}, rng, 0.0, 1.0);
    CHECK(std::fabs(ssim(a, a) - 1.0) <= 1e-9);

    Tensor zero = Tensor::zeros({1, 16, 16});
    Tensor one = Tensor::full({1, 16, 16}, 1.0);
    CHECK(ssim(zero, one) < 0.05);

    Tensor b = Tensor::rand_uniform({1, 16, 16}, rng, 0.0, 1.0);
    CHECK(std::fabs(ssim(a, b) - ssim(b, a)) <= 1e-12);
}

TEST_CASE("ssim rejects images smaller than the window") {
    Tensor tiny = Tensor::zeros({1, 8, 8});
    CHECK_THROWS_AS(ssim(tiny, tiny), ShapeError);
}

TEST_CASE("ssim decreases as noise grows") {
    Rng rng(2);
    Tensor a = Tensor::rand_uniform({1, 24, 24}, rng, 0.2, 0.8);
    auto noisy = [&](double amp) {
        auto v = to_vec(a);
        Rng noise(7);
        for (double& x : v) x = std::clamp(x + noise.uniform(-amp, amp), 0.0, 1.0);
        return Tensor::from_vector({1, 24, 24}, v);
    };
    double s_small = ssim(a, noisy(0.05));
    double s_large = ssim(a, noisy(0.4));
    CHECK(s_small > s_large);
    CHECK(s_small > 0.8);
}

TEST_CASE("psnr: log arithmetic, infinity sentinel, mse composition") {
    Rng rng(3);
    Tensor a = Tensor::rand_uniform({1, 4, 4}, rng, 0.2, 0.8);
    Tensor b = add_scalar(a, 0.1); // mse = 0.01
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(std::isinf(psnr(a, a)));

    for (int inst = 0; inst < 20; ++inst) {
        Tensor x = Tensor::rand_uniform({2, 5, 5}, rng, 0.0, 1.0);
        Tensor y = Tensor::rand_uniform({2, 5, 5}, rng, 0.0, 1.0);
        double expect = 10.0 * std::log10(1.0 / mse(x, y));
        CHECK(std::fabs(psnr(x, y) - expect) <= 1e-9);
    }
}

TEST_CASE("psnr is monotone decreasing in mse") {
    Rng rng(4);
    Tensor a = Tensor::rand_uniform({1, 6, 6}, rng, 0.3, 0.7);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.01, 0.05, 0.1, 0.2}) {
        double cur = psnr(a, add_scalar(a, eps));
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("roi-mse: equality, crop locality, naive oracle") {
    Rng rng(5);
    const int64_t T = 2, C = 1, H = 16, W = 16;
    Tensor truth = Tensor::rand_uniform({T, C, H, W}, rng, 0.0, 1.0);
    Tensor boxes = Tensor::from_vector({T, 4}, {8, 8, 6, 4, 5, 9, 4, 6});
    CHECK(roi_mse(truth, truth, boxes) == 0.0);

    // perfect inside the box, garbage outside
    auto v = to_vec(truth);
    Tensor pred = Tensor::from_vector({T, C, H, W}, [&] {
        auto out = v;
        for (int64_t i = 0; i < T; ++i) {
            Box box = box_at(boxes, i);
            int64_t x0 = std::llround(box.cx - box.w / 2), x1 = std::llround(box.cx + box.w / 2);
            int64_t y0 = std::llround(box.cy - box.h / 2), y1 = std::llround(box.cy + box.h / 2);
            for (int64_t y = 0; y < H; ++y)
                for (int64_t x = 0; x < W; ++x) {
                    bool in_crop = x >= x0 && x < x1 && y >= y0 && y < y1;
                    if (!in_crop) out[static_cast<size_t>((i * H + y) * W + x)] = 0.999;
                }
        }
        return out;
    }());
    CHECK(roi_mse(pred, truth, boxes) == 0.0);

    // random instance against an independent crop-and-loop accumulation
    Tensor p2 = Tensor::rand_uniform({T, C, H, W}, rng, 0.0, 1.0);
    double oracle = 0.0;
    for (int64_t i = 0; i < T; ++i) {
        Box box = box_at(boxes, i);
        int64_t x0 = std::clamp<int64_t>(std::llround(box.cx - box.w / 2), 0, W - 1);
        int64_t x1 = std::clamp<int64_t>(std::llround(box.cx + box.w / 2), x0 + 1, W);
        int64_t y0 = std::clamp<int64_t>(std::llround(box.cy - box.h / 2), 0, H - 1);
        int64_t y1 = std::clamp<int64_t>(std::llround(box.cy + box.h / 2), y0 + 1, H);
        double acc = 0.0;
        int64_t n = 0;
        for (int64_t y = y0; y < y1; ++y)
            for (int64_t x = x0; x < x1; ++x) {
                double d = p2.at({i, 0, y, x}) - truth.at({i, 0, y, x});
                acc += d * d;
                ++n;
            }
        oracle += acc / static_cast<double>(n);
    }
    oracle /= static_cast<double>(T);
    CHECK(std::fabs(roi_mse(p2, truth, boxes) - oracle) <= 1e-12);
}

TEST_CASE("iou worked examples") {
    CHECK(iou(Box{1, 1, 2, 2}, Box{1, 1, 2, 2}) == 1.0);
    CHECK(iou(Box{1, 1, 2, 2}, Box{10, 10, 2, 2}) == 0.0);
    CHECK(iou(Box{1, 1, 2, 2}, Box{2, 1, 2, 2}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(raster_iou(Box{1, 1, 2, 2}, Box{2, 1, 2, 2}, 0.125) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(iou(Box{5, 5, 0, 0}, Box{5, 5, 0, 0}) == 0.0); // 0/0 defined as 0
    CHECK_THROWS_AS(iou(Box{0, 0, -1, 2}, Box{0, 0, 1, 1}), ValueError);
}

TEST_CASE("miou matches rasterized area counting on lattice boxes") {
    Rng rng(6);
    for (int inst = 0; inst < 40; ++inst) {
        auto lattice = [&](double lo, double hi) { return std::round(rng.uniform(lo, hi) * 4.0) / 4.0; };
        Box a{lattice(2, 10), lattice(2, 10), lattice(0.5, 6), lattice(0.5, 6)};
        Box b{lattice(2, 10), lattice(2, 10), lattice(0.5, 6), lattice(0.5, 6)};
        double exact = iou(a, b);
        double raster = raster_iou(a, b, 0.125);
        CHECK(std::fabs(exact - raster) <= 1e-9);
    }
}

TEST_CASE("miou symmetry and scale invariance") {
    Rng rng(7);
    Tensor a = Tensor::from_vector({2, 4}, {3, 3, 2, 2, 6, 5, 3, 2});
    Tensor b = Tensor::from_vector({2, 4}, {3.5, 3, 2, 2, 5, 5, 2, 3});
    CHECK(miou(a, b) == doctest::Approx(miou(b, a)).epsilon(1e-12));
    Tensor a4 = mul_scalar(a, 4.0);
    Tensor b4 = mul_scalar(b, 4.0);
    CHECK(miou(a4, b4) == doctest::Approx(miou(a, b)).epsilon(1e-12));
}

TEST_CASE("ade: worked values and invariances") {
    Tensor a = Tensor::from_vector({3, 4}, {1, 1, 2, 2, 4, 4, 2, 2, 9, 9, 2, 2});
    CHECK(ade(a, a) == 0.0);

    Tensor shifted = add(a, Tensor::from_vector({4}, {3, 4, 0, 0}));
    CHECK(ade(shifted, a) == doctest::Approx(5.0).epsilon(1e-12));

    // joint translation invariance
    Tensor offset = Tensor::from_vector({4}, {10, -7, 0, 0});
    CHECK(ade(add(shifted, offset), add(a, offset)) == doctest::Approx(5.0).epsilon(1e-12));

    // linear scaling under joint coordinate scaling
    CHECK(ade(mul_scalar(shifted, 3.0), mul_scalar(a, 3.0)) == doctest::Approx(15.0).epsilon(1e-12));

    Rng rng(8);
    Tensor p = Tensor::rand_uniform({5, 4}, rng, 0.0, 20.0);
    Tensor q = Tensor::rand_uniform({5, 4}, rng, 0.0, 20.0);
    double oracle = 0.0;
    for (int64_t i = 0; i < 5; ++i) {
        double dx = p.at({i, 0}) - q.at({i, 0});
        double dy = p.at({i, 1}) - q.at({i, 1});
        oracle += std::hypot(dx, dy);
    }
    oracle /= 5.0;
    CHECK(std::fabs(ade(p, q) - oracle) <= 1e-12);
}
