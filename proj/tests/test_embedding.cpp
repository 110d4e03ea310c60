#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support/helpers.hpp"
#include "tavp/common.hpp"
#include "tavp/embedding.hpp"

using namespace tavp;
using namespace tavp::testing;

TEST_CASE("spatial embedding shape law at desk scale") {
    Rng rng(1);
    SpatialEmbedder emb(3, 8, rng);
    Tensor x = Tensor::rand_uniform({4, 3, 32, 32}, rng, 0.0, 1.0);
    Tensor z = emb.forward(x);
    CHECK(z.shape() == Shape{4, 8, 8, 8});
    CHECK(4 * 8 == 32); // C' = T * C_hid
}

TEST_CASE("spatial embedding rejects indivisible frame sizes") {
    Rng rng(2);
    SpatialEmbedder emb(1, 4, rng);
    Tensor bad = Tensor::zeros({2, 1, 30, 32});
    CHECK_THROWS_AS(emb.forward(bad), ConfigError);
}

TEST_CASE("zero input stays zero through the embedder with zero biases") {
    Rng rng(3);
    SpatialEmbedder emb(1, 4, rng); // biases start at zero
    Tensor x = Tensor::zeros({2, 1, 16, 16});
    Tensor z = emb.forward(x);
    for (double v : z.data()) CHECK(v == 0.0);
}

TEST_CASE("embedder mixes nothing across frames (permutation consistency)") {
    Rng rng(4);
    SpatialEmbedder emb(1, 4, rng);
    Tensor x = Tensor::rand_uniform({3, 1, 16, 16}, rng, 0.0, 1.0);
    Tensor z = emb.forward(x);

    Tensor xp = concat({slice(x, 0, 2, 1), slice(x, 0, 0, 1), slice(x, 0, 1, 1)}, 0);
    Tensor zp = emb.forward(xp);
    CHECK(bit_equal(slice(zp, 0, 0, 1), slice(z, 0, 2, 1)));
    CHECK(bit_equal(slice(zp, 0, 1, 1), slice(z, 0, 0, 1)));
    CHECK(bit_equal(slice(zp, 0, 2, 1), slice(z, 0, 1, 1)));
}

TEST_CASE("spatial embedding reaches the full-scale token width") {
    Rng rng(5);
    SpatialEmbedder emb(3, 64, rng);
    Tensor x = Tensor::rand_uniform({8, 3, 64, 64}, rng, 0.0, 1.0);
    Tensor z = emb.forward(x);
    CHECK(z.shape() == Shape{8, 64, 16, 16});
    CHECK(8 * 64 == 512); // embedding width C' of the encoder
}

TEST_CASE("spatial embedding at full 256x256 input resolution" * doctest::timeout(120)) {
    Rng rng(8);
    SpatialEmbedder emb(3, 64, rng);
    Tensor x = Tensor::rand_uniform({8, 3, 256, 256}, rng, 0.0, 1.0);
    NoGradGuard no_grad;
    Tensor z = emb.forward(x);
    CHECK(z.shape() == Shape{8, 64, 64, 64});
}

TEST_CASE("box embedding shape and zero-weight case isolates the position encoding") {
    Rng rng(6);
    const int64_t width = 512;
    BoxEmbedder be(width, rng);
    Tensor boxes = Tensor::rand_uniform({8, 4}, rng, 0.0, 1.0);
    Tensor s = be.forward(boxes);
    CHECK(s.shape() == Shape{8, 512});

    zero_params([&] {
        nn::ParamList p;
        be.params("be", p);
        return p;
    }());
    Tensor s0 = be.forward(boxes);
    Tensor pe = sinusoidal_encoding(8, width);
    CHECK(max_abs_diff(s0, pe) == 0.0);
}

TEST_CASE("sinusoidal encoding rows follow the sin/cos law") {
    const int64_t dim = 16;
    Tensor pe = sinusoidal_encoding(5, dim);
    for (int64_t i = 0; i < dim; i += 2) {
        CHECK(pe.at({0, i}) == 0.0);     // sin(0)
        CHECK(pe.at({0, i + 1}) == 1.0); // cos(0)
    }
    for (int64_t t = 0; t < 5; ++t) {
        for (int64_t i = 0; i < dim / 2; ++i) {
            double angle = t / std::pow(10000.0, 2.0 * i / dim);
            CHECK(pe.at({t, 2 * i}) == doctest::Approx(std::sin(angle)).epsilon(1e-12));
            CHECK(pe.at({t, 2 * i + 1}) == doctest::Approx(std::cos(angle)).epsilon(1e-12));
        }
    }
}

TEST_CASE("box embedding depends on the step index only through the encoding") {
    Rng rng(7);
    BoxEmbedder be(32, rng);
    std::vector<double> same_box = {0.5, 0.5, 0.1, 0.2};
    std::vector<double> rows;
    for (int t = 0; t < 3; ++t) rows.insert(rows.end(), same_box.begin(), same_box.end());
    Tensor boxes = Tensor::from_vector({3, 4}, rows);
    Tensor s = be.forward(boxes);
    Tensor pe = sinusoidal_encoding(3, 32);
    Tensor content = sub(s, pe);
    CHECK(max_abs_diff(slice(content, 0, 0, 1), slice(content, 0, 1, 1)) <= 1e-12);
    CHECK(max_abs_diff(slice(content, 0, 1, 1), slice(content, 0, 2, 1)) <= 1e-12);
}

TEST_CASE("box normalization and denormalization") {
    Tensor px = Tensor::from_vector({2, 4}, {640, 360, 100, 50, 64, 36, 10, 5});
    Tensor norm = normalize_boxes(px, 1280, 720);
    CHECK(norm.at({0, 0}) == doctest::Approx(0.5));
    CHECK(norm.at({0, 1}) == doctest::Approx(0.5));
    CHECK(norm.at({0, 2}) == doctest::Approx(100.0 / 1280.0));
    CHECK(norm.at({0, 3}) == doctest::Approx(50.0 / 720.0));
    Tensor back = denormalize_boxes(norm, 1280, 720);
    CHECK(max_abs_diff(back, px) <= 1e-9);
}
