#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/gradcheck.hpp"
#include "support/helpers.hpp"
#include "tavp/common.hpp"
#include "tavp/decoders.hpp"

using namespace tavp;
using namespace tavp::testing;

namespace {

// the delta head starts at zero; small random weights make decoder behavior
// depend on the memory without risking sign flips in the size fold
void perturb_head(MotionDecoder& dec, Rng& rng, double scale = 0.01) {
    for (double& v : dec.head.weight.mutable_data()) v = rng.uniform(-scale, scale);
}

} // namespace

TEST_CASE("video decoder bridges 4 observed frames to 8 predicted frames") {
    Rng rng(1);
    VideoDecoder dec(/*obs*/ 4, /*C_hid*/ 8, /*pred*/ 8, /*C_dec*/ 8, /*C*/ 1, rng);
    Tensor features = Tensor::randn({4, 8, 8, 8}, rng);
    Tensor frames = dec.forward(features);
    CHECK(frames.shape() == Shape{8, 1, 32, 32});
}

TEST_CASE("video decoder output stays inside (0,1) and is deterministic") {
    Rng rng(2);
    VideoDecoder dec(4, 8, 4, 8, 3, rng);
    Tensor features = Tensor::randn({4, 8, 4, 4}, rng, 3.0);
    Tensor a = dec.forward(features);
    Tensor b = dec.forward(features);
    CHECK(a.shape() == Shape{4, 3, 16, 16});
    for (double v : a.data()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    CHECK(bit_equal(a, b));
}

TEST_CASE("motion decoder emits the full-scale box sequence") {
    Rng rng(3);
    MotionDecoder dec(/*dim*/ 512, /*heads*/ 8, /*ratio*/ 4, /*depth*/ 4, /*obs*/ 8, rng);
    Tensor memory = Tensor::randn({8, 512}, rng);
    Tensor last = Tensor::from_vector({1, 4}, {0.5, 0.5, 0.1, 0.1});
    Tensor teacher = Tensor::rand_uniform({8, 4}, rng, 0.2, 0.8);
    Tensor boxes = dec.forward_teacher(memory, last, teacher);
    CHECK(boxes.shape() == Shape{8, 4});
}

TEST_CASE("causal mask law: perturbing teacher step k leaves predictions up to k unchanged") {
    Rng rng(4);
    const int64_t horizon = 6;
    MotionDecoder dec(16, 4, 2, 2, 4, rng);
    perturb_head(dec, rng);
    Tensor memory = Tensor::randn({4, 16}, rng);
    Tensor last = Tensor::from_vector({1, 4}, {0.4, 0.6, 0.2, 0.2});
    Tensor teacher = Tensor::rand_uniform({horizon, 4}, rng, 0.2, 0.8);

    Tensor base = dec.forward_teacher(memory, last, teacher);
    for (int64_t k = 0; k < horizon - 1; ++k) {
        auto bumped = to_vec(teacher);
        bumped[static_cast<size_t>(k * 4)] += 0.37;
        Tensor teacher2 = Tensor::from_vector({horizon, 4}, bumped);
        Tensor out = dec.forward_teacher(memory, last, teacher2);
        CHECK(bit_equal(slice(out, 0, 0, k + 1), slice(base, 0, 0, k + 1)));
        CHECK(max_abs_diff(slice(out, 0, k + 1, horizon - k - 1),
                           slice(base, 0, k + 1, horizon - k - 1)) > 0.0);
    }
}

TEST_CASE("self-attention weights above the diagonal are exactly zero") {
    Rng rng(5);
    MotionDecoder dec(16, 4, 2, 2, 4, rng);
    Tensor memory = Tensor::randn({4, 16}, rng);
    Tensor queries = Tensor::rand_uniform({5, 4}, rng, 0.0, 1.0);
    Tensor probs;
    dec.decode(memory, queries, &probs);
    REQUIRE(probs.shape() == Shape{4, 5, 5});
    for (int64_t h = 0; h < 4; ++h) {
        for (int64_t i = 0; i < 5; ++i) {
            for (int64_t j = i + 1; j < 5; ++j) CHECK(probs.at({h, i, j}) == 0.0);
            double sum = 0.0;
            for (int64_t j = 0; j <= i; ++j) sum += probs.at({h, i, j});
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("greedy rollout equals the teacher-forced pass on its own outputs") {
    Rng rng(6);
    MotionDecoder dec(16, 4, 2, 3, 4, rng);
    perturb_head(dec, rng);
    Tensor memory = Tensor::randn({4, 16}, rng);
    Tensor last = Tensor::from_vector({1, 4}, {0.5, 0.5, 0.15, 0.1});
    Tensor greedy = dec.forward_autoregressive(memory, last, 5);
    Tensor replay = dec.forward_teacher(memory, last, greedy);
    CHECK(bit_equal(greedy, replay));
}

TEST_CASE("teacher forcing requires a teacher") {
    Rng rng(7);
    MotionDecoder dec(16, 4, 2, 2, 4, rng);
    Tensor memory = Tensor::randn({4, 16}, rng);
    Tensor last = Tensor::from_vector({1, 4}, {0.5, 0.5, 0.15, 0.1});
    CHECK_THROWS_AS(dec.forward_teacher(memory, last, Tensor()), ValueError);
}

TEST_CASE("predicted widths and heights are non-negative") {
    Rng rng(8);
    MotionDecoder dec(16, 4, 2, 2, 4, rng);
    // inflate head weights so raw deltas would drive sizes negative
    nn::ParamList head_params;
    dec.head.params("h", head_params);
    for (auto& p : head_params) {
        Tensor t = p.tensor;
        for (double& v : t.mutable_data()) v = -5.0;
    }
    Tensor memory = Tensor::randn({4, 16}, rng);
    Tensor last = Tensor::from_vector({1, 4}, {0.5, 0.5, 0.05, 0.05});
    Tensor boxes = dec.forward_autoregressive(memory, last, 4);
    for (int64_t i = 0; i < 4; ++i) {
        CHECK(boxes.at({i, 2}) >= 0.0);
        CHECK(boxes.at({i, 3}) >= 0.0);
    }
}

TEST_CASE("only the bridge projection depends on the prediction horizon") {
    Rng rng_a(31), rng_b(31);
    VideoDecoder two(4, 8, 2, 8, 1, rng_a);
    VideoDecoder eight(4, 8, 8, 8, 1, rng_b);
    nn::ParamList pa, pb;
    two.params("d", pa);
    eight.params("d", pb);
    REQUIRE(pa.size() == pb.size());
    for (size_t i = 0; i < pa.size(); ++i) {
        if (pa[i].name == "d.bridge.w" || pa[i].name == "d.bridge.b") {
            CHECK(pa[i].tensor.shape() != pb[i].tensor.shape());
        } else {
            CHECK(pa[i].tensor.shape() == pb[i].tensor.shape());
        }
    }
}

TEST_CASE("gradcheck: decoder composites") {
    Rng rng(9);
    VideoDecoder vdec(2, 4, 2, 4, 1, rng);
    Tensor features = Tensor::randn({2, 4, 4, 4}, rng);
    CHECK(max_grad_rel_err(
              [&](const std::vector<Tensor>& in) { return vdec.forward(in[0]); }, {features},
              rng) <= 1e-4);

    MotionDecoder mdec(8, 2, 2, 2, 3, rng);
    perturb_head(mdec, rng);
    Tensor memory = Tensor::randn({3, 8}, rng);
    Tensor last = Tensor::from_vector({1, 4}, {0.5, 0.5, 0.2, 0.2});
    Tensor teacher = Tensor::rand_uniform({3, 4}, rng, 0.3, 0.7);
    CHECK(max_grad_rel_err(
              [&](const std::vector<Tensor>& in) {
                  return mdec.forward_teacher(in[0], last, in[1]);
              },
              {memory, teacher}, rng) <= 1e-4);
}
