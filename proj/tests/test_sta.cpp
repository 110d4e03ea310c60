#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/gradcheck.hpp"
#include "support/helpers.hpp"
#include "tavp/common.hpp"
#include "tavp/sta.hpp"

using namespace tavp;
using namespace tavp::testing;

TEST_CASE("single-token attention with identity value/output equals the layer-normed input") {
    Rng rng(1);
    const int64_t dim = 8;
    BranchAttention ba(dim, 2, rng);
    set_identity(ba.attn.v_proj);
    set_identity(ba.attn.out_proj);
    Tensor f = Tensor::randn({1, dim}, rng);
    auto out = ba.forward(f, nullptr);
    Tensor ref = ba.norm.forward(f);
    CHECK(max_abs_diff(out.tokens, ref) <= 1e-12);
}

TEST_CASE("attention weight rows sum to one, messenger queries included") {
    Rng rng(2);
    const int64_t dim = 16;
    BranchAttention ba(dim, 4, rng);
    Tensor f = Tensor::randn({10, dim}, rng);
    Tensor msgs = Tensor::randn({3, dim}, rng);
    auto out = ba.forward(f, &msgs, /*collect=*/true);
    REQUIRE(out.probs.shape() == Shape{4, 13, 13});
    for (int64_t h = 0; h < 4; ++h) {
        for (int64_t q = 0; q < 13; ++q) {
            double s = 0.0;
            for (int64_t k = 0; k < 13; ++k) s += out.probs.at({h, q, k});
            CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("spatial attention is permutation-equivariant on random 16-token instances") {
    Rng rng(3);
    const int64_t dim = 12;
    BranchAttention ba(dim, 3, rng);
    for (int inst = 0; inst < 5; ++inst) {
        Tensor f = Tensor::randn({16, dim}, rng);
        // random permutation
        std::vector<int64_t> perm(16);
        for (int64_t i = 0; i < 16; ++i) perm[static_cast<size_t>(i)] = i;
        for (int64_t i = 15; i > 0; --i) {
            std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(rng.below(i + 1))]);
        }
        std::vector<Tensor> rows;
        for (int64_t i = 0; i < 16; ++i) rows.push_back(slice(f, 0, perm[static_cast<size_t>(i)], 1));
        Tensor fp = concat(rows, 0);

        Tensor base = ba.forward(f, nullptr).tokens;
        Tensor permuted = ba.forward(fp, nullptr).tokens;
        // invert the permutation on the output rows
        std::vector<Tensor> unperm(16);
        for (int64_t i = 0; i < 16; ++i) {
            unperm[static_cast<size_t>(perm[static_cast<size_t>(i)])] = slice(permuted, 0, i, 1);
        }
        Tensor restored = concat(unperm, 0);
        CHECK(max_abs_diff(restored, base) <= 1e-9);
    }
}

TEST_CASE("attention split is exact: re-concatenation reproduces the raw MHSA output") {
    Rng rng(4);
    const int64_t dim = 8;
    BranchAttention ba(dim, 2, rng);
    Tensor f = Tensor::randn({6, dim}, rng);
    Tensor msgs = Tensor::randn({2, dim}, rng);
    auto out = ba.forward(f, &msgs, true);

    Tensor joint = concat({f, msgs}, 0);
    Tensor normed = ba.norm.forward(joint);
    Tensor raw = ba.attn.forward(normed, normed);
    CHECK(bit_equal(concat({out.tokens, out.messengers}, 0), raw));
}

TEST_CASE("temporal attention: zero weights give 0.5 gates, constant rows pool exactly") {
    Rng rng(5);
    const int64_t dim = 8;
    TemporalAttention ta(dim, 4, rng);
    zero_params([&] {
        nn::ParamList p;
        ta.params("ta", p);
        return p;
    }());
    Tensor f = Tensor::randn({7, dim}, rng);
    Tensor gate = ta.forward(f);
    REQUIRE(gate.shape() == Shape{dim});
    for (double v : gate.data()) CHECK(v == 0.5);

    TemporalAttention ta2(dim, 4, rng);
    Tensor row = Tensor::randn({1, dim}, rng);
    Tensor rows = concat({row, row, row, row}, 0);
    CHECK(max_abs_diff(ta2.forward(rows), ta2.forward(row)) <= 1e-12);
}

TEST_CASE("temporal gate lies in (0,1) and ignores spatial permutations") {
    Rng rng(6);
    const int64_t dim = 12;
    TemporalAttention ta(dim, 4, rng);
    for (int inst = 0; inst < 8; ++inst) {
        Tensor f = Tensor::randn({9, dim}, rng);
        Tensor gate = ta.forward(f);
        for (double v : gate.data()) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
        // swap first and last rows; the pooled mean is identical
        Tensor swapped = concat({slice(f, 0, 8, 1), slice(f, 0, 1, 7), slice(f, 0, 0, 1)}, 0);
        CHECK(max_abs_diff(ta.forward(swapped), gate) <= 1e-12);
    }
}

TEST_CASE("gate combination: neutral and scalar gates") {
    Rng rng(7);
    Tensor f = Tensor::randn({5, 6}, rng);
    Tensor ones_s = Tensor::full({5, 6}, 1.0);
    Tensor ones_t = Tensor::full({6}, 1.0);
    CHECK(max_abs_diff(StaBlock::combine(ones_s, ones_t, f), f) == 0.0);

    Tensor half_t = Tensor::full({6}, 0.5);
    Tensor expect = mul_scalar(f, 0.5);
    CHECK(max_abs_diff(StaBlock::combine(ones_s, half_t, f), expect) <= 1e-15);
}

TEST_CASE("sta block matches the literal three-step oracle") {
    Rng rng(8);
    const int64_t dim = 8;
    StaBlock block(dim, 2, 4, rng);
    Tensor f = Tensor::randn({9, dim}, rng);
    Tensor msgs = Tensor::randn({2, dim}, rng);
    auto got = block.forward(f, &msgs);

    auto spatial = block.spatial.forward(f, &msgs, true);
    Tensor gate = block.temporal.forward(f);
    Tensor oracle = StaBlock::combine(spatial.tokens, gate, f);
    CHECK(max_abs_diff(got.tokens, oracle) <= 1e-10);
    CHECK(max_abs_diff(got.messengers, spatial.messengers) == 0.0);
}

TEST_CASE("gradients reach F through each factor of the gate product") {
    Rng rng(9);
    const int64_t dim = 8;
    StaBlock block(dim, 2, 4, rng);
    Tensor base = Tensor::randn({4, dim}, rng);

    auto grad_norm_via = [&](bool through_spatial, bool through_gate, bool through_direct) {
        Tensor f = base.detach().set_requires_grad(true);
        Tensor frozen = base.detach();
        Tensor a_s = block.spatial.forward(through_spatial ? f : frozen, nullptr).tokens;
        Tensor a_t = block.temporal.forward(through_gate ? f : frozen);
        Tensor out = StaBlock::combine(a_s, a_t, through_direct ? f : frozen);
        backward(mean_all(mul(out, out)));
        if (!f.has_grad()) return 0.0;
        double norm = 0.0;
        for (double g : f.grad_data()) norm += g * g;
        return std::sqrt(norm);
    };

    CHECK(grad_norm_via(true, false, false) > 1e-8);
    CHECK(grad_norm_via(false, true, false) > 1e-8);
    CHECK(grad_norm_via(false, false, true) > 1e-8);
}

TEST_CASE("gradcheck: sta block composite") {
    Rng rng(10);
    const int64_t dim = 8;
    StaBlock block(dim, 2, 4, rng);
    for (int inst = 0; inst < 3; ++inst) {
        Tensor f = Tensor::randn({5, dim}, rng);
        Tensor msgs = Tensor::randn({2, dim}, rng);
        double err = max_grad_rel_err(
            [&block](const std::vector<Tensor>& in) {
                return block.forward(in[0], &in[1]).tokens;
            },
            {f, msgs}, rng);
        CHECK(err <= 1e-4);
    }
}
