#include "tavp/sta.hpp"

namespace tavp {

BranchAttention::BranchAttention(int64_t dim, int64_t heads, Rng& rng)
    : norm(dim), attn(dim, heads, rng) {}

BranchAttention::Out BranchAttention::forward(const Tensor& tokens, const Tensor* messengers,
                                              bool collect) const {
    const int64_t n = tokens.size(0);
    Out out;
    if (messengers == nullptr || !messengers->defined()) {
        Tensor normed = norm.forward(tokens);
        out.tokens = attn.forward(normed, normed, nullptr, &out.probs);
        return out;
    }

    const int64_t m = messengers->size(0);
    Tensor joint = concat({tokens, *messengers}, 0);
    Tensor normed = norm.forward(joint);
    if (collect) {
        Tensor mixed = attn.forward(normed, normed, nullptr, &out.probs);
        out.tokens = slice(mixed, 0, 0, n);
        out.messengers = slice(mixed, 0, n, m);
    } else {
        Tensor queries = slice(normed, 0, 0, n);
        out.tokens = attn.forward(queries, normed, nullptr, &out.probs);
        out.messengers = *messengers;
    }
    return out;
}

void BranchAttention::params(const std::string& prefix, nn::ParamList& out) const {
    norm.params(prefix + ".ln", out);
    attn.params(prefix + ".attn", out);
}

TemporalAttention::TemporalAttention(int64_t dim, int64_t reduction, Rng& rng)
    : fc1(dim, std::max<int64_t>(1, dim / reduction), rng),
      fc2(std::max<int64_t>(1, dim / reduction), dim, rng) {}

Tensor TemporalAttention::forward(const Tensor& tokens) const {
    Tensor pooled = mean_axis(tokens, 0); // [dim]
    Tensor squeezed = reshape(pooled, {1, pooled.numel()});
    Tensor gate = sigmoid(fc2.forward(gelu(fc1.forward(squeezed))));
    return reshape(gate, {pooled.numel()});
}

void TemporalAttention::params(const std::string& prefix, nn::ParamList& out) const {
    fc1.params(prefix + ".fc1", out);
    fc2.params(prefix + ".fc2", out);
}

StaBlock::StaBlock(int64_t dim, int64_t heads, int64_t se_reduction, Rng& rng)
    : spatial(dim, heads, rng), temporal(dim, se_reduction, rng) {}

Tensor StaBlock::combine(const Tensor& spatial_result, const Tensor& channel_gate,
                         const Tensor& tokens) {
    return mul(mul(spatial_result, channel_gate), tokens);
}

StaBlock::Out StaBlock::forward(const Tensor& tokens, const Tensor* messengers, bool collect) const {
    auto att = spatial.forward(tokens, messengers, collect);
    Tensor gate = temporal.forward(tokens);
    Out out;
    out.tokens = combine(att.tokens, gate, tokens);
    out.messengers = att.messengers;
    return out;
}

void StaBlock::params(const std::string& prefix, nn::ParamList& out) const {
    spatial.params(prefix + ".spatial", out);
    temporal.params(prefix + ".temporal", out);
}

} // namespace tavp
