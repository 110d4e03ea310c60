#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tavp/nn.hpp"
#include "tavp/tensor.hpp"

namespace tavp::testing {

inline std::vector<double> to_vec(const Tensor& t) {
    return std::vector<double>(t.data().begin(), t.data().end());
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    auto da = a.data();
    auto db = b.data();
    if (da.size() != db.size()) return std::numeric_limits<double>::infinity();
    double m = 0.0;
    for (size_t i = 0; i < da.size(); ++i) m = std::max(m, std::fabs(da[i] - db[i]));
    return m;
}

inline bool bit_equal(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() && to_vec(a) == to_vec(b);
}

inline void zero_params(const nn::ParamList& params) {
    for (const auto& p : params) {
        Tensor t = p.tensor;
        auto buf = t.mutable_data();
        std::fill(buf.begin(), buf.end(), 0.0);
    }
}

inline void set_identity(nn::Linear& lin) {
    auto w = lin.weight.mutable_data();
    const int64_t in = lin.weight.size(0);
    const int64_t out = lin.weight.size(1);
    std::fill(w.begin(), w.end(), 0.0);
    for (int64_t i = 0; i < std::min(in, out); ++i) w[static_cast<size_t>(i * out + i)] = 1.0;
    auto b = lin.bias.mutable_data();
    std::fill(b.begin(), b.end(), 0.0);
}

} // namespace tavp::testing
