#pragma once

// Finite-difference gradient checking, independent of the autodiff path it
// verifies. All checks run in Float64 mode; callers are expected to hold a
// ScalarModeGuard if the ambient mode differs.

#include <functional>
#include <vector>

#include "tavp/common.hpp"
#include "tavp/rng.hpp"
#include "tavp/tensor.hpp"

namespace tavp::testing {

using ForwardFn = std::function<Tensor(const std::vector<Tensor>&)>;

// Checks d/dx of L = sum(w ⊙ f(inputs)) against central differences, where w
// is a fixed random weighting (so per-element errors cannot cancel).
// Returns the max relative error over all elements of all inputs; the
// denominator is floored so near-zero gradients degrade to an absolute check.
inline double max_grad_rel_err(const ForwardFn& f, std::vector<Tensor> inputs, Rng& rng,
                               double h = 1e-5) {
    for (auto& t : inputs) t.set_requires_grad(true);

    Tensor y0 = f(inputs);
    Tensor w = Tensor::rand_uniform(y0.shape(), rng, -1.0, 1.0);
    Tensor loss = sum_all(mul(y0, w));
    backward(loss);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(inputs.size());
    for (auto& t : inputs) {
        if (t.has_grad()) {
            analytic.emplace_back(t.grad_data().begin(), t.grad_data().end());
        } else {
            analytic.emplace_back(static_cast<size_t>(t.numel()), 0.0);
        }
        t.zero_grad();
    }

    auto eval = [&]() {
        NoGradGuard ng;
        Tensor y = f(inputs);
        double acc = 0.0;
        auto yd = y.data();
        auto wd = w.data();
        for (size_t i = 0; i < yd.size(); ++i) acc += yd[i] * wd[i];
        return acc;
    };

    double max_err = 0.0;
    for (size_t ti = 0; ti < inputs.size(); ++ti) {
        auto buf = inputs[ti].mutable_data();
        for (size_t j = 0; j < buf.size(); ++j) {
            double saved = buf[j];
            buf[j] = saved + h;
            double lp = eval();
            buf[j] = saved - h;
            double lm = eval();
            buf[j] = saved;
            double numeric = (lp - lm) / (2.0 * h);
            double a = analytic[ti][j];
            double err = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-4});
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

} // namespace tavp::testing
