#pragma once

#include <cstdint>
#include <vector>

#include "tavp/nn.hpp"

namespace tavp {

/// One-cycle learning-rate schedule: cosine rise from max_lr/div to max_lr
/// over the warmup fraction of total steps, then cosine anneal down to
/// max_lr/(div*final_div).
struct OneCycle {
    double max_lr = 1e-3;
    int64_t total_steps = 1;
    double warmup_frac = 0.3;
    double div = 25.0;
    double final_div = 1e4;

    double lr_at(int64_t step) const;
};

/// Adam with bias correction. Moments are kept per parameter in step order;
/// the caller zeroes gradients after each step.
class Adam {
public:
    Adam() = default;
    Adam(nn::ParamList params, double beta1, double beta2, double eps);

    /// Applies one update using the given learning rate. Parameters without
    /// an accumulated gradient are skipped.
    void step(double lr);

    int64_t step_count() const { return step_count_; }
    const std::vector<std::vector<double>>& first_moments() const { return m_; }
    const std::vector<std::vector<double>>& second_moments() const { return v_; }
    const nn::ParamList& params() const { return params_; }

    /// Restores optimizer state (checkpoint loading).
    void restore(int64_t step_count, std::vector<std::vector<double>> m,
                 std::vector<std::vector<double>> v);

private:
    nn::ParamList params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    int64_t step_count_ = 0;
};

/// Scales gradients so their global L2 norm is at most max_norm (no-op when
/// max_norm <= 0 or the norm is already below it). Returns the pre-clip norm.
double clip_gradients(const nn::ParamList& params, double max_norm);

} // namespace tavp
