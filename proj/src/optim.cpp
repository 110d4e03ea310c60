#include "tavp/optim.hpp"

#include <cmath>
#include <numbers>

#include "tavp/common.hpp"

namespace tavp {

double OneCycle::lr_at(int64_t step) const {
    const double initial = max_lr / div;
    const double final_lr = max_lr / (div * final_div);
    const auto warm_steps = static_cast<double>(total_steps) * warmup_frac;
    const auto s = static_cast<double>(step);
    if (s <= 0.0) return initial;
    if (s >= static_cast<double>(total_steps)) return final_lr;
    if (s < warm_steps) {
        double t = s / warm_steps;
        return initial + (max_lr - initial) * 0.5 * (1.0 - std::cos(std::numbers::pi * t));
    }
    double t = (s - warm_steps) / (static_cast<double>(total_steps) - warm_steps);
    return final_lr + (max_lr - final_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

Adam::Adam(nn::ParamList params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(static_cast<size_t>(p.tensor.numel()), 0.0);
        v_.emplace_back(static_cast<size_t>(p.tensor.numel()), 0.0);
    }
}

void Adam::step(double lr) {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
    const bool round_f32 = scalar_mode() == Dtype::Float32;
    for (size_t i = 0; i < params_.size(); ++i) {
        Tensor t = params_[i].tensor;
        if (!t.has_grad()) continue;
        auto grad = t.grad_data();
        auto data = t.mutable_data();
        auto& m = m_[i];
        auto& v = v_[i];
        for (size_t j = 0; j < data.size(); ++j) {
            double g = grad[j];
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
            double mhat = m[j] / bc1;
            double vhat = v[j] / bc2;
            double updated = data[j] - lr * mhat / (std::sqrt(vhat) + eps_);
            data[j] = round_f32 ? static_cast<double>(static_cast<float>(updated)) : updated;
        }
    }
}

void Adam::restore(int64_t step_count, std::vector<std::vector<double>> m,
                   std::vector<std::vector<double>> v) {
    if (m.size() != params_.size() || v.size() != params_.size()) {
        throw ConfigError("optimizer state does not match the parameter list");
    }
    for (size_t i = 0; i < params_.size(); ++i) {
        if (m[i].size() != static_cast<size_t>(params_[i].tensor.numel()) ||
            v[i].size() != static_cast<size_t>(params_[i].tensor.numel())) {
            throw ConfigError("optimizer state shape mismatch for " + params_[i].name);
        }
    }
    step_count_ = step_count;
    m_ = std::move(m);
    v_ = std::move(v);
}

double clip_gradients(const nn::ParamList& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params) {
        if (!p.tensor.has_grad()) continue;
        for (double g : p.tensor.grad_data()) sq += g * g;
    }
    double norm = std::sqrt(sq);
    if (max_norm <= 0.0 || norm <= max_norm || norm == 0.0) return norm;
    double scale = max_norm / norm;
    for (const auto& p : params) {
        if (!p.tensor.has_grad()) continue;
        Tensor t = p.tensor;
        auto node = t.node();
        for (double& g : node->grad) g *= scale;
    }
    return norm;
}

} // namespace tavp
