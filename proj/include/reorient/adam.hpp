#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace reorient {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment buffers for one parameter tensor. The step count is per tensor, so
/// a tensor that starts training late gets fresh bias correction.
template <typename T>
class AdamState {
public:
    AdamState() = default;
    explicit AdamState(std::size_t n) : m_(n, T(0)), v_(n, T(0)) {}

    std::size_t size() const noexcept { return m_.size(); }
    long steps() const noexcept { return t_; }

    /// One bias-corrected update; returns the largest absolute parameter change.
    double step(std::span<T> params, std::span<const T> grad, const AdamConfig& cfg, double lr) {
        if (params.size() != m_.size() || grad.size() != m_.size()) {
            throw std::invalid_argument("adam: parameter/gradient size mismatch");
        }
        ++t_;
        const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
        double largest = 0.0;
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grad[i];
            const double m = cfg.beta1 * m_[i] + (1.0 - cfg.beta1) * g;
            const double v = cfg.beta2 * v_[i] + (1.0 - cfg.beta2) * g * g;
            m_[i] = static_cast<T>(m);
            v_[i] = static_cast<T>(v);
            const double delta = lr * (m / c1) / (std::sqrt(v / c2) + cfg.epsilon);
            params[i] = static_cast<T>(params[i] - delta);
            largest = std::max(largest, std::abs(delta));
        }
        return largest;
    }

private:
    std::vector<T> m_;
    std::vector<T> v_;
    long t_ = 0;
};

}  // namespace reorient
