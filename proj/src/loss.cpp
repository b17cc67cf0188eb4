#include "reorient/loss.hpp"

#include <cmath>
#include <string>

#include "reorient/error.hpp"

namespace reorient {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) {
        throw InvalidArgument("loss inputs differ in length (" + std::to_string(a) + " vs " +
                              std::to_string(b) + ")");
    }
    if (a == 0) throw InvalidArgument("loss inputs must not be empty");
}

void check_mu(const ParamLossConfig& cfg) {
    if (!(cfg.mu >= 0.0) || !std::isfinite(cfg.mu)) {
        throw InvalidArgument("mu must be finite and non-negative");
    }
}

double sign0(double v) { return v > 0.0 ? 1.0 : v < 0.0 ? -1.0 : 0.0; }

}  // namespace

double mse(std::span<const double> pred, std::span<const double> truth) {
    check_lengths(pred.size(), truth.size());
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - truth[i];
        s += e * e;
    }
    return s / static_cast<double>(pred.size());
}

double mae(std::span<const double> pred, std::span<const double> truth) {
    check_lengths(pred.size(), truth.size());
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
    return s / static_cast<double>(pred.size());
}

void mse_grad(std::span<const double> pred, std::span<const double> truth, std::span<double> grad) {
    check_lengths(pred.size(), truth.size());
    check_lengths(pred.size(), grad.size());
    const double n = static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) grad[i] = 2.0 * (pred[i] - truth[i]) / n;
}

void mae_grad(std::span<const double> pred, std::span<const double> truth, std::span<double> grad) {
    check_lengths(pred.size(), truth.size());
    check_lengths(pred.size(), grad.size());
    const double n = static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) grad[i] = sign0(pred[i] - truth[i]) / n;
}

double composite(const Vec3& pred_trans, const Vec3& truth_trans, const Vec3& pred_rot,
                 const Vec3& truth_rot, const ParamLossConfig& cfg) {
    check_mu(cfg);
    return cfg.mu * mse(pred_rot, truth_rot) + mae(pred_trans, truth_trans);
}

std::pair<Vec3, Vec3> composite_grad(const Vec3& pred_trans, const Vec3& truth_trans,
                                     const Vec3& pred_rot, const Vec3& truth_rot,
                                     const ParamLossConfig& cfg) {
    check_mu(cfg);
    Vec3 g_trans{}, g_rot{};
    mae_grad(pred_trans, truth_trans, g_trans);
    mse_grad(pred_rot, truth_rot, g_rot);
    for (double& g : g_rot) g *= cfg.mu;
    return {g_trans, g_rot};
}

}  // namespace reorient
