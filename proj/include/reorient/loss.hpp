#pragma once

#include <array>
#include <span>
#include <utility>

namespace reorient {

/// Weight of the rotation MSE term in the composite loss.
struct ParamLossConfig {
    double mu = 1.0;
};

/// Mean of squared componentwise differences.
double mse(std::span<const double> pred, std::span<const double> truth);
/// Mean of absolute componentwise differences.
double mae(std::span<const double> pred, std::span<const double> truth);

using Vec3 = std::array<double, 3>;

/// mu * mse(rotation) + mae(translation). MAE is paired with the translation
/// sub-vector and MSE with the rotation sub-vector.
double composite(const Vec3& pred_trans, const Vec3& truth_trans, const Vec3& pred_rot,
                 const Vec3& truth_rot, const ParamLossConfig& cfg);

/// Gradients of composite() w.r.t. pred_trans and pred_rot. The MAE
/// sub-gradient at zero error is 0.
std::pair<Vec3, Vec3> composite_grad(const Vec3& pred_trans, const Vec3& truth_trans,
                                     const Vec3& pred_rot, const Vec3& truth_rot,
                                     const ParamLossConfig& cfg);

/// Gradient of mse / mae w.r.t. pred, written into `grad`.
void mse_grad(std::span<const double> pred, std::span<const double> truth, std::span<double> grad);
void mae_grad(std::span<const double> pred, std::span<const double> truth, std::span<double> grad);

}  // namespace reorient
