#pragma once

#include <array>

#include <json.hpp>

namespace reorient {

/// Six-parameter rigid transform. Translations are in voxels of the grid being
/// resampled; angles are in degrees about the X, Y and Z axes. Rotation is
/// about the geometric centre of the volume.
struct RigidParams {
    double tx = 0.0;
    double ty = 0.0;
    double tz = 0.0;
    double alpha_deg = 0.0;
    double beta_deg = 0.0;
    double theta_deg = 0.0;

    /// Order: tx, ty, tz, alpha, beta, theta.
    std::array<double, 6> to_array() const { return {tx, ty, tz, alpha_deg, beta_deg, theta_deg}; }
    static RigidParams from_array(const std::array<double, 6>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5]};
    }
    bool finite() const;

    friend bool operator==(const RigidParams&, const RigidParams&) = default;
};

inline constexpr std::array<const char*, 6> kParamNames{"tx", "ty", "tz",
                                                        "alpha", "beta", "theta"};

void to_json(nlohmann::json& j, const RigidParams& p);
void from_json(const nlohmann::json& j, RigidParams& p);

/// 4x4 homogeneous transform, row-major, acting on voxel coordinates measured
/// from the volume centre. Working in centred coordinates folds the rotation
/// centre into the translation column.
struct Mat4 {
    std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

    double operator()(int r, int c) const { return m[static_cast<std::size_t>(r * 4 + c)]; }
    double& operator()(int r, int c) { return m[static_cast<std::size_t>(r * 4 + c)]; }

    static Mat4 identity() { return {}; }
    static Mat4 translation(double x, double y, double z);

    std::array<double, 3> apply(const std::array<double, 3>& v) const;
};

/// Largest deviation of the rotation block from orthonormality and of the
/// bottom row from (0,0,0,1); also fails when the determinant is not +1.
double rigid_residual(const Mat4& m);
bool is_rigid(const Mat4& m, double tol = 1e-6);

/// M = T(t) * Rz(theta) * Ry(beta) * Rx(alpha).
Mat4 to_matrix(const RigidParams& p);
Mat4 compose(const Mat4& a, const Mat4& b);
Mat4 invert(const Mat4& m);

/// Extraction refuses |beta| >= 90 - kGimbalMarginDeg.
inline constexpr double kGimbalMarginDeg = 0.1;
RigidParams matrix_to_params(const Mat4& m);

/// Partial derivatives of to_matrix(p) with respect to each parameter in the
/// to_array() order (angles per degree).
std::array<Mat4, 6> to_matrix_jacobian(const RigidParams& p);

/// Jacobian of matrix_to_params with respect to the 12 upper entries of m,
/// row-major (entry [i][r*4+c] = d param_i / d m(r,c)).
std::array<std::array<double, 12>, 6> params_jacobian(const Mat4& m);

double deg_to_rad(double deg);
double rad_to_deg(double rad);

}  // namespace reorient
