#include "reorient/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "reorient/error.hpp"

namespace reorient {

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

bool RigidParams::finite() const {
    for (double v : to_array()) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void to_json(nlohmann::json& j, const RigidParams& p) {
    j = nlohmann::json{{"tx", p.tx},
                       {"ty", p.ty},
                       {"tz", p.tz},
                       {"alpha_deg", p.alpha_deg},
                       {"beta_deg", p.beta_deg},
                       {"theta_deg", p.theta_deg}};
}

void from_json(const nlohmann::json& j, RigidParams& p) {
    p.tx = j.at("tx").get<double>();
    p.ty = j.at("ty").get<double>();
    p.tz = j.at("tz").get<double>();
    p.alpha_deg = j.at("alpha_deg").get<double>();
    p.beta_deg = j.at("beta_deg").get<double>();
    p.theta_deg = j.at("theta_deg").get<double>();
}

Mat4 Mat4::translation(double x, double y, double z) {
    Mat4 t;
    t(0, 3) = x;
    t(1, 3) = y;
    t(2, 3) = z;
    return t;
}

std::array<double, 3> Mat4::apply(const std::array<double, 3>& v) const {
    return {(*this)(0, 0) * v[0] + (*this)(0, 1) * v[1] + (*this)(0, 2) * v[2] + (*this)(0, 3),
            (*this)(1, 0) * v[0] + (*this)(1, 1) * v[1] + (*this)(1, 2) * v[2] + (*this)(1, 3),
            (*this)(2, 0) * v[0] + (*this)(2, 1) * v[1] + (*this)(2, 2) * v[2] + (*this)(2, 3)};
}

double rigid_residual(const Mat4& m) {
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k) dot += m(k, i) * m(k, j);
            worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
        }
    }
    worst = std::max({worst, std::abs(m(3, 0)), std::abs(m(3, 1)), std::abs(m(3, 2)),
                      std::abs(m(3, 3) - 1.0)});
    const double det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
                       m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
                       m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    return std::max(worst, std::abs(det - 1.0));
}

bool is_rigid(const Mat4& m, double tol) { return rigid_residual(m) < tol; }

namespace {

struct Trig {
    double ca, sa, cb, sb, ct, st;
};

Trig trig_of(const RigidParams& p) {
    const double a = deg_to_rad(p.alpha_deg);
    const double b = deg_to_rad(p.beta_deg);
    const double t = deg_to_rad(p.theta_deg);
    return {std::cos(a), std::sin(a), std::cos(b), std::sin(b), std::cos(t), std::sin(t)};
}

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 mul3(const Mat3& a, const Mat3& b) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
    return r;
}

Mat3 rot_x(double c, double s) { return {{{1, 0, 0}, {0, c, -s}, {0, s, c}}}; }
Mat3 rot_y(double c, double s) { return {{{c, 0, s}, {0, 1, 0}, {-s, 0, c}}}; }
Mat3 rot_z(double c, double s) { return {{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}}; }

// d/dphi of the elementary rotations (per radian).
Mat3 drot_x(double c, double s) { return {{{0, 0, 0}, {0, -s, -c}, {0, c, -s}}}; }
Mat3 drot_y(double c, double s) { return {{{-s, 0, c}, {0, 0, 0}, {-c, 0, -s}}}; }
Mat3 drot_z(double c, double s) { return {{{-s, -c, 0}, {c, -s, 0}, {0, 0, 0}}}; }

Mat4 embed(const Mat3& r, double tx, double ty, double tz, double corner) {
    Mat4 m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = r[i][j];
    m(0, 3) = tx;
    m(1, 3) = ty;
    m(2, 3) = tz;
    m(3, 3) = corner;
    return m;
}

}  // namespace

Mat4 to_matrix(const RigidParams& p) {
    if (!p.finite()) throw InvalidArgument("rigid parameters must be finite");
    const Trig g = trig_of(p);
    const Mat3 r = mul3(rot_z(g.ct, g.st), mul3(rot_y(g.cb, g.sb), rot_x(g.ca, g.sa)));
    return embed(r, p.tx, p.ty, p.tz, 1.0);
}

Mat4 compose(const Mat4& a, const Mat4& b) {
    Mat4 r;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            double s = 0.0;
            for (int k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
            r(i, j) = s;
        }
    }
    return r;
}

Mat4 invert(const Mat4& m) {
    if (!is_rigid(m, 1e-6)) {
        throw InvalidArgument("invert expects a rigid matrix (residual " +
                              std::to_string(rigid_residual(m)) + ")");
    }
    Mat4 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = m(j, i);
    for (int i = 0; i < 3; ++i) {
        r(i, 3) = -(r(i, 0) * m(0, 3) + r(i, 1) * m(1, 3) + r(i, 2) * m(2, 3));
    }
    return r;
}

RigidParams matrix_to_params(const Mat4& m) {
    const double sb = std::clamp(-m(2, 0), -1.0, 1.0);
    const double beta = rad_to_deg(std::asin(sb));
    if (std::abs(beta) >= 90.0 - kGimbalMarginDeg) {
        throw GimbalLockError("beta = " + std::to_string(beta) +
                              " deg is inside the gimbal-lock margin");
    }
    RigidParams p;
    p.tx = m(0, 3);
    p.ty = m(1, 3);
    p.tz = m(2, 3);
    p.beta_deg = beta;
    p.alpha_deg = rad_to_deg(std::atan2(m(2, 1), m(2, 2)));
    p.theta_deg = rad_to_deg(std::atan2(m(1, 0), m(0, 0)));
    return p;
}

std::array<Mat4, 6> to_matrix_jacobian(const RigidParams& p) {
    const Trig g = trig_of(p);
    const double per_deg = deg_to_rad(1.0);
    const Mat3 rx = rot_x(g.ca, g.sa), ry = rot_y(g.cb, g.sb), rz = rot_z(g.ct, g.st);

    std::array<Mat4, 6> d;
    for (int i = 0; i < 3; ++i) {
        d[static_cast<std::size_t>(i)] = embed(Mat3{}, i == 0, i == 1, i == 2, 0.0);
    }
    auto scaled = [per_deg](Mat3 r) {
        for (auto& row : r)
            for (auto& v : row) v *= per_deg;
        return r;
    };
    d[3] = embed(scaled(mul3(rz, mul3(ry, drot_x(g.ca, g.sa)))), 0, 0, 0, 0.0);
    d[4] = embed(scaled(mul3(rz, mul3(drot_y(g.cb, g.sb), rx))), 0, 0, 0, 0.0);
    d[5] = embed(scaled(mul3(drot_z(g.ct, g.st), mul3(ry, rx))), 0, 0, 0, 0.0);
    return d;
}

std::array<std::array<double, 12>, 6> params_jacobian(const Mat4& m) {
    std::array<std::array<double, 12>, 6> j{};
    auto at = [](int r, int c) { return static_cast<std::size_t>(r * 4 + c); };
    j[0][at(0, 3)] = 1.0;
    j[1][at(1, 3)] = 1.0;
    j[2][at(2, 3)] = 1.0;

    const double deg = rad_to_deg(1.0);
    // alpha = atan2(m21, m22)
    const double na = m(2, 1) * m(2, 1) + m(2, 2) * m(2, 2);
    j[3][at(2, 1)] = deg * m(2, 2) / na;
    j[3][at(2, 2)] = -deg * m(2, 1) / na;
    // beta = asin(-m20)
    const double cb = std::sqrt(std::max(1e-300, 1.0 - m(2, 0) * m(2, 0)));
    j[4][at(2, 0)] = -deg / cb;
    // theta = atan2(m10, m00)
    const double nt = m(1, 0) * m(1, 0) + m(0, 0) * m(0, 0);
    j[5][at(1, 0)] = deg * m(0, 0) / nt;
    j[5][at(0, 0)] = -deg * m(1, 0) / nt;
    return j;
}

}  // namespace reorient
