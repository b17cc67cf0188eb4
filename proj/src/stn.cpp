#include "reorient/stn.hpp"

#include <cmath>

#include "reorient/error.hpp"

namespace reorient {

namespace {

struct Sample {
    double value;
    double dx, dy, dz;  // partials w.r.t. the continuous voxel index
};

// Trilinear read at continuous index (x, y, z); out-of-lattice corners are zero.
template <bool WithGradient>
Sample trilinear(const float* data, const Dims& d, double x, double y, double z) {
    const double fx0 = std::floor(x), fy0 = std::floor(y), fz0 = std::floor(z);
    const double fx = x - fx0, fy = y - fy0, fz = z - fz0;
    // A point exactly on the far face still has a non-zero one-sided slope.
    if (fx0 < -1.0 || fy0 < -1.0 || fz0 < -1.0 || fx0 > d.nx || fy0 > d.ny || fz0 > d.nz ||
        (fx0 == d.nx && fx != 0.0) || (fy0 == d.ny && fy != 0.0) || (fz0 == d.nz && fz != 0.0)) {
        return {0.0, 0.0, 0.0, 0.0};
    }
    const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0), z0 = static_cast<int>(fz0);

    double c[2][2][2];
    const std::size_t sy = static_cast<std::size_t>(d.nx);
    const std::size_t sz = sy * static_cast<std::size_t>(d.ny);
    if (x0 >= 0 && y0 >= 0 && z0 >= 0 && x0 + 1 < d.nx && y0 + 1 < d.ny && z0 + 1 < d.nz) {
        const float* p = data + static_cast<std::size_t>(x0) + sy * y0 + sz * z0;
        c[0][0][0] = p[0];
        c[0][0][1] = p[1];
        c[0][1][0] = p[sy];
        c[0][1][1] = p[sy + 1];
        c[1][0][0] = p[sz];
        c[1][0][1] = p[sz + 1];
        c[1][1][0] = p[sz + sy];
        c[1][1][1] = p[sz + sy + 1];
    } else {
        for (int k = 0; k < 2; ++k) {
            for (int j = 0; j < 2; ++j) {
                for (int i = 0; i < 2; ++i) {
                    const int xi = x0 + i, yj = y0 + j, zk = z0 + k;
                    const bool inside = xi >= 0 && yj >= 0 && zk >= 0 && xi < d.nx &&
                                        yj < d.ny && zk < d.nz;
                    c[k][j][i] = inside ? data[static_cast<std::size_t>(xi) + sy * yj + sz * zk]
                                        : 0.0;
                }
            }
        }
    }

    // Reduce along x, then y, then z; c[z][y][x].
    const double c00 = c[0][0][0] + fx * (c[0][0][1] - c[0][0][0]);
    const double c01 = c[0][1][0] + fx * (c[0][1][1] - c[0][1][0]);
    const double c10 = c[1][0][0] + fx * (c[1][0][1] - c[1][0][0]);
    const double c11 = c[1][1][0] + fx * (c[1][1][1] - c[1][1][0]);
    const double c0 = c00 + fy * (c01 - c00);
    const double c1 = c10 + fy * (c11 - c10);
    Sample s{c0 + fz * (c1 - c0), 0.0, 0.0, 0.0};
    if constexpr (WithGradient) {
        const double ex0 = (c[0][0][1] - c[0][0][0]) + fy * ((c[0][1][1] - c[0][1][0]) -
                                                             (c[0][0][1] - c[0][0][0]));
        const double ex1 = (c[1][0][1] - c[1][0][0]) + fy * ((c[1][1][1] - c[1][1][0]) -
                                                             (c[1][0][1] - c[1][0][0]));
        s.dx = ex0 + fz * (ex1 - ex0);
        s.dy = (c01 - c00) + fz * ((c11 - c10) - (c01 - c00));
        s.dz = c1 - c0;
        // On a cell face the interpolant has a kink; use the mean of the two
        // one-sided slopes, which is what a central difference sees.
        if (fx == 0.0 || fy == 0.0 || fz == 0.0) {
            auto read = [&](int xi, int yi, int zi) -> double {
                if (xi < 0 || yi < 0 || zi < 0 || xi >= d.nx || yi >= d.ny || zi >= d.nz) return 0.0;
                return data[static_cast<std::size_t>(xi) + sy * yi + sz * zi];
            };
            const double wx[2] = {1.0 - fx, fx}, wy[2] = {1.0 - fy, fy}, wz[2] = {1.0 - fz, fz};
            if (fx == 0.0) {
                double acc = 0.0;
                for (int k = 0; k < 2; ++k)
                    for (int j = 0; j < 2; ++j)
                        acc += wy[j] * wz[k] * (read(x0 + 1, y0 + j, z0 + k) - read(x0 - 1, y0 + j, z0 + k));
                s.dx = 0.5 * acc;
            }
            if (fy == 0.0) {
                double acc = 0.0;
                for (int k = 0; k < 2; ++k)
                    for (int i = 0; i < 2; ++i)
                        acc += wx[i] * wz[k] * (read(x0 + i, y0 + 1, z0 + k) - read(x0 + i, y0 - 1, z0 + k));
                s.dy = 0.5 * acc;
            }
            if (fz == 0.0) {
                double acc = 0.0;
                for (int j = 0; j < 2; ++j)
                    for (int i = 0; i < 2; ++i)
                        acc += wx[i] * wy[j] * (read(x0 + i, y0 + j, z0 + 1) - read(x0 + i, y0 + j, z0 - 1));
                s.dz = 0.5 * acc;
            }
        }
    }
    return s;
}

// Maps an output voxel (i, j, k) to a continuous source index via the inverse
// transform. Source coordinates are affine in the output index, so each row is
// walked incrementally along x.
struct PullBack {
    Mat4 inverse;
    std::array<double, 3> half_out;  // n_out / 2
    std::array<double, 3> scale;     // n_vol / n_out

    PullBack(const Mat4& forward, const Dims& out, const Dims& vol)
        : inverse(invert(forward)),
          half_out{out.nx / 2.0, out.ny / 2.0, out.nz / 2.0},
          scale{static_cast<double>(vol.nx) / out.nx, static_cast<double>(vol.ny) / out.ny,
                static_cast<double>(vol.nz) / out.nz} {}

    std::array<double, 3> centred(int i, int j, int k) const {
        return {i + 0.5 - half_out[0], j + 0.5 - half_out[1], k + 0.5 - half_out[2]};
    }

    // Continuous index into the sampled volume for centred source coord s.
    std::array<double, 3> to_index(const std::array<double, 3>& s) const {
        return {(s[0] + half_out[0]) * scale[0] - 0.5, (s[1] + half_out[1]) * scale[1] - 0.5,
                (s[2] + half_out[2]) * scale[2] - 0.5};
    }
};

template <typename Visit>
void for_each_output(const PullBack& pb, const Dims& out, Visit&& visit) {
    const Mat4& mi = pb.inverse;
    const std::array<double, 3> step{mi(0, 0) * pb.scale[0], mi(1, 0) * pb.scale[1],
                                     mi(2, 0) * pb.scale[2]};
    std::size_t flat = 0;
    for (int k = 0; k < out.nz; ++k) {
        for (int j = 0; j < out.ny; ++j) {
            const auto u0 = pb.centred(0, j, k);
            auto idx = pb.to_index(mi.apply(u0));
            for (int i = 0; i < out.nx; ++i, ++flat) {
                visit(flat, i, j, k, idx);
                idx[0] += step[0];
                idx[1] += step[1];
                idx[2] += step[2];
            }
        }
    }
}

// d(M^-1)/dp_i = -M^-1 (dM/dp_i) M^-1.
std::array<Mat4, 6> inverse_jacobian(const RigidParams& p, const Mat4& inverse) {
    const auto dm = to_matrix_jacobian(p);
    std::array<Mat4, 6> out;
    for (std::size_t i = 0; i < 6; ++i) {
        Mat4 t = compose(compose(inverse, dm[i]), inverse);
        for (double& v : t.m) v = -v;
        out[i] = t;
    }
    return out;
}

// Contracts the accumulated sum_o w_o * grad_I(o) (x) [u_o; 1] with dM^-1/dp.
ParamGradient contract(const std::array<double, 12>& acc, const std::array<Mat4, 6>& dinv,
                       const std::array<double, 3>& scale) {
    ParamGradient g{};
    for (std::size_t i = 0; i < 6; ++i) {
        double s = 0.0;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 4; ++c) {
                s += dinv[i](r, c) * scale[static_cast<std::size_t>(r)] *
                     acc[static_cast<std::size_t>(r * 4 + c)];
            }
        }
        g[i] = s;
    }
    return g;
}

}  // namespace

SampleGrid affine_grid(const Mat4& m, Dims dims) {
    if (!dims.positive()) throw InvalidArgument("grid dims must be positive");
    const Mat4 inverse = invert(m);
    SampleGrid grid{dims, {}};
    grid.coords.reserve(dims.count());
    const std::array<double, 3> half{dims.nx / 2.0, dims.ny / 2.0, dims.nz / 2.0};
    for (int k = 0; k < dims.nz; ++k) {
        for (int j = 0; j < dims.ny; ++j) {
            for (int i = 0; i < dims.nx; ++i) {
                const auto s = inverse.apply({i + 0.5 - half[0], j + 0.5 - half[1], k + 0.5 - half[2]});
                grid.coords.push_back({s[0] / half[0], s[1] / half[1], s[2] / half[2]});
            }
        }
    }
    return grid;
}

SampleGrid affine_grid(const RigidParams& p, Dims dims) { return affine_grid(to_matrix(p), dims); }

Volume3D sample(const Volume3D& vol, const SampleGrid& grid) {
    if (grid.coords.size() != grid.dims.count()) {
        throw InvalidArgument("sample grid has inconsistent coordinate count");
    }
    Volume3D out(grid.dims, vol.voxel_size_mm());
    const Dims& d = vol.dims();
    const float* src = vol.data().data();
    auto dst = out.data();
    for (std::size_t o = 0; o < grid.coords.size(); ++o) {
        const auto& c = grid.coords[o];
        const double x = ((c[0] + 1.0) * d.nx - 1.0) * 0.5;
        const double y = ((c[1] + 1.0) * d.ny - 1.0) * 0.5;
        const double z = ((c[2] + 1.0) * d.nz - 1.0) * 0.5;
        dst[o] = static_cast<float>(trilinear<false>(src, d, x, y, z).value);
    }
    return out;
}

Volume3D reorient(const Volume3D& vol, const Mat4& m) {
    const Dims& d = vol.dims();
    Volume3D out(d, vol.voxel_size_mm());
    const PullBack pb(m, d, d);
    const float* src = vol.data().data();
    auto dst = out.data();
    for_each_output(pb, d, [&](std::size_t o, int, int, int, const std::array<double, 3>& idx) {
        dst[o] = static_cast<float>(trilinear<false>(src, d, idx[0], idx[1], idx[2]).value);
    });
    return out;
}

Volume3D reorient(const Volume3D& vol, const RigidParams& p) { return reorient(vol, to_matrix(p)); }

ParamGradient sample_grad_params(const Volume3D& vol, const RigidParams& p,
                                 const Volume3D& upstream) {
    const Dims& d = vol.dims();
    if (!(upstream.dims() == d)) throw ShapeError("upstream dims must match the output dims");
    const PullBack pb(to_matrix(p), d, d);
    const float* src = vol.data().data();
    const auto up = upstream.data();

    std::array<double, 12> acc{};
    for_each_output(pb, d, [&](std::size_t o, int i, int j, int k, const std::array<double, 3>& idx) {
        const double w = up[o];
        if (w == 0.0) return;
        const Sample s = trilinear<true>(src, d, idx[0], idx[1], idx[2]);
        const auto u = pb.centred(i, j, k);
        const double g[3] = {w * s.dx, w * s.dy, w * s.dz};
        for (int r = 0; r < 3; ++r) {
            acc[static_cast<std::size_t>(r * 4 + 0)] += g[r] * u[0];
            acc[static_cast<std::size_t>(r * 4 + 1)] += g[r] * u[1];
            acc[static_cast<std::size_t>(r * 4 + 2)] += g[r] * u[2];
            acc[static_cast<std::size_t>(r * 4 + 3)] += g[r];
        }
    });
    return contract(acc, inverse_jacobian(p, pb.inverse), pb.scale);
}

WarpObjective warp_mse(const Volume3D& moving, const RigidParams& p, const Volume3D& fixed,
                       bool with_gradient, bool overlap_only) {
    const Dims& d = moving.dims();
    if (!(fixed.dims() == d)) throw ShapeError("moving and fixed volumes must share dims");
    const PullBack pb(to_matrix(p), d, d);
    const float* src = moving.data().data();
    const auto ref = fixed.data();
    const double hx = d.nx - 1.0, hy = d.ny - 1.0, hz = d.nz - 1.0;
    auto counted = [&](const std::array<double, 3>& idx) {
        return !overlap_only || (idx[0] >= 0.0 && idx[0] <= hx && idx[1] >= 0.0 && idx[1] <= hy &&
                                 idx[2] >= 0.0 && idx[2] <= hz);
    };

    double sse = 0.0;
    std::size_t used = 0;
    std::array<double, 12> acc{};
    if (with_gradient) {
        for_each_output(pb, d, [&](std::size_t o, int i, int j, int k, const std::array<double, 3>& idx) {
            if (!counted(idx)) return;
            ++used;
            const Sample s = trilinear<true>(src, d, idx[0], idx[1], idx[2]);
            const double r = s.value - ref[o];
            sse += r * r;
            if (s.dx == 0.0 && s.dy == 0.0 && s.dz == 0.0) return;
            const double w = 2.0 * r;
            const double u[3] = {i + 0.5 - pb.half_out[0], j + 0.5 - pb.half_out[1],
                                 k + 0.5 - pb.half_out[2]};
            const double g[3] = {w * s.dx, w * s.dy, w * s.dz};
            for (int q = 0; q < 3; ++q) {
                acc[static_cast<std::size_t>(q * 4 + 0)] += g[q] * u[0];
                acc[static_cast<std::size_t>(q * 4 + 1)] += g[q] * u[1];
                acc[static_cast<std::size_t>(q * 4 + 2)] += g[q] * u[2];
                acc[static_cast<std::size_t>(q * 4 + 3)] += g[q];
            }
        });
    } else {
        for_each_output(pb, d, [&](std::size_t o, int, int, int, const std::array<double, 3>& idx) {
            if (!counted(idx)) return;
            ++used;
            const double r = trilinear<false>(src, d, idx[0], idx[1], idx[2]).value - ref[o];
            sse += r * r;
        });
    }

    WarpObjective result;
    const double n = static_cast<double>(d.count());
    result.value = sse / n;
    result.overlap = static_cast<double>(used) / n;
    if (with_gradient) {
        for (double& a : acc) a /= n;
        result.gradient = contract(acc, inverse_jacobian(p, pb.inverse), pb.scale);
    }
    return result;
}

}  // namespace reorient
