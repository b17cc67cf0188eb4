#pragma once

#include <array>
#include <vector>

#include "reorient/transform.hpp"
#include "reorient/volume.hpp"

namespace reorient {

/// Source coordinate for every output voxel, in normalised space where the
/// outer faces of the volume sit at -1 and +1 (aligned-corners off).
struct SampleGrid {
    Dims dims;
    std::vector<std::array<double, 3>> coords;
};

/// Pull-back grid: output voxel centre u maps to M^-1 u, so applying p moves
/// image content forward by p.
SampleGrid affine_grid(const RigidParams& p, Dims dims);
SampleGrid affine_grid(const Mat4& m, Dims dims);

/// Trilinear interpolation of `vol` at each grid coordinate. Lattice points
/// outside the volume read as zero.
Volume3D sample(const Volume3D& vol, const SampleGrid& grid);

/// sample(vol, affine_grid(p, vol.dims())).
Volume3D reorient(const Volume3D& vol, const RigidParams& p);
Volume3D reorient(const Volume3D& vol, const Mat4& m);

using ParamGradient = std::array<double, 6>;

/// d <upstream, reorient(vol, p)> / dp, in the RigidParams::to_array() order.
/// The interpolant is piecewise linear; on a cell face the derivative across
/// the face is the mean of the two one-sided slopes.
ParamGradient sample_grad_params(const Volume3D& vol, const RigidParams& p,
                                 const Volume3D& upstream);

struct WarpObjective {
    double value = 0.0;
    ParamGradient gradient{};
    /// Fraction of output voxels that were scored.
    double overlap = 1.0;
};

/// Mean squared difference between reorient(moving, p) and fixed, with its
/// parameter gradient when requested. One pass over the output grid.
/// With overlap_only, output voxels whose sample point falls outside the
/// moving grid (beyond its first or last voxel centre) contribute nothing, so
/// content clipped from moving is not matched against zero padding. The
/// divisor stays the full voxel count, which keeps the value from jumping as
/// background voxels leave the overlap. The gradient treats the set as fixed.
WarpObjective warp_mse(const Volume3D& moving, const RigidParams& p, const Volume3D& fixed,
                       bool with_gradient = true, bool overlap_only = false);

}  // namespace reorient
