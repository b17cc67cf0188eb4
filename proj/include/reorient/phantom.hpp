#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "reorient/augment.hpp"
#include "reorient/manifest.hpp"
#include "reorient/volume.hpp"

namespace reorient {

/// Perfusion defect: an angular sector of the wall (azimuth measured in the
/// short-axis plane from +x towards +y) scaled by (1 - severity).
struct Defect {
    double azimuth_deg = 0.0;
    double width_deg = 60.0;
    double severity = 1.0;
};

/// Left-ventricle phantom in canonical short-axis pose: a truncated
/// ellipsoidal shell with its long axis on +z and the apex at low z, centred
/// in the volume.
struct PhantomSpec {
    Dims dims = kCanonicalDims;
    /// Semi-axes in voxels (x, y, z); z is the long axis.
    std::array<double, 3> outer_semi_axes{7.0, 5.0, 11.0};
    std::array<double, 3> inner_semi_axes{4.5, 2.5, 8.5};
    /// Basal cut plane height above the ellipsoid equator, as a fraction of
    /// the outer long semi-axis. 0 keeps exactly the apical half.
    double truncation = 0.2;
    double shell_intensity = 1.0;
    /// Width in voxels of the cosine fall-off outside the shell.
    double edge_width = 2.0;
    std::optional<Defect> defect;
    /// Right-ventricle free wall: a thin crescent on the -x side of the LV
    /// that fixes the in-plane orientation. 0 leaves it out.
    double rv_intensity = 0.0;
    int blob_count = 0;
    double blob_intensity = 0.5;
    double blob_radius = 3.0;
    /// Std of additive Gaussian noise, result clipped to [0, 1].
    double noise = 0.0;

    void validate() const;
};

/// Deterministic per seed; values in [0, 1]. Noise-free shell voxels equal
/// shell_intensity exactly.
Volume3D generate_phantom(const PhantomSpec& spec, std::uint64_t seed);

/// True when the centre of voxel (x, y, z) lies inside the hard shell (before
/// fall-off, defect, blobs and noise).
bool in_shell(const PhantomSpec& spec, int x, int y, int z);
/// True when voxel (x, y, z) is a shell voxel inside the defect sector.
bool in_defect(const PhantomSpec& spec, int x, int y, int z);

struct Range {
    double lo;
    double hi;
};

/// Ranges that make_dataset draws phantom specs from (uniformly).
struct PhantomRanges {
    Dims dims = kCanonicalDims;
    Range outer_x{6.0, 7.5};
    Range ellipticity{1.35, 1.6};  // outer x / outer y
    Range outer_z{10.0, 11.5};
    Range wall{2.0, 3.0};
    Range truncation{0.1, 0.3};
    Range rv_intensity{0.3, 0.5};
    double defect_probability = 0.3;
    Range defect_width_deg{30.0, 90.0};
    Range defect_severity{0.3, 1.0};
    int max_blobs = 1;
    Range blob_intensity{0.2, 0.5};
    Range noise{0.0, 0.03};
};

PhantomSpec draw_spec(const PhantomRanges& ranges, std::uint64_t seed);

struct PhantomCase {
    PhantomSpec spec;
    Volume3D sa;
    Volume3D transaxial;
    RigidParams params;
};

/// Case i uses streams derived from (seed, i), so cases are independent of
/// generation order.
PhantomCase make_case(const GaussianParamModel& param_model, const PhantomRanges& ranges,
                      std::uint64_t seed, std::size_t index);

std::vector<PhantomCase> make_cases(int n_cases, const GaussianParamModel& param_model,
                                    const PhantomRanges& ranges, std::uint64_t seed,
                                    int threads = 1);

/// Writes case_NNNN_sa / case_NNNN_tra volumes and out_dir/manifest.json.
DatasetManifest make_dataset(int n_cases, const GaussianParamModel& param_model,
                             const PhantomRanges& ranges, std::uint64_t seed,
                             const std::filesystem::path& out_dir, int threads = 1);

}  // namespace reorient
