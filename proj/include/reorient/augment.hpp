#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "reorient/manifest.hpp"
#include "reorient/transform.hpp"
#include "reorient/volume.hpp"

namespace reorient {

/// Lower bound on each fitted std: 0.5 voxel for translations, 1 degree for angles.
inline constexpr std::array<double, 6> kStdFloor{0.5, 0.5, 0.5, 1.0, 1.0, 1.0};
/// Augmented parameter sets generated per case.
inline constexpr int kAugmentationsPerCase = 40;

/// Independent per-parameter normals, truncated at mean +/- truncation_sigmas * std.
struct GaussianParamModel {
    std::array<double, 6> mean{};
    std::array<double, 6> std{kStdFloor};
    double truncation_sigmas = 2.0;

    void validate() const;
};

/// Componentwise mean and population std, std clamped up to kStdFloor.
GaussianParamModel fit_gaussians(std::span<const RigidParams> params, double truncation_sigmas = 2.0);

/// `count` draws by per-component rejection sampling. Same seed, same list.
std::vector<RigidParams> sample_truncated(const GaussianParamModel& model, int count,
                                          std::uint64_t seed);

/// Synthetic transaxial image whose ground-truth reorientation is p: the SA
/// volume resampled by the inverse of p.
Volume3D augment_pair(const Volume3D& sa_vol, const RigidParams& p);

/// Stream seed for case `index`, independent of processing order.
std::uint64_t case_seed(std::uint64_t seed, std::uint64_t index);

struct AugmentOptions {
    int count = kAugmentationsPerCase;
    double truncation_sigmas = 2.0;
    std::uint64_t seed = 0;
    int threads = 1;
};

/// Fits one pooled model over the manifest's params, draws `count` parameter
/// sets per case and writes the inverse-warped SA volumes into `out_dir`.
/// Returns (and writes to out_dir/manifest.json) the original entries followed
/// by the augmented ones, each tagged with its source case.
DatasetManifest augment_manifest(const DatasetManifest& input, const std::filesystem::path& out_dir,
                                 const AugmentOptions& options);

}  // namespace reorient
