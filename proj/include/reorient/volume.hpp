#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace reorient {

/// Grid extent in voxels, x fastest.
struct Dims {
    int nx = 0;
    int ny = 0;
    int nz = 0;

    std::size_t count() const noexcept {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }
    bool positive() const noexcept { return nx > 0 && ny > 0 && nz > 0; }
    int operator[](int axis) const noexcept { return axis == 0 ? nx : axis == 1 ? ny : nz; }

    friend bool operator==(const Dims&, const Dims&) = default;
};

using Spacing = std::array<double, 3>;

/// Network input grid: 64 x 64 x 32 voxels.
inline constexpr Dims kCanonicalDims{64, 64, 32};
/// Reconstructed voxel size of the source acquisitions.
inline constexpr double kCanonicalVoxelMm = 6.4;

/// Scalar 3D image. Samples are stored row-major with x fastest:
/// index = x + nx * (y + ny * z).
class Volume3D {
public:
    Volume3D() = default;
    explicit Volume3D(Dims dims, Spacing voxel_size_mm = {kCanonicalVoxelMm, kCanonicalVoxelMm,
                                                          kCanonicalVoxelMm});
    Volume3D(Dims dims, Spacing voxel_size_mm, std::vector<float> data);

    const Dims& dims() const noexcept { return dims_; }
    const Spacing& voxel_size_mm() const noexcept { return voxel_size_mm_; }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    std::size_t index(int x, int y, int z) const noexcept {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(dims_.nx) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims_.ny) * z);
    }
    float at(int x, int y, int z) const noexcept { return data_[index(x, y, z)]; }
    float& at(int x, int y, int z) noexcept { return data_[index(x, y, z)]; }

    float max_value() const noexcept;

    friend bool operator==(const Volume3D&, const Volume3D&) = default;

private:
    Dims dims_{};
    Spacing voxel_size_mm_{kCanonicalVoxelMm, kCanonicalVoxelMm, kCanonicalVoxelMm};
    std::vector<float> data_;
};

/// Reads a `<name>.json` header and its `<name>.f32` payload. `path` may name
/// either file or the common stem.
Volume3D load_volume(const std::filesystem::path& path);

/// Writes `<stem>.json` and `<stem>.f32`; the payload is little-endian f32.
void save_volume(const Volume3D& vol, const std::filesystem::path& path);

/// Header and payload paths for a volume path given as stem, header or payload.
std::filesystem::path volume_header_path(const std::filesystem::path& path);
std::filesystem::path volume_payload_path(const std::filesystem::path& path);

/// Trilinear resampling at voxel centres, aligned-corners off. Physical extent
/// is preserved, so voxel size scales by the dims ratio.
Volume3D resize_trilinear(const Volume3D& vol, Dims target);

/// Magnitude of central differences (one-sided at the faces), voxel units.
Volume3D gradient_magnitude(const Volume3D& vol);

/// Divides by the global maximum and clamps below at zero. A volume whose
/// maximum is not positive maps to all zeros.
Volume3D normalize(const Volume3D& vol);

}  // namespace reorient
