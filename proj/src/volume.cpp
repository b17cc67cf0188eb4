#include "reorient/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "reorient/error.hpp"

namespace reorient {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void check_dims(Dims dims) {
    if (!dims.positive()) {
        throw InvalidArgument("volume dims must be positive, got (" + std::to_string(dims.nx) +
                              "," + std::to_string(dims.ny) + "," + std::to_string(dims.nz) + ")");
    }
}

void check_spacing(const Spacing& s) {
    for (double v : s) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw InvalidArgument("voxel sizes must be finite and strictly positive");
        }
    }
}

std::uint32_t to_little_endian(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
    }
    return v;
}

}  // namespace

Volume3D::Volume3D(Dims dims, Spacing voxel_size_mm)
    : dims_(dims), voxel_size_mm_(voxel_size_mm) {
    check_dims(dims);
    check_spacing(voxel_size_mm);
    data_.assign(dims.count(), 0.0f);
}

Volume3D::Volume3D(Dims dims, Spacing voxel_size_mm, std::vector<float> data)
    : dims_(dims), voxel_size_mm_(voxel_size_mm), data_(std::move(data)) {
    check_dims(dims);
    check_spacing(voxel_size_mm);
    if (data_.size() != dims.count()) {
        throw InvalidArgument("volume data length " + std::to_string(data_.size()) +
                              " does not match dims product " + std::to_string(dims.count()));
    }
}

float Volume3D::max_value() const noexcept {
    if (data_.empty()) return 0.0f;
    return *std::max_element(data_.begin(), data_.end());
}

fs::path volume_header_path(const fs::path& path) {
    if (path.extension() == ".json") return path;
    if (path.extension() == ".f32") {
        fs::path p = path;
        return p.replace_extension(".json");
    }
    return fs::path(path.string() + ".json");
}

fs::path volume_payload_path(const fs::path& path) {
    fs::path header = volume_header_path(path);
    return header.replace_extension(".f32");
}

Volume3D load_volume(const fs::path& path) {
    const fs::path header_path = volume_header_path(path);
    const fs::path payload_path = volume_payload_path(path);

    std::ifstream header_in(header_path);
    if (!header_in) throw IoError("cannot open volume header " + header_path.string());
    json header;
    try {
        header_in >> header;
    } catch (const json::exception& e) {
        throw FormatError("malformed volume header " + header_path.string() + ": " + e.what());
    }

    Dims dims;
    Spacing spacing{};
    try {
        const auto& d = header.at("dims");
        const auto& s = header.at("voxel_size_mm");
        if (d.size() != 3 || s.size() != 3) throw FormatError("dims and voxel_size_mm need 3 entries");
        dims = Dims{d[0].get<int>(), d[1].get<int>(), d[2].get<int>()};
        spacing = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
        if (header.contains("dtype") && header["dtype"].get<std::string>() != "f32le") {
            throw FormatError("unsupported dtype " + header["dtype"].get<std::string>());
        }
    } catch (const json::exception& e) {
        throw FormatError("invalid volume header " + header_path.string() + ": " + e.what());
    }
    check_dims(dims);
    check_spacing(spacing);

    std::ifstream payload_in(payload_path, std::ios::binary);
    if (!payload_in) throw IoError("cannot open volume payload " + payload_path.string());
    const auto payload_bytes = fs::file_size(payload_path);
    const auto expected_bytes = dims.count() * sizeof(float);
    if (payload_bytes != expected_bytes) {
        throw FormatError("payload " + payload_path.string() + " has " +
                          std::to_string(payload_bytes) + " bytes, header implies " +
                          std::to_string(expected_bytes));
    }

    std::vector<std::uint32_t> raw(dims.count());
    payload_in.read(reinterpret_cast<char*>(raw.data()),
                    static_cast<std::streamsize>(expected_bytes));
    if (!payload_in) throw IoError("short read on " + payload_path.string());

    std::vector<float> data(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        data[i] = std::bit_cast<float>(to_little_endian(raw[i]));
    }
    return Volume3D(dims, spacing, std::move(data));
}

void save_volume(const Volume3D& vol, const fs::path& path) {
    const fs::path header_path = volume_header_path(path);
    const fs::path payload_path = volume_payload_path(path);

    const json header = {
        {"dims", {vol.dims().nx, vol.dims().ny, vol.dims().nz}},
        {"voxel_size_mm", {vol.voxel_size_mm()[0], vol.voxel_size_mm()[1], vol.voxel_size_mm()[2]}},
        {"dtype", "f32le"},
    };
    std::ofstream header_out(header_path);
    if (!header_out) throw IoError("cannot write volume header " + header_path.string());
    header_out << header.dump(2) << '\n';
    if (!header_out) throw IoError("write failed for " + header_path.string());

    std::vector<std::uint32_t> raw(vol.size());
    const auto data = vol.data();
    for (std::size_t i = 0; i < raw.size(); ++i) {
        raw[i] = to_little_endian(std::bit_cast<std::uint32_t>(data[i]));
    }
    std::ofstream payload_out(payload_path, std::ios::binary);
    if (!payload_out) throw IoError("cannot write volume payload " + payload_path.string());
    payload_out.write(reinterpret_cast<const char*>(raw.data()),
                      static_cast<std::streamsize>(raw.size() * sizeof(std::uint32_t)));
    if (!payload_out) throw IoError("write failed for " + payload_path.string());
}

Volume3D resize_trilinear(const Volume3D& vol, Dims target) {
    check_dims(target);
    const Dims& in = vol.dims();
    if (target == in) return vol;

    const Spacing& s = vol.voxel_size_mm();
    const Spacing out_spacing{s[0] * in.nx / target.nx, s[1] * in.ny / target.ny,
                              s[2] * in.nz / target.nz};
    Volume3D out(target, out_spacing);

    // Source coordinate of each output centre along one axis, clamped to the
    // outermost source centres.
    struct Tap {
        int lo;
        int hi;
        double w;
    };
    auto taps = [](int n_in, int n_out) {
        std::vector<Tap> t(static_cast<std::size_t>(n_out));
        for (int i = 0; i < n_out; ++i) {
            double c = (i + 0.5) * n_in / n_out - 0.5;
            c = std::clamp(c, 0.0, static_cast<double>(n_in - 1));
            const int lo = std::min(static_cast<int>(std::floor(c)), n_in - 1);
            const int hi = std::min(lo + 1, n_in - 1);
            t[static_cast<std::size_t>(i)] = {lo, hi, c - lo};
        }
        return t;
    };
    const auto tx = taps(in.nx, target.nx);
    const auto ty = taps(in.ny, target.ny);
    const auto tz = taps(in.nz, target.nz);

    for (int z = 0; z < target.nz; ++z) {
        const Tap& cz = tz[static_cast<std::size_t>(z)];
        for (int y = 0; y < target.ny; ++y) {
            const Tap& cy = ty[static_cast<std::size_t>(y)];
            for (int x = 0; x < target.nx; ++x) {
                const Tap& cx = tx[static_cast<std::size_t>(x)];
                auto lerp_x = [&](int yy, int zz) {
                    return (1.0 - cx.w) * vol.at(cx.lo, yy, zz) + cx.w * vol.at(cx.hi, yy, zz);
                };
                const double c0 = (1.0 - cy.w) * lerp_x(cy.lo, cz.lo) + cy.w * lerp_x(cy.hi, cz.lo);
                const double c1 = (1.0 - cy.w) * lerp_x(cy.lo, cz.hi) + cy.w * lerp_x(cy.hi, cz.hi);
                out.at(x, y, z) = static_cast<float>((1.0 - cz.w) * c0 + cz.w * c1);
            }
        }
    }
    return out;
}

Volume3D gradient_magnitude(const Volume3D& vol) {
    const Dims& d = vol.dims();
    if (d.nx < 2 || d.ny < 2 || d.nz < 2) {
        throw InvalidArgument("gradient_magnitude needs at least 2 voxels along every axis");
    }
    Volume3D out(d, vol.voxel_size_mm());

    auto diff = [&](int i, int n, auto&& value_at) {
        if (i == 0) return value_at(1) - value_at(0);
        if (i == n - 1) return value_at(n - 1) - value_at(n - 2);
        return 0.5 * (value_at(i + 1) - value_at(i - 1));
    };

    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const double gx = diff(x, d.nx, [&](int i) { return double(vol.at(i, y, z)); });
                const double gy = diff(y, d.ny, [&](int i) { return double(vol.at(x, i, z)); });
                const double gz = diff(z, d.nz, [&](int i) { return double(vol.at(x, y, i)); });
                out.at(x, y, z) = static_cast<float>(std::sqrt(gx * gx + gy * gy + gz * gz));
            }
        }
    }
    return out;
}

Volume3D normalize(const Volume3D& vol) {
    Volume3D out(vol.dims(), vol.voxel_size_mm());
    const float peak = vol.max_value();
    if (!(peak > 0.0f)) return out;
    auto src = vol.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = std::max(0.0f, src[i] / peak);
    }
    return out;
}

}  // namespace reorient
