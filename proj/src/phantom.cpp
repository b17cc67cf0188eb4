#include "reorient/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

#include "reorient/error.hpp"
#include "reorient/parallel.hpp"

namespace reorient {

namespace fs = std::filesystem;

void PhantomSpec::validate() const {
    if (!dims.positive()) throw InvalidArgument("phantom dims must be positive");
    for (int i = 0; i < 3; ++i) {
        const auto a = static_cast<std::size_t>(i);
        if (!(inner_semi_axes[a] > 0.0) || !(inner_semi_axes[a] < outer_semi_axes[a])) {
            throw InvalidArgument("inner semi-axes must be positive and strictly inside the outer ones");
        }
    }
    if (!(truncation >= 0.0 && truncation <= 1.0)) throw InvalidArgument("truncation must lie in [0, 1]");
    if (!(shell_intensity > 0.0 && shell_intensity <= 1.0)) {
        throw InvalidArgument("shell intensity must lie in (0, 1]");
    }
    if (!(edge_width >= 0.0)) throw InvalidArgument("edge width must be non-negative");
    if (defect && !(defect->severity >= 0.0 && defect->severity <= 1.0)) {
        throw InvalidArgument("defect severity must lie in [0, 1]");
    }
    if (defect && !(defect->width_deg > 0.0)) throw InvalidArgument("defect width must be positive");
    if (blob_count < 0) throw InvalidArgument("blob count must be non-negative");
    if (!(blob_intensity >= 0.0 && blob_intensity <= 1.0)) {
        throw InvalidArgument("blob intensity must lie in [0, 1]");
    }
    if (!(noise >= 0.0 && noise <= 0.2)) throw InvalidArgument("noise must lie in [0, 0.2]");
    if (!(rv_intensity >= 0.0 && rv_intensity <= 1.0)) throw InvalidArgument("rv intensity must lie in [0, 1]");
}

namespace {

// Voxel centre relative to the ellipsoid centre. The centre is shifted so the
// apex-to-base span is centred in the volume.
std::array<double, 3> lv_coords(const PhantomSpec& s, int x, int y, int z) {
    const double az = s.outer_semi_axes[2];
    const double centre_z = az * (1.0 - s.truncation) / 2.0;
    return {x + 0.5 - s.dims.nx / 2.0, y + 0.5 - s.dims.ny / 2.0,
            z + 0.5 - s.dims.nz / 2.0 - centre_z};
}

double radius(const std::array<double, 3>& q, const std::array<double, 3>& axes) {
    const double a = q[0] / axes[0], b = q[1] / axes[1], c = q[2] / axes[2];
    return std::sqrt(a * a + b * b + c * c);
}

// 1 inside, cosine-squared fall-off over `width` beyond the boundary.
double taper(double distance, double width) {
    if (distance <= 0.0) return 1.0;
    if (distance >= width) return 0.0;
    const double c = std::cos(0.5 * std::numbers::pi * distance / width);
    return c * c;
}

struct ShellDistances {
    double outside_outer;  // > 0 beyond the outer surface
    double inside_inner;   // > 0 inside the cavity
    double above_base;     // > 0 above the basal plane
};

ShellDistances shell_distances(const PhantomSpec& s, const std::array<double, 3>& q) {
    const auto& o = s.outer_semi_axes;
    const auto& i = s.inner_semi_axes;
    const double min_o = std::min({o[0], o[1], o[2]});
    const double min_i = std::min({i[0], i[1], i[2]});
    return {(radius(q, o) - 1.0) * min_o, (1.0 - radius(q, i)) * min_i,
            q[2] - s.truncation * o[2]};
}

constexpr double kRvWall = 1.5;

// RV ellipsoid relative to the LV ellipsoid centre.
std::array<double, 3> rv_centre(const PhantomSpec& s) { return {-0.5 * s.outer_semi_axes[0], 0.0, 0.0}; }
std::array<double, 3> rv_axes(const PhantomSpec& s) {
    const auto& o = s.outer_semi_axes;
    return {1.2 * o[0], 1.5 * o[1], 0.9 * o[2]};
}

// Only the part of the RV shell beyond its own centre on -x is kept, which
// leaves a crescent hugging the septal side of the LV.
double rv_weight(const PhantomSpec& s, const std::array<double, 3>& q) {
    const auto c = rv_centre(s);
    const auto a = rv_axes(s);
    const std::array<double, 3> r{q[0] - c[0], q[1] - c[1], q[2] - c[2]};
    const std::array<double, 3> inner{a[0] - kRvWall, a[1] - kRvWall, a[2] - kRvWall};
    const double min_a = std::min({a[0], a[1], a[2]});
    const double min_i = std::min({inner[0], inner[1], inner[2]});
    const double outside = (radius(r, a) - 1.0) * min_a;
    const double cavity = (1.0 - radius(r, inner)) * min_i;
    const double base = q[2] - s.truncation * s.outer_semi_axes[2];
    return taper(outside, s.edge_width) * taper(cavity, s.edge_width) * taper(base, s.edge_width) *
           taper(r[0], s.edge_width);
}

bool defect_covers(const Defect& d, const std::array<double, 3>& q) {
    const double az = std::atan2(q[1], q[0]) * 180.0 / std::numbers::pi;
    double delta = std::fmod(std::abs(az - d.azimuth_deg), 360.0);
    if (delta > 180.0) delta = 360.0 - delta;
    return delta <= d.width_deg / 2.0;
}

}  // namespace

bool in_shell(const PhantomSpec& spec, int x, int y, int z) {
    const auto d = shell_distances(spec, lv_coords(spec, x, y, z));
    return d.outside_outer <= 0.0 && d.inside_inner <= 0.0 && d.above_base <= 0.0;
}

bool in_defect(const PhantomSpec& spec, int x, int y, int z) {
    return spec.defect && in_shell(spec, x, y, z) &&
           defect_covers(*spec.defect, lv_coords(spec, x, y, z));
}

Volume3D generate_phantom(const PhantomSpec& spec, std::uint64_t seed) {
    spec.validate();
    const Dims& d = spec.dims;
    Volume3D vol(d);
    std::mt19937_64 rng(seed);

    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const auto q = lv_coords(spec, x, y, z);
                const auto s = shell_distances(spec, q);
                double v = spec.shell_intensity * taper(s.outside_outer, spec.edge_width) *
                           taper(s.inside_inner, spec.edge_width) *
                           taper(s.above_base, spec.edge_width);
                if (spec.defect && v > 0.0 && defect_covers(*spec.defect, q)) {
                    v *= 1.0 - spec.defect->severity;
                }
                if (spec.rv_intensity > 0.0) v = std::max(v, spec.rv_intensity * rv_weight(spec, q));
                vol.at(x, y, z) = static_cast<float>(v);
            }
        }
    }

    // Extracardiac uptake, kept clear of the LV.
    double reach = *std::max_element(spec.outer_semi_axes.begin(), spec.outer_semi_axes.end());
    if (spec.rv_intensity > 0.0) reach = std::max(reach, rv_axes(spec)[0] - rv_centre(spec)[0]);
    const double keep_out = reach + spec.blob_radius + spec.edge_width;
    std::uniform_real_distribution<double> ux(0.0, d.nx), uy(0.0, d.ny), uz(0.0, d.nz);
    for (int b = 0; b < spec.blob_count; ++b) {
        std::array<double, 3> c{};
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            c = {ux(rng), uy(rng), uz(rng)};
            const double dx = c[0] - d.nx / 2.0, dy = c[1] - d.ny / 2.0, dz = c[2] - d.nz / 2.0;
            placed = std::sqrt(dx * dx + dy * dy + dz * dz) > keep_out;
        }
        if (!placed) continue;
        for (int z = 0; z < d.nz; ++z) {
            for (int y = 0; y < d.ny; ++y) {
                for (int x = 0; x < d.nx; ++x) {
                    const double dx = x + 0.5 - c[0], dy = y + 0.5 - c[1], dz = z + 0.5 - c[2];
                    const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
                    const double add = spec.blob_intensity * taper(r - spec.blob_radius, spec.edge_width);
                    if (add > 0.0) vol.at(x, y, z) = static_cast<float>(vol.at(x, y, z) + add);
                }
            }
        }
    }

    std::normal_distribution<double> gauss(0.0, 1.0);
    for (float& v : vol.data()) {
        double value = v;
        if (spec.noise > 0.0) value += spec.noise * gauss(rng);
        v = static_cast<float>(std::clamp(value, 0.0, 1.0));
    }
    return vol;
}

PhantomSpec draw_spec(const PhantomRanges& r, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto draw = [&](const Range& range) {
        return std::uniform_real_distribution<double>(range.lo, range.hi)(rng);
    };
    PhantomSpec s;
    s.dims = r.dims;
    const double ox = draw(r.outer_x);
    const double oy = ox / draw(r.ellipticity);
    const double oz = draw(r.outer_z);
    const double wall = draw(r.wall);
    s.outer_semi_axes = {ox, oy, oz};
    s.inner_semi_axes = {ox - wall, oy - wall, oz - wall};
    s.truncation = draw(r.truncation);
    s.rv_intensity = draw(r.rv_intensity);
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < r.defect_probability) {
        s.defect = Defect{draw(Range{-180.0, 180.0}), draw(r.defect_width_deg), draw(r.defect_severity)};
    }
    s.blob_count = std::uniform_int_distribution<int>(0, std::max(0, r.max_blobs))(rng);
    s.blob_intensity = draw(r.blob_intensity);
    s.noise = draw(r.noise);
    s.validate();
    return s;
}

PhantomCase make_case(const GaussianParamModel& param_model, const PhantomRanges& ranges,
                      std::uint64_t seed, std::size_t index) {
    const std::uint64_t base = case_seed(seed, index);
    PhantomCase c;
    c.spec = draw_spec(ranges, case_seed(base, 0));
    c.sa = generate_phantom(c.spec, case_seed(base, 1));
    c.params = sample_truncated(param_model, 1, case_seed(base, 2)).front();
    c.transaxial = augment_pair(c.sa, c.params);
    return c;
}

std::vector<PhantomCase> make_cases(int n_cases, const GaussianParamModel& param_model,
                                    const PhantomRanges& ranges, std::uint64_t seed, int threads) {
    if (n_cases < 1) throw InvalidArgument("need at least one phantom case");
    std::vector<PhantomCase> cases(static_cast<std::size_t>(n_cases));
    parallel_for(cases.size(), threads, [&](std::size_t i) {
        cases[i] = make_case(param_model, ranges, seed, i);
    });
    return cases;
}

DatasetManifest make_dataset(int n_cases, const GaussianParamModel& param_model,
                             const PhantomRanges& ranges, std::uint64_t seed,
                             const fs::path& out_dir, int threads) {
    if (n_cases < 1) throw InvalidArgument("need at least one phantom case");
    fs::create_directories(out_dir);
    DatasetManifest manifest;
    manifest.base_dir = out_dir;
    manifest.entries.resize(static_cast<std::size_t>(n_cases));
    parallel_for(manifest.entries.size(), threads, [&](std::size_t i) {
        const PhantomCase c = make_case(param_model, ranges, seed, i);
        char stem[32];
        std::snprintf(stem, sizeof stem, "case_%04zu", i);
        const std::string sa = std::string(stem) + "_sa";
        const std::string tra = std::string(stem) + "_tra";
        save_volume(c.sa, out_dir / sa);
        save_volume(c.transaxial, out_dir / tra);
        manifest.entries[i] = ManifestEntry{tra + ".json", sa + ".json", c.params, std::nullopt};
    });
    save_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

}  // namespace reorient
