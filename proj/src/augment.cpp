#include "reorient/augment.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "reorient/error.hpp"
#include "reorient/parallel.hpp"
#include "reorient/stn.hpp"

namespace reorient {

namespace fs = std::filesystem;

void GaussianParamModel::validate() const {
    if (!(truncation_sigmas > 0.0)) throw InvalidArgument("truncation_sigmas must be positive");
    for (std::size_t i = 0; i < 6; ++i) {
        if (!std::isfinite(mean[i]) || !std::isfinite(std[i]) || std[i] < 0.0) {
            throw InvalidArgument("gaussian model needs finite means and non-negative stds");
        }
    }
}

GaussianParamModel fit_gaussians(std::span<const RigidParams> params, double truncation_sigmas) {
    if (params.size() < 2) throw InvalidArgument("fit_gaussians needs at least 2 samples");
    GaussianParamModel model;
    model.truncation_sigmas = truncation_sigmas;
    const double n = static_cast<double>(params.size());
    for (std::size_t i = 0; i < 6; ++i) {
        double sum = 0.0;
        for (const auto& p : params) sum += p.to_array()[i];
        const double mean = sum / n;
        double ss = 0.0;
        for (const auto& p : params) {
            const double d = p.to_array()[i] - mean;
            ss += d * d;
        }
        model.mean[i] = mean;
        model.std[i] = std::max(std::sqrt(ss / n), kStdFloor[i]);
    }
    model.validate();
    return model;
}

std::vector<RigidParams> sample_truncated(const GaussianParamModel& model, int count,
                                          std::uint64_t seed) {
    model.validate();
    if (count < 1) throw InvalidArgument("sample count must be at least 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<RigidParams> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        std::array<double, 6> a{};
        for (std::size_t i = 0; i < 6; ++i) {
            if (model.std[i] == 0.0) {
                a[i] = model.mean[i];
                continue;
            }
            double z;
            do {
                z = unit(rng);
            } while (std::abs(z) > model.truncation_sigmas);
            a[i] = model.mean[i] + z * model.std[i];
        }
        out.push_back(RigidParams::from_array(a));
    }
    return out;
}

Volume3D augment_pair(const Volume3D& sa_vol, const RigidParams& p) {
    return reorient(sa_vol, matrix_to_params(invert(to_matrix(p))));
}

std::uint64_t case_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 over the pair
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

namespace {

std::string relative_to(const fs::path& target, const fs::path& dir) {
    const fs::path abs_target = fs::absolute(target).lexically_normal();
    const fs::path abs_dir = fs::absolute(dir).lexically_normal();
    return abs_target.lexically_relative(abs_dir).generic_string();
}

}  // namespace

DatasetManifest augment_manifest(const DatasetManifest& input, const fs::path& out_dir,
                                 const AugmentOptions& options) {
    if (input.entries.empty()) throw InvalidArgument("cannot augment an empty manifest");
    if (options.count < 1) throw InvalidArgument("augmentation count must be at least 1");

    std::vector<RigidParams> observed;
    for (std::size_t i = 0; i < input.entries.size(); ++i) {
        const auto& e = input.entries[i];
        if (!e.params || !e.sa_path) {
            throw InvalidArgument("manifest entry " + std::to_string(i) +
                                  " needs params and sa_path for augmentation");
        }
        observed.push_back(*e.params);
    }
    const GaussianParamModel model = fit_gaussians(observed, options.truncation_sigmas);

    fs::create_directories(out_dir);
    DatasetManifest out;
    out.base_dir = out_dir;
    for (const auto& e : input.entries) {
        ManifestEntry copy = e;
        copy.transaxial_path = relative_to(input.resolve(e.transaxial_path), out_dir);
        copy.sa_path = relative_to(input.resolve(*e.sa_path), out_dir);
        out.entries.push_back(std::move(copy));
    }

    const std::size_t n_cases = input.entries.size();
    std::vector<std::vector<ManifestEntry>> generated(n_cases);
    parallel_for(n_cases, options.threads, [&](std::size_t c) {
        const auto& e = input.entries[c];
        const Volume3D sa = load_volume(input.resolve(*e.sa_path));
        const auto draws = sample_truncated(model, options.count, case_seed(options.seed, c));
        for (std::size_t k = 0; k < draws.size(); ++k) {
            char name[64];
            std::snprintf(name, sizeof name, "aug_%04zu_%02zu", c, k);
            save_volume(augment_pair(sa, draws[k]), out_dir / name);
            ManifestEntry a;
            a.transaxial_path = std::string(name) + ".json";
            a.sa_path = out.entries[c].sa_path;
            a.params = draws[k];
            a.source_case = static_cast<int>(c);
            generated[c].push_back(std::move(a));
        }
    });
    for (auto& g : generated) {
        for (auto& a : g) out.entries.push_back(std::move(a));
    }
    save_manifest(out, out_dir / "manifest.json");
    return out;
}

}  // namespace reorient
