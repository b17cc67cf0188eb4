#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "reorient/transform.hpp"

namespace reorient {

/// One case. Paths are stored relative to the manifest file's directory.
struct ManifestEntry {
    std::string transaxial_path;
    std::optional<std::string> sa_path;
    std::optional<RigidParams> params;
    std::optional<int> source_case;  // set on augmented entries

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    /// Directory relative paths resolve against; not serialised.
    std::filesystem::path base_dir;

    std::filesystem::path resolve(const std::string& relative) const { return base_dir / relative; }
};

/// JSON array of {"transaxial_path", "sa_path"?, "params"?, "source_case"?}.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace reorient
