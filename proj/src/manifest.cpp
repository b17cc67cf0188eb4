#include "reorient/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "reorient/error.hpp"

namespace reorient {

namespace fs = std::filesystem;
using json = nlohmann::json;

DatasetManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("malformed manifest " + path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw FormatError("manifest " + path.string() + " must be a JSON array");

    DatasetManifest m;
    m.base_dir = path.parent_path();
    try {
        for (const auto& item : j) {
            ManifestEntry e;
            e.transaxial_path = item.at("transaxial_path").get<std::string>();
            if (item.contains("sa_path")) e.sa_path = item["sa_path"].get<std::string>();
            if (item.contains("params")) e.params = item["params"].get<RigidParams>();
            if (item.contains("source_case")) e.source_case = item["source_case"].get<int>();
            m.entries.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw FormatError("invalid manifest entry in " + path.string() + ": " + e.what());
    }
    return m;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
    json j = json::array();
    for (const auto& e : manifest.entries) {
        json item;
        item["transaxial_path"] = e.transaxial_path;
        if (e.sa_path) item["sa_path"] = *e.sa_path;
        if (e.params) item["params"] = *e.params;
        if (e.source_case) item["source_case"] = *e.source_case;
        j.push_back(std::move(item));
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace reorient
