#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "reorient/manifest.hpp"
#include "reorient/model.hpp"
#include "reorient/transform.hpp"

namespace reorient {

/// Pearson product-moment correlation. Throws DegenerateInputError when either
/// sequence has zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct ParamStats {
    /// NaN when the predictions (or truths) for this parameter are constant.
    double pearson_r = 0.0;
    double mae = 0.0;
    std::size_t n = 0;
};

struct CaseResult {
    std::string transaxial_path;
    RigidParams truth;
    RigidParams predicted;
};

struct EvalReport {
    std::array<ParamStats, 6> params{};
    std::vector<CaseResult> cases;
    nlohmann::json config = nlohmann::json::object();
};

EvalReport summarize(std::vector<CaseResult> cases);

using Predictor = std::function<RigidParams(const Volume3D&)>;

/// Predicts every manifest case and compares against its ground truth.
EvalReport evaluate(const Predictor& predictor, const DatasetManifest& manifest, int threads = 1);
EvalReport evaluate(const ReorientModel& model, const DatasetManifest& manifest, int threads = 1);

/// Writes report.json (summary, per-case residuals, config echo) and
/// report.csv (parameter,pearson_r,mae,n; one row per parameter).
void write_report(const EvalReport& report, const std::filesystem::path& out_dir);

}  // namespace reorient
