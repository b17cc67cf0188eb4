#include "reorient/eval.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "reorient/error.hpp"
#include "reorient/parallel.hpp"

namespace reorient {

namespace fs = std::filesystem;
using json = nlohmann::json;

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw InvalidArgument("pearson inputs differ in length");
    if (xs.size() < 2) throw InvalidArgument("pearson needs at least 2 samples");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateInputError("pearson input has zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

EvalReport summarize(std::vector<CaseResult> cases) {
    if (cases.empty()) throw InvalidArgument("cannot evaluate an empty case list");
    EvalReport report;
    for (std::size_t q = 0; q < 6; ++q) {
        std::vector<double> truth, pred;
        double abs_sum = 0.0;
        for (const auto& c : cases) {
            truth.push_back(c.truth.to_array()[q]);
            pred.push_back(c.predicted.to_array()[q]);
            abs_sum += std::abs(pred.back() - truth.back());
        }
        ParamStats& s = report.params[q];
        s.n = cases.size();
        s.mae = abs_sum / static_cast<double>(cases.size());
        try {
            s.pearson_r = pearson(pred, truth);
        } catch (const Error&) {
            s.pearson_r = std::numeric_limits<double>::quiet_NaN();
        }
    }
    report.cases = std::move(cases);
    return report;
}

EvalReport evaluate(const Predictor& predictor, const DatasetManifest& manifest, int threads) {
    if (manifest.entries.empty()) throw InvalidArgument("evaluation manifest is empty");
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        if (!manifest.entries[i].params) {
            throw InvalidArgument("manifest entry " + std::to_string(i) + " has no ground truth");
        }
    }
    std::vector<CaseResult> cases(manifest.entries.size());
    parallel_for(cases.size(), threads, [&](std::size_t i) {
        const auto& e = manifest.entries[i];
        cases[i] = {e.transaxial_path, *e.params,
                    predictor(load_volume(manifest.resolve(e.transaxial_path)))};
    });
    return summarize(std::move(cases));
}

EvalReport evaluate(const ReorientModel& model, const DatasetManifest& manifest, int threads) {
    EvalReport r = evaluate([&](const Volume3D& v) { return predict(model, v); }, manifest, threads);
    r.config["parameters"] = model.parameter_count();
    r.config["blocks"] = model.architecture().blocks;
    return r;
}

void write_report(const EvalReport& report, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    json summary = json::object();
    for (std::size_t q = 0; q < 6; ++q) {
        const auto& s = report.params[q];
        json entry{{"mae", s.mae}, {"n", s.n}};
        entry["pearson_r"] = std::isfinite(s.pearson_r) ? json(s.pearson_r) : json(nullptr);
        summary[kParamNames[q]] = entry;
    }
    json cases = json::array();
    for (const auto& c : report.cases) {
        json residual = json::object();
        const auto p = c.predicted.to_array(), t = c.truth.to_array();
        for (std::size_t q = 0; q < 6; ++q) residual[kParamNames[q]] = p[q] - t[q];
        cases.push_back({{"transaxial_path", c.transaxial_path},
                         {"truth", c.truth},
                         {"predicted", c.predicted},
                         {"residual", residual}});
    }
    const json doc{{"summary", summary}, {"cases", cases}, {"config", report.config}};

    std::ofstream js(out_dir / "report.json");
    if (!js) throw IoError("cannot write " + (out_dir / "report.json").string());
    js << doc.dump(2) << '\n';

    std::ofstream csv(out_dir / "report.csv");
    if (!csv) throw IoError("cannot write " + (out_dir / "report.csv").string());
    csv << "parameter,pearson_r,mae,n\n";
    csv.precision(9);
    for (std::size_t q = 0; q < 6; ++q) {
        const auto& s = report.params[q];
        csv << kParamNames[q] << ',';
        if (std::isfinite(s.pearson_r)) csv << s.pearson_r;
        csv << ',' << s.mae << ',' << s.n << '\n';
    }
    if (!js || !csv) throw IoError("report write failed in " + out_dir.string());
}

}  // namespace reorient
