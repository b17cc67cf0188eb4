#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "reorient/error.hpp"
#include "reorient/eval.hpp"
#include "test_support.hpp"

using namespace reorient;

namespace {

// Manifest whose volumes are distinct tiny placeholders; predictors key on
// the first voxel value to recover the case index.
DatasetManifest varied_manifest(const std::filesystem::path& dir, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> t(0, 3), a(0, 10);
    DatasetManifest m;
    m.base_dir = dir;
    for (int i = 0; i < n; ++i) {
        const std::string name = "v" + std::to_string(i);
        Volume3D v(Dims{2, 2, 2});
        v.data()[0] = static_cast<float>(i);
        save_volume(v, dir / name);
        m.entries.push_back({name + ".json", std::nullopt,
                             RigidParams{t(rng), t(rng), t(rng), a(rng), a(rng), a(rng)}, std::nullopt});
    }
    return m;
}

Predictor oracle(const DatasetManifest& m) {
    return [&m](const Volume3D& v) { return *m.entries[static_cast<std::size_t>(v.data()[0])].params; };
}

}  // namespace

TEST_CASE("pearson on exact relations") {
    const std::vector<double> x{1, 2, 3, 4, 5.5};
    std::vector<double> y, z;
    for (double v : x) {
        y.push_back(2 * v + 3);
        z.push_back(-v);
    }
    CHECK(pearson(x, y) == doctest::Approx(1.0));
    CHECK(pearson(x, z) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(pearson(x, std::vector<double>(5, 1.0)), DegenerateInputError);
    CHECK_THROWS_AS(pearson(std::vector<double>(5, 2.0), x), DegenerateInputError);
    CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), InvalidArgument);
    CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2}), InvalidArgument);
}

TEST_CASE("pearson against a textbook value") {
    // x = 1..5, y = (2, 4, 5, 4, 5): sxy = 6, sxx = 10, syy = 6
    const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 5, 4, 5};
    CHECK(pearson(x, y) == doctest::Approx(6.0 / std::sqrt(60.0)).epsilon(1e-12));
}

TEST_CASE("pearson is invariant under positive affine maps and bounded") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(20), y(20), xs(20), ys(20);
        const double a = std::exp(n(rng)), b = 5 * n(rng), c = std::exp(n(rng)), d = 5 * n(rng);
        for (int i = 0; i < 20; ++i) {
            x[i] = n(rng);
            y[i] = x[i] * n(rng) + n(rng);
            xs[i] = a * x[i] + b;
            ys[i] = c * y[i] + d;
        }
        const double r = pearson(x, y);
        CHECK(r >= -1.0);
        CHECK(r <= 1.0);
        CHECK(pearson(xs, ys) == doctest::Approx(r).epsilon(1e-9));
        CHECK(pearson(y, x) == doctest::Approx(r).epsilon(1e-12));
    }
}

TEST_CASE("perfect predictor scores r = 1 and zero error") {
    testing::TempDir dir("eval");
    const auto m = varied_manifest(dir.path(), 12, 2);
    const auto report = evaluate(oracle(m), m);
    CHECK(report.cases.size() == 12);
    for (const auto& s : report.params) {
        CHECK(s.pearson_r == doctest::Approx(1.0));
        CHECK(s.mae == 0.0);
        CHECK(s.n == 12);
    }
}

TEST_CASE("zero predictor MAE is the mean absolute truth") {
    testing::TempDir dir("eval0");
    const auto m = varied_manifest(dir.path(), 15, 3);
    const auto report = evaluate([](const Volume3D&) { return RigidParams{}; }, m, 3);
    for (std::size_t q = 0; q < 6; ++q) {
        double expect = 0;
        for (const auto& e : m.entries) expect += std::abs(e.params->to_array()[q]);
        CHECK(report.params[q].mae == doctest::Approx(expect / 15).epsilon(1e-12));
        CHECK(std::isnan(report.params[q].pearson_r));
    }
}

TEST_CASE("duplicating the manifest leaves the statistics unchanged") {
    testing::TempDir dir("evaldup");
    const auto m = varied_manifest(dir.path(), 10, 4);
    auto doubled = m;
    doubled.entries.insert(doubled.entries.end(), m.entries.begin(), m.entries.end());
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0, 1);
    std::map<int, RigidParams> noisy;
    for (int i = 0; i < 10; ++i) {
        auto a = m.entries[i].params->to_array();
        for (double& v : a) v += n(rng);
        noisy[i] = RigidParams::from_array(a);
    }
    const Predictor pred = [&](const Volume3D& v) { return noisy.at(static_cast<int>(v.data()[0])); };
    const auto a = evaluate(pred, m), b = evaluate(pred, doubled);
    for (std::size_t q = 0; q < 6; ++q) {
        CHECK(b.params[q].pearson_r == doctest::Approx(a.params[q].pearson_r).epsilon(1e-12));
        CHECK(b.params[q].mae == doctest::Approx(a.params[q].mae).epsilon(1e-12));
        CHECK(b.params[q].n == 20);
    }
}

TEST_CASE("evaluate rejects empty manifests and missing truth") {
    testing::TempDir dir("evalbad");
    auto m = varied_manifest(dir.path(), 3, 6);
    const Predictor zero = [](const Volume3D&) { return RigidParams{}; };
    CHECK_THROWS_AS(evaluate(zero, DatasetManifest{}), InvalidArgument);
    m.entries[1].params.reset();
    CHECK_THROWS_AS(evaluate(zero, m), InvalidArgument);
}

TEST_CASE("report files follow the documented schema") {
    testing::TempDir dir("evalrep");
    const auto m = varied_manifest(dir.path(), 6, 7);
    auto report = evaluate([](const Volume3D&) { return RigidParams{}; }, m);
    report.config["note"] = "zero";
    write_report(report, dir / "out");

    std::ifstream js(dir / "out" / "report.json");
    const auto doc = nlohmann::json::parse(js);
    CHECK(doc.at("summary").size() == 6);
    CHECK(doc.at("summary").at("tx").at("pearson_r").is_null());
    CHECK(doc.at("summary").at("theta").at("n") == 6);
    CHECK(doc.at("cases").size() == 6);
    CHECK(doc.at("cases")[0].at("residual").at("alpha") ==
          doctest::Approx(-m.entries[0].params->alpha_deg));
    CHECK(doc.at("config").at("note") == "zero");

    std::ifstream csv(dir / "out" / "report.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "parameter,pearson_r,mae,n");
    std::vector<std::string> names;
    while (std::getline(csv, line)) names.push_back(line.substr(0, line.find(',')));
    CHECK(names == std::vector<std::string>{"tx", "ty", "tz", "alpha", "beta", "theta"});
}
