#include <doctest.h>

#include <fstream>
#include <sstream>

#include "reorient/cli.hpp"
#include "reorient/model.hpp"
#include "reorient/stn.hpp"
#include "test_support.hpp"

using namespace reorient;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

int lines(const std::string& s) {
    int n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("help output matches the snapshots") {
    for (std::string sub : {"", "phantom", "augment", "train", "predict", "reorient", "register", "eval"}) {
        CAPTURE(sub);
        std::vector<std::string> args;
        if (!sub.empty()) args.push_back(sub);
        args.push_back("--help");
        const auto r = invoke(args);
        CHECK(r.code == 0);
        const std::string name = sub.empty() ? "main" : sub;
        const auto expect = testing::slurp(std::filesystem::path(REORIENT_SNAPSHOT_DIR) / ("help_" + name + ".txt"));
        CHECK(r.out == expect);
    }
}

TEST_CASE("every subcommand lists the common flags") {
    for (std::string sub : {"phantom", "augment", "train", "predict", "reorient", "register", "eval"}) {
        const auto r = invoke({sub, "--help"});
        for (const char* flag : {"--seed", "--deterministic", "--threads", "--config"}) {
            CAPTURE(sub);
            CHECK(r.out.find(flag) != std::string::npos);
        }
    }
}

TEST_CASE("usage errors are one line with a nonzero exit") {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {}, {"frobnicate"}, {"phantom", "--n", "3"}, {"phantom", "--bogus", "1", "--out", "x"},
             {"register", "--moving", "a"}, {"phantom", "--n", "-2", "--out", "x"}}) {
        const auto r = invoke(args);
        CHECK(r.code == 2);
        CHECK(lines(r.err) == 1);
        CHECK(r.err.rfind("error: usage: ", 0) == 0);
    }
}

TEST_CASE("module errors carry their kind") {
    testing::TempDir dir("cli_err");
    auto r = invoke({"reorient", "--in", (dir / "nope").string(), "--params", (dir / "p.json").string(), "--out",
                  (dir / "o").string()});
    CHECK(r.code == 1);
    CHECK(lines(r.err) == 1);
    CHECK(r.err.rfind("error: io: ", 0) == 0);

    save_volume(Volume3D(Dims{4, 4, 4}), dir / "v");
    std::ofstream(dir / "p.json") << R"({"tx": 1})";
    r = invoke({"reorient", "--in", (dir / "v").string(), "--params", (dir / "p.json").string(), "--out",
             (dir / "o").string()});
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error: format: ", 0) == 0);

    std::ofstream(dir / "bad.json") << "[1, 2]";
    r = invoke({"phantom", "--n", "1", "--out", (dir / "ph").string(), "--config", (dir / "bad.json").string()});
    CHECK(r.err.rfind("error: format: ", 0) == 0);
}

TEST_CASE("reorient with zero params reproduces the input") {
    testing::TempDir dir("cli_re");
    save_volume(testing::random_volume(Dims{9, 7, 5}, 3), dir / "in");
    std::ofstream(dir / "zero.json") << nlohmann::json(RigidParams{}).dump();
    const auto r = invoke({"reorient", "--in", (dir / "in").string(), "--params", (dir / "zero.json").string(),
                        "--out", (dir / "out").string()});
    REQUIRE(r.code == 0);
    CHECK(testing::slurp(dir / "out.f32") == testing::slurp(dir / "in.f32"));
    CHECK(load_volume(dir / "out") == load_volume(dir / "in"));
}

TEST_CASE("phantom runs are reproducible and flags beat the config file") {
    testing::TempDir dir("cli_ph");
    std::ofstream(dir / "c.json") << R"({"n": 3, "rot_std": 5.0})";
    auto a = invoke({"phantom", "--n", "2", "--seed", "7", "--out", (dir / "a").string(), "--config",
                  (dir / "c.json").string()});
    REQUIRE(a.code == 0);
    CHECK(load_manifest(dir / "a" / "manifest.json").entries.size() == 2);
    auto b = invoke({"phantom", "--seed", "7", "--out", (dir / "b").string(), "--config", (dir / "c.json").string()});
    REQUIRE(b.code == 0);
    const auto mb = load_manifest(dir / "b" / "manifest.json");
    CHECK(mb.entries.size() == 3);
    for (const auto& e : mb.entries) CHECK(std::abs(e.params->alpha_deg) <= 10.0);

    auto c = invoke({"phantom", "--n", "2", "--seed", "7", "--out", (dir / "c").string(), "--rot-std", "5"});
    REQUIRE(c.code == 0);
    CHECK(testing::slurp(dir / "a" / "manifest.json") == testing::slurp(dir / "c" / "manifest.json"));
    CHECK(testing::slurp(dir / "a" / "case_0001_tra.f32") == testing::slurp(dir / "c" / "case_0001_tra.f32"));
}

TEST_CASE("train writes one history row per epoch") {
    testing::TempDir dir("cli_tr");
    REQUIRE(invoke({"phantom", "--n", "2", "--out", (dir / "d").string()}).code == 0);
    std::ofstream(dir / "c.json") << R"({"epochs_stage1": 20, "epochs_stage2": 20, "epochs_stage3": 10,
                                         "batch_size": 2})";
    const std::string manifest = (dir / "d" / "manifest.json").string();
    const auto r = invoke({"train", "--train", manifest, "--val", manifest, "--out", (dir / "m.bin").string(),
                        "--config", (dir / "c.json").string(), "--deterministic"});
    REQUIRE(r.code == 0);
    CHECK(lines(r.out) == 50);
    std::ifstream in(dir / "m.bin.history.csv");
    std::string line;
    int rows = -1;
    std::vector<std::string> stages;
    while (std::getline(in, line)) {
        ++rows;
        if (rows > 0) stages.push_back(line.substr(line.find(',') + 1, line.find(',', line.find(',') + 1) - line.find(',') - 1));
    }
    CHECK(rows == 50);
    CHECK(stages[19] == "translation");
    CHECK(stages[20] == "rotation");
    CHECK(stages[40] == "joint");

    const auto p = invoke({"predict", "--model", (dir / "m.bin").string(), "--in",
                        (dir / "d" / "case_0000_tra").string(), "--out", (dir / "p.json").string()});
    REQUIRE(p.code == 0);
    std::ifstream pj(dir / "p.json");
    CHECK_NOTHROW(nlohmann::json::parse(pj).get<RigidParams>());

    const auto e = invoke({"eval", "--model", (dir / "m.bin").string(), "--manifest", manifest, "--out",
                        (dir / "rep").string()});
    REQUIRE(e.code == 0);
    CHECK(std::filesystem::exists(dir / "rep" / "report.json"));
    CHECK(std::filesystem::exists(dir / "rep" / "report.csv"));
}

TEST_CASE("register and augment subcommands") {
    testing::TempDir dir("cli_rg");
    REQUIRE(invoke({"phantom", "--n", "2", "--out", (dir / "d").string(), "--rot-std", "4", "--trans-std", "1"}).code == 0);
    const auto m = load_manifest(dir / "d" / "manifest.json");
    const auto r = invoke({"register", "--moving", (dir / "d" / "case_0000_tra").string(), "--fixed",
                        (dir / "d" / "case_0000_sa").string(), "--out", (dir / "r.json").string()});
    REQUIRE(r.code == 0);
    std::ifstream rj(dir / "r.json");
    const auto got = nlohmann::json::parse(rj).get<RigidParams>().to_array();
    const auto want = m.entries[0].params->to_array();
    for (int k = 0; k < 3; ++k) CHECK(std::abs(got[k] - want[k]) < 0.5);
    for (int k = 3; k < 6; ++k) CHECK(std::abs(got[k] - want[k]) < 1.0);

    const auto a = invoke({"augment", "--manifest", (dir / "d" / "manifest.json").string(), "--out",
                        (dir / "aug").string(), "--count", "3"});
    REQUIRE(a.code == 0);
    CHECK(load_manifest(dir / "aug" / "manifest.json").entries.size() == 8);
}
