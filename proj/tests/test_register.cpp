#include <doctest.h>

#include <cmath>

#include "reorient/augment.hpp"
#include "reorient/error.hpp"
#include "reorient/register.hpp"
#include "reorient/stn.hpp"
#include "test_support.hpp"

using namespace reorient;

namespace {

void check_recovered(const RigidParams& got, const RigidParams& want, double t_tol, double a_tol) {
    const auto g = got.to_array(), w = want.to_array();
    for (int k = 0; k < 3; ++k) CHECK(std::abs(g[k] - w[k]) < t_tol);
    for (int k = 3; k < 6; ++k) CHECK(std::abs(g[k] - w[k]) < a_tol);
}

}  // namespace

TEST_CASE("identical volumes register to zero") {
    const auto v = testing::lv_phantom(kCanonicalDims);
    const auto r = register_volumes(v, v);
    check_recovered(r.params, RigidParams{}, 0.1, 0.1);
    CHECK(r.objective <= r.initial_objective);
}

TEST_CASE("known phantom pair is recovered") {
    const auto sa = testing::lv_phantom(kCanonicalDims);
    const RigidParams p{4.0, -3.0, 2.0, 18.0, -12.0, 25.0};
    RegisterConfig cfg;
    cfg.max_iters = {200, 200, 400};
    const auto r = register_volumes(augment_pair(sa, p), sa, cfg);
    check_recovered(r.params, p, 0.5, 1.0);
}

TEST_CASE("best objective is non-increasing") {
    const auto sa = testing::lv_phantom(Dims{32, 32, 16});
    RegisterConfig cfg;
    cfg.record_trajectory = true;
    const auto r = register_volumes(augment_pair(sa, RigidParams{1, 1, -1, 10, 5, -10}), sa, cfg);
    REQUIRE(r.best_history.size() == static_cast<std::size_t>(r.iterations));
    CHECK(r.trajectory.size() == r.best_history.size());
    for (std::size_t i = 1; i < r.best_history.size(); ++i) CHECK(r.best_history[i] <= r.best_history[i - 1]);
    CHECK(r.best_history.back() == r.objective);
    CHECK(warp_mse(augment_pair(sa, RigidParams{1, 1, -1, 10, 5, -10}), r.params, sa, false).value ==
          doctest::Approx(r.objective));
}

TEST_CASE("finite-difference gradient follows the analytic trajectory") {
    const auto sa = testing::lv_phantom(Dims{32, 32, 16});
    const auto moving = augment_pair(sa, RigidParams{1.5, -1, 0.5, 8, -6, 12});
    RegisterConfig cfg;
    cfg.record_trajectory = true;
    cfg.staged = false;
    cfg.max_iters = {10, 1, 1};
    cfg.tolerance = 1e-9;
    const auto a = register_volumes(moving, sa, cfg);
    cfg.gradient = GradientMode::FiniteDifference;
    const auto f = register_volumes(moving, sa, cfg);
    REQUIRE(a.trajectory.size() >= 10);
    REQUIRE(f.trajectory.size() >= 10);
    for (int i = 0; i < 10; ++i) {
        const auto x = a.trajectory[i].to_array(), y = f.trajectory[i].to_array();
        double num = 0, den = 0;
        for (int k = 0; k < 6; ++k) {
            num += (x[k] - y[k]) * (x[k] - y[k]);
            den += x[k] * x[k];
        }
        CHECK(std::sqrt(num / den) < 1e-3);
    }
}

TEST_CASE("staged registration starts from the initial guess") {
    const auto sa = testing::lv_phantom(Dims{32, 32, 16});
    const RigidParams p{2, 0, 0, 0, 0, 15};
    RegisterConfig cfg;
    cfg.initial = p;
    const auto r = register_volumes(augment_pair(sa, p), sa, cfg);
    check_recovered(r.params, p, 0.2, 0.5);
}

TEST_CASE("register validates its inputs") {
    const auto v = testing::lv_phantom(Dims{16, 16, 8});
    CHECK_THROWS_AS(register_volumes(v, Volume3D(Dims{16, 16, 9})), ShapeError);
    RegisterConfig cfg;
    cfg.tolerance = 0;
    CHECK_THROWS_AS(register_volumes(v, v, cfg), InvalidArgument);
    cfg = {};
    cfg.max_iters = {0, 10, 10};
    CHECK_THROWS_AS(register_volumes(v, v, cfg), InvalidArgument);
    cfg = {};
    cfg.initial.tx = NAN;
    CHECK_THROWS_AS(register_volumes(v, v, cfg), InvalidArgument);
}

TEST_CASE("runaway steps are reported as divergence") {
    const auto sa = testing::lv_phantom(Dims{32, 32, 16});
    const auto moving = augment_pair(sa, RigidParams{0.5, 0, 0, 0, 0, 0});
    RegisterConfig cfg;
    cfg.step_size = 1e4;
    cfg.staged = false;
    CHECK_THROWS_AS(register_volumes(moving, sa, cfg), DivergenceError);
}
