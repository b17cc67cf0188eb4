#include "reorient/register.hpp"

#include <cmath>
#include <string>

#include "reorient/error.hpp"
#include "reorient/stn.hpp"

namespace reorient {

void RegisterConfig::validate() const {
    for (int n : max_iters) {
        if (n <= 0) throw InvalidArgument("registration iteration counts must be positive");
    }
    if (!(tolerance > 0.0)) throw InvalidArgument("registration tolerance must be positive");
    if (!(step_size > 0.0)) throw InvalidArgument("registration step size must be positive");
    if (patience < 1) throw InvalidArgument("registration patience must be at least 1");
    if (!initial.finite()) throw InvalidArgument("initial parameters must be finite");
}

namespace {

constexpr double kMinOverlap = 0.1;

WarpObjective evaluate(const Volume3D& moving, const Volume3D& fixed, const RigidParams& p,
                       const RegisterConfig& cfg) {
    if (cfg.gradient == GradientMode::Analytic) return warp_mse(moving, p, fixed, true, cfg.overlap_only);
    WarpObjective out = warp_mse(moving, p, fixed, false, cfg.overlap_only);
    const auto base = p.to_array();
    for (std::size_t i = 0; i < 6; ++i) {
        auto plus = base, minus = base;
        plus[i] += cfg.fd_step;
        minus[i] -= cfg.fd_step;
        const double fp = warp_mse(moving, RigidParams::from_array(plus), fixed, false, cfg.overlap_only).value;
        const double fm = warp_mse(moving, RigidParams::from_array(minus), fixed, false, cfg.overlap_only).value;
        out.gradient[i] = (fp - fm) / (2.0 * cfg.fd_step);
    }
    return out;
}

}  // namespace

RegisterResult register_volumes(const Volume3D& moving, const Volume3D& fixed,
                                const RegisterConfig& cfg) {
    cfg.validate();
    if (!(moving.dims() == fixed.dims())) throw ShapeError("moving and fixed dims differ");

    struct Stage {
        std::vector<std::size_t> active;
        int iters;
    };
    std::vector<Stage> stages;
    if (cfg.staged) {
        stages = {{{0, 1, 2}, cfg.max_iters[0]},
                  {{3, 4, 5}, cfg.max_iters[1]},
                  {{0, 1, 2, 3, 4, 5}, cfg.max_iters[2]}};
    } else {
        stages = {{{0, 1, 2, 3, 4, 5}, cfg.max_iters[0] + cfg.max_iters[1] + cfg.max_iters[2]}};
    }

    RegisterResult result;
    std::array<double, 6> current = cfg.initial.to_array();
    WarpObjective here = evaluate(moving, fixed, cfg.initial, cfg);
    result.initial_objective = here.value;
    result.objective = here.value;
    result.params = cfg.initial;
    const double divergence_limit = 10.0 * std::max(here.value, 1e-12);
    const double initial_overlap = here.overlap;

    for (const Stage& stage : stages) {
        AdamState<double> adam(stage.active.size());
        std::vector<double> sub(stage.active.size()), grad(stage.active.size());
        double lr = cfg.step_size;
        int since_best = 0;
        // Each stage restarts from the best point found so far.
        current = result.params.to_array();
        here = evaluate(moving, fixed, result.params, cfg);

        for (int it = 0; it < stage.iters; ++it) {
            for (std::size_t a = 0; a < stage.active.size(); ++a) {
                sub[a] = current[stage.active[a]];
                grad[a] = here.gradient[stage.active[a]];
            }
            const double moved = adam.step(std::span<double>(sub), std::span<const double>(grad),
                                           cfg.adam, lr);
            for (std::size_t a = 0; a < stage.active.size(); ++a) current[stage.active[a]] = sub[a];

            const RigidParams p = RigidParams::from_array(current);
            here = evaluate(moving, fixed, p, cfg);
            ++result.iterations;
            // Pushing the content out of the overlap would also shrink the
            // objective, so a collapsed overlap counts as divergence too.
            if (!std::isfinite(here.value) || here.value > divergence_limit ||
                here.overlap < kMinOverlap * initial_overlap) {
                throw DivergenceError("registration objective diverged at iteration " +
                                          std::to_string(result.iterations),
                                      result.iterations);
            }
            if (cfg.record_trajectory) result.trajectory.push_back(p);

            if (here.value < result.objective) {
                result.objective = here.value;
                result.params = p;
                since_best = 0;
            } else if (++since_best >= cfg.patience) {
                lr *= 0.5;
                since_best = 0;
                current = result.params.to_array();
                here = evaluate(moving, fixed, result.params, cfg);
            }
            result.best_history.push_back(result.objective);
            if (moved < cfg.tolerance) break;
        }
    }
    return result;
}

}  // namespace reorient
