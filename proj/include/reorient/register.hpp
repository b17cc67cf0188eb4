#pragma once

#include <array>
#include <vector>

#include "reorient/adam.hpp"
#include "reorient/transform.hpp"
#include "reorient/volume.hpp"

namespace reorient {

enum class GradientMode { Analytic, FiniteDifference };

/// Direct intensity-based rigid registration settings.
struct RegisterConfig {
    /// Iteration caps for the translation, rotation and joint stages.
    std::array<int, 3> max_iters{200, 200, 100};
    /// When false a single joint stage runs for the summed iteration budget.
    bool staged = true;
    /// Initial Adam step, in voxels / degrees.
    double step_size = 0.5;
    /// A stage ends once an update moves no parameter by more than this.
    double tolerance = 1e-3;
    /// Step is halved after this many iterations without a new best objective.
    int patience = 6;
    RigidParams initial{};
    AdamConfig adam{};
    GradientMode gradient = GradientMode::Analytic;
    double fd_step = 1e-4;
    /// Score only voxels that sample inside the moving grid (see warp_mse).
    bool overlap_only = true;
    bool record_trajectory = false;

    void validate() const;
};

struct RegisterResult {
    RigidParams params;
    double objective = 0.0;
    double initial_objective = 0.0;
    int iterations = 0;
    /// Iterates after each update (only when record_trajectory is set).
    std::vector<RigidParams> trajectory;
    /// Best objective seen after each iteration; non-increasing.
    std::vector<double> best_history;
};

/// Finds p minimising mean((reorient(moving, p) - fixed)^2) with adaptive
/// moment steps: translations first, then rotations, then all six. Returns the
/// best parameters seen.
RegisterResult register_volumes(const Volume3D& moving, const Volume3D& fixed,
                                const RegisterConfig& cfg = {});

}  // namespace reorient
