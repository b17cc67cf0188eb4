#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "reorient/adam.hpp"
#include "reorient/loss.hpp"
#include "reorient/manifest.hpp"
#include "reorient/nn.hpp"
#include "reorient/transform.hpp"
#include "reorient/volume.hpp"

namespace reorient {

using ReorientModel = ReorientNet<float>;

inline constexpr std::uint64_t kDefaultSeed = 20220914;

/// Resize to the canonical grid and normalise.
Volume3D prepare_volume(const Volume3D& vol);

/// Network input for a canonical, normalised volume: channel 0 intensity,
/// channel 1 max-normalised gradient magnitude.
Tensor<float> build_input(const Volume3D& vol);

/// Which parameters a training stage optimises.
enum class Stage : int { Translation = 1, Rotation = 2, Joint = 3 };
const char* stage_label(Stage s);

struct ForwardResult {
    RigidParams cumulative;
    std::vector<RigidParams> per_block;   // residual of each block
    std::vector<Mat4> block_matrices;     // to_matrix of each residual
    std::vector<Mat4> cumulative_matrices;
    Volume3D warped;                      // reorient(input, cumulative)
};

/// Runs the cascade on a canonical, normalised intensity volume. Block k sees
/// the input warped by the composition of blocks 1..k-1, with both channels
/// recomputed from the warped intensity.
ForwardResult forward(const ReorientModel& model, const Volume3D& intensity);

/// Cumulative parameters of forward() on prepare_volume(vol).
RigidParams predict(const ReorientModel& model, const Volume3D& vol);

struct TrainConfig {
    /// Epochs for the translation, rotation and joint stages.
    std::array<int, 3> epochs{80, 80, 40};
    int batch_size = 8;
    AdamConfig adam{};
    ParamLossConfig loss{};
    std::uint64_t seed = kDefaultSeed;
    /// Supervise every block's cumulative params (equal weights) rather than
    /// only the last.
    bool deep_supervision = true;
    bool deterministic = true;
    int threads = 1;
    /// Re-pose every training sample that has an SA volume with fresh
    /// parameters each epoch, drawn from the truncated Gaussians fitted to the
    /// training truths.
    bool online_augmentation = false;
    double augment_truncation = 2.0;
    /// Multiplies the fitted stds for online draws, so poses near the edge
    /// of the training distribution are seen more often.
    double augment_spread = 1.0;
    /// Within each stage the learning rate follows a half cosine from
    /// adam.learning_rate down to this fraction of it. 1 keeps it constant.
    double stage_lr_floor = 1.0;
    /// Std of random rigid offsets (voxels, degrees) inserted between blocks
    /// during training, restricted to the parameters the stage trains. Zero
    /// disables it.
    std::array<double, 2> cascade_jitter{0.0, 0.0};

    int total_epochs() const { return epochs[0] + epochs[1] + epochs[2]; }
    Stage stage_of(int epoch) const;  // epoch is 1-based
    double learning_rate_at(int epoch) const;
    void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
/// Missing keys keep their current values.
void from_json(const nlohmann::json& j, TrainConfig& c);

struct EpochRecord {
    int epoch = 0;
    Stage stage = Stage::Translation;
    double train_loss = 0.0;
    double val_loss = 0.0;
    std::array<double, 6> val_mae{};
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
};

/// CSV with header epoch,stage,train_loss,val_loss,mae_tx..mae_theta.
void save_history_csv(const TrainHistory& h, const std::filesystem::path& path);

struct TrainingSample {
    Volume3D intensity;  // canonical grid, normalised
    RigidParams truth;
    std::optional<Volume3D> sa;  // canonical grid, normalised
};

/// Loads each entry's transaxial volume (prepared) with its ground truth,
/// and its SA volume when `with_sa` is set and the entry has one.
std::vector<TrainingSample> load_samples(const DatasetManifest& manifest, bool with_sa = false);

using EpochCallback = std::function<void(const EpochRecord&, const ReorientModel&)>;

/// Three-stage training. Stage 1 zeroes the rotation residuals in the warp and
/// trains on translation MAE; stage 2 freezes the translation head and trains
/// on rotation MSE; stage 3 trains everything on the composite loss.
TrainHistory train(ReorientModel& model, std::span<const TrainingSample> train_set,
                   std::span<const TrainingSample> val_set, const TrainConfig& cfg,
                   const EpochCallback& on_epoch = {});

TrainHistory train(ReorientModel& model, const DatasetManifest& train_manifest,
                   const DatasetManifest& val_manifest, const TrainConfig& cfg,
                   const EpochCallback& on_epoch = {});

/// Loss of one sample under `stage`, accumulating weight gradients into
/// `grads` (one entry per block) when it is non-null. `perturb`, when given,
/// holds one rigid matrix per block boundary; it is composed onto the running
/// transform after block k, so later blocks must undo it.
template <typename T>
double sample_loss(const ReorientNet<T>& net, const Volume3D& intensity, const RigidParams& truth,
                   Stage stage, const TrainConfig& cfg, std::vector<BlockWeights<T>>* grads,
                   RigidParams* final_params = nullptr, std::span<const Mat4> perturb = {});

/// Binary checkpoint: magic, format version, architecture descriptor, weight
/// count, then little-endian f32 weights in BlockWeights::visit order.
void save_checkpoint(const ReorientModel& model, const std::filesystem::path& path);
/// When `expected` is given the stored architecture must match it.
ReorientModel load_checkpoint(const std::filesystem::path& path,
                              const std::optional<Architecture>& expected = std::nullopt);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace reorient
