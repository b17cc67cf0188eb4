#include "reorient/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include "reorient/augment.hpp"
#include "reorient/error.hpp"
#include "reorient/parallel.hpp"
#include "reorient/stn.hpp"

namespace reorient {

namespace fs = std::filesystem;

Volume3D prepare_volume(const Volume3D& vol) {
    return normalize(resize_trilinear(vol, kCanonicalDims));
}

Tensor<float> build_input(const Volume3D& vol) {
    if (!(vol.dims() == kCanonicalDims)) {
        throw ShapeError("network input must be 64x64x32, got " + std::to_string(vol.dims().nx) +
                         "x" + std::to_string(vol.dims().ny) + "x" + std::to_string(vol.dims().nz));
    }
    return two_channel<float>(vol);
}

const char* stage_label(Stage s) {
    switch (s) {
        case Stage::Translation: return "translation";
        case Stage::Rotation: return "rotation";
        case Stage::Joint: return "joint";
    }
    return "unknown";
}

Stage TrainConfig::stage_of(int epoch) const {
    if (epoch <= epochs[0]) return Stage::Translation;
    if (epoch <= epochs[0] + epochs[1]) return Stage::Rotation;
    return Stage::Joint;
}

double TrainConfig::learning_rate_at(int epoch) const {
    int first = 1, length = epochs[0];
    if (epoch > epochs[0] + epochs[1]) {
        first = epochs[0] + epochs[1] + 1;
        length = epochs[2];
    } else if (epoch > epochs[0]) {
        first = epochs[0] + 1;
        length = epochs[1];
    }
    const double progress = length > 1 ? double(epoch - first) / double(length - 1) : 0.0;
    const double scale = stage_lr_floor + (1.0 - stage_lr_floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    return adam.learning_rate * scale;
}

void TrainConfig::validate() const {
    for (int e : epochs) {
        if (e < 0) throw InvalidArgument("epoch counts must be non-negative");
    }
    if (batch_size < 1) throw InvalidArgument("batch size must be at least 1");
    if (!(adam.learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
        throw InvalidArgument("adam betas must lie in [0, 1)");
    }
    if (!(loss.mu >= 0.0)) throw InvalidArgument("mu must be non-negative");
    if (threads < 1) throw InvalidArgument("thread count must be at least 1");
    if (!(augment_truncation > 0.0)) throw InvalidArgument("augment truncation must be positive");
    if (!(augment_spread > 0.0)) throw InvalidArgument("augment spread must be positive");
    if (!(cascade_jitter[0] >= 0.0 && cascade_jitter[1] >= 0.0)) {
        throw InvalidArgument("cascade jitter must be non-negative");
    }
    if (!(stage_lr_floor > 0.0 && stage_lr_floor <= 1.0)) {
        throw InvalidArgument("stage learning-rate floor must lie in (0, 1]");
    }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"epochs_stage1", c.epochs[0]},
                       {"epochs_stage2", c.epochs[1]},
                       {"epochs_stage3", c.epochs[2]},
                       {"batch_size", c.batch_size},
                       {"learning_rate", c.adam.learning_rate},
                       {"beta1", c.adam.beta1},
                       {"beta2", c.adam.beta2},
                       {"epsilon", c.adam.epsilon},
                       {"mu", c.loss.mu},
                       {"seed", c.seed},
                       {"deep_supervision", c.deep_supervision},
                       {"deterministic", c.deterministic},
                       {"threads", c.threads},
                       {"online_augmentation", c.online_augmentation},
                       {"augment_truncation", c.augment_truncation},
                       {"augment_spread", c.augment_spread},
                       {"stage_lr_floor", c.stage_lr_floor},
                       {"cascade_jitter", c.cascade_jitter}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("epochs_stage1", c.epochs[0]);
    get("epochs_stage2", c.epochs[1]);
    get("epochs_stage3", c.epochs[2]);
    get("batch_size", c.batch_size);
    get("learning_rate", c.adam.learning_rate);
    get("beta1", c.adam.beta1);
    get("beta2", c.adam.beta2);
    get("epsilon", c.adam.epsilon);
    get("mu", c.loss.mu);
    get("seed", c.seed);
    get("deep_supervision", c.deep_supervision);
    get("deterministic", c.deterministic);
    get("threads", c.threads);
    get("online_augmentation", c.online_augmentation);
    get("augment_truncation", c.augment_truncation);
    get("augment_spread", c.augment_spread);
    get("stage_lr_floor", c.stage_lr_floor);
    get("cascade_jitter", c.cascade_jitter);
}

namespace {

Mat4 transpose(const Mat4& m) {
    Mat4 t;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) t(r, c) = m(c, r);
    return t;
}

Mat4 multiply(const Mat4& a, const Mat4& b) { return compose(a, b); }

Mat4 zero_mat() {
    Mat4 z;
    z.m.fill(0.0);
    return z;
}

// Loss of one block's cumulative params under `stage`; writes d loss / d params.
double stage_loss(const RigidParams& p, const RigidParams& truth, Stage stage,
                  const ParamLossConfig& cfg, std::array<double, 6>& grad) {
    const auto a = p.to_array();
    const auto t = truth.to_array();
    const Vec3 pt{a[0], a[1], a[2]}, tt{t[0], t[1], t[2]};
    const Vec3 pr{a[3], a[4], a[5]}, tr{t[3], t[4], t[5]};
    grad.fill(0.0);
    switch (stage) {
        case Stage::Translation: {
            mae_grad(pt, tt, std::span<double>(grad.data(), 3));
            return mae(pt, tt);
        }
        case Stage::Rotation: {
            mse_grad(pr, tr, std::span<double>(grad.data() + 3, 3));
            return mse(pr, tr);
        }
        case Stage::Joint: {
            const auto [gt, gr] = composite_grad(pt, tt, pr, tr, cfg);
            std::copy(gt.begin(), gt.end(), grad.begin());
            std::copy(gr.begin(), gr.end(), grad.begin() + 3);
            return composite(pt, tt, pr, tr, cfg);
        }
    }
    return 0.0;
}

bool trainable(Stage stage, typename BlockWeights<float>::Group g) {
    using G = BlockWeights<float>::Group;
    switch (stage) {
        case Stage::Translation: return g != G::RotationHead;
        case Stage::Rotation: return g != G::TranslationHead;
        case Stage::Joint: return true;
    }
    return true;
}

}  // namespace

template <typename T>
double sample_loss(const ReorientNet<T>& net, const Volume3D& intensity, const RigidParams& truth,
                   Stage stage, const TrainConfig& cfg, std::vector<BlockWeights<T>>* grads,
                   RigidParams* final_params, std::span<const Mat4> perturb) {
    const int k_blocks = net.architecture().blocks;
    const auto nb = static_cast<std::size_t>(k_blocks);
    std::vector<BlockCache<T>> caches(grads ? nb : 0);
    std::vector<std::array<double, 6>> residuals(nb);
    std::vector<Mat4> block(nb), cumulative(nb), fed(nb, Mat4::identity());
    if (!perturb.empty() && perturb.size() + 1 != nb) throw ShapeError("need one perturbation per block boundary");

    Tensor<T> input = two_channel<T>(intensity);
    Mat4 prev = Mat4::identity();
    for (std::size_t k = 0; k < nb; ++k) {
        fed[k] = prev;
        auto r = net.forward_block(static_cast<int>(k), input, grads ? &caches[k] : nullptr);
        if (stage == Stage::Translation) r[3] = r[4] = r[5] = 0.0;
        for (double v : r) {
            if (!std::isfinite(v)) throw DivergenceError("non-finite block output", 0);
        }
        residuals[k] = r;
        block[k] = to_matrix(RigidParams::from_array(r));
        cumulative[k] = compose(block[k], prev);
        prev = cumulative[k];
        if (k + 1 < nb && !perturb.empty()) prev = compose(perturb[k], prev);
        if (k + 1 < nb) input = two_channel<T>(reorient(intensity, prev));
    }

    const std::size_t first_supervised = cfg.deep_supervision ? 0 : nb - 1;
    double loss = 0.0;
    std::vector<std::array<double, 6>> d_params(nb);
    for (std::size_t k = first_supervised; k < nb; ++k) {
        loss += stage_loss(matrix_to_params(cumulative[k]), truth, stage, cfg.loss, d_params[k]);
    }
    if (final_params) *final_params = matrix_to_params(cumulative[nb - 1]);
    if (!grads) return loss;
    if (grads->size() != nb) throw ShapeError("gradient buffer has the wrong block count");

    // Reverse pass through C_k = M_k C_{k-1}; only the top three rows of each
    // matrix are free.
    Mat4 g_cum = zero_mat();
    for (std::size_t kk = nb; kk-- > 0;) {
        if (kk >= first_supervised) {
            const auto jac = params_jacobian(cumulative[kk]);
            for (std::size_t i = 0; i < 6; ++i) {
                for (std::size_t e = 0; e < 12; ++e) g_cum.m[e] += d_params[kk][i] * jac[i][e];
            }
        }
        const Mat4 g_block = multiply(g_cum, transpose(fed[kk]));
        const auto dm = to_matrix_jacobian(RigidParams::from_array(residuals[kk]));
        std::array<double, 6> d_res{};
        for (std::size_t i = 0; i < 6; ++i) {
            double s = 0.0;
            for (std::size_t e = 0; e < 12; ++e) s += g_block.m[e] * dm[i].m[e];
            d_res[i] = s;
        }
        if (stage == Stage::Translation) d_res[3] = d_res[4] = d_res[5] = 0.0;
        net.backward_block(static_cast<int>(kk), caches[kk], d_res, (*grads)[kk]);

        g_cum = multiply(transpose(block[kk]), g_cum);
        if (kk > 0 && !perturb.empty()) g_cum = multiply(transpose(perturb[kk - 1]), g_cum);
        for (int c = 0; c < 4; ++c) g_cum(3, c) = 0.0;
    }
    return loss;
}

template double sample_loss<float>(const ReorientNet<float>&, const Volume3D&, const RigidParams&,
                                   Stage, const TrainConfig&, std::vector<BlockWeights<float>>*,
                                   RigidParams*, std::span<const Mat4>);
template double sample_loss<double>(const ReorientNet<double>&, const Volume3D&, const RigidParams&,
                                    Stage, const TrainConfig&, std::vector<BlockWeights<double>>*,
                                    RigidParams*, std::span<const Mat4>);

ForwardResult forward(const ReorientModel& model, const Volume3D& intensity) {
    const auto nb = static_cast<std::size_t>(model.architecture().blocks);
    ForwardResult out;
    Tensor<float> input = two_channel<float>(intensity);
    Mat4 prev = Mat4::identity();
    for (std::size_t k = 0; k < nb; ++k) {
        const auto r = model.forward_block(static_cast<int>(k), input, nullptr);
        for (double v : r) {
            if (!std::isfinite(v)) throw DivergenceError("non-finite activation in block " + std::to_string(k), 0);
        }
        out.per_block.push_back(RigidParams::from_array(r));
        out.block_matrices.push_back(to_matrix(out.per_block.back()));
        prev = compose(out.block_matrices.back(), prev);
        out.cumulative_matrices.push_back(prev);
        if (k + 1 < nb) input = two_channel<float>(reorient(intensity, prev));
    }
    out.cumulative = matrix_to_params(prev);
    out.warped = reorient(intensity, prev);
    return out;
}

RigidParams predict(const ReorientModel& model, const Volume3D& vol) {
    return forward(model, prepare_volume(vol)).cumulative;
}

void save_history_csv(const TrainHistory& h, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write history " + path.string());
    out << "epoch,stage,train_loss,val_loss";
    for (const char* n : kParamNames) out << ",mae_" << n;
    out << '\n';
    out.precision(9);
    for (const auto& r : h.epochs) {
        out << r.epoch << ',' << stage_label(r.stage) << ',' << r.train_loss << ',' << r.val_loss;
        for (double m : r.val_mae) out << ',' << m;
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<TrainingSample> load_samples(const DatasetManifest& manifest, bool with_sa) {
    std::vector<TrainingSample> samples;
    samples.reserve(manifest.entries.size());
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& e = manifest.entries[i];
        if (!e.params) throw InvalidArgument("manifest entry " + std::to_string(i) + " has no params");
        TrainingSample s{prepare_volume(load_volume(manifest.resolve(e.transaxial_path))), *e.params, {}};
        if (with_sa && e.sa_path) s.sa = prepare_volume(load_volume(manifest.resolve(*e.sa_path)));
        samples.push_back(std::move(s));
    }
    return samples;
}

namespace {

std::vector<Mat4> draw_jitter(const TrainConfig& cfg, Stage stage, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double t_std = stage == Stage::Rotation ? 0.0 : cfg.cascade_jitter[0];
    const double r_std = stage == Stage::Translation ? 0.0 : cfg.cascade_jitter[1];
    std::vector<Mat4> out;
    for (std::size_t k = 0; k < count; ++k) {
        std::array<double, 6> p{};
        for (std::size_t q = 0; q < 6; ++q) p[q] = (q < 3 ? t_std : r_std) * gauss(rng);
        out.push_back(to_matrix(RigidParams::from_array(p)));
    }
    return out;
}

}  // namespace

TrainHistory train(ReorientModel& model, std::span<const TrainingSample> train_set,
                   std::span<const TrainingSample> val_set, const TrainConfig& cfg,
                   const EpochCallback& on_epoch) {
    cfg.validate();
    if (train_set.empty()) throw InvalidArgument("training set is empty");
    if (val_set.empty()) throw InvalidArgument("validation set is empty");

    const auto nb = static_cast<std::size_t>(model.architecture().blocks);
    std::vector<std::vector<AdamState<float>>> adam(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        model.blocks()[b].visit([&](const std::vector<float>& v, auto) { adam[b].emplace_back(v.size()); });
    }
    const auto zero_grads = [&] {
        return std::vector<BlockWeights<float>>(nb, BlockWeights<float>::zeros(model.architecture()));
    };

    std::optional<GaussianParamModel> pose_model;
    if (cfg.online_augmentation && train_set.size() >= 2) {
        std::vector<RigidParams> truths;
        for (const auto& s : train_set) truths.push_back(s.truth);
        pose_model = fit_gaussians(truths, cfg.augment_truncation);
        for (double& sd : pose_model->std) sd *= cfg.augment_spread;
    }

    const bool jitter = nb > 1 && (cfg.cascade_jitter[0] > 0.0 || cfg.cascade_jitter[1] > 0.0);

    TrainHistory history;
    std::vector<std::size_t> order(train_set.size());
    const int total = cfg.total_epochs();
    for (int epoch = 1; epoch <= total; ++epoch) {
        const Stage stage = cfg.stage_of(epoch);
        const double lr = cfg.learning_rate_at(epoch);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 shuffle_rng(case_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t count = std::min(order.size() - start, static_cast<std::size_t>(cfg.batch_size));
            // One gradient buffer per sample, summed in sample order, so the
            // result does not depend on the thread schedule.
            std::vector<std::vector<BlockWeights<float>>> per_sample(count);
            std::vector<double> losses(count, 0.0);
            parallel_for(count, cfg.threads, [&](std::size_t i) {
                per_sample[i] = zero_grads();
                const std::size_t idx = order[start + i];
                const auto& s = train_set[idx];
                const auto perturb = jitter ? draw_jitter(cfg, stage, nb - 1,
                                                          case_seed(case_seed(cfg.seed, static_cast<std::uint64_t>(epoch) + (2ull << 32)), idx))
                                            : std::vector<Mat4>{};
                if (pose_model && s.sa) {
                    const std::uint64_t stream =
                        case_seed(case_seed(cfg.seed, static_cast<std::uint64_t>(epoch) + (1ull << 32)), idx);
                    const RigidParams p = sample_truncated(*pose_model, 1, stream).front();
                    losses[i] = sample_loss(model, normalize(augment_pair(*s.sa, p)), p, stage, cfg,
                                            &per_sample[i], nullptr, perturb);
                } else {
                    losses[i] = sample_loss(model, s.intensity, s.truth, stage, cfg, &per_sample[i], nullptr,
                                            perturb);
                }
            });
            double batch_loss = 0.0;
            for (double l : losses) batch_loss += l;
            if (!std::isfinite(batch_loss)) {
                throw DivergenceError("non-finite training loss in epoch " + std::to_string(epoch), epoch);
            }
            loss_sum += batch_loss;

            const float inv = 1.0f / static_cast<float>(count);
            for (std::size_t b = 0; b < nb; ++b) {
                std::vector<std::vector<float>*> grads;
                per_sample[0][b].visit([&](std::vector<float>& v, auto) { grads.push_back(&v); });
                for (std::size_t i = 1; i < count; ++i) {
                    std::size_t t = 0;
                    per_sample[i][b].visit([&](const std::vector<float>& v, auto) {
                        auto& acc = *grads[t++];
                        for (std::size_t q = 0; q < v.size(); ++q) acc[q] += v[q];
                    });
                }
                std::size_t t = 0;
                model.blocks()[b].visit([&](std::vector<float>& w, auto group) {
                    auto& g = *grads[t];
                    auto& state = adam[b][t];
                    ++t;
                    if (!trainable(stage, group)) return;
                    for (float& v : g) v *= inv;
                    state.step(std::span<float>(w), std::span<const float>(g), cfg.adam, lr);
                    for (float v : w) {
                        if (!std::isfinite(v)) {
                            throw DivergenceError("non-finite weight in epoch " + std::to_string(epoch), epoch);
                        }
                    }
                });
            }
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.stage = stage;
        rec.train_loss = loss_sum / static_cast<double>(train_set.size());
        std::vector<double> val_losses(val_set.size());
        std::vector<RigidParams> val_pred(val_set.size());
        parallel_for(val_set.size(), cfg.threads, [&](std::size_t i) {
            val_losses[i] = sample_loss<float>(model, val_set[i].intensity, val_set[i].truth, stage,
                                               cfg, nullptr, &val_pred[i]);
        });
        for (std::size_t i = 0; i < val_set.size(); ++i) {
            rec.val_loss += val_losses[i];
            const auto p = val_pred[i].to_array();
            const auto t = val_set[i].truth.to_array();
            for (std::size_t q = 0; q < 6; ++q) rec.val_mae[q] += std::abs(p[q] - t[q]);
        }
        rec.val_loss /= static_cast<double>(val_set.size());
        for (double& m : rec.val_mae) m /= static_cast<double>(val_set.size());
        if (!std::isfinite(rec.val_loss)) {
            throw DivergenceError("non-finite validation loss in epoch " + std::to_string(epoch), epoch);
        }
        history.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec, model);
    }
    return history;
}

TrainHistory train(ReorientModel& model, const DatasetManifest& train_manifest,
                   const DatasetManifest& val_manifest, const TrainConfig& cfg,
                   const EpochCallback& on_epoch) {
    if (train_manifest.entries.empty()) throw InvalidArgument("training manifest is empty");
    if (val_manifest.entries.empty()) throw InvalidArgument("validation manifest is empty");
    const auto train_set = load_samples(train_manifest, cfg.online_augmentation);
    const auto val_set = load_samples(val_manifest);
    return train(model, train_set, val_set, cfg, on_epoch);
}

// ---- checkpoint ----

namespace {

constexpr char kMagic[8] = {'R', 'E', 'O', 'R', 'I', 'E', 'N', 'T'};

template <typename U>
void put(std::ostream& out, U v) {
    static_assert(std::is_integral_v<U>);
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        out.put(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xffu));
    }
}

template <typename U>
U get(std::istream& in) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        const int c = in.get();
        if (c == std::char_traits<char>::eof()) throw FormatError("checkpoint is truncated");
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return static_cast<U>(v);
}

}  // namespace

void save_checkpoint(const ReorientModel& model, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    const Architecture& a = model.architecture();
    out.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.blocks));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.in_channels));
    for (int w : a.widths) put<std::uint32_t>(out, static_cast<std::uint32_t>(w));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.hidden));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.pooling));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.input_dims.nx));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.input_dims.ny));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.input_dims.nz));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(model.parameter_count()));
    for (const auto& b : model.blocks()) {
        b.visit([&](const std::vector<float>& v, auto) {
            for (float f : v) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
        });
    }
    if (!out) throw IoError("write failed for " + path.string());
}

ReorientModel load_checkpoint(const fs::path& path, const std::optional<Architecture>& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    char magic[sizeof kMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw FormatError(path.string() + " is not a reorientation checkpoint");
    }
    const auto version = get<std::uint32_t>(in);
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
    Architecture a;
    a.blocks = static_cast<int>(get<std::uint32_t>(in));
    a.in_channels = static_cast<int>(get<std::uint32_t>(in));
    for (int& w : a.widths) w = static_cast<int>(get<std::uint32_t>(in));
    a.hidden = static_cast<int>(get<std::uint32_t>(in));
    a.pooling = static_cast<Pooling>(get<std::uint32_t>(in));
    a.input_dims.nx = static_cast<int>(get<std::uint32_t>(in));
    a.input_dims.ny = static_cast<int>(get<std::uint32_t>(in));
    a.input_dims.nz = static_cast<int>(get<std::uint32_t>(in));
    if (expected && !(*expected == a)) {
        throw ShapeError("checkpoint architecture does not match the expected configuration");
    }
    try {
        a.validate();
    } catch (const InvalidArgument& e) {
        throw ShapeError(std::string("invalid checkpoint architecture: ") + e.what());
    }
    ReorientModel model(a);
    const auto count = get<std::uint64_t>(in);
    if (count != model.parameter_count()) {
        throw ShapeError("checkpoint holds " + std::to_string(count) + " weights, architecture needs " +
                         std::to_string(model.parameter_count()));
    }
    for (auto& b : model.blocks()) {
        b.visit([&](std::vector<float>& v, auto) {
            for (float& f : v) f = std::bit_cast<float>(get<std::uint32_t>(in));
        });
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("checkpoint has trailing bytes");
    return model;
}

}  // namespace reorient
