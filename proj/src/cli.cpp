#include "reorient/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "reorient/augment.hpp"
#include "reorient/error.hpp"
#include "reorient/eval.hpp"
#include "reorient/model.hpp"
#include "reorient/phantom.hpp"
#include "reorient/register.hpp"
#include "reorient/stn.hpp"

namespace reorient::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Common {
    std::uint64_t seed = kDefaultSeed;
    bool deterministic = false;
    int threads = 1;
    std::string config;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    cmd->add_flag("--deterministic", c.deterministic, "Force deterministic reductions");
    cmd->add_option("--threads", c.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--config", c.config, "JSON config file; flags override its values");
}

json read_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    try {
        json j;
        in >> j;
        if (!j.is_object()) throw FormatError("config " + path + " must be a JSON object");
        return j;
    } catch (const json::exception& e) {
        throw FormatError("malformed config " + path + ": " + e.what());
    }
}

// Config value for `key` unless the flag was given on the command line.
template <typename T>
void merge(const json& cfg, const char* key, const CLI::Option* flag, T& value) {
    if (flag->count() > 0 || !cfg.contains(key)) return;
    try {
        value = cfg.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("config key ") + key + ": " + e.what());
    }
}

json load_common(CLI::App* cmd, Common& c) {
    json cfg = read_config(c.config);
    merge(cfg, "seed", cmd->get_option("--seed"), c.seed);
    merge(cfg, "threads", cmd->get_option("--threads"), c.threads);
    merge(cfg, "deterministic", cmd->get_option("--deterministic"), c.deterministic);
    if (c.threads < 1) throw InvalidArgument("threads must be positive");
    return cfg;
}

void write_params(const RigidParams& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << json(p).dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path);
}

RigidParams read_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open params " + path);
    try {
        json j;
        in >> j;
        return j.get<RigidParams>();
    } catch (const json::exception& e) {
        throw FormatError("malformed params " + path + ": " + e.what());
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cardiac SPECT reorientation: phantoms, augmentation, training and registration",
                 "spect_reorient"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "spect_reorient 1.0");

    // phantom
    Common phantom_common;
    int phantom_n = 0;
    std::string phantom_out;
    double trans_std = 3.0, rot_std = 10.0, truncation = 2.0;
    auto* phantom = app.add_subcommand("phantom", "Generate a synthetic phantom dataset");
    add_common(phantom, phantom_common);
    auto* opt_n = phantom->add_option("--n", phantom_n, "Number of cases")->check(CLI::PositiveNumber);
    phantom->add_option("--out", phantom_out, "Output directory")->required();
    auto* opt_tstd = phantom->add_option("--trans-std", trans_std, "Translation std (voxels)")->capture_default_str();
    auto* opt_rstd = phantom->add_option("--rot-std", rot_std, "Rotation std (degrees)")->capture_default_str();
    auto* opt_trunc = phantom->add_option("--truncation", truncation, "Truncation half-width (std units)")->capture_default_str();

    // augment
    Common augment_common;
    std::string augment_manifest_path, augment_out;
    int augment_count = kAugmentationsPerCase;
    double augment_trunc = 2.0;
    auto* augment = app.add_subcommand("augment", "Fit parameter Gaussians and add inverse-warped cases");
    add_common(augment, augment_common);
    augment->add_option("--manifest", augment_manifest_path, "Input manifest")->required();
    augment->add_option("--out", augment_out, "Output directory")->required();
    auto* opt_count = augment->add_option("--count", augment_count, "Augmentations per case")->capture_default_str();
    auto* opt_atrunc = augment->add_option("--truncation", augment_trunc, "Truncation half-width (std units)")->capture_default_str();

    // train
    Common train_common;
    std::string train_manifest, val_manifest, train_out, history_out;
    TrainConfig tc;
    auto* train_cmd = app.add_subcommand("train", "Train the reorientation cascade");
    add_common(train_cmd, train_common);
    train_cmd->add_option("--train", train_manifest, "Training manifest")->required();
    train_cmd->add_option("--val", val_manifest, "Validation manifest")->required();
    train_cmd->add_option("--out", train_out, "Checkpoint path")->required();
    train_cmd->add_option("--history", history_out, "History CSV (default: <out>.history.csv)");
    auto* opt_s1 = train_cmd->add_option("--stage1", tc.epochs[0], "Translation-only epochs")->capture_default_str();
    auto* opt_s2 = train_cmd->add_option("--stage2", tc.epochs[1], "Rotation-only epochs")->capture_default_str();
    auto* opt_s3 = train_cmd->add_option("--stage3", tc.epochs[2], "Joint epochs")->capture_default_str();
    auto* opt_bs = train_cmd->add_option("--batch-size", tc.batch_size, "Batch size")->capture_default_str();
    auto* opt_lr = train_cmd->add_option("--lr", tc.adam.learning_rate, "Adam learning rate")->capture_default_str();
    auto* opt_mu = train_cmd->add_option("--mu", tc.loss.mu, "Weight of the rotation MSE term")->capture_default_str();
    bool online = false;
    train_cmd->add_flag("--online-augmentation", online, "Re-pose SA volumes with fresh parameters every epoch");
    auto* opt_spread = train_cmd->add_option("--augment-spread", tc.augment_spread,
                                             "Scale on the fitted pose stds for online augmentation")
                           ->check(CLI::PositiveNumber)
                           ->capture_default_str();
    auto* opt_jitter = train_cmd->add_option("--cascade-jitter", tc.cascade_jitter,
                                             "Std of random offsets between blocks (voxels, degrees)")
                           ->expected(2);
    auto* opt_floor = train_cmd->add_option("--lr-floor", tc.stage_lr_floor,
                                            "Final fraction of the learning rate in each stage (cosine decay)")
                          ->check(CLI::Range(0.0, 1.0))
                          ->capture_default_str();
    std::string pooling = "average";
    auto* opt_pool = train_cmd->add_option("--pooling", pooling, "Feature pooling before the dense layers")
                         ->check(CLI::IsMember({"average", "flatten"}))
                         ->capture_default_str();

    // predict
    Common predict_common;
    std::string predict_model, predict_in, predict_out;
    auto* predict_cmd = app.add_subcommand("predict", "Predict reorientation parameters for a volume");
    add_common(predict_cmd, predict_common);
    predict_cmd->add_option("--model", predict_model, "Checkpoint")->required();
    predict_cmd->add_option("--in", predict_in, "Input volume")->required();
    predict_cmd->add_option("--out", predict_out, "Output params JSON")->required();

    // reorient
    Common reorient_common;
    std::string reorient_in, reorient_params, reorient_out;
    auto* reorient_cmd = app.add_subcommand("reorient", "Apply rigid parameters to a volume");
    add_common(reorient_cmd, reorient_common);
    reorient_cmd->add_option("--in", reorient_in, "Input volume")->required();
    reorient_cmd->add_option("--params", reorient_params, "Params JSON")->required();
    reorient_cmd->add_option("--out", reorient_out, "Output volume")->required();

    // register
    Common register_common;
    std::string reg_moving, reg_fixed, reg_out;
    RegisterConfig rc;
    bool single_stage = false;
    auto* register_cmd = app.add_subcommand("register", "Recover parameters by direct image registration");
    add_common(register_cmd, register_common);
    register_cmd->add_option("--moving", reg_moving, "Moving (transaxial) volume")->required();
    register_cmd->add_option("--fixed", reg_fixed, "Fixed (short-axis) volume")->required();
    register_cmd->add_option("--out", reg_out, "Output params JSON")->required();
    auto* opt_step = register_cmd->add_option("--step", rc.step_size, "Initial step (voxels / degrees)")->capture_default_str();
    auto* opt_tol = register_cmd->add_option("--tolerance", rc.tolerance, "Convergence tolerance")->capture_default_str();
    auto* opt_iters = register_cmd->add_option("--max-iters", rc.max_iters, "Iterations per stage (3 values)")->expected(3);
    register_cmd->add_flag("--single-stage", single_stage, "Optimise all six parameters jointly");

    // eval
    Common eval_common;
    std::string eval_model, eval_manifest, eval_out;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
    add_common(eval_cmd, eval_common);
    eval_cmd->add_option("--model", eval_model, "Checkpoint")->required();
    eval_cmd->add_option("--manifest", eval_manifest, "Manifest with ground truth")->required();
    eval_cmd->add_option("--out", eval_out, "Report directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << app.version() << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        // A subcommand's --help surfaces here with the subcommand selected.
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
            for (auto* sub : app.get_subcommands()) out << sub->help();
            if (app.get_subcommands().empty()) out << app.help();
            return 0;
        }
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "error: usage: " << msg << '\n';
        return 2;
    }

    try {
        if (phantom->parsed()) {
            const json cfg = load_common(phantom, phantom_common);
            merge(cfg, "n", opt_n, phantom_n);
            merge(cfg, "trans_std", opt_tstd, trans_std);
            merge(cfg, "rot_std", opt_rstd, rot_std);
            merge(cfg, "truncation", opt_trunc, truncation);
            if (phantom_n < 1) throw InvalidArgument("--n must be given and positive");
            GaussianParamModel model;
            model.mean.fill(0.0);
            model.std = {trans_std, trans_std, trans_std, rot_std, rot_std, rot_std};
            model.truncation_sigmas = truncation;
            make_dataset(phantom_n, model, PhantomRanges{}, phantom_common.seed, phantom_out,
                         phantom_common.threads);
            out << "wrote " << phantom_n << " cases to " << (fs::path(phantom_out) / "manifest.json").string() << '\n';
        } else if (augment->parsed()) {
            const json cfg = load_common(augment, augment_common);
            merge(cfg, "count", opt_count, augment_count);
            merge(cfg, "truncation", opt_atrunc, augment_trunc);
            AugmentOptions o;
            o.count = augment_count;
            o.truncation_sigmas = augment_trunc;
            o.seed = augment_common.seed;
            o.threads = augment_common.threads;
            const auto result = augment_manifest(load_manifest(augment_manifest_path), augment_out, o);
            out << "wrote " << result.entries.size() << " entries to "
                << (fs::path(augment_out) / "manifest.json").string() << '\n';
        } else if (train_cmd->parsed()) {
            TrainConfig cfg_file = tc;
            const json cfg = load_common(train_cmd, train_common);
            try {
                from_json(cfg, cfg_file);
            } catch (const json::exception& e) {
                throw FormatError(std::string("malformed train config: ") + e.what());
            }
            // flags override the file
            if (opt_s1->count() == 0) tc.epochs[0] = cfg_file.epochs[0];
            if (opt_s2->count() == 0) tc.epochs[1] = cfg_file.epochs[1];
            if (opt_s3->count() == 0) tc.epochs[2] = cfg_file.epochs[2];
            if (opt_bs->count() == 0) tc.batch_size = cfg_file.batch_size;
            if (opt_lr->count() == 0) tc.adam.learning_rate = cfg_file.adam.learning_rate;
            if (opt_mu->count() == 0) tc.loss.mu = cfg_file.loss.mu;
            if (opt_floor->count() == 0) tc.stage_lr_floor = cfg_file.stage_lr_floor;
            if (opt_jitter->count() == 0) tc.cascade_jitter = cfg_file.cascade_jitter;
            tc.adam.beta1 = cfg_file.adam.beta1;
            tc.adam.beta2 = cfg_file.adam.beta2;
            tc.adam.epsilon = cfg_file.adam.epsilon;
            tc.deep_supervision = cfg_file.deep_supervision;
            tc.online_augmentation = online || cfg_file.online_augmentation;
            tc.augment_truncation = cfg_file.augment_truncation;
            if (opt_spread->count() == 0) tc.augment_spread = cfg_file.augment_spread;
            tc.seed = train_common.seed;
            tc.threads = train_common.threads;
            tc.deterministic = train_common.deterministic;

            if (opt_pool->count() == 0 && cfg.contains("pooling")) {
                if (!cfg["pooling"].is_string()) throw FormatError("config key pooling must be a string");
                pooling = cfg["pooling"].get<std::string>();
                if (pooling != "average" && pooling != "flatten") {
                    throw FormatError("config key pooling must be average or flatten");
                }
            }
            Architecture arch;
            arch.pooling = pooling == "flatten" ? Pooling::Flatten : Pooling::GlobalAverage;
            ReorientModel model{arch};
            model.initialize(tc.seed);
            const auto history = train(model, load_manifest(train_manifest), load_manifest(val_manifest), tc,
                                       [&](const EpochRecord& r, const ReorientModel&) {
                                           out << "epoch " << r.epoch << " [" << stage_label(r.stage)
                                               << "] train " << r.train_loss << " val " << r.val_loss << '\n';
                                       });
            save_checkpoint(model, train_out);
            save_history_csv(history, history_out.empty() ? train_out + ".history.csv" : history_out);
        } else if (predict_cmd->parsed()) {
            load_common(predict_cmd, predict_common);
            const auto model = load_checkpoint(predict_model);
            write_params(predict(model, load_volume(predict_in)), predict_out);
        } else if (reorient_cmd->parsed()) {
            load_common(reorient_cmd, reorient_common);
            save_volume(reorient(load_volume(reorient_in), read_params(reorient_params)), reorient_out);
        } else if (register_cmd->parsed()) {
            const json cfg = load_common(register_cmd, register_common);
            merge(cfg, "step", opt_step, rc.step_size);
            merge(cfg, "tolerance", opt_tol, rc.tolerance);
            merge(cfg, "max_iters", opt_iters, rc.max_iters);
            if (cfg.contains("single_stage") && !single_stage) single_stage = cfg["single_stage"].get<bool>();
            rc.staged = !single_stage;
            const auto result = register_volumes(normalize(load_volume(reg_moving)),
                                                 normalize(load_volume(reg_fixed)), rc);
            write_params(result.params, reg_out);
            out << "objective " << result.objective << " after " << result.iterations << " iterations\n";
        } else if (eval_cmd->parsed()) {
            load_common(eval_cmd, eval_common);
            const auto model = load_checkpoint(eval_model);
            auto report = evaluate(model, load_manifest(eval_manifest), eval_common.threads);
            report.config["manifest"] = eval_manifest;
            report.config["model"] = eval_model;
            write_report(report, eval_out);
            for (std::size_t q = 0; q < 6; ++q) {
                out << kParamNames[q] << " r=" << report.params[q].pearson_r
                    << " mae=" << report.params[q].mae << '\n';
            }
        }
    } catch (const Error& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "error: " << e.kind() << ": " << msg << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "error: internal: " << msg << '\n';
        return 1;
    }
    return 0;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace reorient::cli
