#include "tavp/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "tavp/checkpoint.hpp"
#include "tavp/common.hpp"
#include "tavp/evaluate.hpp"
#include "tavp/trainer.hpp"

namespace fs = std::filesystem;

namespace tavp {

namespace {

fs::path resolve_out_dir(const std::string& given, const std::string& command) {
    if (!given.empty()) return given;
    if (const char* root = std::getenv("TAVP_OUT_ROOT"); root != nullptr && *root != '\0') {
        return fs::path(root) / command;
    }
    return fs::path("tavp_out") / command;
}

struct LoadedModel {
    RunConfig rc;
    Checkpoint ckpt;
    std::unique_ptr<Model> model;
};

LoadedModel load_model(const fs::path& ckpt_path) {
    LoadedModel lm;
    lm.ckpt = Checkpoint::load(ckpt_path);
    lm.rc = RunConfig::from_keyvalues(KeyValues::parse(lm.ckpt.config_text));
    if (!lm.ckpt.entries.empty()) set_scalar_mode(lm.ckpt.entries.front().dtype);
    Rng rng(lm.rc.seed);
    lm.model = std::make_unique<Model>(lm.rc.model, rng);
    restore_model(*lm.model, lm.ckpt);
    return lm;
}

int cmd_train(const std::string& config_path, const std::string& out) {
    RunConfig rc = RunConfig::from_keyvalues(KeyValues::load(config_path));
    fs::path out_dir = resolve_out_dir(out, "train");
    TrainOutputs result = run_training(rc, out_dir);
    std::cout << "trained " << result.steps << " steps; total loss " << result.first_total
              << " -> " << result.last_total << "\n"
              << "checkpoint: " << result.checkpoint_path.string() << "\n"
              << "trace: " << result.trace_path.string() << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_root, const std::string& split,
             bool use_gt, const std::string& config_path, const std::string& out) {
    LoadedModel lm = load_model(ckpt_path);
    if (!config_path.empty()) {
        RunConfig given = RunConfig::from_keyvalues(KeyValues::load(config_path));
        auto mismatch = [&](const std::string& field, int64_t a, int64_t b) {
            if (a != b) {
                throw ConfigError("checkpoint config has " + field + " = " + std::to_string(a) +
                                  " but --config requests " + std::to_string(b));
            }
        };
        mismatch("model.height", lm.rc.model.height, given.model.height);
        mismatch("model.width", lm.rc.model.width, given.model.width);
        mismatch("model.channels", lm.rc.model.channels, given.model.channels);
        mismatch("model.obs_frames", lm.rc.model.obs_frames, given.model.obs_frames);
        mismatch("model.pred_frames", lm.rc.model.pred_frames, given.model.pred_frames);
    }
    const std::string root = data_root.empty() ? lm.rc.data_root : data_root;
    if (root.empty()) throw ConfigError("no dataset root: pass --data or set data.root");
    Dataset dataset = adapt_sot(root, lm.rc.window(), lm.rc.splits, lm.rc.seed,
                                lm.rc.model.height, lm.rc.model.width);
    MetricReport report = evaluate_split(*lm.model, dataset, split, use_gt);

    fs::path out_dir = resolve_out_dir(out, "eval");
    fs::create_directories(out_dir);
    write_report_table(out_dir / "report.tsv", report);
    write_report_keyvalues(out_dir / "report.kv", report);
    const auto& a = report.aggregate;
    std::printf("split %s: mse %.6g mae %.6g ssim %.6g psnr %.6g roi_mse %.6g miou %.6g ade %.6g\n",
                split.c_str(), a.mse, a.mae, a.ssim, a.psnr, a.roi_mse, a.miou, a.ade);
    std::cout << "report: " << (out_dir / "report.tsv").string() << "\n";
    return 0;
}

int cmd_predict(const std::string& ckpt_path, const std::string& data_root, const std::string& seq,
                int64_t start, const std::string& out) {
    LoadedModel lm = load_model(ckpt_path);
    const std::string root = data_root.empty() ? lm.rc.data_root : data_root;
    if (root.empty()) throw ConfigError("no dataset root: pass --data or set data.root");
    Dataset dataset = adapt_sot(root, lm.rc.window(), lm.rc.splits, lm.rc.seed,
                                lm.rc.model.height, lm.rc.model.width);

    const ManifestEntry* entry = nullptr;
    for (const auto& e : dataset.entries) {
        if (e.sequence == seq && e.start == start) entry = &e;
    }
    if (entry == nullptr) {
        throw ConfigError("no sample for sequence '" + seq + "' at start " + std::to_string(start));
    }

    const auto& cfg = lm.rc.model;
    Sample sample = load_sample(dataset, *entry);
    Tensor obs_frames = slice(sample.frames, 0, 0, cfg.obs_frames);
    Tensor obs_boxes = slice(sample.boxes, 0, 0, cfg.obs_frames);

    NoGradGuard no_grad;
    auto result = lm.model->forward(obs_frames, obs_boxes, nullptr);
    Tensor pred_boxes_px = denormalize_boxes(result.boxes_norm, cfg.width, cfg.height);

    fs::path out_dir = resolve_out_dir(out, "predict");
    fs::create_directories(out_dir);
    for (int64_t t = 0; t < cfg.pred_frames; ++t) {
        Image frame = tensor_to_image(
            reshape(slice(result.frames, 0, t, 1), {cfg.channels, cfg.height, cfg.width}));
        char name[48];
        std::snprintf(name, sizeof(name), "pred_%06lld.pgm", static_cast<long long>(t));
        write_pnm(out_dir / name, frame);

        draw_box_outline(frame, box_at(pred_boxes_px, t));
        std::snprintf(name, sizeof(name), "overlay_%06lld.pgm", static_cast<long long>(t));
        write_pnm(out_dir / name, frame);
    }
    write_boxes_csv(out_dir / "boxes.txt", pred_boxes_px);
    std::cout << "wrote " << cfg.pred_frames << " frames + boxes to " << out_dir.string() << "\n";
    return 0;
}

int cmd_datagen(const std::string& config_path) {
    RunConfig rc = RunConfig::from_keyvalues(KeyValues::load(config_path));
    if (rc.data_root.empty()) throw ConfigError("config field 'data.root': required for datagen");
    SyntheticConfig gen;
    gen.seed = rc.gen_seed;
    gen.count = rc.gen_count;
    gen.frames = rc.gen_frames;
    gen.height = rc.model.height;
    gen.width = rc.model.width;
    auto sequences = generate_synthetic(gen);
    write_dataset(rc.data_root, sequences);
    std::cout << "wrote " << sequences.size() << " sequences to " << rc.data_root << "\n";
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"target-aware aerial video prediction"};
    app.require_subcommand(1);

    std::string config_path, out_dir, ckpt_path, data_root, split = "test", seq;
    int64_t start = 0;
    bool use_gt = false;

    auto* train = app.add_subcommand("train", "train a model from a config file");
    train->add_option("--config", config_path, "key=value config file")->required();
    train->add_option("--out", out_dir, "output directory");

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    eval->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
    eval->add_option("--data", data_root, "dataset root (default: checkpoint config)");
    eval->add_option("--split", split, "train|val|test");
    eval->add_option("--config", config_path, "config to cross-check against the checkpoint");
    eval->add_flag("--use-gt", use_gt, "score the ground truth against itself (oracle debug)");
    eval->add_option("--out", out_dir, "output directory");

    auto* predict = app.add_subcommand("predict", "predict one sample and write frames/boxes");
    predict->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
    predict->add_option("--data", data_root, "dataset root (default: checkpoint config)");
    predict->add_option("--seq", seq, "sequence id")->required();
    predict->add_option("--start", start, "window start frame")->required();
    predict->add_option("--out", out_dir, "output directory");

    auto* datagen = app.add_subcommand("datagen", "write a synthetic dataset");
    datagen->add_option("--config", config_path, "key=value config file")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    // commands may switch the scalar mode (training, checkpoint loading);
    // restore it for in-process callers
    ScalarModeGuard mode_guard(scalar_mode());
    try {
        if (train->parsed()) return cmd_train(config_path, out_dir);
        if (eval->parsed()) {
            std::string cross_config = config_path;
            return cmd_eval(ckpt_path, data_root, split, use_gt, cross_config, out_dir);
        }
        if (predict->parsed()) return cmd_predict(ckpt_path, data_root, seq, start, out_dir);
        if (datagen->parsed()) return cmd_datagen(config_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace tavp
