#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "support/helpers.hpp"
#include "tavp/cli.hpp"
#include "tavp/config.hpp"
#include "tavp/data.hpp"

using namespace tavp;
using namespace tavp::testing;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("tavp_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_tiny_config(const fs::path& path, const fs::path& data_root) {
    std::ofstream out(path);
    out << "model.obs_frames = 2\n"
           "model.pred_frames = 2\n"
           "model.channels = 1\n"
           "model.height = 16\n"
           "model.width = 16\n"
           "model.hidden_channels = 4\n"
           "model.decoder_channels = 4\n"
           "model.depth = 1\n"
           "model.heads = 2\n"
           "model.motion_decoder_depth = 1\n"
           "ism.roi_tokens = 1\n"
           "ism.state_tokens = 1\n"
           "train.batch_size = 2\n"
           "train.max_steps = 4\n"
           "train.seed = 5\n"
           "data.window_stride = 2\n"
           "data.split.train = 1.0\n"
           "data.split.val = 0\n"
           "data.split.test = 0\n"
           "gen.count = 3\n"
           "gen.frames = 6\n"
        << "data.root = " << data_root.string() << "\n";
}

} // namespace

TEST_CASE("cli pipeline: datagen, train, eval, predict") {
    fs::path base = fresh_dir("pipeline");
    fs::path data_root = base / "data";
    fs::path config = base / "run.cfg";
    write_tiny_config(config, data_root);

    CHECK(run_cli({"datagen", "--config", config.string()}) == 0);
    CHECK(fs::exists(data_root / "seq0000" / "boxes.txt"));
    CHECK(fs::exists(data_root / "seq0002" / "frames" / "000005.pgm"));

    // regeneration is byte-identical
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    std::string frame_before = slurp(data_root / "seq0001" / "frames" / "000000.pgm");
    CHECK(run_cli({"datagen", "--config", config.string()}) == 0);
    CHECK(slurp(data_root / "seq0001" / "frames" / "000000.pgm") == frame_before);

    fs::path train_out = base / "train";
    CHECK(run_cli({"train", "--config", config.string(), "--out", train_out.string()}) == 0);
    fs::path ckpt = train_out / "checkpoint.bin";
    REQUIRE(fs::exists(ckpt));

    fs::path eval_out = base / "eval";
    CHECK(run_cli({"eval", "--ckpt", ckpt.string(), "--split", "train", "--out",
                   eval_out.string()}) == 0);
    REQUIRE(fs::exists(eval_out / "report.kv"));

    // oracle mode: ground truth scored against itself
    fs::path oracle_out = base / "eval_gt";
    CHECK(run_cli({"eval", "--ckpt", ckpt.string(), "--split", "train", "--use-gt", "--out",
                   oracle_out.string()}) == 0);
    KeyValues kv = KeyValues::load(oracle_out / "report.kv");
    CHECK(kv.get_double("aggregate.ssim", 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(kv.get_double("aggregate.miou", 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(kv.get_double("aggregate.ade", 1) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(kv.get_double("aggregate.mse", 1) == 0.0);

    // aggregate equals the mean of per-sequence rows
    fs::path eval_kv = eval_out / "report.kv";
    KeyValues full = KeyValues::load(eval_kv);
    double sum_ssim = 0;
    int rows = 0;
    for (const auto& [key, value] : full.raw()) {
        if (key.rfind("sequence.", 0) == 0 && key.size() > 5 &&
            key.substr(key.size() - 5) == ".ssim") {
            sum_ssim += std::stod(value);
            ++rows;
        }
    }
    REQUIRE(rows > 0);
    CHECK(full.get_double("aggregate.ssim", 0) ==
          doctest::Approx(sum_ssim / rows).epsilon(1e-9));

    // predict: T' frames, T' box rows, overlays differ from the plain frames
    fs::path pred_out = base / "pred";
    CHECK(run_cli({"predict", "--ckpt", ckpt.string(), "--seq", "seq0000", "--start", "0",
                   "--out", pred_out.string()}) == 0);
    CHECK(fs::exists(pred_out / "pred_000000.pgm"));
    CHECK(fs::exists(pred_out / "pred_000001.pgm"));
    CHECK(!fs::exists(pred_out / "pred_000002.pgm"));
    Tensor boxes = read_boxes_csv(pred_out / "boxes.txt");
    CHECK(boxes.shape() == Shape{2, 4});
    CHECK(slurp(pred_out / "pred_000000.pgm") != slurp(pred_out / "overlay_000000.pgm"));
}

TEST_CASE("cli exit codes: config errors are 2") {
    fs::path base = fresh_dir("exitcodes");
    fs::path bad = base / "bad.cfg";
    {
        std::ofstream out(bad);
        out << "model.height = 30\n"; // not divisible by 4
    }
    CHECK(run_cli({"train", "--config", bad.string()}) == 2);
    CHECK(run_cli({"train", "--config", (base / "missing.cfg").string()}) == 2);
    CHECK(run_cli({"eval", "--ckpt", (base / "nope.bin").string()}) == 1); // io error
}

TEST_CASE("numerical aborts exit with 3 and keep the last good checkpoint") {
    fs::path base = fresh_dir("nanabort");
    fs::path data_root = base / "data";
    fs::path config = base / "run.cfg";
    write_tiny_config(config, data_root);
    {
        std::ofstream out(config, std::ios::app);
        out << "opt.lr = 1e18\n" // guaranteed overflow within a few steps
               "train.max_steps = 50\n"
               "train.checkpoint_every = 1\n";
    }
    CHECK(run_cli({"datagen", "--config", config.string()}) == 0);
    fs::path train_out = base / "train";
    CHECK(run_cli({"train", "--config", config.string(), "--out", train_out.string()}) == 3);
    CHECK(fs::exists(train_out / "checkpoint_last.bin")); // last-good snapshot retained
    CHECK(!fs::exists(train_out / "checkpoint.bin"));     // no final checkpoint
}

TEST_CASE("eval cross-checks an explicit config against the checkpoint") {
    fs::path base = fresh_dir("crosscheck");
    fs::path data_root = base / "data";
    fs::path config = base / "run.cfg";
    write_tiny_config(config, data_root);
    CHECK(run_cli({"datagen", "--config", config.string()}) == 0);
    fs::path train_out = base / "train";
    CHECK(run_cli({"train", "--config", config.string(), "--out", train_out.string()}) == 0);

    fs::path other = base / "other.cfg";
    {
        std::ifstream in(config);
        std::ofstream out(other);
        std::string line;
        while (std::getline(in, line)) {
            if (line.rfind("model.height", 0) == 0) line = "model.height = 32";
            if (line.rfind("model.width", 0) == 0) line = "model.width = 32";
            out << line << "\n";
        }
    }
    CHECK(run_cli({"eval", "--ckpt", (train_out / "checkpoint.bin").string(), "--split", "train",
                   "--config", other.string(), "--out", (base / "e").string()}) == 2);
}

TEST_CASE("the output root environment variable supplies default out dirs") {
    fs::path base = fresh_dir("envroot");
    fs::path data_root = base / "data";
    fs::path config = base / "run.cfg";
    write_tiny_config(config, data_root);
    CHECK(run_cli({"datagen", "--config", config.string()}) == 0);
    fs::path train_out = base / "train";
    CHECK(run_cli({"train", "--config", config.string(), "--out", train_out.string()}) == 0);

    setenv("TAVP_OUT_ROOT", (base / "routed").c_str(), 1);
    CHECK(run_cli({"eval", "--ckpt", (train_out / "checkpoint.bin").string(), "--split",
                   "train"}) == 0);
    unsetenv("TAVP_OUT_ROOT");
    CHECK(fs::exists(base / "routed" / "eval" / "report.kv"));
}
