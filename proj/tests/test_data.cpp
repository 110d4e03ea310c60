#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "support/helpers.hpp"
#include "tavp/common.hpp"
#include "tavp/data.hpp"

using namespace tavp;
using namespace tavp::testing;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("tavp_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

WindowSpec spec_16_6() { return WindowSpec{16, 6, 8, 8}; }

} // namespace

TEST_CASE("window counts: worked examples") {
    CHECK(window_sequences(16, spec_16_6()).size() == 1);  // exact fit
    CHECK(window_sequences(106, spec_16_6()).size() == 16);
    CHECK(window_sequences(100, WindowSpec{16, 16, 8, 8}).size() == 6);
    CHECK(window_sequences(15, spec_16_6()).empty());
}

TEST_CASE("window count formula equals brute-force enumeration") {
    for (int64_t stride : {6, 16}) {
        WindowSpec spec{16, stride, 8, 8};
        for (int64_t len = 16; len <= 216; ++len) {
            auto windows = window_sequences(len, spec);
            // brute force: every start whose window fits
            int64_t brute = 0;
            for (int64_t start = 0; start + 16 <= len; ++start) {
                if (start % stride == 0) ++brute;
            }
            int64_t formula = (len - 16) / stride + 1;
            CHECK(static_cast<int64_t>(windows.size()) == brute);
            CHECK(static_cast<int64_t>(windows.size()) == formula);
            for (auto [s, e] : windows) CHECK(e - s == 16);
        }
    }
}

TEST_CASE("window spec validation") {
    CHECK_THROWS_AS(window_sequences(32, WindowSpec{16, 6, 8, 7}), ConfigError);
}

TEST_CASE("synthetic generation is deterministic per seed") {
    SyntheticConfig cfg;
    cfg.seed = 7;
    cfg.count = 3;
    cfg.height = 32;
    cfg.width = 32;
    cfg.frames = 8;
    auto a = generate_synthetic(cfg);
    auto b = generate_synthetic(cfg);
    REQUIRE(a.size() == b.size());
    for (size_t s = 0; s < a.size(); ++s) {
        CHECK(a[s].id == b[s].id);
        for (size_t t = 0; t < a[s].frames.size(); ++t) {
            CHECK(a[s].frames[t].pixels == b[s].frames[t].pixels);
            CHECK(a[s].boxes[t].cx == b[s].boxes[t].cx);
            CHECK(a[s].boxes[t].cy == b[s].boxes[t].cy);
        }
    }
    cfg.seed = 8;
    auto c = generate_synthetic(cfg);
    CHECK(a[0].frames[0].pixels != c[0].frames[0].pixels);
}

TEST_CASE("synthetic targets are visible and stay inside the frame") {
    SyntheticConfig cfg;
    cfg.seed = 11;
    cfg.count = 6;
    cfg.height = 32;
    cfg.width = 32;
    cfg.frames = 8;
    for (const auto& seq : generate_synthetic(cfg)) {
        for (size_t t = 0; t < seq.frames.size(); ++t) {
            const Image& img = seq.frames[t];
            const Box& box = seq.boxes[t];
            CHECK(box.cx - box.w / 2 >= 0.0);
            CHECK(box.cx + box.w / 2 <= cfg.width);
            CHECK(box.cy - box.h / 2 >= 0.0);
            CHECK(box.cy + box.h / 2 <= cfg.height);

            double inside = 0, outside = 0;
            int64_t n_in = 0, n_out = 0;
            for (int64_t y = 0; y < img.height; ++y)
                for (int64_t x = 0; x < img.width; ++x) {
                    bool in_box = std::fabs(x + 0.5 - box.cx) <= box.w / 2 &&
                                  std::fabs(y + 0.5 - box.cy) <= box.h / 2;
                    double v = img.at(0, y, x);
                    CHECK(v >= 0.0);
                    CHECK(v <= 1.0);
                    (in_box ? inside : outside) += v;
                    (in_box ? n_in : n_out) += 1;
                }
            REQUIRE(n_in > 0);
            CHECK(std::fabs(inside / n_in - outside / n_out) >= 0.2);
        }
    }
}

TEST_CASE("linear-motion sequences are exactly constant velocity") {
    SyntheticConfig cfg;
    cfg.seed = 3;
    cfg.count = 9; // motion kinds cycle linear/arc/turn
    cfg.height = 32;
    cfg.width = 32;
    cfg.frames = 8;
    int checked = 0;
    for (const auto& seq : generate_synthetic(cfg)) {
        if (seq.motion != "linear") continue;
        ++checked;
        // constant-velocity extrapolation from the first two boxes
        double vx = seq.boxes[1].cx - seq.boxes[0].cx;
        double vy = seq.boxes[1].cy - seq.boxes[0].cy;
        double err = 0.0;
        for (size_t t = 0; t < seq.boxes.size(); ++t) {
            double ex = seq.boxes[0].cx + vx * static_cast<double>(t);
            double ey = seq.boxes[0].cy + vy * static_cast<double>(t);
            err += std::hypot(seq.boxes[t].cx - ex, seq.boxes[t].cy - ey);
        }
        CHECK(err / static_cast<double>(seq.boxes.size()) < 1e-6);
    }
    CHECK(checked == 3);
}

TEST_CASE("pnm images survive a write/read round trip") {
    fs::path dir = fresh_dir("pnm");
    Rng rng(5);
    Image img;
    img.channels = 1;
    img.height = 10;
    img.width = 12;
    for (int64_t i = 0; i < 120; ++i) img.pixels.push_back(rng.uniform(0.0, 1.0));
    write_pnm(dir / "a.pgm", img);
    Image back = read_pnm(dir / "a.pgm");
    REQUIRE(back.height == 10);
    REQUIRE(back.width == 12);
    // quantization error at 8 bits is at most 1/510
    for (int64_t i = 0; i < 120; ++i) {
        CHECK(std::fabs(back.pixels[static_cast<size_t>(i)] -
                        img.pixels[static_cast<size_t>(i)]) <= 0.5 / 255.0 + 1e-12);
    }
    // a second write of the read-back image is byte-identical
    write_pnm(dir / "b.pgm", back);
    std::ifstream fa(dir / "a.pgm", std::ios::binary), fb(dir / "b.pgm", std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);

    Image rgb;
    rgb.channels = 3;
    rgb.height = 4;
    rgb.width = 5;
    for (int64_t i = 0; i < 60; ++i) rgb.pixels.push_back(rng.uniform(0.0, 1.0));
    write_pnm(dir / "c.ppm", rgb);
    Image rgb_back = read_pnm(dir / "c.ppm");
    CHECK(rgb_back.channels == 3);
}

TEST_CASE("box scaling follows the proportional-resize arithmetic") {
    Box scaled = scale_box(Box{640, 360, 100, 50}, 1280, 720, 256, 256);
    CHECK(scaled.cx == doctest::Approx(128.0));
    CHECK(scaled.cy == doctest::Approx(128.0));
    CHECK(scaled.w == doctest::Approx(20.0));
    CHECK(scaled.h == doctest::Approx(50.0 * 256.0 / 720.0)); // ~17.78
    CHECK(scaled.h == doctest::Approx(17.7778).epsilon(1e-4));
}

TEST_CASE("clamped boxes always lie inside the frame") {
    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
        Box raw{rng.uniform(-20, 60), rng.uniform(-20, 60), rng.uniform(0, 80), rng.uniform(0, 80)};
        Box b = clamp_box(raw, 32, 32);
        CHECK(b.cx - b.w / 2 >= -1e-12);
        CHECK(b.cx + b.w / 2 <= 32 + 1e-12);
        CHECK(b.cy - b.h / 2 >= -1e-12);
        CHECK(b.cy + b.h / 2 <= 32 + 1e-12);
    }
}

TEST_CASE("dataset adapter: windows, splits, loading") {
    fs::path root = fresh_dir("adapter");
    SyntheticConfig gen;
    gen.seed = 21;
    gen.count = 10;
    gen.height = 16;
    gen.width = 16;
    gen.frames = 10;
    write_dataset(root, generate_synthetic(gen));

    WindowSpec spec{8, 2, 4, 4};
    Dataset ds = adapt_sot(root, spec, SplitFractions{0.7, 0.2, 0.1}, 33, 16, 16);
    CHECK(ds.rejected.empty());
    CHECK(ds.sequences.size() == 10);
    CHECK(ds.entries.size() == 10 * window_sequences(10, spec).size());

    // split disjointness: every sequence appears in exactly one split
    std::map<std::string, std::set<std::string>> splits_of;
    for (const auto& e : ds.entries) splits_of[e.sequence].insert(e.split);
    CHECK(splits_of.size() == 10);
    std::set<std::string> train_ids, other_ids;
    for (const auto& [id, splits] : splits_of) CHECK(splits.size() == 1);

    // 7:2:1 over ten sequences
    std::map<std::string, int> split_counts;
    for (const auto& [id, splits] : splits_of) split_counts[*splits.begin()]++;
    CHECK(split_counts["train"] == 7);
    CHECK(split_counts["val"] == 2);
    CHECK(split_counts["test"] == 1);

    Sample sample = load_sample(ds, ds.entries.front());
    CHECK(sample.frames.shape() == Shape{8, 1, 16, 16});
    CHECK(sample.boxes.shape() == Shape{8, 4});
    for (int64_t t = 0; t < 8; ++t) {
        Box b = box_at(sample.boxes, t);
        CHECK(b.cx - b.w / 2 >= -1e-9);
        CHECK(b.cx + b.w / 2 <= 16 + 1e-9);
    }

    fs::path manifest = root / "manifest.txt";
    write_manifest(manifest, ds);
    std::ifstream in(manifest);
    std::string line;
    int64_t lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        CHECK(std::count(line.begin(), line.end(), ',') == 2);
    }
    CHECK(lines == static_cast<int64_t>(ds.entries.size()));
}

TEST_CASE("annotation count mismatch rejects the sequence with a diagnostic") {
    fs::path root = fresh_dir("mismatch");
    SyntheticConfig gen;
    gen.seed = 4;
    gen.count = 2;
    gen.height = 16;
    gen.width = 16;
    gen.frames = 16;
    write_dataset(root, generate_synthetic(gen));

    // drop the last annotation line of seq0000: 15 lines for 16 frames
    fs::path boxes = root / "seq0000" / "boxes.txt";
    std::ifstream in(boxes);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    in.close();
    std::ofstream out(boxes);
    for (size_t i = 0; i + 1 < lines.size(); ++i) out << lines[i] << "\n";
    out.close();

    Dataset ds = adapt_sot(root, WindowSpec{16, 6, 8, 8}, SplitFractions{}, 1, 16, 16);
    REQUIRE(ds.rejected.size() == 1);
    CHECK(ds.rejected[0].find("seq0000") != std::string::npos);
    CHECK(ds.sequences.size() == 1);
}

TEST_CASE("unparseable annotation lines are fatal and name the location") {
    fs::path root = fresh_dir("badline");
    SyntheticConfig gen;
    gen.seed = 5;
    gen.count = 1;
    gen.height = 16;
    gen.width = 16;
    gen.frames = 16;
    write_dataset(root, generate_synthetic(gen));
    {
        std::ofstream out(root / "seq0000" / "boxes.txt", std::ios::app);
        out << "not,a,box,line\n";
    }
    try {
        adapt_sot(root, WindowSpec{16, 6, 8, 8}, SplitFractions{}, 1, 16, 16);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        std::string msg = e.what();
        CHECK(msg.find("boxes.txt") != std::string::npos);
        CHECK(msg.find(":17") != std::string::npos);
    }
}

TEST_CASE("NaN annotations (occlusion) skip the containing windows") {
    fs::path root = fresh_dir("nanline");
    SyntheticConfig gen;
    gen.seed = 6;
    gen.count = 1;
    gen.height = 16;
    gen.width = 16;
    gen.frames = 20;
    write_dataset(root, generate_synthetic(gen));

    fs::path boxes = root / "seq0000" / "boxes.txt";
    std::ifstream in(boxes);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    in.close();
    lines[10] = "NaN,NaN,NaN,NaN";
    std::ofstream out(boxes);
    for (const auto& l : lines) out << l << "\n";
    out.close();

    WindowSpec spec{8, 2, 4, 4};
    Dataset ds = adapt_sot(root, spec, SplitFractions{1, 0, 0}, 1, 16, 16);
    CHECK(ds.rejected.empty());
    for (const auto& e : ds.entries) {
        CHECK((e.start + 8 <= 10 || e.start > 10));
    }
    CHECK(ds.entries.size() < window_sequences(20, spec).size());
}

TEST_CASE("box csv files round trip bit-exactly") {
    fs::path dir = fresh_dir("boxcsv");
    Rng rng(9);
    Tensor boxes = Tensor::rand_uniform({6, 4}, rng, 0.0, 120.0);
    write_boxes_csv(dir / "boxes.txt", boxes);
    Tensor back = read_boxes_csv(dir / "boxes.txt");
    CHECK(bit_equal(boxes, back));
}
