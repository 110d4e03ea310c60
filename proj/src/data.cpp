#include "tavp/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "tavp/common.hpp"

namespace fs = std::filesystem;

namespace tavp {

void WindowSpec::validate() const {
    if (width < 1 || stride < 1) throw ConfigError("window spec: width and stride must be >= 1");
    if (obs < 1 || fut < 1) throw ConfigError("window spec: obs and fut must be >= 1");
    if (obs + fut != width) {
        throw ConfigError("window spec: obs + fut (" + std::to_string(obs + fut) +
                          ") must equal width (" + std::to_string(width) + ")");
    }
}

std::vector<std::pair<int64_t, int64_t>> window_sequences(int64_t seq_len, const WindowSpec& spec) {
    spec.validate();
    std::vector<std::pair<int64_t, int64_t>> windows;
    if (seq_len < spec.width) return windows; // logged by callers, not fatal
    for (int64_t start = 0; start + spec.width <= seq_len; start += spec.stride) {
        windows.emplace_back(start, start + spec.width);
    }
    return windows;
}

// ---- synthetic generator -----------------------------------------------------

namespace {

struct Sprite {
    bool disk = false;
    double intensity = 0.95;
};

// Smooth periodic background: a fixed mid level plus three sinusoidal waves.
struct BackgroundField {
    struct Wave {
        double kx, ky, phase, amp;
    };
    std::vector<Wave> waves;
    int64_t w = 0, h = 0;

    double sample(double x, double y) const {
        double v = 0.5;
        for (const auto& wave : waves) {
            v += wave.amp * std::sin(2.0 * std::numbers::pi *
                                         (wave.kx * x / static_cast<double>(w) +
                                          wave.ky * y / static_cast<double>(h)) +
                                     wave.phase);
        }
        return v;
    }
};

BackgroundField make_background(Rng& rng, int64_t w, int64_t h) {
    BackgroundField bg;
    bg.w = w;
    bg.h = h;
    double budget = 0.2;
    for (int i = 0; i < 3; ++i) {
        BackgroundField::Wave wave;
        wave.kx = static_cast<double>(1 + rng.below(3));
        wave.ky = static_cast<double>(1 + rng.below(3));
        wave.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        wave.amp = budget / 3.0 * rng.uniform(0.5, 1.0);
        bg.waves.push_back(wave);
    }
    return bg;
}

void fill_sprite(Image& img, const Box& box, const Sprite& sprite) {
    int64_t x0 = std::max<int64_t>(0, static_cast<int64_t>(std::floor(box.cx - box.w / 2)));
    int64_t x1 = std::min<int64_t>(img.width, static_cast<int64_t>(std::ceil(box.cx + box.w / 2)));
    int64_t y0 = std::max<int64_t>(0, static_cast<int64_t>(std::floor(box.cy - box.h / 2)));
    int64_t y1 = std::min<int64_t>(img.height, static_cast<int64_t>(std::ceil(box.cy + box.h / 2)));
    for (int64_t y = y0; y < y1; ++y) {
        for (int64_t x = x0; x < x1; ++x) {
            double px = x + 0.5, py = y + 0.5;
            bool inside;
            if (sprite.disk) {
                double nx = (px - box.cx) / (box.w / 2), ny = (py - box.cy) / (box.h / 2);
                inside = nx * nx + ny * ny <= 1.0;
            } else {
                inside = std::fabs(px - box.cx) <= box.w / 2 && std::fabs(py - box.cy) <= box.h / 2;
            }
            if (inside) {
                for (int64_t c = 0; c < img.channels; ++c) img.at(c, y, x) = sprite.intensity;
            }
        }
    }
}

} // namespace

std::vector<SyntheticSequence> generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.height % 4 != 0 || cfg.width % 4 != 0) {
        throw ConfigError("synthetic frames must have extents divisible by 4");
    }
    std::vector<SyntheticSequence> out;
    out.reserve(static_cast<size_t>(cfg.count));
    Rng master(cfg.seed);

    for (int64_t s = 0; s < cfg.count; ++s) {
        Rng rng = master.fork(static_cast<uint64_t>(s) + 1);
        SyntheticSequence seq;
        char name[32];
        std::snprintf(name, sizeof(name), "seq%04d", static_cast<int>(s));
        seq.id = name;

        BackgroundField bg = make_background(rng, cfg.width, cfg.height);
        double drift_x = rng.uniform(-0.5, 0.5);
        double drift_y = rng.uniform(-0.5, 0.5);

        const double min_side = static_cast<double>(std::min(cfg.width, cfg.height));
        Sprite target;
        target.disk = rng.below(2) == 1;
        target.intensity = (s % 2 == 0) ? 0.05 : 0.95;
        double tw = rng.uniform(min_side / 7.0, min_side / 4.0);
        double th = rng.uniform(min_side / 7.0, min_side / 4.0);

        // a path that stays at least margin away from every edge
        const double margin_x = tw / 2 + 1.5;
        const double margin_y = th / 2 + 1.5;
        const double span_x = cfg.width - 2 * margin_x;
        const double span_y = cfg.height - 2 * margin_y;
        const double steps = static_cast<double>(cfg.frames - 1);

        const char* kinds[3] = {"linear", "arc", "turn"};
        seq.motion = kinds[s % 3];

        std::vector<Box> path;
        if (seq.motion == std::string("linear")) {
            double vx = rng.uniform(-1.0, 1.0), vy = rng.uniform(-1.0, 1.0);
            double travel_x = std::fabs(vx) * steps, travel_y = std::fabs(vy) * steps;
            if (travel_x > span_x) vx *= span_x / travel_x;
            if (travel_y > span_y) vy *= span_y / travel_y;
            double x0 = margin_x + rng.uniform(0.0, span_x - std::fabs(vx) * steps) -
                        std::min(0.0, vx * steps);
            double y0 = margin_y + rng.uniform(0.0, span_y - std::fabs(vy) * steps) -
                        std::min(0.0, vy * steps);
            for (int64_t t = 0; t < cfg.frames; ++t) {
                path.push_back(Box{x0 + vx * t, y0 + vy * t, tw, th});
            }
        } else if (seq.motion == std::string("arc")) {
            double r = rng.uniform(std::min(span_x, span_y) / 6.0, std::min(span_x, span_y) / 2.5);
            double ccx = cfg.width / 2.0 + rng.uniform(-2.0, 2.0);
            double ccy = cfg.height / 2.0 + rng.uniform(-2.0, 2.0);
            double theta0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
            double omega = rng.uniform(0.1, 0.3) * (rng.below(2) ? 1.0 : -1.0);
            for (int64_t t = 0; t < cfg.frames; ++t) {
                double a = theta0 + omega * t;
                double cx = std::clamp(ccx + r * std::cos(a), margin_x, cfg.width - margin_x);
                double cy = std::clamp(ccy + r * std::sin(a), margin_y, cfg.height - margin_y);
                path.push_back(Box{cx, cy, tw, th});
            }
        } else {
            double vx1 = rng.uniform(-0.9, 0.9), vy1 = rng.uniform(-0.9, 0.9);
            double vx2 = -vy1, vy2 = vx1; // 90-degree turn halfway
            double cx = cfg.width / 2.0 + rng.uniform(-3.0, 3.0);
            double cy = cfg.height / 2.0 + rng.uniform(-3.0, 3.0);
            int64_t half = cfg.frames / 2;
            for (int64_t t = 0; t < cfg.frames; ++t) {
                path.push_back(Box{std::clamp(cx, margin_x, cfg.width - margin_x),
                                   std::clamp(cy, margin_y, cfg.height - margin_y), tw, th});
                cx += t < half ? vx1 : vx2;
                cy += t < half ? vy1 : vy2;
            }
        }

        // distractors: 0..2 small sprites of mid intensity on linear paths
        int64_t n_distract = s % 3;
        struct Distractor {
            Box box;
            double vx, vy;
            Sprite sprite;
        };
        std::vector<Distractor> distractors;
        for (int64_t d = 0; d < n_distract; ++d) {
            Distractor dist;
            dist.sprite.disk = rng.below(2) == 1;
            dist.sprite.intensity = rng.below(2) ? 0.3 : 0.7;
            double dw = rng.uniform(2.0, min_side / 8.0);
            dist.box = Box{rng.uniform(dw, cfg.width - dw), rng.uniform(dw, cfg.height - dw), dw, dw};
            dist.vx = rng.uniform(-0.8, 0.8);
            dist.vy = rng.uniform(-0.8, 0.8);
            distractors.push_back(dist);
        }

        for (int64_t t = 0; t < cfg.frames; ++t) {
            Image frame;
            frame.channels = 1;
            frame.height = cfg.height;
            frame.width = cfg.width;
            frame.pixels.resize(static_cast<size_t>(cfg.height * cfg.width));
            for (int64_t y = 0; y < cfg.height; ++y) {
                for (int64_t x = 0; x < cfg.width; ++x) {
                    frame.at(0, y, x) =
                        bg.sample(x + drift_x * t, y + drift_y * t);
                }
            }
            for (auto& d : distractors) {
                Box b = d.box;
                b.cx += d.vx * t;
                b.cy += d.vy * t;
                fill_sprite(frame, b, d.sprite);
            }
            fill_sprite(frame, path[static_cast<size_t>(t)], target);
            seq.frames.push_back(std::move(frame));
        }
        seq.boxes = std::move(path);
        out.push_back(std::move(seq));
    }
    return out;
}

void write_dataset(const fs::path& root, const std::vector<SyntheticSequence>& seqs) {
    for (const auto& seq : seqs) {
        fs::path dir = root / seq.id;
        fs::create_directories(dir / "frames");
        for (size_t t = 0; t < seq.frames.size(); ++t) {
            char name[32];
            std::snprintf(name, sizeof(name), "%06zu.pgm", t);
            write_pnm(dir / "frames" / name, seq.frames[t]);
        }
        std::ofstream boxes(dir / "boxes.txt");
        if (!boxes) throw IoError("cannot write " + (dir / "boxes.txt").string());
        for (const auto& b : seq.boxes) {
            char line[160];
            std::snprintf(line, sizeof(line), "%.10g,%.10g,%.10g,%.10g\n", b.cx - b.w / 2,
                          b.cy - b.h / 2, b.w, b.h);
            boxes << line;
        }
    }
}

// ---- SOT adapter ----------------------------------------------------------------

Box scale_box(const Box& box, int64_t src_w, int64_t src_h, int64_t dst_w, int64_t dst_h) {
    const double sx = static_cast<double>(dst_w) / static_cast<double>(src_w);
    const double sy = static_cast<double>(dst_h) / static_cast<double>(src_h);
    return Box{box.cx * sx, box.cy * sy, box.w * sx, box.h * sy};
}

Box clamp_box(const Box& box, int64_t frame_w, int64_t frame_h) {
    Box b = box;
    b.w = std::clamp(b.w, 0.0, static_cast<double>(frame_w));
    b.h = std::clamp(b.h, 0.0, static_cast<double>(frame_h));
    b.cx = std::clamp(b.cx, b.w / 2, static_cast<double>(frame_w) - b.w / 2);
    b.cy = std::clamp(b.cy, b.h / 2, static_cast<double>(frame_h) - b.h / 2);
    return b;
}

namespace {

// Parses one "x,y,w,h" top-left annotation line; NaN marks occlusion.
bool parse_box_line(const std::string& line, Box& out) {
    std::array<double, 4> vals{};
    size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
        size_t comma = i < 3 ? line.find(',', pos) : line.size();
        if (comma == std::string::npos) throw std::invalid_argument("expected 4 comma-separated values");
        std::string tok = line.substr(pos, comma - pos);
        if (tok.find("NaN") != std::string::npos || tok.find("nan") != std::string::npos) {
            return false;
        }
        size_t used = 0;
        vals[static_cast<size_t>(i)] = std::stod(tok, &used);
        pos = comma + 1;
    }
    out = Box{vals[0] + vals[2] / 2.0, vals[1] + vals[3] / 2.0, vals[2], vals[3]};
    return true;
}

} // namespace

Dataset adapt_sot(const fs::path& root, const WindowSpec& spec, const SplitFractions& splits,
                  uint64_t seed, int64_t target_h, int64_t target_w) {
    spec.validate();
    if (!fs::is_directory(root)) throw IoError("dataset root " + root.string() + " is not a directory");

    Dataset ds;
    ds.root = root;
    ds.spec = spec;
    ds.height = target_h;
    ds.width = target_w;

    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "boxes.txt")) {
            ids.push_back(entry.path().filename().string());
        }
    }
    std::sort(ids.begin(), ids.end());

    for (const auto& id : ids) {
        fs::path dir = root / id;
        SequenceInfo info;
        info.id = id;

        if (!fs::is_directory(dir / "frames")) {
            ds.rejected.push_back(id + ": missing frames/ directory");
            continue;
        }
        for (const auto& f : fs::directory_iterator(dir / "frames")) {
            if (f.is_regular_file()) info.frame_files.push_back(f.path());
        }
        std::sort(info.frame_files.begin(), info.frame_files.end());

        fs::path box_file = dir / "boxes.txt";
        std::ifstream in(box_file);
        if (!in) throw IoError("cannot open " + box_file.string());
        std::string line;
        int64_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            Box box;
            bool ok;
            try {
                ok = parse_box_line(line, box);
            } catch (const std::exception&) {
                throw IoError("unparseable annotation at " + box_file.string() + ":" +
                              std::to_string(line_no));
            }
            info.boxes_source.push_back(ok ? box : Box{});
            info.valid.push_back(ok);
        }

        if (info.boxes_source.size() != info.frame_files.size()) {
            ds.rejected.push_back(id + ": " + std::to_string(info.frame_files.size()) +
                                  " frames vs " + std::to_string(info.boxes_source.size()) +
                                  " annotations");
            continue;
        }
        if (static_cast<int64_t>(info.frame_files.size()) < spec.width) {
            ds.rejected.push_back(id + ": shorter than one window");
            continue;
        }
        Image first = read_pnm(info.frame_files.front());
        info.source_h = first.height;
        info.source_w = first.width;
        ds.sequences.push_back(std::move(info));
    }

    // per-sequence split assignment: seeded shuffle, then fraction cuts
    std::vector<size_t> order(ds.sequences.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    for (size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<size_t>(rng.below(i))]);
    }
    const double total = splits.train + splits.val + splits.test;
    const auto n = static_cast<double>(order.size());
    const auto n_train = static_cast<size_t>(std::llround(n * splits.train / total));
    const auto n_val = static_cast<size_t>(std::llround(n * splits.val / total));
    std::vector<std::string> split_of(ds.sequences.size());
    for (size_t i = 0; i < order.size(); ++i) {
        split_of[order[i]] = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
    }

    for (size_t si = 0; si < ds.sequences.size(); ++si) {
        const auto& info = ds.sequences[si];
        for (auto [start, end] : window_sequences(static_cast<int64_t>(info.frame_files.size()),
                                                  spec)) {
            bool usable = true;
            for (int64_t t = start; t < end; ++t) {
                if (!info.valid[static_cast<size_t>(t)]) usable = false;
            }
            if (!usable) continue; // occluded annotation inside the window
            ds.entries.push_back(ManifestEntry{info.id, start, split_of[si]});
        }
    }
    return ds;
}

std::vector<const ManifestEntry*> Dataset::split_entries(const std::string& split) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries) {
        if (e.split == split) out.push_back(&e);
    }
    return out;
}

const SequenceInfo& Dataset::sequence(const std::string& id) const {
    for (const auto& s : sequences) {
        if (s.id == id) return s;
    }
    throw IoError("unknown sequence id " + id);
}

Sample load_sample(const Dataset& dataset, const ManifestEntry& entry) {
    const SequenceInfo& info = dataset.sequence(entry.sequence);
    Sample sample;
    sample.sequence_id = entry.sequence;
    sample.start = entry.start;
    sample.split = entry.split;

    std::vector<Image> frames;
    std::vector<double> boxes;
    for (int64_t t = entry.start; t < entry.start + dataset.spec.width; ++t) {
        Image img = read_pnm(info.frame_files[static_cast<size_t>(t)]);
        frames.push_back(resize_bilinear(img, dataset.height, dataset.width));
        Box b = scale_box(info.boxes_source[static_cast<size_t>(t)], info.source_w, info.source_h,
                          dataset.width, dataset.height);
        b = clamp_box(b, dataset.width, dataset.height);
        boxes.insert(boxes.end(), {b.cx, b.cy, b.w, b.h});
    }
    sample.frames = stack_frames(frames);
    sample.boxes = Tensor::from_vector({dataset.spec.width, 4}, std::move(boxes));
    return sample;
}

void write_boxes_csv(const fs::path& path, const Tensor& boxes) {
    if (boxes.dim() != 2 || boxes.size(1) != 4) {
        throw ShapeError("write_boxes_csv expects [N,4], got " + shape_str(boxes.shape()));
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (int64_t i = 0; i < boxes.size(0); ++i) {
        char line[200];
        std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g\n", boxes.at({i, 0}),
                      boxes.at({i, 1}), boxes.at({i, 2}), boxes.at({i, 3}));
        out << line;
    }
}

Tensor read_boxes_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<double> values;
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string tok;
        int fields = 0;
        while (std::getline(row, tok, ',')) {
            try {
                values.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw IoError("unparseable box value at " + path.string() + ":" +
                              std::to_string(line_no));
            }
            ++fields;
        }
        if (fields != 4) {
            throw IoError("expected 4 fields at " + path.string() + ":" + std::to_string(line_no));
        }
    }
    const auto rows = static_cast<int64_t>(values.size() / 4);
    return Tensor::from_vector({rows, 4}, std::move(values));
}

void write_manifest(const fs::path& path, const Dataset& dataset) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest " + path.string());
    for (const auto& e : dataset.entries) {
        out << e.sequence << "," << e.start << "," << e.split << "\n";
    }
}

} // namespace tavp
