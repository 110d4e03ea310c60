#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tavp/image.hpp"
#include "tavp/metrics.hpp"
#include "tavp/rng.hpp"
#include "tavp/tensor.hpp"

namespace tavp {

/// Sliding-window sampling parameters: window = observed + future frames.
struct WindowSpec {
    int64_t width = 16;
    int64_t stride = 6;
    int64_t obs = 8;
    int64_t fut = 8;

    void validate() const;
};

/// All (start, end) windows of `spec.width` frames with the given stride;
/// empty when the sequence is shorter than one window.
std::vector<std::pair<int64_t, int64_t>> window_sequences(int64_t seq_len, const WindowSpec& spec);

/// One prediction sample: an observed+future clip with per-frame target boxes
/// (pixel, center format).
struct Sample {
    Tensor frames; // [T+T', C, H, W]
    Tensor boxes;  // [T+T', 4]
    std::string sequence_id;
    int64_t start = 0;
    std::string split;
};

// ---- synthetic generator ---------------------------------------------------

struct SyntheticConfig {
    uint64_t seed = 7;
    int64_t count = 8;       // sequences
    int64_t height = 32;
    int64_t width = 32;
    int64_t frames = 8;      // frames per sequence
};

struct SyntheticSequence {
    std::string id;
    std::vector<Image> frames;
    std::vector<Box> boxes; // exact float boxes, one per frame
    std::string motion;     // "linear", "arc" or "turn"
};

/// Deterministic per seed. Each sequence renders a smooth drifting textured
/// background, one high-contrast target sprite on a {linear, circular-arc,
/// piecewise-linear-turn} path that never leaves the frame, and up to two
/// distractor sprites.
std::vector<SyntheticSequence> generate_synthetic(const SyntheticConfig& cfg);

/// Writes sequences in the dataset root layout:
///   <root>/<seq_id>/frames/NNNNNN.pgm  +  <root>/<seq_id>/boxes.txt
/// boxes.txt rows are top-left "x,y,w,h" (the SOT annotation convention).
void write_dataset(const std::filesystem::path& root, const std::vector<SyntheticSequence>& seqs);

// ---- SOT-annotation adapter -----------------------------------------------

struct SplitFractions {
    double train = 0.7;
    double val = 0.2;
    double test = 0.1;
};

struct ManifestEntry {
    std::string sequence;
    int64_t start = 0;
    std::string split;
};

struct SequenceInfo {
    std::string id;
    std::vector<std::filesystem::path> frame_files;
    std::vector<Box> boxes_source; // center format, source resolution
    std::vector<bool> valid;       // false on occlusion (NaN) annotations
    int64_t source_h = 0;
    int64_t source_w = 0;
};

/// Dataset manifest: per-sequence metadata plus sample records. Frames are
/// resized to (height, width) at load time and boxes scaled proportionally.
struct Dataset {
    std::filesystem::path root;
    WindowSpec spec;
    int64_t height = 0;
    int64_t width = 0;
    std::vector<SequenceInfo> sequences;
    std::vector<ManifestEntry> entries;
    std::vector<std::string> rejected; // sequence ids with diagnostics

    std::vector<const ManifestEntry*> split_entries(const std::string& split) const;
    const SequenceInfo& sequence(const std::string& id) const;
};

/// Scans the dataset root, validates each sequence (frame/annotation count
/// mismatches reject the sequence; unparseable lines are fatal), enumerates
/// windows, skips windows containing occluded frames, and assigns splits
/// per sequence (seeded shuffle, then fraction cuts) so no sequence id
/// appears in two splits.
Dataset adapt_sot(const std::filesystem::path& root, const WindowSpec& spec,
                  const SplitFractions& splits, uint64_t seed, int64_t target_h, int64_t target_w);

Sample load_sample(const Dataset& dataset, const ManifestEntry& entry);

void write_manifest(const std::filesystem::path& path, const Dataset& dataset);

/// Scales a center-format box from (src_w, src_h) to (dst_w, dst_h) frame
/// coordinates.
Box scale_box(const Box& box, int64_t src_w, int64_t src_h, int64_t dst_w, int64_t dst_h);

/// Center-format box text files ("cx,cy,w,h" per line, full double
/// precision); the round trip is exact.
void write_boxes_csv(const std::filesystem::path& path, const Tensor& boxes);
Tensor read_boxes_csv(const std::filesystem::path& path);

/// Clamps a box so it lies fully inside a (w, h) frame.
Box clamp_box(const Box& box, int64_t frame_w, int64_t frame_h);

} // namespace tavp
