#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tavp/data.hpp"
#include "tavp/model.hpp"

namespace tavp {

struct MetricRow {
    std::string sequence;
    int64_t samples = 0;
    double mse = 0, mae = 0, ssim = 0, psnr = 0, roi_mse = 0, miou = 0, ade = 0;
};

/// Per-sequence rows plus the aggregate (the mean of the per-sequence rows).
struct MetricReport {
    std::vector<MetricRow> per_sequence;
    MetricRow aggregate;
};

/// Runs inference (autoregressive box decoding, single-shot video decoding)
/// over a split and scores it. use_gt substitutes the ground truth for the
/// predictions (debug oracle: SSIM 1, mIoU 1, ADE 0).
MetricReport evaluate_split(const Model& model, const Dataset& dataset, const std::string& split,
                            bool use_gt = false);

/// Tab-separated table, one row per sequence plus the aggregate.
/// Columns: sequence, samples, mse, mae, ssim, psnr, roi_mse, miou, ade.
void write_report_table(const std::filesystem::path& path, const MetricReport& report);

/// Machine-readable key=value form of the same report.
void write_report_keyvalues(const std::filesystem::path& path, const MetricReport& report);

} // namespace tavp
