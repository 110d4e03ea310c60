#include "tavp/evaluate.hpp"

#include <cstdio>
#include <fstream>
#include <map>

#include "tavp/common.hpp"
#include "tavp/embedding.hpp"
#include "tavp/metrics.hpp"

namespace tavp {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace

MetricReport evaluate_split(const Model& model, const Dataset& dataset, const std::string& split,
                            bool use_gt) {
    const auto& cfg = model.cfg;
    auto entries = dataset.split_entries(split);
    if (entries.empty()) {
        throw ConfigError("split '" + split + "' contains no samples");
    }

    struct Acc {
        int64_t n = 0;
        double mse = 0, mae = 0, ssim = 0, psnr = 0, roi = 0, miou = 0, ade = 0;
    };
    std::map<std::string, Acc> by_sequence;

    NoGradGuard no_grad;
    for (const auto* entry : entries) {
        Sample sample = load_sample(dataset, *entry);
        Tensor obs_frames = slice(sample.frames, 0, 0, cfg.obs_frames);
        Tensor fut_frames = slice(sample.frames, 0, cfg.obs_frames, cfg.pred_frames);
        Tensor obs_boxes = slice(sample.boxes, 0, 0, cfg.obs_frames);
        Tensor fut_boxes = slice(sample.boxes, 0, cfg.obs_frames, cfg.pred_frames);

        Tensor pred_frames, pred_boxes_px;
        if (use_gt) {
            pred_frames = fut_frames;
            pred_boxes_px = fut_boxes;
        } else {
            auto out = model.forward(obs_frames, obs_boxes, nullptr);
            pred_frames = cfg.video_branch ? out.frames : fut_frames;
            pred_boxes_px = cfg.motion_branch
                                ? denormalize_boxes(out.boxes_norm, cfg.width, cfg.height)
                                : fut_boxes;
        }

        Acc& acc = by_sequence[entry->sequence];
        ++acc.n;
        acc.mse += mse(pred_frames, fut_frames);
        acc.mae += mae(pred_frames, fut_frames);
        double ssim_sum = 0, psnr_sum = 0;
        for (int64_t t = 0; t < cfg.pred_frames; ++t) {
            Tensor pf = reshape(slice(pred_frames, 0, t, 1), {cfg.channels, cfg.height, cfg.width});
            Tensor tf = reshape(slice(fut_frames, 0, t, 1), {cfg.channels, cfg.height, cfg.width});
            ssim_sum += ssim(pf, tf);
            psnr_sum += psnr(pf, tf);
        }
        acc.ssim += ssim_sum / static_cast<double>(cfg.pred_frames);
        acc.psnr += psnr_sum / static_cast<double>(cfg.pred_frames);
        acc.roi += roi_mse(pred_frames, fut_frames, fut_boxes);
        acc.miou += miou(pred_boxes_px, fut_boxes);
        acc.ade += ade(pred_boxes_px, fut_boxes);
    }

    MetricReport report;
    MetricRow& agg = report.aggregate;
    agg.sequence = "aggregate";
    for (const auto& [seq, acc] : by_sequence) {
        MetricRow row;
        row.sequence = seq;
        row.samples = acc.n;
        const double inv = 1.0 / static_cast<double>(acc.n);
        row.mse = acc.mse * inv;
        row.mae = acc.mae * inv;
        row.ssim = acc.ssim * inv;
        row.psnr = acc.psnr * inv;
        row.roi_mse = acc.roi * inv;
        row.miou = acc.miou * inv;
        row.ade = acc.ade * inv;
        report.per_sequence.push_back(row);
    }
    const double inv_rows = 1.0 / static_cast<double>(report.per_sequence.size());
    for (const auto& row : report.per_sequence) {
        agg.samples += row.samples;
        agg.mse += row.mse * inv_rows;
        agg.mae += row.mae * inv_rows;
        agg.ssim += row.ssim * inv_rows;
        agg.psnr += row.psnr * inv_rows;
        agg.roi_mse += row.roi_mse * inv_rows;
        agg.miou += row.miou * inv_rows;
        agg.ade += row.ade * inv_rows;
    }
    return report;
}

void write_report_table(const std::filesystem::path& path, const MetricReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report " + path.string());
    out << "sequence\tsamples\tmse\tmae\tssim\tpsnr\troi_mse\tmiou\tade\n";
    auto line = [&](const MetricRow& r) {
        out << r.sequence << "\t" << r.samples << "\t" << fmt(r.mse) << "\t" << fmt(r.mae) << "\t"
            << fmt(r.ssim) << "\t" << fmt(r.psnr) << "\t" << fmt(r.roi_mse) << "\t" << fmt(r.miou)
            << "\t" << fmt(r.ade) << "\n";
    };
    for (const auto& row : report.per_sequence) line(row);
    line(report.aggregate);
}

void write_report_keyvalues(const std::filesystem::path& path, const MetricReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report " + path.string());
    auto emit = [&](const std::string& prefix, const MetricRow& r) {
        out << prefix << ".samples = " << r.samples << "\n";
        out << prefix << ".mse = " << fmt(r.mse) << "\n";
        out << prefix << ".mae = " << fmt(r.mae) << "\n";
        out << prefix << ".ssim = " << fmt(r.ssim) << "\n";
        out << prefix << ".psnr = " << fmt(r.psnr) << "\n";
        out << prefix << ".roi_mse = " << fmt(r.roi_mse) << "\n";
        out << prefix << ".miou = " << fmt(r.miou) << "\n";
        out << prefix << ".ade = " << fmt(r.ade) << "\n";
    };
    for (const auto& row : report.per_sequence) emit("sequence." + row.sequence, row);
    emit("aggregate", report.aggregate);
}

} // namespace tavp
