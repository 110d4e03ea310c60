#include "tavp/trainer.hpp"

#include <cstdio>
#include <fstream>

#include "tavp/common.hpp"
#include "tavp/optim.hpp"

namespace fs = std::filesystem;

namespace tavp {

BatchLoss batch_loss(const Model& model, const RunConfig& rc,
                     const std::vector<const Sample*>& batch) {
    if (batch.empty()) throw ValueError("batch_loss: empty batch");
    const auto& cfg = model.cfg;
    const double inv = 1.0 / static_cast<double>(batch.size());

    Tensor video_sum, motion_sum, gauss_sum;
    auto accumulate = [](Tensor& acc, const Tensor& term) {
        acc = acc.defined() ? add(acc, term) : term;
    };

    for (const Sample* sample : batch) {
        Tensor obs_frames = slice(sample->frames, 0, 0, cfg.obs_frames);
        Tensor fut_frames = slice(sample->frames, 0, cfg.obs_frames, cfg.pred_frames);
        Tensor obs_boxes = slice(sample->boxes, 0, 0, cfg.obs_frames);
        Tensor fut_boxes = slice(sample->boxes, 0, cfg.obs_frames, cfg.pred_frames);
        Tensor teacher = normalize_boxes(fut_boxes, cfg.width, cfg.height);

        auto out = model.forward(obs_frames, obs_boxes, &teacher);
        if (cfg.video_branch) accumulate(video_sum, video_loss(out.frames, fut_frames));
        if (cfg.motion_branch) accumulate(motion_sum, motion_loss(out.boxes_norm, teacher));
        if (rc.tsgl_enabled && cfg.video_branch && cfg.motion_branch) {
            Tensor pred_px = denormalize_boxes(out.boxes_norm, cfg.width, cfg.height);
            accumulate(gauss_sum,
                       tsgl(out.frames, fut_frames, pred_px, fut_boxes, rc.sigma_x, rc.sigma_y));
        }
    }

    BatchLoss loss;
    Tensor video_mean, motion_mean, gauss_mean;
    if (video_sum.defined()) {
        video_mean = mul_scalar(video_sum, inv);
        loss.video = video_mean.item();
    }
    if (motion_sum.defined()) {
        motion_mean = mul_scalar(motion_sum, inv);
        loss.motion = motion_mean.item();
    }
    if (gauss_sum.defined()) {
        gauss_mean = mul_scalar(gauss_sum, inv);
        loss.gaussian = gauss_mean.item();
    }
    loss.total = total_loss(video_mean, motion_mean, gauss_mean, rc.lambda1, rc.lambda2);
    return loss;
}

TrainOutputs run_training(const RunConfig& rc, const fs::path& out_dir) {
    rc.validate();
    if (rc.data_root.empty()) throw ConfigError("config field 'data.root': required for training");
    ScalarModeGuard mode(Dtype::Float32);

    Dataset dataset = adapt_sot(rc.data_root, rc.window(), rc.splits, rc.seed, rc.model.height,
                                rc.model.width);
    auto train_entries = dataset.split_entries("train");
    if (train_entries.empty()) {
        throw ConfigError("dataset at " + rc.data_root + " yields no training samples");
    }

    // desk-scale datasets fit in memory; load every training sample once
    std::vector<Sample> samples;
    samples.reserve(train_entries.size());
    for (const auto* e : train_entries) samples.push_back(load_sample(dataset, *e));

    Rng init_rng(rc.seed);
    Model model(rc.model, init_rng);
    Adam adam(model.params(), rc.beta1, rc.beta2, rc.adam_eps);

    const int64_t n = static_cast<int64_t>(samples.size());
    const int64_t batches_per_epoch = (n + rc.batch_size - 1) / rc.batch_size;
    const int64_t total_steps =
        rc.max_steps > 0 ? rc.max_steps : rc.epochs * batches_per_epoch;
    OneCycle schedule{rc.lr, total_steps, rc.warmup_frac, rc.div_factor, rc.final_div};

    fs::create_directories(out_dir);
    const std::string config_text = rc.to_keyvalues().serialize();
    {
        std::ofstream cfg_out(out_dir / "config.resolved");
        cfg_out << config_text;
    }
    write_manifest(out_dir / "manifest.txt", dataset);
    const fs::path trace_path = out_dir / "trace.csv";
    const fs::path last_path = out_dir / "checkpoint_last.bin";
    const fs::path final_path = out_dir / "checkpoint.bin";
    std::ofstream trace(trace_path);
    if (!trace) throw IoError("cannot write " + trace_path.string());
    trace << "step,video,motion,gaussian,total,lr\n";

    Rng shuffle_rng(rc.seed ^ 0x5DEECE66DULL);
    std::vector<int64_t> order(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;

    TrainOutputs outputs;
    outputs.trace_path = trace_path;
    outputs.checkpoint_path = final_path;

    int64_t step = 0;
    int64_t cursor = n; // forces a shuffle before the first batch
    try {
        while (step < total_steps) {
            if (cursor >= n) {
                for (int64_t i = n; i > 1; --i) {
                    std::swap(order[static_cast<size_t>(i - 1)],
                              order[static_cast<size_t>(shuffle_rng.below(static_cast<uint64_t>(i)))]);
                }
                cursor = 0;
            }
            std::vector<const Sample*> batch;
            for (int64_t b = 0; b < rc.batch_size && cursor < n; ++b, ++cursor) {
                batch.push_back(&samples[static_cast<size_t>(order[static_cast<size_t>(cursor)])]);
            }

            BatchLoss loss = batch_loss(model, rc, batch);
            const double lr = schedule.lr_at(step);
            backward(loss.total);
            if (rc.grad_clip > 0.0) clip_gradients(adam.params(), rc.grad_clip);
            adam.step(lr);
            model.zero_grad();

            char line[196];
            std::snprintf(line, sizeof(line), "%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          static_cast<long long>(step), loss.video, loss.motion, loss.gaussian,
                          loss.total.item(), lr);
            trace << line;

            if (step == 0) outputs.first_total = loss.total.item();
            outputs.last_total = loss.total.item();
            ++step;

            if (rc.checkpoint_every > 0 && step % rc.checkpoint_every == 0) {
                make_checkpoint(model, &adam, config_text, static_cast<uint64_t>(step),
                                shuffle_rng.state())
                    .save(last_path);
            }
        }
    } catch (const NumericError&) {
        trace.flush();
        throw; // the last periodic checkpoint stays on disk
    }

    outputs.steps = step;
    make_checkpoint(model, &adam, config_text, static_cast<uint64_t>(step), shuffle_rng.state())
        .save(final_path);
    trace.flush();
    return outputs;
}

} // namespace tavp
