#pragma once

#include <filesystem>

#include "tavp/checkpoint.hpp"
#include "tavp/config.hpp"
#include "tavp/data.hpp"
#include "tavp/losses.hpp"
#include "tavp/model.hpp"

namespace tavp {

struct BatchLoss {
    Tensor total; // graph scalar (backward target)
    double video = 0.0;
    double motion = 0.0;
    double gaussian = 0.0;
};

/// Builds the combined teacher-forced loss over a batch of samples.
BatchLoss batch_loss(const Model& model, const RunConfig& rc,
                     const std::vector<const Sample*>& batch);

struct TrainOutputs {
    std::filesystem::path checkpoint_path;
    std::filesystem::path trace_path;
    int64_t steps = 0;
    double first_total = 0.0;
    double last_total = 0.0;
};

/// End-to-end training: loads the dataset, builds the model, runs Adam with
/// the one-cycle schedule under Float32 mode, writes a step-indexed loss
/// trace (step,video,motion,gaussian,total,lr), periodic checkpoints and the
/// final checkpoint. Deterministic given the config seed. On a numerical
/// abort the last periodic checkpoint is retained and the error rethrown.
TrainOutputs run_training(const RunConfig& rc, const std::filesystem::path& out_dir);

} // namespace tavp
