#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tavp/model.hpp"
#include "tavp/optim.hpp"

namespace tavp {

/// One named buffer inside a checkpoint. Entries remember the dtype they
/// were written with, so load-then-save reproduces the file byte for byte.
struct CheckpointEntry {
    std::string name;
    Dtype dtype = Dtype::Float32;
    Shape shape;
    std::vector<double> values;
};

/// Container file: magic, step counter, shuffle RNG state, the resolved
/// config text, then a manifest of named raw little-endian row-major buffers.
struct Checkpoint {
    uint64_t step = 0;
    uint64_t shuffle_state = 0;
    std::string config_text;
    std::vector<CheckpointEntry> entries;

    void add(const std::string& name, const Shape& shape, const std::vector<double>& values,
             Dtype dtype);
    const CheckpointEntry* find(const std::string& name) const;

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);
};

/// Snapshot of model parameters + optimizer state in the current scalar mode.
Checkpoint make_checkpoint(const Model& model, const Adam* optimizer, const std::string& config_text,
                           uint64_t step, uint64_t shuffle_state);

/// Copies parameter values from the checkpoint into the model (shapes must
/// match; missing parameters are an error).
void restore_model(const Model& model, const Checkpoint& ckpt);

/// Restores Adam moments and step counter.
void restore_optimizer(Adam& optimizer, const Checkpoint& ckpt);

} // namespace tavp
