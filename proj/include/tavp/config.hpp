#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "tavp/data.hpp"
#include "tavp/model_config.hpp"

namespace tavp {

/// Flat key=value configuration text with dotted section keys and '#'
/// comments. Serialization is sorted and canonical, so a resolved config
/// round-trips byte-identically.
class KeyValues {
public:
    static KeyValues parse(const std::string& text);
    static KeyValues load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback) const;
    int64_t get_int(const std::string& key, int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    void set(const std::string& key, const std::string& value);
    void set_int(const std::string& key, int64_t value);
    void set_double(const std::string& key, double value);
    void set_bool(const std::string& key, bool value);

    std::string serialize() const;
    const std::map<std::string, std::string>& raw() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Full run configuration: model dims, ablation lattice, optimizer, schedule,
/// loss weights, data pipeline and training settings. Every field has a
/// documented default (the full-scale settings).
struct RunConfig {
    ModelConfig model; // includes ablation switches

    // optimizer (Adam; "momentum" reads as beta1)
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double grad_clip = 0.0; // 0 disables clipping

    // one-cycle schedule
    double warmup_frac = 0.3;
    double div_factor = 25.0;
    double final_div = 1e4;

    // losses
    double lambda1 = 0.001;
    double lambda2 = 0.001;
    double sigma_x = 50.0;
    double sigma_y = 50.0;
    bool tsgl_enabled = true;

    // training
    int64_t batch_size = 4;
    int64_t epochs = 50;
    int64_t max_steps = 0; // 0: derived from epochs
    uint64_t seed = 1;
    int64_t checkpoint_every = 100;

    // data
    std::string data_root;
    int64_t window_stride = 6;
    SplitFractions splits;
    // synthetic generation (datagen command)
    int64_t gen_count = 8;
    int64_t gen_frames = 16;
    uint64_t gen_seed = 7;

    WindowSpec window() const;
    static RunConfig from_keyvalues(const KeyValues& kv);
    KeyValues to_keyvalues() const;
    void validate() const;
};

} // namespace tavp
