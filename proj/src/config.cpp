#include "tavp/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "tavp/common.hpp"

namespace tavp {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

KeyValues KeyValues::parse(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + " is not key = value: '" +
                              stripped + "'");
        }
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        kv.values_[key] = value;
    }
    return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string KeyValues::get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

int64_t KeyValues::get_int(const std::string& key, int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        size_t used = 0;
        int64_t v = std::stoll(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config field '" + key + "': '" + it->second + "' is not an integer");
    }
}

double KeyValues::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        size_t used = 0;
        double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config field '" + key + "': '" + it->second + "' is not a number");
    }
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config field '" + key + "': '" + v + "' is not a boolean");
}

void KeyValues::set(const std::string& key, const std::string& value) { values_[key] = value; }
void KeyValues::set_int(const std::string& key, int64_t value) {
    values_[key] = std::to_string(value);
}
void KeyValues::set_double(const std::string& key, double value) {
    values_[key] = format_double(value);
}
void KeyValues::set_bool(const std::string& key, bool value) {
    values_[key] = value ? "true" : "false";
}

std::string KeyValues::serialize() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
    return out.str();
}

WindowSpec RunConfig::window() const {
    WindowSpec spec;
    spec.obs = model.obs_frames;
    spec.fut = model.pred_frames;
    spec.width = spec.obs + spec.fut;
    spec.stride = window_stride;
    return spec;
}

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "model.obs_frames", "model.pred_frames", "model.channels", "model.height", "model.width",
        "model.hidden_channels", "model.decoder_channels", "model.depth", "model.heads",
        "model.mlp_ratio", "model.se_reduction", "model.motion_decoder_depth",
        "model.video.enabled", "model.motion.enabled", "model.sta.enabled",
        "ism.enabled", "ism.roi_tokens", "ism.state_tokens", "ism.init_roi", "ism.init_state",
        "ism.collect.enabled", "ism.pass.enabled",
        "opt.lr", "opt.beta1", "opt.beta2", "opt.eps", "opt.grad_clip",
        "schedule.warmup_frac", "schedule.div_factor", "schedule.final_div",
        "loss.lambda1", "loss.lambda2", "loss.sigma_x", "loss.sigma_y", "loss.tsgl.enabled",
        "train.batch_size", "train.epochs", "train.max_steps", "train.seed",
        "train.checkpoint_every",
        "data.root", "data.window_stride", "data.split.train", "data.split.val", "data.split.test",
        "gen.count", "gen.frames", "gen.seed",
    };
    return keys;
}

} // namespace

RunConfig RunConfig::from_keyvalues(const KeyValues& kv) {
    for (const auto& [key, value] : kv.raw()) {
        if (known_keys().count(key) == 0) {
            throw ConfigError("unknown config field '" + key + "'");
        }
        (void)value;
    }

    RunConfig rc;
    rc.model.obs_frames = kv.get_int("model.obs_frames", 8);
    rc.model.pred_frames = kv.get_int("model.pred_frames", 8);
    rc.model.channels = kv.get_int("model.channels", 3);
    rc.model.height = kv.get_int("model.height", 256);
    rc.model.width = kv.get_int("model.width", 256);
    rc.model.hidden_channels = kv.get_int("model.hidden_channels", 64);
    rc.model.decoder_channels = kv.get_int("model.decoder_channels", 64);
    rc.model.depth = kv.get_int("model.depth", 6);
    rc.model.heads = kv.get_int("model.heads", 8);
    rc.model.mlp_ratio = kv.get_int("model.mlp_ratio", 4);
    rc.model.se_reduction = kv.get_int("model.se_reduction", 4);
    rc.model.motion_decoder_depth = kv.get_int("model.motion_decoder_depth", 4);
    rc.model.video_branch = kv.get_bool("model.video.enabled", true);
    rc.model.motion_branch = kv.get_bool("model.motion.enabled", true);
    rc.model.sta_gate = kv.get_bool("model.sta.enabled", true);

    rc.model.ism = kv.get_bool("ism.enabled", true);
    rc.model.roi_tokens = kv.get_int("ism.roi_tokens", 8);
    rc.model.state_tokens = kv.get_int("ism.state_tokens", 2);
    std::string roi_init = kv.get("ism.init_roi", "roi");
    if (roi_init == "roi") {
        rc.model.roi_init = RoiInit::Roi;
    } else if (roi_init == "random") {
        rc.model.roi_init = RoiInit::Random;
    } else {
        throw ConfigError("config field 'ism.init_roi': expected roi|random, got '" + roi_init + "'");
    }
    std::string state_init = kv.get("ism.init_state", "states");
    if (state_init == "states") {
        rc.model.state_init = StateInit::States;
    } else if (state_init == "random") {
        rc.model.state_init = StateInit::Random;
    } else {
        throw ConfigError("config field 'ism.init_state': expected states|random, got '" +
                          state_init + "'");
    }
    rc.model.ism_collect = kv.get_bool("ism.collect.enabled", true);
    rc.model.ism_pass = kv.get_bool("ism.pass.enabled", true);

    rc.lr = kv.get_double("opt.lr", 0.001);
    rc.beta1 = kv.get_double("opt.beta1", 0.9);
    rc.beta2 = kv.get_double("opt.beta2", 0.999);
    rc.adam_eps = kv.get_double("opt.eps", 1e-8);
    rc.grad_clip = kv.get_double("opt.grad_clip", 0.0);

    rc.warmup_frac = kv.get_double("schedule.warmup_frac", 0.3);
    rc.div_factor = kv.get_double("schedule.div_factor", 25.0);
    rc.final_div = kv.get_double("schedule.final_div", 1e4);

    rc.lambda1 = kv.get_double("loss.lambda1", 0.001);
    rc.lambda2 = kv.get_double("loss.lambda2", 0.001);
    rc.sigma_x = kv.get_double("loss.sigma_x", 50.0);
    rc.sigma_y = kv.get_double("loss.sigma_y", 50.0);
    rc.tsgl_enabled = kv.get_bool("loss.tsgl.enabled", true);

    rc.batch_size = kv.get_int("train.batch_size", 4);
    rc.epochs = kv.get_int("train.epochs", 50);
    rc.max_steps = kv.get_int("train.max_steps", 0);
    rc.seed = static_cast<uint64_t>(kv.get_int("train.seed", 1));
    rc.checkpoint_every = kv.get_int("train.checkpoint_every", 100);

    rc.data_root = kv.get("data.root", "");
    rc.window_stride = kv.get_int("data.window_stride", 6);
    rc.splits.train = kv.get_double("data.split.train", 0.7);
    rc.splits.val = kv.get_double("data.split.val", 0.2);
    rc.splits.test = kv.get_double("data.split.test", 0.1);

    rc.gen_count = kv.get_int("gen.count", 8);
    rc.gen_frames = kv.get_int("gen.frames", 16);
    rc.gen_seed = static_cast<uint64_t>(kv.get_int("gen.seed", 7));

    rc.validate();
    return rc;
}

KeyValues RunConfig::to_keyvalues() const {
    KeyValues kv;
    kv.set_int("model.obs_frames", model.obs_frames);
    kv.set_int("model.pred_frames", model.pred_frames);
    kv.set_int("model.channels", model.channels);
    kv.set_int("model.height", model.height);
    kv.set_int("model.width", model.width);
    kv.set_int("model.hidden_channels", model.hidden_channels);
    kv.set_int("model.decoder_channels", model.decoder_channels);
    kv.set_int("model.depth", model.depth);
    kv.set_int("model.heads", model.heads);
    kv.set_int("model.mlp_ratio", model.mlp_ratio);
    kv.set_int("model.se_reduction", model.se_reduction);
    kv.set_int("model.motion_decoder_depth", model.motion_decoder_depth);
    kv.set_bool("model.video.enabled", model.video_branch);
    kv.set_bool("model.motion.enabled", model.motion_branch);
    kv.set_bool("model.sta.enabled", model.sta_gate);

    kv.set_bool("ism.enabled", model.ism);
    kv.set_int("ism.roi_tokens", model.roi_tokens);
    kv.set_int("ism.state_tokens", model.state_tokens);
    kv.set("ism.init_roi", model.roi_init == RoiInit::Roi ? "roi" : "random");
    kv.set("ism.init_state", model.state_init == StateInit::States ? "states" : "random");
    kv.set_bool("ism.collect.enabled", model.ism_collect);
    kv.set_bool("ism.pass.enabled", model.ism_pass);

    kv.set_double("opt.lr", lr);
    kv.set_double("opt.beta1", beta1);
    kv.set_double("opt.beta2", beta2);
    kv.set_double("opt.eps", adam_eps);
    kv.set_double("opt.grad_clip", grad_clip);

    kv.set_double("schedule.warmup_frac", warmup_frac);
    kv.set_double("schedule.div_factor", div_factor);
    kv.set_double("schedule.final_div", final_div);

    kv.set_double("loss.lambda1", lambda1);
    kv.set_double("loss.lambda2", lambda2);
    kv.set_double("loss.sigma_x", sigma_x);
    kv.set_double("loss.sigma_y", sigma_y);
    kv.set_bool("loss.tsgl.enabled", tsgl_enabled);

    kv.set_int("train.batch_size", batch_size);
    kv.set_int("train.epochs", epochs);
    kv.set_int("train.max_steps", max_steps);
    kv.set_int("train.seed", static_cast<int64_t>(seed));
    kv.set_int("train.checkpoint_every", checkpoint_every);

    kv.set("data.root", data_root);
    kv.set_int("data.window_stride", window_stride);
    kv.set_double("data.split.train", splits.train);
    kv.set_double("data.split.val", splits.val);
    kv.set_double("data.split.test", splits.test);

    kv.set_int("gen.count", gen_count);
    kv.set_int("gen.frames", gen_frames);
    kv.set_int("gen.seed", static_cast<int64_t>(gen_seed));
    return kv;
}

void RunConfig::validate() const {
    model.validate();
    auto fail = [](const std::string& field, const std::string& why) {
        throw ConfigError("config field '" + field + "': " + why);
    };
    if (lr <= 0.0) fail("opt.lr", "must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0) fail("opt.beta1", "must be in [0,1)");
    if (beta2 < 0.0 || beta2 >= 1.0) fail("opt.beta2", "must be in [0,1)");
    if (adam_eps <= 0.0) fail("opt.eps", "must be positive");
    if (grad_clip < 0.0) fail("opt.grad_clip", "must be >= 0");
    if (warmup_frac <= 0.0 || warmup_frac >= 1.0) fail("schedule.warmup_frac", "must be in (0,1)");
    if (div_factor <= 1.0) fail("schedule.div_factor", "must be > 1");
    if (final_div <= 1.0) fail("schedule.final_div", "must be > 1");
    if (lambda1 < 0.0) fail("loss.lambda1", "must be >= 0");
    if (lambda2 < 0.0) fail("loss.lambda2", "must be >= 0");
    if (sigma_x <= 0.0) fail("loss.sigma_x", "must be positive");
    if (sigma_y <= 0.0) fail("loss.sigma_y", "must be positive");
    if (batch_size < 1) fail("train.batch_size", "must be >= 1");
    if (epochs < 1 && max_steps < 1) fail("train.epochs", "need epochs >= 1 or train.max_steps >= 1");
    if (window_stride < 1) fail("data.window_stride", "must be >= 1");
    if (splits.train < 0 || splits.val < 0 || splits.test < 0 ||
        splits.train + splits.val + splits.test <= 0) {
        fail("data.split.train", "split fractions must be non-negative and sum to > 0");
    }
    if (gen_count < 1) fail("gen.count", "must be >= 1");
    if (gen_frames < model.obs_frames + model.pred_frames) {
        fail("gen.frames", "must cover obs_frames + pred_frames");
    }
}

} // namespace tavp
