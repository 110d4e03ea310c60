#include "tavp/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "tavp/common.hpp"

namespace tavp {

namespace {

constexpr char kMagic[8] = {'T', 'A', 'V', 'P', 'C', 'K', 'P', '1'};

template <typename T>
void write_pod(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw IoError("checkpoint: truncated while reading " + what);
    return value;
}

} // namespace

void Checkpoint::add(const std::string& name, const Shape& shape,
                     const std::vector<double>& values, Dtype dtype) {
    if (shape_numel(shape) != static_cast<int64_t>(values.size())) {
        throw ShapeError("checkpoint entry " + name + ": shape/value mismatch");
    }
    entries.push_back(CheckpointEntry{name, dtype, shape, values});
}

const CheckpointEntry* Checkpoint::find(const std::string& name) const {
    for (const auto& e : entries) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

void Checkpoint::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof(kMagic));
    write_pod<uint64_t>(out, step);
    write_pod<uint64_t>(out, shuffle_state);
    write_pod<uint64_t>(out, config_text.size());
    out.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
    write_pod<uint32_t>(out, static_cast<uint32_t>(entries.size()));
    for (const auto& e : entries) {
        write_pod<uint32_t>(out, static_cast<uint32_t>(e.name.size()));
        out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        write_pod<uint8_t>(out, static_cast<uint8_t>(e.dtype));
        write_pod<uint32_t>(out, static_cast<uint32_t>(e.shape.size()));
        for (int64_t d : e.shape) write_pod<int64_t>(out, d);
        if (e.dtype == Dtype::Float32) {
            for (double v : e.values) write_pod<float>(out, static_cast<float>(v));
        } else {
            for (double v : e.values) write_pod<double>(out, v);
        }
    }
    if (!out) throw IoError("failed while writing checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError(path.string() + " is not a checkpoint file");
    }
    Checkpoint ckpt;
    ckpt.step = read_pod<uint64_t>(in, "step");
    ckpt.shuffle_state = read_pod<uint64_t>(in, "rng state");
    auto config_len = read_pod<uint64_t>(in, "config length");
    ckpt.config_text.resize(config_len);
    in.read(ckpt.config_text.data(), static_cast<std::streamsize>(config_len));
    if (!in) throw IoError("checkpoint: truncated config text");
    auto count = read_pod<uint32_t>(in, "entry count");
    ckpt.entries.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        CheckpointEntry e;
        auto name_len = read_pod<uint32_t>(in, "name length");
        e.name.resize(name_len);
        in.read(e.name.data(), name_len);
        if (!in) throw IoError("checkpoint: truncated entry name");
        e.dtype = static_cast<Dtype>(read_pod<uint8_t>(in, "dtype"));
        auto ndim = read_pod<uint32_t>(in, "rank");
        e.shape.resize(ndim);
        for (uint32_t d = 0; d < ndim; ++d) e.shape[d] = read_pod<int64_t>(in, "dim");
        int64_t numel = shape_numel(e.shape);
        e.values.resize(static_cast<size_t>(numel));
        if (e.dtype == Dtype::Float32) {
            for (auto& v : e.values) v = static_cast<double>(read_pod<float>(in, "value"));
        } else {
            for (auto& v : e.values) v = read_pod<double>(in, "value");
        }
        ckpt.entries.push_back(std::move(e));
    }
    return ckpt;
}

Checkpoint make_checkpoint(const Model& model, const Adam* optimizer,
                           const std::string& config_text, uint64_t step, uint64_t shuffle_state) {
    Checkpoint ckpt;
    ckpt.step = step;
    ckpt.shuffle_state = shuffle_state;
    ckpt.config_text = config_text;
    const Dtype mode = scalar_mode();
    for (const auto& p : model.params()) {
        ckpt.add("param/" + p.name, p.tensor.shape(),
                 std::vector<double>(p.tensor.data().begin(), p.tensor.data().end()), mode);
    }
    if (optimizer) {
        const auto& params = optimizer->params();
        for (size_t i = 0; i < params.size(); ++i) {
            ckpt.add("adam_m/" + params[i].name, params[i].tensor.shape(),
                     optimizer->first_moments()[i], mode);
            ckpt.add("adam_v/" + params[i].name, params[i].tensor.shape(),
                     optimizer->second_moments()[i], mode);
        }
    }
    return ckpt;
}

void restore_model(const Model& model, const Checkpoint& ckpt) {
    for (const auto& p : model.params()) {
        const CheckpointEntry* e = ckpt.find("param/" + p.name);
        if (e == nullptr) throw IoError("checkpoint is missing parameter " + p.name);
        if (e->shape != p.tensor.shape()) {
            throw ShapeError("checkpoint parameter " + p.name + " has shape " + shape_str(e->shape) +
                             ", model expects " + shape_str(p.tensor.shape()));
        }
        Tensor t = p.tensor;
        auto buf = t.mutable_data();
        std::copy(e->values.begin(), e->values.end(), buf.begin());
    }
}

void restore_optimizer(Adam& optimizer, const Checkpoint& ckpt) {
    std::vector<std::vector<double>> m, v;
    for (const auto& p : optimizer.params()) {
        const CheckpointEntry* em = ckpt.find("adam_m/" + p.name);
        const CheckpointEntry* ev = ckpt.find("adam_v/" + p.name);
        if (em == nullptr || ev == nullptr) {
            throw IoError("checkpoint is missing optimizer state for " + p.name);
        }
        m.push_back(em->values);
        v.push_back(ev->values);
    }
    optimizer.restore(static_cast<int64_t>(ckpt.step), std::move(m), std::move(v));
}

} // namespace tavp
