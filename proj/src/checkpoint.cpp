// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#include "checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace dgsa {

namespace {

constexpr char kMagic[8] = {'D', 'G', 'S', 'A', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& out, T v) {
    unsigned char b[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i)
        b[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

void write_f32(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_le<std::uint32_t>(out, bits);
}

template <typename T>
T read_le(std::istream& in, const std::string& path) {
    unsigned char b[sizeof(T)];
    in.read(reinterpret_cast<char*>(b), sizeof(T));
    if (!in) throw DataError("checkpoint: " + path + " truncated");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return static_cast<T>(v);
}

float read_f32(std::istream& in, const std::string& path) {
    const std::uint32_t bits = read_le<std::uint32_t>(in, path);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

void save_checkpoint(const std::string& path, const LayerStack& stack,
                     const std::string& config_text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("checkpoint: cannot write " + path);
    out.write(kMagic, 8);
    write_le<std::uint32_t>(out, kVersion);
    write_le<std::uint64_t>(out, fnv1a64(config_text));
    write_le<std::uint64_t>(out, config_text.size());
    out.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(stack.registry.size()));
    for (const auto& p : stack.registry) {
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        const auto& shape = p.value.shape();
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
        for (auto e : shape) write_le<std::uint64_t>(out, e);
        for (double v : p.value.data()) write_f32(out, static_cast<float>(v));
    }
    if (!out) throw IoError("checkpoint: short write to " + path);
}

CheckpointData read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw DataError("checkpoint: " + path + " has a bad magic string");
    const auto version = read_le<std::uint32_t>(in, path);
    if (version != kVersion)
        throw DataError("checkpoint: unsupported format version " + std::to_string(version));
    const auto stored_hash = read_le<std::uint64_t>(in, path);
    const auto cfg_len = read_le<std::uint64_t>(in, path);
    CheckpointData data;
    data.config_text.resize(cfg_len);
    in.read(data.config_text.data(), static_cast<std::streamsize>(cfg_len));
    if (!in) throw DataError("checkpoint: " + path + " truncated in config text");
    if (fnv1a64(data.config_text) != stored_hash)
        throw DataError("checkpoint: " + path + " config hash mismatch (corrupt file)");
    const auto n_params = read_le<std::uint32_t>(in, path);
    for (std::uint32_t k = 0; k < n_params; ++k) {
        const auto name_len = read_le<std::uint32_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw DataError("checkpoint: " + path + " truncated in parameter name");
        const auto ndim = read_le<std::uint32_t>(in, path);
        std::size_t count = 1;
        for (std::uint32_t i = 0; i < ndim; ++i)
            count *= static_cast<std::size_t>(read_le<std::uint64_t>(in, path));
        std::vector<float> vals(count);
        for (auto& v : vals) v = read_f32(in, path);
        data.params.emplace_back(std::move(name), std::move(vals));
    }
    return data;
}

void restore_params(LayerStack& stack, const CheckpointData& data) {
    if (data.params.size() != stack.registry.size())
        throw DataError("checkpoint: parameter count " + std::to_string(data.params.size()) +
                        " does not match model registry of " +
                        std::to_string(stack.registry.size()));
    for (std::size_t i = 0; i < data.params.size(); ++i) {
        auto& reg = stack.registry[i];
        const auto& [name, vals] = data.params[i];
        if (name != reg.name)
            throw DataError("checkpoint: parameter " + std::to_string(i) + " is '" + name +
                            "', model expects '" + reg.name + "'");
        if (vals.size() != reg.value.size())
            throw DataError("checkpoint: parameter '" + name + "' has " +
                            std::to_string(vals.size()) + " values, model expects " +
                            std::to_string(reg.value.size()));
        auto& dst = reg.value.mutable_data();
        for (std::size_t j = 0; j < vals.size(); ++j) dst[j] = static_cast<double>(vals[j]);
    }
}

}  // namespace dgsa
