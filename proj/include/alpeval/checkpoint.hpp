#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alpeval/errors.hpp"
#include "alpeval/network.hpp"

namespace alpeval {

// Checkpoint file layout: the 8-byte magic "ALPEVAL1", a little-endian u32
// header length, a JSON header (model shape, seed record, optional dataset
// descriptor), then each layer's weights (row-major) and biases as raw
// little-endian 64-bit floats, in layer order. Round-trips are bit-exact.

inline constexpr char kCheckpointMagic[8] = {'A', 'L', 'P', 'E', 'V', 'A', 'L', '1'};

struct CheckpointMeta {
    std::uint64_t seed = 0;
    // Recipe for regenerating the data the model was trained on; null when
    // the model did not come from a generated dataset.
    nlohmann::json dataset = nullptr;
};

namespace detail {

inline void write_u32_le(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 4);
}

inline void write_f64_le(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    out.write(b, 8);
}

inline bool read_exact(std::istream& in, char* buf, std::size_t n) {
    in.read(buf, static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in.gcount()) == n;
}

inline std::uint32_t parse_u32_le(const char* b) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}

inline double parse_f64_le(const char* b) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace detail

inline void save_checkpoint(const Parameters& params, const std::filesystem::path& path,
                            const CheckpointMeta& meta = {}) {
    params.spec.validate();
    nlohmann::json header = {
        {"input_dim", params.spec.input_dim},
        {"hidden", params.spec.hidden},
        {"num_classes", params.spec.num_classes},
        {"seed", meta.seed},
    };
    if (!meta.dataset.is_null()) header["dataset"] = meta.dataset;
    const std::string header_bytes = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::write_u32_le(out, static_cast<std::uint32_t>(header_bytes.size()));
    out.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        for (double v : params.weights[l].data) detail::write_f64_le(out, v);
        for (double v : params.biases[l].data) detail::write_f64_le(out, v);
    }
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

struct LoadedCheckpoint {
    Parameters params;
    CheckpointMeta meta;
};

/// Reads a checkpoint, validating the magic, header, and payload size.
/// When `expected` is given, the embedded model shape must match it.
inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                        const ModelSpec* expected = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());

    char magic[sizeof(kCheckpointMagic)];
    if (!detail::read_exact(in, magic, sizeof(magic)) ||
        !std::equal(magic, magic + sizeof(magic), kCheckpointMagic))
        throw IoError("not a checkpoint file (bad magic): " + path.string());

    char lenbuf[4];
    if (!detail::read_exact(in, lenbuf, 4))
        throw IoError("truncated checkpoint (missing header length): " + path.string());
    const std::uint32_t header_len = detail::parse_u32_le(lenbuf);
    if (header_len == 0 || header_len > (1u << 20))
        throw IoError("implausible checkpoint header length: " + path.string());

    std::string header_bytes(header_len, '\0');
    if (!detail::read_exact(in, header_bytes.data(), header_len))
        throw IoError("truncated checkpoint (incomplete header): " + path.string());

    nlohmann::json header = nlohmann::json::parse(header_bytes, nullptr, false);
    if (header.is_discarded() || !header.is_object())
        throw IoError("corrupt checkpoint header: " + path.string());

    LoadedCheckpoint loaded;
    try {
        loaded.params.spec.input_dim = header.at("input_dim").get<std::size_t>();
        loaded.params.spec.hidden = header.at("hidden").get<std::vector<std::size_t>>();
        loaded.params.spec.num_classes = header.at("num_classes").get<std::size_t>();
        loaded.meta.seed = header.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception&) {
        throw IoError("checkpoint header missing required fields: " + path.string());
    }
    if (header.contains("dataset")) loaded.meta.dataset = header["dataset"];
    loaded.params.spec.validate();
    if (expected && !(loaded.params.spec == *expected))
        throw ValidationError("checkpoint model shape does not match expected shape: " +
                              path.string());

    const auto dims = loaded.params.spec.layer_dims();
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t out_dim = dims[l + 1];
        const std::size_t in_dim = dims[l];
        Tensor w = Tensor::zeros({out_dim, in_dim});
        Tensor b = Tensor::zeros({out_dim});
        std::vector<char> buf((out_dim * in_dim + out_dim) * 8);
        if (!detail::read_exact(in, buf.data(), buf.size()))
            throw IoError("truncated checkpoint (incomplete weights): " + path.string());
        for (std::size_t i = 0; i < out_dim * in_dim; ++i)
            w.data[i] = detail::parse_f64_le(&buf[i * 8]);
        for (std::size_t i = 0; i < out_dim; ++i)
            b.data[i] = detail::parse_f64_le(&buf[(out_dim * in_dim + i) * 8]);
        loaded.params.weights.push_back(std::move(w));
        loaded.params.biases.push_back(std::move(b));
    }
    char extra;
    if (in.read(&extra, 1); in.gcount() != 0)
        throw IoError("checkpoint has trailing bytes: " + path.string());
    return loaded;
}

}  // namespace alpeval
