#pragma once

// Versioned binary checkpoint: named tensors with shapes, raw little-endian
// payload. Round-trips bit-exactly.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "evdet/model.hpp"

namespace evdet {

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'E', 'V', 'D', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ParseError("checkpoint: truncated file");
    return v;
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_pod<std::uint32_t>(out, std::uint32_t(s.size()));
    out.write(s.data(), std::streamsize(s.size()));
}

inline std::string read_string(std::istream& in) {
    auto len = read_pod<std::uint32_t>(in);
    std::string s(len, '\0');
    in.read(s.data(), std::streamsize(len));
    if (!in) throw ParseError("checkpoint: truncated string");
    return s;
}

}  // namespace detail

template <typename S>
void save_model(const PairEncoderModel<S>& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open checkpoint '" + path + "' for writing");
    out.write(detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic));
    detail::write_pod<std::uint32_t>(out, std::uint32_t(sizeof(S)));

    const auto& cfg = m.cfg;
    for (int v : {cfg.vocab_size, cfg.d_model, cfg.layers, cfg.heads, cfg.ff_mult, cfg.max_len,
                  cfg.pool_heads, cfg.pool_hidden, int(cfg.prompt_enabled),
                  int(cfg.structured_attention)})
        detail::write_pod<std::int32_t>(out, v);

    std::uint32_t count = 0;
    for_each_tensor(m, [&](const std::string&, const Mat<S>&) { ++count; });
    detail::write_pod<std::uint32_t>(out, count);
    for_each_tensor(m, [&](const std::string& name, const Mat<S>& t) {
        detail::write_string(out, name);
        detail::write_pod<std::int64_t>(out, std::int64_t(t.rows()));
        detail::write_pod<std::int64_t>(out, std::int64_t(t.cols()));
        out.write(reinterpret_cast<const char*>(t.data()),
                  std::streamsize(sizeof(S) * std::size_t(t.size())));
    });
    if (!out) throw ParseError("checkpoint: write failed for '" + path + "'");
}

template <typename S>
PairEncoderModel<S> load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open checkpoint '" + path + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0)
        throw ParseError("checkpoint: bad magic in '" + path + "'");
    if (detail::read_pod<std::uint32_t>(in) != sizeof(S))
        throw ParseError("checkpoint: scalar width mismatch");

    ModelConfig cfg;
    cfg.vocab_size = detail::read_pod<std::int32_t>(in);
    cfg.d_model = detail::read_pod<std::int32_t>(in);
    cfg.layers = detail::read_pod<std::int32_t>(in);
    cfg.heads = detail::read_pod<std::int32_t>(in);
    cfg.ff_mult = detail::read_pod<std::int32_t>(in);
    cfg.max_len = detail::read_pod<std::int32_t>(in);
    cfg.pool_heads = detail::read_pod<std::int32_t>(in);
    cfg.pool_hidden = detail::read_pod<std::int32_t>(in);
    cfg.prompt_enabled = detail::read_pod<std::int32_t>(in) != 0;
    cfg.structured_attention = detail::read_pod<std::int32_t>(in) != 0;

    PairEncoderModel<S> m = make_model<S>(cfg, 0);
    const auto count = detail::read_pod<std::uint32_t>(in);
    std::uint32_t expected = 0;
    for_each_tensor(m, [&](const std::string&, const Mat<S>&) { ++expected; });
    if (count != expected) throw ParseError("checkpoint: tensor count mismatch");

    for_each_tensor(m, [&](const std::string& name, Mat<S>& t) {
        const auto stored = detail::read_string(in);
        if (stored != name)
            throw ParseError("checkpoint: expected tensor '" + name + "', found '" + stored + "'");
        const auto rows = detail::read_pod<std::int64_t>(in);
        const auto cols = detail::read_pod<std::int64_t>(in);
        if (rows != t.rows() || cols != t.cols())
            throw ParseError("checkpoint: shape mismatch for tensor '" + name + "'");
        in.read(reinterpret_cast<char*>(t.data()), std::streamsize(sizeof(S) * std::size_t(t.size())));
        if (!in) throw ParseError("checkpoint: truncated tensor '" + name + "'");
    });
    return m;
}

}  // namespace evdet
