#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "thicket/errors.hpp"
#include "thicket/nnet.hpp"

namespace thicket::io {

// Shortest round-trip decimal form, "." decimal point, locale-independent.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc()) throw config_error("not a number: '" + s + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!out) throw config_error("cannot open for writing: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw config_error("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string> read_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t pos = text.find('\n', start);
        if (pos == std::string::npos) pos = text.size();
        std::string line = text.substr(start, pos - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = pos + 1;
    }
    return lines;
}

// FNV-1a 64; used for the artifact checksums recorded in manifests.
inline std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[h & 0xF];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf, 16);
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::string& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

struct Reader {
    const std::string& data;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > data.size()) throw config_error("params file: truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
};

}  // namespace detail

inline constexpr std::uint32_t kParamsVersion = 1;

// Binary weights: magic "THKT", version, layout records, little-endian doubles.
inline std::string params_to_bytes(const nnet::ParamVector& params) {
    std::string out;
    out += "THKT";
    detail::put_u32(out, kParamsVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(params.layout.size()));
    for (const auto& rec : params.layout) {
        detail::put_u32(out, static_cast<std::uint32_t>(rec.layer_index));
        detail::put_u64(out, rec.weight_offset);
        detail::put_u64(out, rec.bias_offset);
        detail::put_u32(out, static_cast<std::uint32_t>(rec.fan_in));
        detail::put_u32(out, static_cast<std::uint32_t>(rec.fan_out));
    }
    detail::put_u64(out, params.values.size());
    for (double v : params.values) detail::put_f64(out, v);
    return out;
}

inline void save_params(const std::filesystem::path& path, const nnet::ParamVector& params) {
    write_text_file(path, params_to_bytes(params));
}

inline nnet::ParamVector load_params(const std::filesystem::path& path) {
    const std::string data = read_text_file(path);
    detail::Reader r{data};
    r.need(4);
    if (data.compare(0, 4, "THKT") != 0) throw config_error("params file: bad magic");
    r.pos = 4;
    if (r.u32() != kParamsVersion) throw config_error("params file: unsupported version");
    const std::uint32_t n_layers = r.u32();
    nnet::ParamVector params;
    std::size_t expected = 0;
    for (std::uint32_t l = 0; l < n_layers; ++l) {
        nnet::LayerLayout rec;
        rec.layer_index = static_cast<int>(r.u32());
        rec.weight_offset = r.u64();
        rec.bias_offset = r.u64();
        rec.fan_in = static_cast<int>(r.u32());
        rec.fan_out = static_cast<int>(r.u32());
        if (rec.fan_in < 1 || rec.fan_out < 1 || rec.weight_offset != expected ||
            rec.bias_offset !=
                expected + static_cast<std::size_t>(rec.fan_in) * static_cast<std::size_t>(rec.fan_out))
            throw config_error("params file: inconsistent layout");
        expected = rec.bias_offset + static_cast<std::size_t>(rec.fan_out);
        params.layout.push_back(rec);
    }
    const std::uint64_t n_values = r.u64();
    if (n_values != expected) throw config_error("params file: layout/value count mismatch");
    params.values.resize(n_values);
    for (std::uint64_t i = 0; i < n_values; ++i) params.values[i] = r.f64();
    if (r.pos != data.size()) throw config_error("params file: trailing bytes");
    return params;
}

// Loads and rejects anything whose layout does not match the given config.
inline nnet::ParamVector load_params_checked(const std::filesystem::path& path,
                                             const nnet::MlpConfig& config) {
    nnet::ParamVector params = load_params(path);
    nnet::check_match(params, config);
    return params;
}

}  // namespace thicket::io
