#pragma once

// GridFunction persistence: a JSON document {L, N, kind, encoding, data}
// where data holds little-endian float64 (re, im) pairs in base64, plus CSV
// export (x, re, im) for plotting. Numbers in CSV are printed with %.17g so
// identical runs produce byte-identical files.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "halfwave/grid.hpp"

namespace hw {

using json = nlohmann::json;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline const char* b64_alphabet() {
    return "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

inline std::string base64_encode(const unsigned char* data, size_t len) {
    const char* tbl = b64_alphabet();
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    size_t i = 0;
    for (; i + 2 < len; i += 3) {
        const uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out.push_back(tbl[(v >> 18) & 63]);
        out.push_back(tbl[(v >> 12) & 63]);
        out.push_back(tbl[(v >> 6) & 63]);
        out.push_back(tbl[v & 63]);
    }
    if (i < len) {
        uint32_t v = data[i] << 16;
        if (i + 1 < len) v |= data[i + 1] << 8;
        out.push_back(tbl[(v >> 18) & 63]);
        out.push_back(tbl[(v >> 12) & 63]);
        out.push_back(i + 1 < len ? tbl[(v >> 6) & 63] : '=');
        out.push_back('=');
    }
    return out;
}

inline std::vector<unsigned char> base64_decode(const std::string& s) {
    int rev[256];
    for (int i = 0; i < 256; ++i) rev[i] = -1;
    const char* tbl = b64_alphabet();
    for (int i = 0; i < 64; ++i) rev[static_cast<unsigned char>(tbl[i])] = i;
    std::vector<unsigned char> out;
    out.reserve(s.size() / 4 * 3);
    uint32_t buf = 0;
    int bits = 0;
    for (char c : s) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int v = rev[static_cast<unsigned char>(c)];
        if (v < 0) throw IoError("invalid base64 payload");
        buf = (buf << 6) | static_cast<uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<unsigned char>((buf >> bits) & 0xff));
        }
    }
    return out;
}

// serialize little-endian regardless of host order (x86-64: passthrough)
inline void put_le_double(std::vector<unsigned char>& buf, double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, 8);
    for (int b = 0; b < 8; ++b) buf.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xff));
}

inline double get_le_double(const unsigned char* p) {
    uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<uint64_t>(p[b]) << (8 * b);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline json to_json(const GridFunction& f, json extra = json::object()) {
    std::vector<unsigned char> raw;
    raw.reserve(16 * f.size());
    for (const auto& z : f.values()) {
        detail::put_le_double(raw, z.real());
        detail::put_le_double(raw, z.imag());
    }
    json j = std::move(extra);
    j["L"] = f.grid().half_width();
    j["N"] = f.grid().size();
    j["kind"] = f.kind() == FieldKind::Real ? "real" : "complex";
    j["encoding"] = "base64-f64le-reim";
    j["data"] = detail::base64_encode(raw.data(), raw.size());
    return j;
}

inline GridFunction from_json(const json& j) {
    const double L = j.at("L").get<double>();
    const int N = j.at("N").get<int>();
    if (j.at("encoding").get<std::string>() != "base64-f64le-reim")
        throw IoError("unsupported field encoding");
    const auto raw = detail::base64_decode(j.at("data").get<std::string>());
    if (raw.size() != static_cast<size_t>(16) * N)
        throw IoError("field payload size does not match N");
    std::vector<cplx> v(N);
    for (int i = 0; i < N; ++i)
        v[i] = cplx(detail::get_le_double(raw.data() + 16 * i),
                    detail::get_le_double(raw.data() + 16 * i + 8));
    const auto kind = j.at("kind").get<std::string>() == "real" ? FieldKind::Real : FieldKind::Complex;
    return GridFunction(make_grid(L, N), std::move(v), kind);
}

inline void save_field(const GridFunction& f, const std::string& path, json extra = json::object()) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << to_json(f, std::move(extra)).dump(0) << "\n";
}

inline GridFunction load_field(const std::string& path, json* extra = nullptr) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    json j;
    is >> j;
    if (extra) *extra = j;
    return from_json(j);
}

inline void save_field_csv(const GridFunction& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << "x,re,im\n";
    const auto& x = f.grid().nodes();
    for (int j = 0; j < f.size(); ++j)
        os << detail::fmt17(x[j]) << ',' << detail::fmt17(f[j].real()) << ','
           << detail::fmt17(f[j].imag()) << '\n';
}

// deterministic CSV writer for time series tables
class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path, const std::vector<std::string>& columns)
        : os_(path) {
        if (!os_) throw IoError("cannot open " + path + " for writing");
        for (size_t i = 0; i < columns.size(); ++i)
            os_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
    }
    void row(const std::vector<double>& vals) {
        for (size_t i = 0; i < vals.size(); ++i)
            os_ << detail::fmt17(vals[i]) << (i + 1 < vals.size() ? "," : "\n");
    }

  private:
    std::ofstream os_;
};

} // namespace hw
