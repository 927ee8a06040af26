#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jhbl/model.hpp"

namespace jhbl::io {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "raw float I/O assumes a little-endian host");

// Raw array file: one line of JSON header, then the values as little-endian float64.
// Header: {"dtype":"float64-le","order":"column-major","shape":[...]}; images use shape [n1, n1].
inline void write_raw(const fs::path& path, const Vector& v, const std::vector<Eigen::Index>& shape) {
    Eigen::Index count = 1;
    for (auto s : shape) count *= s;
    if (count != v.size()) throw std::invalid_argument("write_raw: shape does not match the value count");
    nlohmann::json header = {{"dtype", "float64-le"}, {"order", "column-major"}, {"shape", shape}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << header.dump() << '\n';
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

struct RawArray {
    std::vector<Eigen::Index> shape;
    Vector values;
};

inline RawArray read_raw(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    const auto header = nlohmann::json::parse(line);
    if (header.at("dtype") != "float64-le") throw std::runtime_error(path.string() + ": unsupported dtype");
    RawArray out;
    out.shape = header.at("shape").get<std::vector<Eigen::Index>>();
    Eigen::Index count = 1;
    for (auto s : out.shape) count *= s;
    out.values.resize(count);
    in.read(reinterpret_cast<char*>(out.values.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double)))
        throw std::runtime_error(path.string() + ": truncated data");
    return out;
}

inline void write_image_raw(const fs::path& path, const Vector& img, int n1) { write_raw(path, img, {n1, n1}); }

inline Vector read_image_raw(const fs::path& path, int& n1) {
    auto arr = read_raw(path);
    if (arr.shape.size() != 2 || arr.shape[0] != arr.shape[1])
        throw std::runtime_error(path.string() + ": not a square image");
    n1 = static_cast<int>(arr.shape[0]);
    return std::move(arr.values);
}

// 16-bit binary PGM, linearly mapping [lo, hi] to [0, 65535]. Rows of the PGM are the
// image's first index (s), columns the second (t).
inline void write_pgm16(const fs::path& path, const Vector& img, int n1, double lo, double hi) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "P5\n" << n1 << ' ' << n1 << "\n65535\n";
    const double range = hi > lo ? hi - lo : 1.0;
    for (int a = 0; a < n1; ++a)
        for (int b = 0; b < n1; ++b) {
            const double v = std::clamp((img[a + Eigen::Index(n1) * b] - lo) / range, 0.0, 1.0);
            const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
            const char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};
            out.write(bytes, 2);
        }
}

inline void write_pgm16(const fs::path& path, const Vector& img, int n1) {
    write_pgm16(path, img, n1, img.minCoeff(), img.maxCoeff());
}

// Fixed 12 significant digits, so metric files diff cleanly.
inline std::string fmt12(double v) {
    std::ostringstream s;
    s << std::setprecision(12) << v;
    return s.str();
}

inline std::string indexed(const std::string& stem, std::size_t j, const std::string& ext) {
    std::ostringstream s;
    s << stem << '_' << std::setw(3) << std::setfill('0') << j << ext;
    return s.str();
}

inline nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return nlohmann::json::parse(in);
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

// Frames <dir>/<stem>_000.f64, <stem>_001.f64, ... until the first gap.
inline ImageSequence read_sequence(const fs::path& dir, const std::string& stem) {
    ImageSequence seq;
    for (std::size_t j = 0;; ++j) {
        const auto p = dir / indexed(stem, j, ".f64");
        if (!fs::exists(p)) break;
        int n1 = 0;
        seq.frames.push_back(read_image_raw(p, n1));
        if (seq.width != 0 && seq.width != n1) throw std::runtime_error(p.string() + ": frame size differs");
        seq.width = n1;
    }
    if (seq.frames.empty()) throw std::runtime_error("no frames '" + stem + "_*.f64' in " + dir.string());
    return seq;
}

}  // namespace jhbl::io
