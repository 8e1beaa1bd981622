#pragma once
// Deterministic file output: CSV with fixed 17-significant-digit formatting,
// JSON metadata sidecars, and the LBF1 binary field format. All writes are
// atomic (temp file + rename).

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "exactdyn.hpp"
#include "lattice.hpp"

namespace latbath::io {

inline constexpr const char* kVersion = "1.0.0";

inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void atomic_write(const std::string& path, const std::string& content, bool binary = false) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, binary ? std::ios::binary : std::ios::out);
        if (!f) throw std::runtime_error("atomic_write: cannot open " + tmp);
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw std::runtime_error("atomic_write: short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("atomic_write: rename failed for " + path);
}

// rows of doubles under a header line; every cell printed with %.17g
inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    std::ostringstream os;
    for (std::size_t i = 0; i < header.size(); ++i)
        os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& r : rows) {
        if (r.size() != header.size())
            throw std::invalid_argument("write_csv: row width does not match header");
        for (std::size_t i = 0; i < r.size(); ++i)
            os << (i ? "," : "") << format_g17(r[i]);
        os << "\n";
    }
    atomic_write(path, os.str());
}

// mixed string/double cells (e.g. pole tables with a kind column)
inline void write_csv_mixed(const std::string& path, const std::vector<std::string>& header,
                            const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream os;
    for (std::size_t i = 0; i < header.size(); ++i)
        os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& r : rows) {
        if (r.size() != header.size())
            throw std::invalid_argument("write_csv_mixed: row width does not match header");
        for (std::size_t i = 0; i < r.size(); ++i)
            os << (i ? "," : "") << r[i];
        os << "\n";
    }
    atomic_write(path, os.str());
}

// ------------------------------------------------------------------- LBF1
// magic "LBF1", u32 version, u32 kind, u32 N, u32 n_sublattices, f64 time,
// interleaved (Re, Im) f64 amplitudes row-major with n3 fastest; little-endian.

inline std::uint32_t kind_code(lattice::Kind k) { return static_cast<std::uint32_t>(k); }

namespace detail {
template <class T>
inline void put_le(std::string& s, T v) {
    static_assert(sizeof(T) <= 8);
    unsigned char b[8];
    std::memcpy(b, &v, sizeof v);  // host is little-endian (x86/arm64-le)
    s.append(reinterpret_cast<char*>(b), sizeof v);
}
template <class T>
inline T get_le(const std::string& s, std::size_t& pos) {
    if (pos + sizeof(T) > s.size()) throw std::runtime_error("LBF1: truncated file");
    T v;
    std::memcpy(&v, s.data() + pos, sizeof v);
    pos += sizeof v;
    return v;
}
}  // namespace detail

inline void write_field(const std::string& path, const exactdyn::BathField& f) {
    const std::size_t m = static_cast<std::size_t>(f.N) * f.N * f.N * f.n_sublattices;
    if (f.amplitudes.size() != m)
        throw std::invalid_argument("write_field: amplitude count does not match N, sublattices");
    std::string s;
    s.reserve(28 + 16 * m);
    s.append("LBF1", 4);
    detail::put_le<std::uint32_t>(s, 1);
    detail::put_le<std::uint32_t>(s, kind_code(f.kind));
    detail::put_le<std::uint32_t>(s, static_cast<std::uint32_t>(f.N));
    detail::put_le<std::uint32_t>(s, static_cast<std::uint32_t>(f.n_sublattices));
    detail::put_le<double>(s, f.time);
    for (const auto& a : f.amplitudes) {
        detail::put_le<double>(s, a.real());
        detail::put_le<double>(s, a.imag());
    }
    atomic_write(path, s, true);
}

inline exactdyn::BathField read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_field: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string s = ss.str();
    std::size_t pos = 0;
    if (s.size() < 4 || s.compare(0, 4, "LBF1") != 0)
        throw std::runtime_error("read_field: bad magic");
    pos = 4;
    const auto ver = detail::get_le<std::uint32_t>(s, pos);
    if (ver != 1) throw std::runtime_error("read_field: unsupported version");
    exactdyn::BathField f;
    f.kind = static_cast<lattice::Kind>(detail::get_le<std::uint32_t>(s, pos));
    f.N = static_cast<int>(detail::get_le<std::uint32_t>(s, pos));
    f.n_sublattices = static_cast<int>(detail::get_le<std::uint32_t>(s, pos));
    f.time = detail::get_le<double>(s, pos);
    const std::size_t m = static_cast<std::size_t>(f.N) * f.N * f.N * f.n_sublattices;
    f.amplitudes.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double re = detail::get_le<double>(s, pos);
        const double im = detail::get_le<double>(s, pos);
        f.amplitudes[i] = {re, im};
    }
    return f;
}

}  // namespace latbath::io
