// Persistence: binary field snapshots, CSV series, experiment tables, and
// the reproducibility metadata sidecar.
//
// Snapshot layout (all little-endian):
//   magic "BQ2D" (4 bytes), format version u16, grid n u32, mode count u32,
//   then count records for theta and count records for omega, each record
//   k1 i32, k2 i32, re f64, im f64. The mode list is the sorted union of the
//   nonzero supports of both fields.

#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bq2d/dynamics.hpp"
#include "bq2d/experiments.hpp"
#include "bq2d/version.hpp"

namespace bq2d {

inline constexpr std::uint16_t snapshot_format_version = 1;

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
    using U = std::make_unsigned_t<T>;
    U u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}

inline void put_le_f64(std::string& out, double value) {
    put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(value));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw std::runtime_error("snapshot: truncated file");
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        u |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    pos += sizeof(T);
    return static_cast<T>(u);
}

inline double get_le_f64(const std::string& in, std::size_t& pos) {
    return std::bit_cast<double>(get_le<std::uint64_t>(in, pos));
}

}  // namespace detail

/// Shortest round-trip decimal formatting; the single number format used in
/// every CSV and console report so outputs are byte-stable.
inline std::string io_fmt(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_snapshot(const std::filesystem::path& path, const SpectralField& theta,
                           const SpectralField& omega) {
    theta.require_same_grid(omega);
    std::set<Mode> support;
    for (std::size_t i = 0; i < theta.coeffs.size(); ++i) {
        const Mode k = theta.grid.mode_at(i);
        if (theta.coeffs[i] != complexd{0.0, 0.0} || omega.coeffs[i] != complexd{0.0, 0.0})
            support.insert(k);
    }
    std::string out;
    out += "BQ2D";
    detail::put_le<std::uint16_t>(out, snapshot_format_version);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(theta.grid.n));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(support.size()));
    for (const SpectralField* f : {&theta, &omega})
        for (const Mode& k : support) {
            detail::put_le<std::int32_t>(out, k.k1);
            detail::put_le<std::int32_t>(out, k.k2);
            const complexd v = f->at(k);
            detail::put_le_f64(out, v.real());
            detail::put_le_f64(out, v.imag());
        }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("snapshot: cannot open for writing: " + path.string());
    os.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!os) throw std::runtime_error("snapshot: write failed: " + path.string());
}

inline std::pair<SpectralField, SpectralField> read_snapshot(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("snapshot: cannot open: " + path.string());
    std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    if (data.size() < 4 || data.compare(0, 4, "BQ2D") != 0)
        throw std::runtime_error("snapshot: bad magic");
    pos = 4;
    const auto version = detail::get_le<std::uint16_t>(data, pos);
    if (version != snapshot_format_version)
        throw std::runtime_error("snapshot: unsupported format version");
    const auto n = detail::get_le<std::uint32_t>(data, pos);
    const auto count = detail::get_le<std::uint32_t>(data, pos);
    WaveGrid grid(static_cast<int>(n));
    SpectralField theta(grid), omega(grid);
    for (SpectralField* f : {&theta, &omega})
        for (std::uint32_t i = 0; i < count; ++i) {
            const auto k1 = detail::get_le<std::int32_t>(data, pos);
            const auto k2 = detail::get_le<std::int32_t>(data, pos);
            const double re = detail::get_le_f64(data, pos);
            const double im = detail::get_le_f64(data, pos);
            const Mode k{k1, k2};
            if (!grid.holds(k)) throw std::runtime_error("snapshot: mode outside grid");
            if (k == Mode{0, 0} && (re != 0.0 || im != 0.0))
                throw std::runtime_error("snapshot: zero-mean violation (nonzero k = 0 mode)");
            f->at(k) = complexd{re, im};
        }
    if (pos != data.size()) throw std::runtime_error("snapshot: trailing bytes");
    for (const SpectralField* f : {&theta, &omega})
        if (f->reality_defect() > 1e-12)
            throw std::runtime_error("snapshot: Hermitian symmetry violation");
    return {std::move(theta), std::move(omega)};
}

// ---------------------------------------------------------------------------
// CSV. Numbers are written with shortest round-trip formatting, so identical
// runs produce byte-identical files.
// ---------------------------------------------------------------------------

inline constexpr const char* series_csv_header = "t,theta_l2,theta_h1,omega_l2,omega_hneg";
inline constexpr const char* table_csv_header =
    "N,beta,noise_ratio,M,mean_x_distance,std_x_distance,exceedance_prob,wall_time_s";

inline void write_series_csv(std::ostream& os, const TrajectoryRecord& rec) {
    os << series_csv_header << "\n";
    for (std::size_t i = 0; i < rec.times.size(); ++i)
        os << io_fmt(rec.times[i]) << ',' << io_fmt(rec.theta_l2[i]) << ','
           << io_fmt(rec.theta_h1[i]) << ',' << io_fmt(rec.omega_l2[i]) << ','
           << io_fmt(rec.omega_hneg[i]) << "\n";
}

inline void write_table_csv(std::ostream& os, const ExperimentTable& table) {
    os << table_csv_header << "\n";
    for (const auto& r : table.rows)
        os << r.N << ',' << io_fmt(r.beta) << ',' << io_fmt(r.noise_ratio) << ','
           << r.M << ',' << io_fmt(r.mean_x_distance) << ',' << io_fmt(r.std_x_distance)
           << ',' << io_fmt(r.exceedance_prob) << ',' << io_fmt(r.wall_time_s) << "\n";
}

// ---------------------------------------------------------------------------
// Metadata sidecar: full configuration + seeds + code version. Re-running a
// command from its metadata reproduces all CSVs byte-for-byte (wall-time
// columns aside).
// ---------------------------------------------------------------------------

inline nlohmann::json make_metadata(const std::string& subcommand, const nlohmann::json& options) {
    nlohmann::json meta;
    meta["tool"] = "bq2d";
    meta["version"] = version_string;
    meta["subcommand"] = subcommand;
    meta["seed_derivation"] =
        "child = splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15); ensembles use "
        "split(master, slot) then split(ensemble_seed, trajectory_index)";
    meta["x_norm_convention"] = x_norm_convention;
    meta["options"] = options;
    return meta;
}

inline void write_metadata(const std::filesystem::path& path, const nlohmann::json& meta) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("metadata: cannot open for writing: " + path.string());
    os << meta.dump(2) << "\n";
}

inline nlohmann::json read_metadata(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("metadata: cannot open: " + path.string());
    nlohmann::json meta;
    is >> meta;
    return meta;
}

}  // namespace bq2d
