#pragma once

// Diagnostics rows, CSV output and raw field dumps.
//
// A field dump is <base>.f64 (n³ little-endian doubles, x fastest) plus a
// <base>.json sidecar carrying the grid.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spwells/error.hpp"
#include "spwells/grid.hpp"

namespace spwells {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kDumpFormatVersion = 1;

struct DiagnosticsRow {
  double lambda = 0.0;
  double energy = 0.0;
  double residual = 0.0;
  double tail_mass = 0.0;
  double penalty_mass = 0.0;
  double outside_sup = 0.0;
  std::string classification;
  double c_gap = 0.0;
  double c_lambda_upsilon = NAN;
  double b_hat = NAN;
};

inline constexpr const char* kCsvHeader =
    "lambda,energy,residual,tail_mass,penalty_mass,outside_sup,classification,c_gap,c_lambda_upsilon,b_hat";

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& out, const std::vector<DiagnosticsRow>& rows) {
  out << kCsvHeader << '\n';
  for (const DiagnosticsRow& r : rows) {
    out << format_real(r.lambda) << ',' << format_real(r.energy) << ',' << format_real(r.residual) << ','
        << format_real(r.tail_mass) << ',' << format_real(r.penalty_mass) << ',' << format_real(r.outside_sup) << ','
        << r.classification << ',' << format_real(r.c_gap) << ',' << format_real(r.c_lambda_upsilon) << ','
        << format_real(r.b_hat) << '\n';
  }
}

inline void write_csv(const std::filesystem::path& path, const std::vector<DiagnosticsRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(out, rows);
}

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

}  // namespace detail

inline void write_field(const std::filesystem::path& base, const ScalarField& f) {
  const std::filesystem::path data = base.string() + ".f64";
  const std::filesystem::path meta = base.string() + ".json";
  {
    std::ofstream out(data, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + data.string());
    std::vector<std::uint64_t> raw(f.size());
    for (std::size_t p = 0; p < f.size(); ++p) raw[p] = detail::to_little_endian(std::bit_cast<std::uint64_t>(f[p]));
    out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size() * sizeof(std::uint64_t)));
  }
  nlohmann::json j = {{"version", kDumpFormatVersion},
                      {"n", f.grid.n},
                      {"half_width", f.grid.half_width},
                      {"spacing", f.grid.h},
                      {"order", "x-fastest"},
                      {"index", "(k*n + j)*n + i"},
                      {"dtype", "float64-le"}};
  std::ofstream out(meta);
  if (!out) throw std::runtime_error("cannot write " + meta.string());
  out << j.dump(2) << '\n';
}

// Reads <base>.f64 using <base>.json; `base` may carry either extension or none.
inline ScalarField read_field(std::filesystem::path base) {
  if (base.extension() == ".f64" || base.extension() == ".json") base.replace_extension();
  const std::filesystem::path data = base.string() + ".f64";
  const std::filesystem::path meta = base.string() + ".json";
  std::ifstream min(meta);
  if (!min) throw ConfigError("missing field sidecar " + meta.string());
  nlohmann::json j;
  try {
    min >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad field sidecar " + meta.string() + ": " + e.what());
  }
  if (j.value("version", 0) != kDumpFormatVersion || j.value("order", "") != "x-fastest" ||
      j.value("dtype", "") != "float64-le")
    throw ConfigError("unsupported field dump format in " + meta.string());
  const Grid3 g{j.at("n").get<int>(), j.at("half_width").get<double>(), j.at("spacing").get<double>()};
  std::ifstream in(data, std::ios::binary);
  if (!in) throw ConfigError("missing field data " + data.string());
  std::vector<std::uint64_t> raw(g.size());
  in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size() * sizeof(std::uint64_t)));
  if (in.gcount() != std::streamsize(raw.size() * sizeof(std::uint64_t)) || in.peek() != EOF)
    throw ConfigError("field data " + data.string() + " does not match its sidecar grid");
  ScalarField f(g);
  for (std::size_t p = 0; p < f.size(); ++p) f[p] = std::bit_cast<double>(detail::to_little_endian(raw[p]));
  return f;
}

}  // namespace spwells
