#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "cqnls/field.hpp"

namespace cqnls::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace detail {

inline std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

inline void put_f64(std::ostream& os, double x) {
  std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(x));
  os.write(reinterpret_cast<const char*>(&bits), 8);
}

inline double get_f64(std::istream& is) {
  std::uint64_t bits = 0;
  is.read(reinterpret_cast<char*>(&bits), 8);
  return std::bit_cast<double>(to_le(bits));
}

}  // namespace detail

/// Shortest round-trip decimal text for a double.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline json grid_json(const UniformGrid& g) {
  return json{{"dim", g.dim()}, {"extent", g.extent()}, {"points", g.points()}, {"spacing", g.spacing()}};
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

inline json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  return json::parse(is);
}

/// Writes `<stem>.bin` (little-endian f64, re/im interleaved, row-major, last axis
/// fastest) and `<stem>.json` with the grid metadata. `extra` is merged into the sidecar.
inline void write_field(const fs::path& stem, const ComplexField& f, const json& extra = json::object()) {
  fs::path bin = stem;
  bin += ".bin";
  fs::path meta = stem;
  meta += ".json";
  {
    std::ofstream os(bin, std::ios::binary);
    if (!os) throw IoError("cannot open " + bin.string() + " for writing");
    for (const auto& z : f.values()) {
      detail::put_f64(os, z.real());
      detail::put_f64(os, z.imag());
    }
    if (!os) throw IoError("write failed: " + bin.string());
  }
  json j = {{"grid", grid_json(f.grid())},
            {"time", f.time()},
            {"layout", "f64le interleaved re,im; row-major, last axis fastest"},
            {"count", f.size()},
            {"binary", bin.filename().string()}};
  j.update(extra);
  write_text(meta, j.dump(2) + "\n");
}

inline ComplexField read_field(const fs::path& stem) {
  fs::path bin = stem;
  bin += ".bin";
  fs::path meta = stem;
  meta += ".json";
  const json j = read_json(meta);
  UniformGrid g(j.at("grid").at("dim").get<int>(), j.at("grid").at("extent").get<double>(),
                j.at("grid").at("points").get<int>());
  std::ifstream is(bin, std::ios::binary);
  if (!is) throw IoError("cannot open " + bin.string());
  std::vector<cplx> v(g.size());
  for (auto& z : v) {
    const double re = detail::get_f64(is);
    const double im = detail::get_f64(is);
    z = {re, im};
  }
  if (!is) throw IoError("truncated field binary: " + bin.string());
  return ComplexField(g, std::move(v), j.at("time").get<double>());
}

/// CSV export: index, x[, y[, z]], re, im.
inline void write_field_csv(const fs::path& path, const ComplexField& f) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  static constexpr const char* axes[] = {"x", "y", "z"};
  const auto& g = f.grid();
  os << "index";
  for (int a = 0; a < g.dim(); ++a) os << ',' << axes[a];
  os << ",re,im\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto idx = g.unflatten(i);
    os << i;
    for (int a = 0; a < g.dim(); ++a) os << ',' << fmt(g.coordinate(idx[a]));
    os << ',' << fmt(f[i].real()) << ',' << fmt(f[i].imag()) << '\n';
  }
}

}  // namespace cqnls::io
