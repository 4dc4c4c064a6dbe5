#pragma once

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

#include "grid.hpp"

namespace elasto {

// Binary field snapshot.
//   bytes  0..7   magic "ELSNAP01"
//   bytes  8..11  int32  n
//   bytes 12..15  int32  component count
//   bytes 16..23  f64    box length L
//   bytes 24..31  f64    time stamp
//   bytes 32..63  zero padding
// followed by component-major, x1-fastest little-endian f64 samples. A text
// sidecar "<file>.meta" repeats the header in key=value form.
struct SnapshotError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Snapshot {
  GridSpec grid;
  double time = 0.0;
  std::vector<RealScalarField> components;
};

namespace detail {

inline constexpr char kSnapshotMagic[8] = {'E', 'L', 'S', 'N', 'A', 'P', '0', '1'};

template <typename T>
inline void put_le(unsigned char* dst, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  std::memcpy(dst, bytes, sizeof(T));
}

template <typename T>
inline T get_le(const unsigned char* src) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, src, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

inline void write_snapshot(const std::filesystem::path& path, const std::vector<const RealScalarField*>& comps,
                           double time, const std::string& label = "") {
  if (comps.empty()) throw SnapshotError("snapshot: no components");
  const GridSpec g = comps.front()->grid;
  for (const auto* c : comps) require_same_grid(g, c->grid);

  unsigned char header[64] = {};
  std::memcpy(header, detail::kSnapshotMagic, 8);
  detail::put_le<std::int32_t>(header + 8, g.n);
  detail::put_le<std::int32_t>(header + 12, std::int32_t(comps.size()));
  detail::put_le<double>(header + 16, g.box_length);
  detail::put_le<double>(header + 24, time);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SnapshotError("snapshot: cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(header), 64);
  std::vector<unsigned char> buf(g.size() * 8);
  for (const auto* c : comps) {
    for (std::size_t i = 0; i < g.size(); ++i) detail::put_le<double>(buf.data() + 8 * i, c->data[i]);
    out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
  }
  if (!out) throw SnapshotError("snapshot: write failed for " + path.string());

  std::ofstream meta(path.string() + ".meta", std::ios::trunc);
  meta << "format=elasto-snapshot-1\n"
       << "n=" << g.n << "\n"
       << "L=" << detail::format_double(g.box_length) << "\n"
       << "components=" << comps.size() << "\n"
       << "time=" << detail::format_double(time) << "\n"
       << "byte_order=little\nlayout=component-major,x1-fastest\n";
  if (!label.empty()) meta << "label=" << label << "\n";
}

inline void write_snapshot(const std::filesystem::path& path, const RealVectorField& u, double time,
                           const std::string& label = "") {
  write_snapshot(path, {&u[0], &u[1], &u[2]}, time, label);
}

struct SnapshotHeader {
  int n = 0;
  int components = 0;
  double box_length = 0.0;
  double time = 0.0;
};

inline SnapshotHeader read_snapshot_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError("snapshot: cannot open " + path.string());
  unsigned char header[64];
  in.read(reinterpret_cast<char*>(header), 64);
  if (in.gcount() != 64) throw SnapshotError("snapshot: truncated header in " + path.string());
  if (std::memcmp(header, detail::kSnapshotMagic, 8) != 0) throw SnapshotError("snapshot: bad magic in " + path.string());
  SnapshotHeader h;
  h.n = detail::get_le<std::int32_t>(header + 8);
  h.components = detail::get_le<std::int32_t>(header + 12);
  h.box_length = detail::get_le<double>(header + 16);
  h.time = detail::get_le<double>(header + 24);
  return h;
}

// Read a snapshot; when `expect` is given, any header field that disagrees is
// listed in the error message.
inline Snapshot read_snapshot(const std::filesystem::path& path, const GridSpec* expect = nullptr,
                              int expect_components = -1) {
  SnapshotHeader h = read_snapshot_header(path);
  std::ostringstream diff;
  if (expect) {
    if (h.n != expect->n) diff << " n: expected " << expect->n << " got " << h.n << ";";
    if (h.box_length != expect->box_length)
      diff << " L: expected " << detail::format_double(expect->box_length) << " got "
           << detail::format_double(h.box_length) << ";";
  }
  if (expect_components >= 0 && h.components != expect_components)
    diff << " components: expected " << expect_components << " got " << h.components << ";";
  if (!diff.str().empty()) throw SnapshotError("snapshot header mismatch in " + path.string() + ":" + diff.str());

  Snapshot s;
  s.grid = GridSpec{h.n, h.box_length};
  try {
    s.grid.validate();
  } catch (const std::invalid_argument& e) {
    throw SnapshotError(std::string("snapshot: invalid header grid: ") + e.what());
  }
  if (h.components < 1 || h.components > 64) throw SnapshotError("snapshot: implausible component count");
  s.time = h.time;

  const std::uintmax_t expected_bytes = 64 + std::uintmax_t(h.components) * s.grid.size() * 8;
  const std::uintmax_t actual = std::filesystem::file_size(path);
  if (actual != expected_bytes)
    throw SnapshotError("snapshot: size mismatch in " + path.string() + ": expected " + std::to_string(expected_bytes) +
                        " bytes got " + std::to_string(actual));

  std::ifstream in(path, std::ios::binary);
  in.seekg(64);
  std::vector<unsigned char> buf(s.grid.size() * 8);
  for (int c = 0; c < h.components; ++c) {
    in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    RealScalarField f(s.grid);
    for (std::size_t i = 0; i < s.grid.size(); ++i) f.data[i] = detail::get_le<double>(buf.data() + 8 * i);
    s.components.push_back(std::move(f));
  }
  return s;
}

inline RealVectorField snapshot_vector(const Snapshot& s, int first = 0) {
  if (int(s.components.size()) < first + 3) throw SnapshotError("snapshot: not enough components for a vector field");
  RealVectorField u;
  u.grid = s.grid;
  for (int c = 0; c < 3; ++c) u[c] = s.components[first + c];
  return u;
}

}  // namespace elasto
