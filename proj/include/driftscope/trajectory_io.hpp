#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "driftscope/binary_io.hpp"
#include "driftscope/dataset.hpp"
#include "driftscope/errors.hpp"

namespace driftscope {

/// Storage width of positions in a PTRJ file. Version 1 files hold f32
/// positions; version 2 is identical except for f64 positions.
enum class PositionPrecision { f32, f64 };

inline void write_trajectories(const TrajectoryDataset& ds, std::ostream& out,
                               PositionPrecision precision = PositionPrecision::f32) {
  binary::write_magic(out, "PTRJ");
  binary::write_le<std::uint32_t>(out, precision == PositionPrecision::f32 ? 1u : 2u);
  binary::write_le<std::uint64_t>(out, ds.size());
  binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.steps()));
  binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.dim()));
  for (double t : ds.times()) binary::write_le<double>(out, t);
  for (double v : ds.positions()) {
    if (precision == PositionPrecision::f32)
      binary::write_le<float>(out, static_cast<float>(v));
    else
      binary::write_le<double>(out, v);
  }
  if (!out) throw Error("failed writing trajectory stream");
}

inline TrajectoryDataset load_trajectories(std::istream& in) {
  binary::expect_magic(in, "PTRJ");
  const auto version = binary::read_le<std::uint32_t>(in, "version");
  if (version != 1 && version != 2) throw FormatError("unsupported PTRJ version " + std::to_string(version));
  const auto n = binary::read_le<std::uint64_t>(in, "particle count");
  const auto T = binary::read_le<std::uint32_t>(in, "step count");
  const auto d = binary::read_le<std::uint32_t>(in, "dimension");
  if (d != 2 && d != 3) throw CorruptionError("PTRJ header has dimension " + std::to_string(d));
  if (n == 0 || T < 2) throw CorruptionError("PTRJ header has an empty particle or time axis");
  if (n > std::numeric_limits<std::uint64_t>::max() / (std::uint64_t{T} * d * 8))
    throw CorruptionError("PTRJ header counts overflow");

  std::vector<double> times(T);
  for (auto& t : times) t = binary::read_le<double>(in, "times");
  std::vector<double> pos(static_cast<std::size_t>(n) * T * d);
  for (auto& v : pos)
    v = version == 1 ? static_cast<double>(binary::read_le<float>(in, "positions")) : binary::read_le<double>(in, "positions");
  binary::expect_end(in);
  return TrajectoryDataset(static_cast<std::size_t>(n), d, std::move(times), std::move(pos));
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  return out;
}

inline double parse_number(const std::string& s, std::size_t line_no) {
  double v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty())
    throw FormatError("CSV line " + std::to_string(line_no) + ": cannot parse '" + s + "' as a number");
  return v;
}

}  // namespace detail

/// Reads `id,t,x,y[,z]` rows, one per particle per time step. Particles are
/// ordered by ascending id; every particle must carry the same set of times.
inline TrajectoryDataset load_trajectories_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty CSV input");
  const auto header = detail::split_csv_line(line);
  const std::vector<std::string> h2{"id", "t", "x", "y"}, h3{"id", "t", "x", "y", "z"};
  std::size_t d = 0;
  if (header == h2)
    d = 2;
  else if (header == h3)
    d = 3;
  else
    throw FormatError("CSV header must be id,t,x,y or id,t,x,y,z");

  struct Sample {
    double t;
    std::array<double, 3> p;
  };
  std::map<long long, std::vector<Sample>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != d + 2)
      throw FormatError("CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) + " fields");
    const double id_value = detail::parse_number(cells[0], line_no);
    if (id_value != std::floor(id_value)) throw FormatError("CSV line " + std::to_string(line_no) + ": non-integer id");
    Sample s{detail::parse_number(cells[1], line_no), {0, 0, 0}};
    for (std::size_t c = 0; c < d; ++c) s.p[c] = detail::parse_number(cells[2 + c], line_no);
    rows[static_cast<long long>(id_value)].push_back(s);
  }
  if (rows.empty()) throw FormatError("CSV contains no samples");

  for (auto& [id, samples] : rows)
    std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.t < b.t; });
  const auto& ref = rows.begin()->second;
  std::vector<double> times;
  for (const auto& s : ref) times.push_back(s.t);
  for (const auto& [id, samples] : rows) {
    if (samples.size() != ref.size())
      throw CorruptionError("particle " + std::to_string(id) + " has " + std::to_string(samples.size()) +
                            " samples, expected " + std::to_string(ref.size()));
    for (std::size_t k = 0; k < samples.size(); ++k)
      if (samples[k].t != times[k])
        throw CorruptionError("particle " + std::to_string(id) + " does not share the common time axis");
  }

  const std::size_t T = times.size();
  std::vector<double> pos;
  pos.reserve(rows.size() * T * d);
  for (const auto& [id, samples] : rows)
    for (const auto& s : samples) pos.insert(pos.end(), s.p.begin(), s.p.begin() + static_cast<std::ptrdiff_t>(d));
  return TrajectoryDataset(rows.size(), d, std::move(times), std::move(pos));
}

inline void write_trajectories(const TrajectoryDataset& ds, const std::filesystem::path& path,
                               PositionPrecision precision = PositionPrecision::f32) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_trajectories(ds, out, precision);
}

/// Loads a PTRJ file, or a CSV file when the extension is .csv.
inline TrajectoryDataset load_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".csv") return load_trajectories_csv(in);
  return load_trajectories(in);
}

}  // namespace driftscope
