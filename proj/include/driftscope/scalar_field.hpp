#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftscope/binary_io.hpp"
#include "driftscope/dataset.hpp"
#include "driftscope/errors.hpp"

namespace driftscope {

enum class FieldKind { particle_separation, diffusion_separation, distance, density, opacity };

inline const char* to_string(FieldKind k) {
  switch (k) {
    case FieldKind::particle_separation: return "particle-separation";
    case FieldKind::diffusion_separation: return "diffusion-separation";
    case FieldKind::distance: return "distance";
    case FieldKind::density: return "density";
    case FieldKind::opacity: return "opacity";
  }
  return "?";
}

/// One value per particle plus the parameters that produced it.
struct ScalarField {
  std::vector<double> values;
  FieldKind kind = FieldKind::distance;
  std::optional<Direction> direction;
  std::optional<double> scale;
  std::optional<std::size_t> neighbors;
  std::optional<std::size_t> time_index;
  std::vector<std::size_t> sources;

  std::size_t size() const { return values.size(); }

  nlohmann::json metadata() const {
    nlohmann::json j;
    j["n"] = values.size();
    j["kind"] = to_string(kind);
    if (direction) j["direction"] = to_string(*direction);
    if (scale) j["scale"] = *scale;
    if (neighbors) j["k"] = *neighbors;
    if (time_index) j["time_index"] = *time_index;
    if (!sources.empty()) j["sources"] = sources;
    return j;
  }
};

/// DGSF: magic "DGSF", u64 n, f32 values[n].
inline void write_field(const ScalarField& f, std::ostream& out) {
  binary::write_magic(out, "DGSF");
  binary::write_le<std::uint64_t>(out, f.values.size());
  for (double v : f.values) binary::write_le<float>(out, static_cast<float>(v));
  if (!out) throw Error("failed writing field stream");
}

inline std::vector<double> read_field_values(std::istream& in) {
  binary::expect_magic(in, "DGSF");
  const auto n = binary::read_le<std::uint64_t>(in, "field size");
  if (n > (std::uint64_t{1} << 40)) throw CorruptionError("implausible DGSF size");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = binary::read_le<float>(in, "field values");
  binary::expect_end(in);
  return v;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& field_path) {
  return std::filesystem::path(field_path.string() + ".json");
}

/// Writes the DGSF file and its JSON metadata sidecar (`<path>.json`).
inline void write_field(const ScalarField& f, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    write_field(f, out);
  }
  std::ofstream side(sidecar_path(path));
  if (!side) throw Error("cannot open '" + sidecar_path(path).string() + "' for writing");
  side << f.metadata().dump(2) << '\n';
}

inline std::vector<double> read_field_values(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return read_field_values(in);
}

}  // namespace driftscope
