#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "driftscope/binary_io.hpp"
#include "driftscope/diffusion.hpp"
#include "driftscope/errors.hpp"

namespace driftscope {

/// DGEM cache: magic "DGEM", u32 version = 1, u64 n, u32 m, f64 eigenvalues[m],
/// f64 stationary[n], f32 eigenvectors[n*m] particle-major.
inline void write_embedding(const DiffusionEmbedding& E, std::ostream& out) {
  binary::write_magic(out, "DGEM");
  binary::write_le<std::uint32_t>(out, 1);
  binary::write_le<std::uint64_t>(out, E.size());
  binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(E.modes()));
  for (double v : E.eigenvalues) binary::write_le<double>(out, v);
  for (double v : E.stationary) binary::write_le<double>(out, v);
  const double* u = E.eigenvectors.data();
  for (Eigen::Index q = 0; q < E.eigenvectors.size(); ++q) binary::write_le<float>(out, static_cast<float>(u[q]));
  if (!out) throw Error("failed writing embedding stream");
}

inline DiffusionEmbedding read_embedding(std::istream& in) {
  binary::expect_magic(in, "DGEM");
  const auto version = binary::read_le<std::uint32_t>(in, "version");
  if (version != 1) throw FormatError("unsupported DGEM version " + std::to_string(version));
  const auto n = binary::read_le<std::uint64_t>(in, "particle count");
  const auto m = binary::read_le<std::uint32_t>(in, "mode count");
  if (n == 0 || m == 0) throw CorruptionError("DGEM header has an empty axis");
  if (n > (std::uint64_t{1} << 40) / m) throw CorruptionError("implausible DGEM size");
  DiffusionEmbedding E;
  E.eigenvalues.resize(m);
  for (auto& v : E.eigenvalues) v = binary::read_le<double>(in, "eigenvalues");
  E.stationary.resize(static_cast<std::size_t>(n));
  for (auto& v : E.stationary) v = binary::read_le<double>(in, "stationary distribution");
  E.eigenvectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  double* u = E.eigenvectors.data();
  for (Eigen::Index q = 0; q < E.eigenvectors.size(); ++q) u[q] = binary::read_le<float>(in, "eigenvectors");
  binary::expect_end(in);
  return E;
}

inline void write_embedding(const DiffusionEmbedding& E, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_embedding(E, out);
}

inline DiffusionEmbedding read_embedding(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return read_embedding(in);
}

}  // namespace driftscope
