#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "groundkit/detail/bytes.hpp"
#include "groundkit/errors.hpp"
#include "groundkit/matrix.hpp"

namespace groundkit {

/// Flat binary tensor container used for parameter and fixture files.
/// Layout, little-endian: magic "TNSR" | u32 rank | rank x u32 dims |
/// product(dims) x f64 row-major payload.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<double> values;

  std::uint64_t element_count() const {
    std::uint64_t n = 1;
    for (std::uint32_t d : dims) n *= d;
    return n;
  }
};

inline void write_tensor(const std::string& path, const Tensor& t) {
  if (t.element_count() != t.values.size())
    throw IoError("tensor payload does not match its dims");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write tensor file: " + path);
  detail::put_bytes(out, "TNSR", 4);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
  for (std::uint32_t d : t.dims) detail::write_le<std::uint32_t>(out, d);
  for (double v : t.values) detail::write_f64_le(out, v);
  if (!out) throw IoError("short write to tensor file: " + path);
}

inline Tensor read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open tensor file: " + path);
  char magic[4];
  detail::get_bytes(in, magic, 4);
  if (std::string_view(magic, 4) != "TNSR")
    throw IoError("bad magic in tensor file: " + path);
  std::uint32_t rank = detail::read_le<std::uint32_t>(in);
  if (rank > 8) throw IoError("tensor rank " + std::to_string(rank) + " unreasonably large");
  Tensor t;
  t.dims.resize(rank);
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.dims[i] = detail::read_le<std::uint32_t>(in);
    count *= t.dims[i];
    if (count > (1ull << 32)) throw IoError("tensor too large: " + path);
  }
  t.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) t.values[i] = detail::read_f64_le(in);
  return t;
}

inline Tensor to_tensor(const Matrix& m) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)};
  t.values = m.data;
  return t;
}

inline Matrix to_matrix(const Tensor& t) {
  if (t.dims.size() != 2) throw IoError("tensor is not rank 2");
  Matrix m(t.dims[0], t.dims[1]);
  m.data = t.values;
  return m;
}

}  // namespace groundkit
