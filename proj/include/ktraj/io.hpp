#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "ktraj/common.hpp"

namespace ktraj::io {

// Little-endian scalar and array helpers shared by the KTRJ, DSEQ, RPRM and
// OPTM containers. The host is assumed little-endian (checked at startup in
// debug builds); all fields are fixed-width.

inline void write_u16(std::ostream& out, std::uint16_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void write_f64_array(std::ostream& out, const double* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

inline void write_f32_array(std::ostream& out, const float* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
}

inline std::uint16_t read_u16(std::istream& in, const std::string& err) {
  std::uint16_t v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) throw IoError(err);
  return v;
}

inline std::uint32_t read_u32(std::istream& in, const std::string& err) {
  std::uint32_t v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) throw IoError(err);
  return v;
}

inline std::uint64_t read_u64(std::istream& in, const std::string& err) {
  std::uint64_t v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) throw IoError(err);
  return v;
}

inline void read_f64_array(std::istream& in, double* data, std::size_t n, const std::string& err) {
  if (!in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double))))
    throw IoError(err);
}

inline void read_f32_array(std::istream& in, float* data, std::size_t n, const std::string& err) {
  if (!in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(float))))
    throw IoError(err);
}

}  // namespace ktraj::io
