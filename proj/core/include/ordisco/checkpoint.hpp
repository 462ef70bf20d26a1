#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "ordisco/errors.hpp"
#include "ordisco/types.hpp"

namespace ordisco::ckpt {

// Little-endian binary primitives shared by checkpoint writers/readers.

inline void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw DataError("checkpoint truncated (u64)");
  }
  return v;
}

inline void write_i64(std::ostream& os, std::int64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::int64_t read_i64(std::istream& is) {
  std::int64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw DataError("checkpoint truncated (i64)");
  }
  return v;
}

inline void write_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline double read_f64(std::istream& is) {
  double v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw DataError("checkpoint truncated (f64)");
  }
  return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
  const auto n = read_u64(is);
  std::string s(n, '\0');
  if (!is.read(s.data(), static_cast<std::streamsize>(n))) {
    throw DataError("checkpoint truncated (string)");
  }
  return s;
}

inline void write_doubles(std::ostream& os, const std::vector<double>& v) {
  write_u64(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline std::vector<double> read_doubles(std::istream& is) {
  const auto n = read_u64(is);
  std::vector<double> v(n);
  if (!is.read(reinterpret_cast<char*>(v.data()),
               static_cast<std::streamsize>(n * sizeof(double)))) {
    throw DataError("checkpoint truncated (doubles)");
  }
  return v;
}

inline void write_eigen(std::ostream& os, const Eigen::VectorXd& v) {
  write_u64(os, static_cast<std::uint64_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(static_cast<std::size_t>(v.size()) * sizeof(double)));
}

inline Eigen::VectorXd read_eigen(std::istream& is) {
  const auto n = read_u64(is);
  Eigen::VectorXd v(static_cast<long>(n));
  if (!is.read(reinterpret_cast<char*>(v.data()),
               static_cast<std::streamsize>(n * sizeof(double)))) {
    throw DataError("checkpoint truncated (vector)");
  }
  return v;
}

inline void write_sample(std::ostream& os, const Sample& s) {
  write_i64(os, s.label);
  write_i64(os, s.source_index);
  write_u64(os, s.image.size());
  os.write(reinterpret_cast<const char*>(s.image.data()),
           static_cast<std::streamsize>(s.image.size() * sizeof(float)));
}

inline Sample read_sample(std::istream& is) {
  Sample s;
  s.label = static_cast<int>(read_i64(is));
  s.source_index = static_cast<int>(read_i64(is));
  const auto n = read_u64(is);
  s.image.resize(n);
  if (!is.read(reinterpret_cast<char*>(s.image.data()),
               static_cast<std::streamsize>(n * sizeof(float)))) {
    throw DataError("checkpoint truncated (sample)");
  }
  return s;
}

inline void write_samples(std::ostream& os, const std::vector<Sample>& v) {
  write_u64(os, v.size());
  for (const auto& s : v) write_sample(os, s);
}

inline std::vector<Sample> read_samples(std::istream& is) {
  const auto n = read_u64(is);
  std::vector<Sample> v;
  v.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) v.push_back(read_sample(is));
  return v;
}

}  // namespace ordisco::ckpt
