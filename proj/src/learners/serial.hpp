#pragma once

// Eigen / container encoders shared by the learner state codecs.

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "eocl/byte_io.hpp"
#include "eocl/error.hpp"

namespace eocl::serial {

inline void put(ByteWriter& w, const Eigen::VectorXd& v) {
  w.u64(static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) w.f64(v[i]);
}

inline void put(ByteWriter& w, const Eigen::MatrixXd& m) {
  w.u64(static_cast<std::uint64_t>(m.rows()));
  w.u64(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) w.f64(m(i, j));
}

inline void put(ByteWriter& w, const std::vector<Eigen::VectorXd>& vs) {
  w.u64(vs.size());
  for (const auto& v : vs) put(w, v);
}

inline void put(ByteWriter& w, const std::vector<std::uint64_t>& vs) {
  w.u64(vs.size());
  for (auto v : vs) w.u64(v);
}

inline void put(ByteWriter& w, const std::vector<double>& vs) {
  w.u64(vs.size());
  for (auto v : vs) w.f64(v);
}

inline std::uint64_t count(ByteReader& r, std::uint64_t expected) {
  const auto n = r.u64();
  if (n != expected)
    throw FormatError("length " + std::to_string(n) + " where " + std::to_string(expected) +
                          " was expected",
                      r.offset());
  return n;
}

inline Eigen::VectorXd get_vector(ByteReader& r, std::uint64_t dim) {
  count(r, dim);
  r.require(dim * 8);
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = r.f64();
  return v;
}

inline Eigen::MatrixXd get_matrix(ByteReader& r, std::uint64_t rows, std::uint64_t cols) {
  count(r, rows);
  count(r, cols);
  r.require(rows * cols * 8);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = r.f64();
  return m;
}

inline std::vector<Eigen::VectorXd> get_vectors(ByteReader& r, std::uint64_t n, std::uint64_t dim) {
  count(r, n);
  std::vector<Eigen::VectorXd> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(get_vector(r, dim));
  return out;
}

inline std::vector<std::uint64_t> get_u64s(ByteReader& r, std::uint64_t n) {
  count(r, n);
  r.require(n * 8);
  std::vector<std::uint64_t> out(n);
  for (auto& v : out) v = r.u64();
  return out;
}

inline std::vector<double> get_f64s(ByteReader& r, std::uint64_t n) {
  count(r, n);
  r.require(n * 8);
  std::vector<double> out(n);
  for (auto& v : out) v = r.f64();
  return out;
}

}  // namespace eocl::serial
