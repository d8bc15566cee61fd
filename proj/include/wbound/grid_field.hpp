#pragma once

// Scalar fields sampled at the cell centers of a regular m^d grid.

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wbound/geometry.hpp"

namespace wbound {

class ScalarGridField {
 public:
  ScalarGridField() = default;
  ScalarGridField(Box box, int m) : box_(std::move(box)), m_(m) {
    if (m < 1) throw std::invalid_argument("ScalarGridField: m must be >= 1");
    std::size_t n = 1;
    for (int i = 0; i < box_.dim(); ++i) n *= static_cast<std::size_t>(m);
    values_.assign(n, 0.0);
  }
  ScalarGridField(Box box, int m, std::vector<double> values) : ScalarGridField(std::move(box), m) {
    if (values.size() != values_.size()) throw std::invalid_argument("ScalarGridField: value count must be m^d");
    for (double v : values)
      if (!std::isfinite(v)) throw std::invalid_argument("ScalarGridField: non-finite value");
    values_ = std::move(values);
  }

  const Box& box() const { return box_; }
  int dim() const { return box_.dim(); }
  int m() const { return m_; }
  double spacing() const { return box_.side() / m_; }
  double cell_volume() const { return std::pow(spacing(), dim()); }
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  /// Row-major multi-index of cell k.
  void multi_index(std::size_t k, std::vector<int>& idx) const {
    idx.resize(dim());
    for (int i = dim() - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(k % m_);
      k /= m_;
    }
  }

  std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int i = axis + 1; i < dim(); ++i) s *= static_cast<std::size_t>(m_);
    return s;
  }

  std::vector<double> cell_center(std::size_t k) const {
    std::vector<int> idx;
    multi_index(k, idx);
    std::vector<double> x(dim());
    for (int i = 0; i < dim(); ++i) x[i] = box_.lower(i) + (idx[i] + 0.5) * spacing();
    return x;
  }

  double integral() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s * cell_volume();
  }

  double mean() const { return integral() / box_.volume(); }

  double max_abs() const {
    double s = 0.0;
    for (double v : values_) s = std::max(s, std::abs(v));
    return s;
  }

 private:
  Box box_;
  int m_ = 1;
  std::vector<double> values_;
};

/// Text dump: header "d m L", then the m^d values in row-major order.
inline void write_grid_field(std::ostream& os, const ScalarGridField& f) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%d %d %.17g\n", f.dim(), f.m(), f.box().side());
  os << buf;
  for (double v : f.values()) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    os << buf;
  }
}

inline ScalarGridField read_grid_field(std::istream& is) {
  int d = 0, m = 0;
  double L = 0.0;
  if (!(is >> d >> m >> L)) throw std::runtime_error("grid field: bad header");
  ScalarGridField f(Box(d, L), m);
  for (auto& v : f.values())
    if (!(is >> v)) throw std::runtime_error("grid field: truncated");
  return f;
}

}  // namespace wbound
