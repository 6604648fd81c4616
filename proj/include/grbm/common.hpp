#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace grbm {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
// Column-major: columns (one per hidden unit) are contiguous.
using Matrix = Eigen::MatrixXd;
// Row-major sample matrix, one observation per row (L x M).
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using DataBatch = RowMatrix;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated preconditions: shape mismatch, out-of-range arguments.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Exact enumeration requested above the configured hidden-unit cap.
class EnumerationError : public Error {
 public:
  using Error::Error;
};

// Input data that cannot be processed (singular, degenerate, unreadable).
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced by a numeric routine.
class NumericError : public Error {
 public:
  using Error::Error;
};

inline std::span<const double> row_span(const RowMatrix& m, Index row) {
  return {m.data() + row * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline std::span<double> row_span(RowMatrix& m, Index row) {
  return {m.data() + row * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline std::span<const double> col_span(const Matrix& m, Index col) {
  return {m.data() + col * m.rows(), static_cast<std::size_t>(m.rows())};
}

inline std::span<double> col_span(Matrix& m, Index col) {
  return {m.data() + col * m.rows(), static_cast<std::size_t>(m.rows())};
}

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

inline std::span<double> as_span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// ln(1 + e^a) without overflow.
inline double softplus(double a) {
  return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
}

inline double logistic(double a) { return 1.0 / (1.0 + std::exp(-a)); }

inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

// Streaming log-sum-exp with a running maximum.
class LogSumExp {
 public:
  void add(double v) {
    if (v == -std::numeric_limits<double>::infinity()) return;
    if (v <= max_) {
      sum_ += std::exp(v - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - v) + 1.0;
      max_ = v;
    }
  }
  double value() const {
    return sum_ == 0.0 ? -std::numeric_limits<double>::infinity() : max_ + std::log(sum_);
  }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

inline double log_sum_exp(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

inline constexpr double kLog2Pi = 1.8378770664093454836;

}  // namespace grbm
