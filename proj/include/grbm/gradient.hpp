#pragma once

#include "grbm/model.hpp"

namespace grbm {

// One value per parameter block. Used both for sufficient statistics
// (the expectation of -dE/dtheta under some distribution) and for gradients,
// which are differences of two such statistics.
struct GradientSet {
  Matrix d_w;  // M x N
  Vector d_b;  // M
  Vector d_c;  // N
  double d_sigma = 0.0;

  static GradientSet zeros(Index num_visible, Index num_hidden);
  static GradientSet zeros_like(const GrbmParams& p) {
    return zeros(p.num_visible(), p.num_hidden());
  }

  bool all_finite() const;
  // Largest absolute difference over all blocks.
  double max_abs_diff(const GradientSet& other) const;

  GradientSet& operator+=(const GradientSet& o);
  GradientSet& operator-=(const GradientSet& o);
  GradientSet& operator*=(double s);
};

GradientSet operator-(GradientSet a, const GradientSet& b);
GradientSet operator+(GradientSet a, const GradientSet& b);

// Averages over the rows x of `samples`, with p = P(h = 1 | x):
//   d_b = (x - b) / sigma^2
//   d_c = p
//   d_w = x p^T / sigma^2
//   d_sigma = (||x - b||^2 - 2 x^T W p) / sigma^3
// Evaluated on data this is the positive phase; on model samples it estimates
// the negative phase.
GradientSet phase_statistics(const DataBatch& samples, const GrbmParams& p);

}  // namespace grbm
