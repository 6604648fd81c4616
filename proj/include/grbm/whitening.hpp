#pragma once

#include <string_view>

#include "grbm/common.hpp"

namespace grbm {

enum class WhiteningKind { pca, zca };

std::string_view whitening_kind_name(WhiteningKind k);
WhiteningKind parse_whitening_kind(std::string_view name);

// Rows are whitened as V (x - mean). With the sample covariance
// <(x - mean)(x - mean)^T> = E D E^T (1/L normalization):
//   PCA: V = D^(-1/2) E^T     (components ordered by decreasing variance)
//   ZCA: V = E D^(-1/2) E^T
struct WhiteningTransform {
  Vector mean;
  Matrix forward;
  Matrix inverse;
  WhiteningKind kind = WhiteningKind::pca;

  Index dims() const { return mean.size(); }
};

// Eigenvalues below this make the covariance count as rank deficient.
inline constexpr double kEigenvalueFloor = 1e-8;

WhiteningTransform fit_whitening(const DataBatch& d, WhiteningKind kind);
WhiteningTransform pca_whitening(const DataBatch& d);
WhiteningTransform zca_whitening(const DataBatch& d);

DataBatch apply_whitening(const WhiteningTransform& t, const DataBatch& d);
DataBatch invert_whitening(const WhiteningTransform& t, const DataBatch& d);

// Sample covariance with 1/L normalization.
Matrix sample_covariance(const DataBatch& d);

}  // namespace grbm
