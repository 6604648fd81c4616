#pragma once

#include <optional>

#include "grbm/common.hpp"
#include "grbm/rng.hpp"
#include "grbm/whitening.hpp"

namespace grbm {

// Ground truth of a whitened linear mixture x = V A s.
struct BssGroundTruth {
  Matrix mixing;          // A
  WhiteningTransform whitening;
  Matrix unmixing_true;   // U = (V A)^-1
};

struct BssData {
  DataBatch data;  // whitened observations
  BssGroundTruth truth;
};

// Unit-variance Laplacian draw, density exp(-sqrt(2)|s|) / sqrt(2).
double sample_unit_laplacian(Rng& rng);

// n x dims matrix of independent unit-variance Laplacian sources.
DataBatch sample_laplacian_sources(Index n, Index dims, Rng& rng);

// Entries i.i.d. uniform on [-1, 1], redrawn until |det| > min_abs_det.
Matrix random_mixing_matrix(Index dims, Rng& rng, double min_abs_det = 0.1);

// Samples n sources, mixes them with `mixing` (random 2x2 if absent) and
// whitens with PCA fitted on the first `fit_rows` rows (all rows if absent).
// The sources are drawn before the mixing matrix from the same generator.
BssData generate_laplacian_bss(Index n, Rng& rng, std::optional<Matrix> mixing = std::nullopt,
                               std::optional<Index> fit_rows = std::nullopt, Index dims = 2);

}  // namespace grbm
