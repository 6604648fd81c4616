#pragma once

#include <vector>

#include "grbm/common.hpp"
#include "grbm/rng.hpp"

namespace grbm {

// Grayscale image, one pixel per entry.
using Image = RowMatrix;

// `count` size x size patches with uniformly random top-left corners,
// flattened row-major.
DataBatch extract_patches(const Image& image, Index size, Index count, Rng& rng);

// As above, drawing the source image uniformly for every patch.
DataBatch extract_patches(const std::vector<Image>& images, Index size, Index count, Rng& rng);

struct Split {
  DataBatch train;
  DataBatch test;
};

// Shuffled disjoint split; the training part gets round(fraction * L) rows.
Split split(const DataBatch& d, double fraction, Rng& rng);

}  // namespace grbm
