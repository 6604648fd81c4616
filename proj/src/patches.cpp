#include "grbm/patches.hpp"

#include <numeric>

namespace grbm {

namespace {

void copy_patch(const Image& image, Index top, Index left, Index size, DataBatch& out, Index row) {
  for (Index r = 0; r < size; ++r) {
    for (Index c = 0; c < size; ++c) out(row, r * size + c) = image(top + r, left + c);
  }
}

void check_patch_fits(const Image& image, Index size) {
  if (size < 1) throw ContractError("patch size must be positive");
  if (image.rows() < size || image.cols() < size) {
    throw DataError("image (" + std::to_string(image.rows()) + "x" +
                    std::to_string(image.cols()) + ") is smaller than the patch size " +
                    std::to_string(size));
  }
}

}  // namespace

DataBatch extract_patches(const Image& image, Index size, Index count, Rng& rng) {
  return extract_patches(std::vector<Image>{image}, size, count, rng);
}

DataBatch extract_patches(const std::vector<Image>& images, Index size, Index count, Rng& rng) {
  if (images.empty()) throw ContractError("no images to extract patches from");
  if (count < 1) throw ContractError("patch count must be positive");
  for (const auto& img : images) check_patch_fits(img, size);
  DataBatch out(count, size * size);
  for (Index k = 0; k < count; ++k) {
    const Image& img =
        images.size() == 1 ? images.front() : images[rng.below(images.size())];
    const auto top = static_cast<Index>(rng.below(static_cast<std::uint64_t>(img.rows() - size + 1)));
    const auto left = static_cast<Index>(rng.below(static_cast<std::uint64_t>(img.cols() - size + 1)));
    copy_patch(img, top, left, size, out, k);
  }
  return out;
}

Split split(const DataBatch& d, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ContractError("split fraction must be in (0, 1)");
  const Index rows = d.rows();
  std::vector<Index> order(static_cast<std::size_t>(rows));
  std::iota(order.begin(), order.end(), Index{0});
  for (Index i = rows - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  const auto n_train = static_cast<Index>(std::llround(fraction * static_cast<double>(rows)));
  Split out;
  out.train.resize(n_train, d.cols());
  out.test.resize(rows - n_train, d.cols());
  for (Index r = 0; r < n_train; ++r) out.train.row(r) = d.row(order[r]);
  for (Index r = n_train; r < rows; ++r) out.test.row(r - n_train) = d.row(order[r]);
  return out;
}

}  // namespace grbm
