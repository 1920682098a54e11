// SPDX-License-Identifier: Apache-2.0
#include "fastmatch/bitmap.hpp"

namespace fastmatch {

BitmapIndex::BitmapIndex(std::string attribute, std::uint64_t num_blocks, std::size_t num_values)
    : attribute_(std::move(attribute)), num_blocks_(num_blocks) {
  words_.assign(num_values * words_per_value(), 0);
}

std::uint64_t BitmapIndex::popcount(std::uint32_t value) const {
  std::uint64_t n = 0;
  for (std::uint64_t w : words(value)) {
    n += static_cast<std::uint64_t>(std::popcount(w));
  }
  return n;
}

BitmapIndex build_bitmap_index(const Dataset& dataset, std::string_view attribute) {
  const std::size_t a = dataset.attribute_index(attribute);
  BitmapIndex index(std::string(attribute), dataset.block_count(), dataset.dictionaries[a].size());
  const auto& col = dataset.columns[a];
  const std::uint64_t rpb = dataset.rows_per_block;
  for (std::uint64_t row = 0; row < col.size(); ++row) {
    index.set(col[row], row / rpb);
  }
  return index;
}

}  // namespace fastmatch
