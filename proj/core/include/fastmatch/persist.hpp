// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "fastmatch/bitmap.hpp"
#include "fastmatch/dataset.hpp"

namespace fastmatch {

/// A dataset together with the bitmap indexes built for it.
struct StoredDataset {
  Dataset dataset;
  std::vector<BitmapIndex> indexes;

  /// Index for `attribute`, or nullptr.
  const BitmapIndex* index_for(std::string_view attribute) const;
  /// Returns the stored index or builds one on the fly.
  BitmapIndex index_or_build(std::string_view attribute) const;

  friend bool operator==(const StoredDataset&, const StoredDataset&) = default;
};

// File layout, all integers little-endian fixed width:
//   magic "FMDS" | u32 version | u32 rows_per_block | u64 shuffle_seed
//   u64 row_count | u32 attribute_count
//   per attribute: str name | u32 dict_size | dict_size x str
//   per attribute: row_count x u32 codes
//   u32 index_count
//   per index: u32 attribute position | u64 num_blocks | u32 num_values | words x u64
// where str is u32 length followed by raw bytes.
inline constexpr std::uint32_t kDatasetFormatVersion = 1;

/// Throws IoError.
void save_dataset(const std::filesystem::path& path, const Dataset& dataset,
                  const std::vector<BitmapIndex>& indexes);

/// Throws IoError or CorruptFile.
StoredDataset load_dataset(const std::filesystem::path& path);

}  // namespace fastmatch
