// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fastmatch {

/// Bidirectional map between raw attribute values and dense codes. Codes are
/// handed out in first-appearance order.
class Dictionary {
 public:
  std::uint32_t encode(std::string_view value);
  std::optional<std::uint32_t> find(std::string_view value) const;
  const std::string& decode(std::uint32_t code) const { return values_.at(code); }
  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<std::string>& values() const noexcept { return values_; }

  friend bool operator==(const Dictionary& a, const Dictionary& b) { return a.values_ == b.values_; }

 private:
  std::vector<std::string> values_;
  std::unordered_map<std::string, std::uint32_t> codes_;
};

/// Dictionary-encoded columnar table partitioned into fixed-size blocks.
/// Block b covers rows [b * rows_per_block, min((b + 1) * rows_per_block, N)).
struct Dataset {
  static constexpr std::uint32_t kDefaultRowsPerBlock = 256;

  std::vector<std::string> schema;
  std::vector<Dictionary> dictionaries;
  std::vector<std::vector<std::uint32_t>> columns;
  std::uint32_t rows_per_block = kDefaultRowsPerBlock;
  std::uint64_t shuffle_seed = 0;

  std::uint64_t row_count() const noexcept { return columns.empty() ? 0 : columns.front().size(); }
  std::uint64_t block_count() const noexcept {
    return (row_count() + rows_per_block - 1) / rows_per_block;
  }
  std::pair<std::uint64_t, std::uint64_t> block_rows(std::uint64_t block) const;

  /// Throws UnknownAttribute.
  std::size_t attribute_index(std::string_view name) const;
  bool has_attribute(std::string_view name) const;

  /// Adds an empty attribute and returns its index.
  std::size_t add_attribute(std::string name);

  /// Checks the column/dictionary invariants; throws CorruptFile on failure.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Code vectors for some attributes over one block's row range.
struct BlockSlice {
  std::uint64_t block = 0;
  std::uint64_t first_row = 0;
  std::vector<std::span<const std::uint32_t>> columns;

  std::size_t size() const noexcept { return columns.empty() ? 0 : columns.front().size(); }
};

/// Throws OutOfRange for a block index past the end.
BlockSlice read_block(const Dataset& dataset, std::uint64_t block, std::span<const std::size_t> attributes);

/// Permutes all columns by one Fisher-Yates permutation drawn from `seed`.
Dataset shuffle(Dataset dataset, std::uint64_t seed);

}  // namespace fastmatch
