// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fastmatch/dataset.hpp"

namespace fastmatch {

/// One bit per block per attribute value: bit (v, b) is set iff block b holds
/// at least one row whose code is v.
class BitmapIndex {
 public:
  BitmapIndex() = default;
  BitmapIndex(std::string attribute, std::uint64_t num_blocks, std::size_t num_values);

  const std::string& attribute() const noexcept { return attribute_; }
  std::uint64_t num_blocks() const noexcept { return num_blocks_; }
  std::size_t num_values() const noexcept { return words_.size() / words_per_value(); }
  std::size_t words_per_value() const noexcept {
    return num_blocks_ == 0 ? 1 : static_cast<std::size_t>((num_blocks_ + 63) / 64);
  }

  bool test(std::uint32_t value, std::uint64_t block) const {
    return (words(value)[block >> 6] >> (block & 63)) & 1u;
  }
  void set(std::uint32_t value, std::uint64_t block) {
    words_[value * words_per_value() + (block >> 6)] |= std::uint64_t{1} << (block & 63);
  }
  std::span<const std::uint64_t> words(std::uint32_t value) const {
    return {words_.data() + value * words_per_value(), words_per_value()};
  }
  /// Number of blocks containing `value`.
  std::uint64_t popcount(std::uint32_t value) const;

  std::span<const std::uint64_t> raw_words() const noexcept { return words_; }
  std::span<std::uint64_t> raw_words() noexcept { return words_; }

  friend bool operator==(const BitmapIndex&, const BitmapIndex&) = default;

 private:
  std::string attribute_;
  std::uint64_t num_blocks_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Throws UnknownAttribute.
BitmapIndex build_bitmap_index(const Dataset& dataset, std::string_view attribute);

}  // namespace fastmatch
