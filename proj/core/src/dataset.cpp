// SPDX-License-Identifier: Apache-2.0
#include "fastmatch/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "fastmatch/error.hpp"
#include "fastmatch/random.hpp"

namespace fastmatch {

std::uint32_t Dictionary::encode(std::string_view value) {
  auto [it, inserted] = codes_.try_emplace(std::string(value), static_cast<std::uint32_t>(values_.size()));
  if (inserted) {
    values_.emplace_back(value);
  }
  return it->second;
}

std::optional<std::uint32_t> Dictionary::find(std::string_view value) const {
  auto it = codes_.find(std::string(value));
  if (it == codes_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::pair<std::uint64_t, std::uint64_t> Dataset::block_rows(std::uint64_t block) const {
  const std::uint64_t begin = block * rows_per_block;
  return {begin, std::min(begin + rows_per_block, row_count())};
}

std::size_t Dataset::attribute_index(std::string_view name) const {
  auto it = std::find(schema.begin(), schema.end(), name);
  if (it == schema.end()) {
    throw Error(ErrorCode::UnknownAttribute, "unknown attribute '" + std::string(name) + "'");
  }
  return static_cast<std::size_t>(it - schema.begin());
}

bool Dataset::has_attribute(std::string_view name) const {
  return std::find(schema.begin(), schema.end(), name) != schema.end();
}

std::size_t Dataset::add_attribute(std::string name) {
  if (has_attribute(name)) {
    throw Error(ErrorCode::SchemaMismatch, "duplicate attribute '" + name + "'");
  }
  schema.push_back(std::move(name));
  dictionaries.emplace_back();
  columns.emplace_back();
  return schema.size() - 1;
}

void Dataset::validate() const {
  if (rows_per_block == 0) {
    throw Error(ErrorCode::CorruptFile, "rows_per_block must be positive");
  }
  if (dictionaries.size() != schema.size() || columns.size() != schema.size()) {
    throw Error(ErrorCode::CorruptFile, "schema, dictionaries and columns disagree in size");
  }
  const std::uint64_t n = row_count();
  for (std::size_t a = 0; a < columns.size(); ++a) {
    if (columns[a].size() != n) {
      throw Error(ErrorCode::CorruptFile, "column '" + schema[a] + "' has the wrong length");
    }
    const std::size_t dict_size = dictionaries[a].size();
    for (std::uint32_t code : columns[a]) {
      if (code >= dict_size) {
        throw Error(ErrorCode::CorruptFile, "column '" + schema[a] + "' holds an unknown code");
      }
    }
  }
}

BlockSlice read_block(const Dataset& dataset, std::uint64_t block, std::span<const std::size_t> attributes) {
  if (block >= dataset.block_count()) {
    throw Error(ErrorCode::OutOfRange, "block " + std::to_string(block) + " out of range");
  }
  const auto [begin, end] = dataset.block_rows(block);
  BlockSlice slice;
  slice.block = block;
  slice.first_row = begin;
  slice.columns.reserve(attributes.size());
  for (std::size_t a : attributes) {
    const auto& col = dataset.columns.at(a);
    slice.columns.emplace_back(col.data() + begin, end - begin);
  }
  return slice;
}

Dataset shuffle(Dataset dataset, std::uint64_t seed) {
  const std::uint64_t n = dataset.row_count();
  std::vector<std::uint64_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::uint64_t{0});
  Rng rng(seed);
  for (std::uint64_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.uniform_below(i)]);
  }
  for (auto& col : dataset.columns) {
    std::vector<std::uint32_t> out(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      out[i] = col[perm[i]];
    }
    col = std::move(out);
  }
  dataset.shuffle_seed = seed;
  return dataset;
}

}  // namespace fastmatch
