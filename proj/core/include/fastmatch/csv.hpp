// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fastmatch/dataset.hpp"

namespace fastmatch {

enum class NaPolicy {
  Drop,  ///< rows with an empty or N/A-like value in any schema attribute are dropped
  Keep,  ///< such values are encoded like any other string
};

/// Maps a numeric column to half-open bins [e_i, e_{i+1}). Values below the
/// first edge or at/above the last one fall into two open-ended bins.
struct BinSpec {
  std::string attribute;
  std::vector<double> edges;

  /// Parses "attr=e0,e1,...,en" with strictly increasing edges.
  static BinSpec parse(const std::string& text);
  /// Bin label for a numeric value.
  std::string label(double value) const;
};

struct IngestOptions {
  /// Attributes to keep, by header name; empty keeps every column.
  std::vector<std::string> schema;
  /// False when the file has no header row; `schema` then names the columns.
  bool header = true;
  NaPolicy na_policy = NaPolicy::Drop;
  std::vector<BinSpec> bins;
  char delimiter = ',';
  std::uint32_t rows_per_block = Dataset::kDefaultRowsPerBlock;
};

struct IngestResult {
  Dataset dataset;
  std::uint64_t dropped_rows = 0;
};

/// True for the spellings treated as missing under NaPolicy::Drop.
bool is_missing_value(std::string_view value);

/// Splits one CSV record, honoring double-quoted fields with "" escapes.
/// Returns false if the record ends inside an open quote.
bool split_csv_record(std::string_view line, char delimiter, std::vector<std::string>& fields);

/// Reads a CSV file into an unshuffled dataset. Throws IoError,
/// SchemaMismatch or EmptyDataset.
IngestResult ingest_csv(const std::filesystem::path& path, const IngestOptions& options);

}  // namespace fastmatch
