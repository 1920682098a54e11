// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string_view>
#include <vector>

#include "fastmatch/dataset.hpp"
#include "fastmatch/histogram.hpp"

namespace fastmatch {

/// Exact per-candidate histograms from a full pass; candidates with
/// selectivity N_i / N below sigma are left out.
std::map<CandidateId, HistogramCounts> scan_groupby(const Dataset& dataset, std::string_view x_attribute,
                                                    std::string_view z_attribute, double sigma);

/// Exact histograms for every candidate code, index-aligned with the Z
/// dictionary (absent candidates get an all-zero histogram).
struct GroundTruth {
  std::vector<HistogramCounts> counts;
  std::uint64_t row_count = 0;

  double selectivity(CandidateId id) const {
    return static_cast<double>(counts.at(id).total()) / static_cast<double>(row_count);
  }
};

GroundTruth exact_truth(const Dataset& dataset, std::string_view x_attribute, std::string_view z_attribute);

}  // namespace fastmatch
