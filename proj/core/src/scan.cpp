// SPDX-License-Identifier: Apache-2.0
#include "fastmatch/scan.hpp"

#include "fastmatch/stats.hpp"

namespace fastmatch {

GroundTruth exact_truth(const Dataset& dataset, std::string_view x_attribute, std::string_view z_attribute) {
  const std::size_t x = dataset.attribute_index(x_attribute);
  const std::size_t z = dataset.attribute_index(z_attribute);
  const std::size_t groups = dataset.dictionaries[x].size();
  GroundTruth truth;
  truth.row_count = dataset.row_count();
  truth.counts.assign(dataset.dictionaries[z].size(), HistogramCounts(groups));
  const auto& xs = dataset.columns[x];
  const auto& zs = dataset.columns[z];
  for (std::size_t row = 0; row < xs.size(); ++row) {
    truth.counts[zs[row]].add(xs[row]);
  }
  return truth;
}

std::map<CandidateId, HistogramCounts> scan_groupby(const Dataset& dataset, std::string_view x_attribute,
                                                    std::string_view z_attribute, double sigma) {
  GroundTruth truth = exact_truth(dataset, x_attribute, z_attribute);
  std::map<CandidateId, HistogramCounts> out;
  const std::uint64_t need = stats::min_candidate_rows(truth.row_count, sigma);
  for (CandidateId id = 0; id < truth.counts.size(); ++id) {
    const auto total = truth.counts[id].total();
    if (total == 0 || total < need) {
      continue;
    }
    out.emplace(id, std::move(truth.counts[id]));
  }
  return out;
}

}  // namespace fastmatch
