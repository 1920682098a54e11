// SPDX-License-Identifier: Apache-2.0
#include "fastmatch/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fastmatch/error.hpp"

namespace fastmatch {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroTotal: return "ZeroTotal";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyComplement: return "EmptyComplement";
    case ErrorCode::InvalidProbability: return "InvalidProbability";
    case ErrorCode::NonPositiveEpsilon: return "NonPositiveEpsilon";
    case ErrorCode::OutOfSupport: return "OutOfSupport";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::UnknownAttribute: return "UnknownAttribute";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
  }
  return "Unknown";
}

HistogramCounts::HistogramCounts(std::vector<std::uint64_t> counts)
    : counts_(std::move(counts)),
      total_(std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0})) {}

HistogramCounts& HistogramCounts::operator+=(const HistogramCounts& other) {
  if (other.size() != size()) {
    throw Error(ErrorCode::LengthMismatch, "histogram length mismatch in +=");
  }
  for (std::size_t g = 0; g < counts_.size(); ++g) {
    counts_[g] += other.counts_[g];
  }
  total_ += other.total_;
  return *this;
}

void HistogramCounts::clear() noexcept {
  std::fill(counts_.begin(), counts_.end(), 0);
  total_ = 0;
}

Distribution Distribution::from_weights(std::span<const double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::InvalidArgument, "distribution weights must be finite and non-negative");
    }
    sum += w;
  }
  if (!(sum > 0.0)) {
    throw Error(ErrorCode::ZeroTotal, "distribution weights sum to zero");
  }
  Distribution d;
  d.probs_.reserve(weights.size());
  for (double w : weights) {
    d.probs_.push_back(w / sum);
  }
  return d;
}

Distribution Distribution::uniform(std::size_t num_groups) {
  if (num_groups == 0) {
    throw Error(ErrorCode::InvalidArgument, "uniform distribution needs at least one group");
  }
  std::vector<double> w(num_groups, 1.0);
  return from_weights(w);
}

Distribution normalize(const HistogramCounts& counts) {
  if (counts.total() == 0) {
    throw Error(ErrorCode::ZeroTotal, "cannot normalize an empty histogram");
  }
  std::vector<double> w(counts.counts().begin(), counts.counts().end());
  return Distribution::from_weights(w);
}

double l1_distance(const HistogramCounts& a, const HistogramCounts& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "histograms have different lengths");
  }
  if (a.total() == 0 || b.total() == 0) {
    throw Error(ErrorCode::ZeroTotal, "l1 distance of an empty histogram is undefined");
  }
  const double ta = static_cast<double>(a.total());
  const double tb = static_cast<double>(b.total());
  double d = 0.0;
  for (std::size_t g = 0; g < a.size(); ++g) {
    d += std::abs(static_cast<double>(a[g]) / ta - static_cast<double>(b[g]) / tb);
  }
  return d;
}

double l1_distance(const HistogramCounts& counts, const Distribution& target) {
  if (counts.size() != target.size()) {
    throw Error(ErrorCode::LengthMismatch, "histogram and target have different lengths");
  }
  if (counts.total() == 0) {
    throw Error(ErrorCode::ZeroTotal, "l1 distance of an empty histogram is undefined");
  }
  const double t = static_cast<double>(counts.total());
  double d = 0.0;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    d += std::abs(static_cast<double>(counts[g]) / t - target[g]);
  }
  return d;
}

double l1_distance(const Distribution& a, const Distribution& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "distributions have different lengths");
  }
  double d = 0.0;
  for (std::size_t g = 0; g < a.size(); ++g) {
    d += std::abs(a[g] - b[g]);
  }
  return d;
}

std::vector<CandidateId> top_k_select(std::span<const ScoredCandidate> taus, std::size_t k) {
  std::vector<ScoredCandidate> sorted(taus.begin(), taus.end());
  const std::size_t keep = std::min(k, sorted.size());
  auto less = [](const ScoredCandidate& a, const ScoredCandidate& b) {
    return a.tau < b.tau || (a.tau == b.tau && a.id < b.id);
  };
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(keep), sorted.end(), less);
  std::vector<CandidateId> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    out.push_back(sorted[i].id);
  }
  return out;
}

double split_point(std::span<const double> matching_taus, std::span<const double> complement_taus) {
  if (complement_taus.empty()) {
    throw Error(ErrorCode::EmptyComplement, "split point needs at least one non-matching candidate");
  }
  if (matching_taus.empty()) {
    throw Error(ErrorCode::InvalidArgument, "split point needs at least one matching candidate");
  }
  const double hi = *std::max_element(matching_taus.begin(), matching_taus.end());
  const double lo = *std::min_element(complement_taus.begin(), complement_taus.end());
  if (hi == lo) {
    return hi;
  }
  return 0.5 * (hi + lo);
}

}  // namespace fastmatch
