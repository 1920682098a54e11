// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace fastmatch {

/// Dictionary code of a value of the candidate attribute Z.
using CandidateId = std::uint32_t;
/// Dictionary code of a value of the grouping attribute X.
using GroupId = std::uint32_t;

/// Per-group tuple counts for one candidate. The length is the number of
/// groups of X and stays fixed for the lifetime of a query.
class HistogramCounts {
 public:
  HistogramCounts() = default;
  explicit HistogramCounts(std::size_t num_groups) : counts_(num_groups, 0) {}
  explicit HistogramCounts(std::vector<std::uint64_t> counts);
  HistogramCounts(std::initializer_list<std::uint64_t> counts)
      : HistogramCounts(std::vector<std::uint64_t>(counts)) {}

  std::size_t size() const noexcept { return counts_.size(); }
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t operator[](std::size_t group) const { return counts_[group]; }
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }

  void add(GroupId group, std::uint64_t n = 1) {
    counts_[group] += n;
    total_ += n;
  }
  HistogramCounts& operator+=(const HistogramCounts& other);
  void clear() noexcept;

  friend bool operator==(const HistogramCounts&, const HistogramCounts&) = default;

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// A normalized histogram: non-negative entries summing to one.
class Distribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  Distribution() = default;
  /// Normalizes non-negative weights with a positive sum.
  static Distribution from_weights(std::span<const double> weights);
  static Distribution uniform(std::size_t num_groups);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t group) const { return probs_[group]; }
  std::span<const double> probs() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

Distribution normalize(const HistogramCounts& counts);

/// Normalized l1 distance, in [0, 2].
double l1_distance(const HistogramCounts& a, const HistogramCounts& b);
double l1_distance(const HistogramCounts& counts, const Distribution& target);
double l1_distance(const Distribution& a, const Distribution& b);

struct ScoredCandidate {
  CandidateId id;
  double tau;
};

/// The min(k, |taus|) candidates with the smallest distance, ordered by
/// (tau, id). Ties go to the smaller id.
std::vector<CandidateId> top_k_select(std::span<const ScoredCandidate> taus, std::size_t k);

/// Midpoint between the furthest matching candidate and the closest
/// non-matching one. Throws EmptyComplement when there is no non-matching
/// candidate.
double split_point(std::span<const double> matching_taus, std::span<const double> complement_taus);

}  // namespace fastmatch
