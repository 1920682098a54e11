// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fastmatch/histogram.hpp"

namespace fastmatch {

struct UniformTarget {};

struct ExplicitTarget {
  std::vector<double> weights;
};

/// Target given as a value of the candidate attribute; its exact histogram is
/// computed before the query starts.
struct CandidateTarget {
  std::string value;
};

using TargetSpec = std::variant<UniformTarget, ExplicitTarget, CandidateTarget>;

struct QuerySpec {
  static constexpr double kDefaultEpsilon = 0.04;
  static constexpr double kDefaultDelta = 0.01;
  static constexpr double kDefaultSigma = 0.0008;

  std::string x_attribute;
  std::string z_attribute;
  TargetSpec target = UniformTarget{};
  std::uint32_t k = 10;
  double epsilon = kDefaultEpsilon;
  double delta = kDefaultDelta;
  double sigma = kDefaultSigma;
  bool include_target_candidate = true;

  /// Throws InvalidArgument unless k >= 1, epsilon > 0, 0 < delta < 1, 0 <= sigma < 1.
  void validate() const;
};

/// Per-candidate sampling state.
struct CandidateState {
  CandidateId id = 0;
  HistogramCounts counts_accum;  ///< samples from completed rounds
  HistogramCounts counts_round;  ///< samples from the round in progress
  double tau_accum = 0.0;        ///< +inf while counts_accum is empty
  double tau_round = 0.0;
  std::uint64_t budget = 0;      ///< samples wanted this round
  bool pruned = false;
  bool exhausted = false;        ///< every tuple of the candidate has been consumed

  std::uint64_t n_accum() const noexcept { return counts_accum.total(); }
  std::uint64_t n_round() const noexcept { return counts_round.total(); }
};

struct Diagnostics {
  std::uint64_t rounds = 0;
  std::uint64_t tuples_read = 0;     ///< rows in every block read
  std::uint64_t tuples_sampled = 0;  ///< rows credited to some candidate
  std::uint64_t stage1_tuples = 0;
  std::uint64_t blocks_read = 0;
  std::uint64_t blocks_skipped = 0;
  std::uint64_t total_blocks = 0;
  std::uint64_t total_rows = 0;
  std::uint64_t pruned_count = 0;
  std::uint64_t surviving_count = 0;
  std::uint64_t target_scan_blocks = 0;
  std::uint64_t start_block = 0;
  std::uint64_t stage3_threshold = 0;
  double final_delta_upper = 0.0;
  double elapsed_ms = 0.0;
  bool exact = false;
  bool no_candidates_survive = false;
};

struct MatchedCandidate {
  CandidateId id = 0;
  std::string label;
  HistogramCounts histogram;
  double distance = 0.0;
  bool exhausted = false;
};

struct MatchResult {
  /// Ordered by (distance, id).
  std::vector<MatchedCandidate> matches;
  Diagnostics diagnostics;

  std::vector<CandidateId> matched_ids() const;
};

}  // namespace fastmatch
