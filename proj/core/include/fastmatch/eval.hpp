// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fastmatch/bitmap.hpp"
#include "fastmatch/dataset.hpp"
#include "fastmatch/engine.hpp"
#include "fastmatch/histogram.hpp"
#include "fastmatch/query.hpp"
#include "fastmatch/scan.hpp"

namespace fastmatch {

enum class SelectivityProfile { Uniform, Zipf, Explicit };
enum class DistanceProfile { Explicit, Linspace, UniformRandom };

/// Synthetic dataset with planted per-candidate distributions. Candidate i
/// gets about sel_i * rows rows, each drawn i.i.d. from a distribution at
/// l1 distance d_i from the target.
struct SynthSpec {
  static constexpr std::string_view kCandidateAttribute = "candidate";
  static constexpr std::string_view kGroupAttribute = "group";

  std::uint32_t num_candidates = 100;
  std::uint32_t num_groups = 10;
  std::uint64_t rows = 1'000'000;

  SelectivityProfile selectivity = SelectivityProfile::Uniform;
  double zipf_exponent = 1.0;
  std::vector<double> selectivities;  ///< Explicit profile; normalized if needed

  DistanceProfile distance = DistanceProfile::Linspace;
  double distance_lo = 0.0;
  double distance_hi = 1.0;
  std::vector<double> distances;  ///< Explicit profile

  /// Empty means uniform.
  std::vector<double> target;
  std::uint32_t rows_per_block = Dataset::kDefaultRowsPerBlock;
  std::uint64_t rng_seed = 0;

  /// Throws InvalidArgument or InfeasibleSpec.
  void validate() const;
};

struct SynthOutput {
  Dataset dataset;
  BitmapIndex z_index;
  Distribution target;
  std::vector<double> planted_distances;
  std::vector<Distribution> planted;
  GroundTruth truth;
};

/// Deterministic per seed. Throws InfeasibleSpec when a planted distance
/// cannot be reached from the target.
SynthOutput synth_generate(const SynthSpec& spec);

/// Target distribution with a named candidate resolved from exact counts.
Distribution exact_target(const Dataset& dataset, const GroundTruth& truth, const QuerySpec& query);

/// Candidates whose exact selectivity is at least sigma (and that may be
/// returned at all), ordered by id.
std::vector<CandidateId> eligible_candidates(const Dataset& dataset, const GroundTruth& truth,
                                             const QuerySpec& query);

/// Exact top-k among eligible candidates, ties to the smaller id.
std::vector<CandidateId> oracle_top_k(const Dataset& dataset, const GroundTruth& truth, const Distribution& target,
                                      const QuerySpec& query);

/// Relative excess of the summed exact distances of `matched` over those of
/// the exact top-k. 0 when both sums are 0, +inf when only the oracle sum is 0.
double delta_d(std::span<const CandidateId> matched, std::span<const CandidateId> oracle_ids,
               const GroundTruth& truth, const Distribution& target);

struct GuaranteeReport {
  bool separation_ok = true;
  bool reconstruction_ok = true;
  double delta_d = 0.0;
  std::vector<CandidateId> violated_candidates;
  bool exact_flag = false;

  bool ok() const noexcept { return separation_ok && reconstruction_ok; }
};

GuaranteeReport check_guarantees(const MatchResult& result, const Dataset& dataset, const GroundTruth& truth,
                                 const QuerySpec& query);

/// True iff every matched candidate reached the reconstruction threshold or
/// was read in full.
bool stage3_satisfied(const MatchResult& result, const QuerySpec& query, std::uint32_t num_groups);

enum class Baseline { Scan, ScanMatch, SyncMatch, FastMatch };

std::string_view baseline_name(Baseline baseline) noexcept;
std::optional<Baseline> parse_baseline(std::string_view name) noexcept;

/// Scan is an exact group-by; the others run the engine under the matching
/// block policy (SyncMatch forces a lookahead of one).
MatchResult run_baseline(const Dataset& dataset, const BitmapIndex& z_index, const QuerySpec& query,
                         Baseline baseline, RunConfig config = {});

struct CampaignOptions {
  std::uint32_t runs = 100;
  std::uint64_t base_seed = 0;
  /// Reshuffle the rows for every run (fresh sample orders).
  bool reshuffle = true;
  std::uint32_t workers = 1;
  Baseline baseline = Baseline::FastMatch;
};

struct RunRecord {
  std::uint64_t seed = 0;
  GuaranteeReport report;
  bool stage3_ok = true;
  std::uint64_t rounds = 0;
  std::uint64_t blocks_read = 0;
  double tuples_read_fraction = 0.0;
  /// Fraction of blocks never read.
  double blocks_skipped_fraction = 0.0;
  double elapsed_ms = 0.0;
};

struct CampaignSummary {
  std::uint32_t runs = 0;
  std::uint32_t violations = 0;
  std::uint32_t stage3_failures = 0;
  std::uint32_t exact_runs = 0;
  double violation_rate = 0.0;
  /// One-sided 99% upper confidence bound on the violation probability.
  double violation_upper_99 = 0.0;
  double mean_delta_d = 0.0;
  double mean_tuples_read_fraction = 0.0;
  double mean_blocks_skipped_fraction = 0.0;
  double mean_rounds = 0.0;
  double mean_elapsed_ms = 0.0;
  std::vector<RunRecord> records;
};

/// Runs the query `options.runs` times on the synthetic data, each with its
/// own derived seed, and checks every result against the exact truth.
CampaignSummary monte_carlo_verify(const SynthOutput& data, const QuerySpec& query, const RunConfig& config,
                                   const CampaignOptions& options);

/// One-sided Clopper-Pearson bounds at the given confidence.
double binomial_upper_bound(std::uint64_t trials, std::uint64_t successes, double confidence);
double binomial_lower_bound(std::uint64_t trials, std::uint64_t successes, double confidence);

/// False iff an exact binomial test at `confidence` rejects "rate <= p0".
bool binomial_consistent(std::uint64_t trials, std::uint64_t successes, double p0, double confidence);

}  // namespace fastmatch
