// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fastmatch/histogram.hpp"

namespace fastmatch::stats {

// Deviation bounds for empirical histograms. With n samples over G groups,
// P(||empirical - true||_1 >= eps) <= 2^G * exp(-eps^2 * n / 2).

/// Smallest eps whose deviation probability is at most delta_i.
double deviation_epsilon(std::uint64_t n, std::uint32_t num_groups, double delta_i);

/// Inverse of deviation_epsilon, usable as a P-value: min(1, 2^G exp(-eps^2 n / 2)).
/// Returns 1 for eps <= 0 and 0 for eps = +inf. Evaluated in log space.
double deviation_pvalue(std::uint64_t n, std::uint32_t num_groups, double eps);

/// Samples needed so a round test with slack eps_prime rejects at delta_upper.
/// Clamped to at least one.
std::uint64_t samples_needed(double eps_prime, std::uint32_t num_groups, double delta_upper);

/// Per-candidate sample floor that makes every output histogram
/// eps-accurate with overall failure probability delta/3.
std::uint64_t stage3_samples_needed(double epsilon, std::uint32_t num_groups, std::uint32_t k,
                                    double delta);

/// Smallest row count that gives selectivity >= sigma: ceil(sigma N).
std::uint64_t min_candidate_rows(std::uint64_t population, double sigma);

/// log of the hypergeometric pmf f(j; N, K, m). Throws OutOfSupport outside
/// max(0, m - (N - K)) <= j <= min(m, K).
double hypergeom_log_pmf(std::uint64_t population, std::uint64_t successes, std::uint64_t draws,
                         std::uint64_t observed);

/// Lower-tail P-value of the test "candidate is not underrepresented":
/// sum_{j <= n_obs} f(j; N, ceil(sigma N), m).
double underrepresentation_pvalue(std::uint64_t population, double sigma, std::uint64_t draws,
                                  std::uint64_t n_obs);

/// Batched form; shares one anchor term across candidates with equal or
/// nearby counts. Result is index-aligned with n_obs.
std::vector<double> underrepresentation_pvalues(std::uint64_t population, double sigma,
                                                std::uint64_t draws,
                                                std::span<const std::uint64_t> n_obs);

struct PValue {
  CandidateId id;
  double p;
};

/// Holm-Bonferroni step-down procedure. Returns the rejected ids, sorted.
std::vector<CandidateId> holm_bonferroni(std::span<const PValue> pvalues, double level);

/// True iff every P-value is at most delta_upper (vacuously true when empty).
bool simultaneous_reject(std::span<const double> pvalues, double delta_upper);
bool simultaneous_reject(std::span<const PValue> pvalues, double delta_upper);

struct RoundTestEntry {
  CandidateId id = 0;
  bool matching = false;
  double tau_round = 0.0;
  std::uint64_t n_round = 0;
  bool exhausted = false;
  /// Exact distance, only read when exhausted.
  double exact_tau = 0.0;
};

struct RoundTestInput {
  double split = 0.0;
  double epsilon = 0.0;
  std::uint32_t num_groups = 1;
  std::vector<RoundTestEntry> candidates;
};

struct RoundPValues {
  std::vector<PValue> pvalues;
  /// Non-exhausted candidates that drew no samples this round (P-value 1).
  std::vector<CandidateId> missing_tau;
};

/// Builds the per-candidate null hypotheses for one identification round and
/// returns their P-values. Matching candidates test tau* > s + eps/2; the
/// rest test tau* < s - eps/2. Exhausted candidates are decided exactly.
RoundPValues round_pvalues(const RoundTestInput& input);

}  // namespace fastmatch::stats
