// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fastmatch/bitmap.hpp"
#include "fastmatch/dataset.hpp"
#include "fastmatch/query.hpp"

namespace fastmatch {

enum class Policy {
  AnyActiveLookahead,  ///< FastMatch: mark lookahead-sized batches from the active set
  AnyActiveSync,       ///< SyncMatch: re-evaluate the active set before every block
  SequentialScan,      ///< ScanMatch: read every block in order
};

enum class ExecutionMode {
  SingleContext,  ///< one thread, bit-reproducible per seed
  TwoWorker,      ///< I/O + sampling worker alongside a statistics worker
};

std::string_view policy_name(Policy policy) noexcept;
std::optional<Policy> parse_policy(std::string_view name) noexcept;

struct RunConfig {
  static constexpr std::uint64_t kDefaultStage1Samples = 500000;
  static constexpr std::uint32_t kDefaultLookahead = 1024;

  std::uint64_t m = kDefaultStage1Samples;
  std::uint32_t lookahead = kDefaultLookahead;
  Policy policy = Policy::AnyActiveLookahead;
  ExecutionMode mode = ExecutionMode::SingleContext;
  std::uint64_t rng_seed = 0;
  /// Random (from rng_seed) when unset.
  std::optional<std::uint64_t> start_block;

  void validate() const;
};

enum class Mark : std::uint8_t { Skip, Read };

struct MarkArray {
  std::uint64_t batch_start = 0;
  std::vector<Mark> marks;
};

/// AnyActive marking of blocks [batch_start, batch_start + batch_len), clamped
/// to the block count. A block is Read iff some active candidate's bitmap has
/// its bit set. Candidates are visited in the outer loop and blocks in the
/// inner one, a word of blocks at a time, skipping words already fully Read.
MarkArray mark_lookahead(const BitmapIndex& index, std::span<const CandidateId> active,
                         std::uint64_t batch_start, std::uint64_t batch_len);

enum class Stage {
  Identify,     ///< active iff n_round < budget
  Reconstruct,  ///< active iff n_accum + n_round < stage-3 threshold
};

/// Non-exhausted members of `universe` that still need samples.
std::vector<CandidateId> active_candidates(std::span<const CandidateState> states,
                                           std::span<const CandidateId> universe, Stage stage,
                                           std::uint64_t stage3_threshold = 0);

/// Credits every row whose candidate is in `universe` to that candidate's
/// round counts. `slice` holds the X column then the Z column. Returns the
/// number of rows credited.
std::uint64_t process_block(const BlockSlice& slice, std::span<const std::uint8_t> universe,
                            std::span<CandidateState> states);

class BlockSampler;
class SamplingDriver;

/// One execution of the three-stage top-k matching algorithm. The stages can
/// be driven one at a time (tests do) or all at once through run().
class HistSim {
 public:
  HistSim(const Dataset& dataset, const BitmapIndex& z_index, QuerySpec query, RunConfig config);
  ~HistSim();
  HistSim(const HistSim&) = delete;
  HistSim& operator=(const HistSim&) = delete;

  /// Reads about m tuples from the start block and prunes candidates whose
  /// underrepresentation test rejects under Holm-Bonferroni at delta / 3.
  /// Returns the surviving set A.
  const std::vector<CandidateId>& stage1_prune();

  /// Runs identification rounds until the simultaneous test rejects or the
  /// data runs out. Returns the matching set M.
  const std::vector<CandidateId>& stage2_identify();

  /// Samples M until every member reaches the reconstruction threshold.
  void stage3_reconstruct();

  MatchResult result() const;

  /// All three stages.
  MatchResult run();

  std::span<const CandidateState> states() const noexcept { return states_; }
  const std::vector<CandidateId>& surviving() const noexcept { return surviving_; }
  const std::vector<CandidateId>& matching() const noexcept { return matching_; }
  const Distribution& target() const noexcept { return target_; }
  std::uint32_t num_groups() const noexcept { return num_groups_; }
  std::uint64_t start_block() const noexcept { return start_block_; }
  bool exact() const noexcept { return exact_; }

 private:
  void resolve_target();
  void fold_round(std::span<const CandidateId> ids);
  void refresh_tau(CandidateId id);
  bool all_exhausted(std::span<const CandidateId> ids) const;
  void finalize_exact();
  std::vector<CandidateId> sorted_by_tau(std::vector<CandidateId> ids) const;

  const Dataset& dataset_;
  const BitmapIndex& z_index_;
  QuerySpec query_;
  RunConfig config_;
  std::size_t x_col_ = 0;
  std::size_t z_col_ = 0;
  std::uint32_t num_groups_ = 0;
  std::uint64_t start_block_ = 0;
  Distribution target_;
  std::vector<std::uint8_t> eligible_;
  std::vector<CandidateState> states_;
  std::vector<CandidateId> surviving_;
  std::vector<CandidateId> matching_;
  std::unique_ptr<BlockSampler> sampler_storage_;
  std::unique_ptr<SamplingDriver> driver_;
  Diagnostics diag_;
  bool exact_ = false;
  bool stage1_done_ = false;
  bool stage2_done_ = false;
  bool stage3_done_ = false;
  double started_ms_ = 0.0;
};

/// Throws on unknown attributes or an unresolvable target.
MatchResult histsim_run(const Dataset& dataset, const BitmapIndex& z_index, const QuerySpec& query,
                        const RunConfig& config);

}  // namespace fastmatch
