// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fastmatch/bitmap.hpp"
#include "fastmatch/dataset.hpp"
#include "fastmatch/engine.hpp"
#include "fastmatch/query.hpp"

namespace fastmatch {

/// Block-level access to a shuffled dataset. Blocks are visited in cyclic
/// order from a start block; each block is read at most once, so skipped
/// blocks are picked up again on a later pass. Tracks, per candidate, how
/// many unread blocks still hold its tuples; a candidate with none left is
/// exhausted.
class BlockSampler {
 public:
  BlockSampler(const Dataset& dataset, std::size_t x_col, std::size_t z_col, const BitmapIndex& z_index,
               std::uint64_t start_block);

  std::uint64_t block_count() const noexcept { return read_.size(); }
  std::uint64_t cursor() const noexcept { return cursor_; }
  void advance_cursor(std::uint64_t blocks) { cursor_ = (cursor_ + blocks) % block_count(); }
  bool is_read(std::uint64_t block) const { return read_[block] != 0; }
  bool all_read() const noexcept { return blocks_read_ == block_count(); }
  bool exhausted(CandidateId id) const { return remaining_blocks_[id] == 0; }

  /// Reads `block` (which must be unread). Rows of candidates in `universe`
  /// go to sink(candidate, group); candidates in `universe` present in the
  /// block are appended to `touched`.
  template <typename Sink>
  void consume(std::uint64_t block, std::span<const std::uint8_t> universe, Sink&& sink,
               std::vector<CandidateId>& touched) {
    const BlockSlice slice = read_block(*dataset_, block, cols_);
    const auto xs = slice.columns[0];
    const auto zs = slice.columns[1];
    const std::uint64_t stamp = block + 1;
    for (std::size_t r = 0; r < zs.size(); ++r) {
      const CandidateId z = zs[r];
      if (stamp_[z] != stamp) {
        stamp_[z] = stamp;
        --remaining_blocks_[z];
        if (universe[z]) {
          touched.push_back(z);
        }
      }
      if (universe[z]) {
        sink(z, xs[r]);
        ++tuples_sampled_;
      }
    }
    read_[block] = 1;
    ++blocks_read_;
    tuples_read_ += zs.size();
  }

  /// Reads unread blocks in order from the cursor, without skipping, until at
  /// least `tuples` rows were read or no unread block remains. Returns the
  /// number of rows read.
  std::uint64_t read_sequential(std::uint64_t tuples, std::span<const std::uint8_t> universe,
                                std::span<CandidateState> states);

  void count_skip() noexcept { ++blocks_skipped_; }

  std::uint64_t blocks_read() const noexcept { return blocks_read_; }
  std::uint64_t blocks_skipped() const noexcept { return blocks_skipped_; }
  std::uint64_t tuples_read() const noexcept { return tuples_read_; }
  std::uint64_t tuples_sampled() const noexcept { return tuples_sampled_; }

 private:
  const Dataset* dataset_;
  std::vector<std::size_t> cols_;
  std::vector<std::uint8_t> read_;
  std::vector<std::uint64_t> remaining_blocks_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t cursor_ = 0;
  std::uint64_t blocks_read_ = 0;
  std::uint64_t blocks_skipped_ = 0;
  std::uint64_t tuples_read_ = 0;
  std::uint64_t tuples_sampled_ = 0;
};

struct PhaseRequest {
  Stage stage = Stage::Identify;
  std::vector<CandidateId> universe;
  std::uint64_t stage3_threshold = 0;
};

/// Executes the I/O phases of a run. Round counts land in each state's
/// counts_round; the caller owns everything else.
class SamplingDriver {
 public:
  virtual ~SamplingDriver() = default;

  /// Stage 1: sequential read of about `tuples` rows for `universe`.
  virtual std::uint64_t read_sequential(std::uint64_t tuples, std::span<const CandidateId> universe) = 0;

  /// Reads blocks under the policy until no candidate of the request is
  /// active. On return the round counts and exhausted flags of the universe
  /// are final for this phase.
  virtual void run_phase(const PhaseRequest& request) = 0;

  /// Waits for the sampling side to go idle and folds any samples it took
  /// after the last phase completed into the accumulated counts.
  virtual void settle() = 0;

  virtual const BlockSampler& sampler() const = 0;
};

std::unique_ptr<SamplingDriver> make_sampling_driver(BlockSampler& sampler, const BitmapIndex& z_index,
                                                     std::span<CandidateState> states, Policy policy,
                                                     std::uint32_t lookahead, ExecutionMode mode);

}  // namespace fastmatch
