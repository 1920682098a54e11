// SPDX-License-Identifier: Apache-2.0
#include "fastmatch/sampler.hpp"

#include <algorithm>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "fastmatch/error.hpp"

namespace fastmatch {

BlockSampler::BlockSampler(const Dataset& dataset, std::size_t x_col, std::size_t z_col,
                           const BitmapIndex& z_index, std::uint64_t start_block)
    : dataset_(&dataset), cols_{x_col, z_col}, read_(dataset.block_count(), 0) {
  if (z_index.num_blocks() != dataset.block_count() ||
      z_index.num_values() != dataset.dictionaries[z_col].size()) {
    throw Error(ErrorCode::InvalidArgument, "bitmap index does not match the dataset");
  }
  if (block_count() == 0) {
    throw Error(ErrorCode::EmptyDataset, "dataset has no blocks");
  }
  const std::size_t candidates = dataset.dictionaries[z_col].size();
  remaining_blocks_.resize(candidates);
  for (CandidateId id = 0; id < candidates; ++id) {
    remaining_blocks_[id] = z_index.popcount(id);
  }
  stamp_.assign(candidates, 0);
  cursor_ = start_block % block_count();
}

std::uint64_t BlockSampler::read_sequential(std::uint64_t tuples, std::span<const std::uint8_t> universe,
                                            std::span<CandidateState> states) {
  std::uint64_t rows = 0;
  std::vector<CandidateId> touched;
  while (rows < tuples && !all_read()) {
    const std::uint64_t b = cursor_;
    advance_cursor(1);
    if (is_read(b)) {
      continue;
    }
    const std::uint64_t before = tuples_read_;
    consume(b, universe, [&](CandidateId z, GroupId x) { states[z].counts_round.add(x); }, touched);
    rows += tuples_read_ - before;
    for (CandidateId id : touched) {
      states[id].exhausted = exhausted(id);
    }
    touched.clear();
  }
  return rows;
}

namespace {

std::vector<std::uint8_t> mask_of(std::span<const CandidateId> ids, std::size_t size) {
  std::vector<std::uint8_t> mask(size, 0);
  for (CandidateId id : ids) mask[id] = 1;
  return mask;
}

bool wants_samples(const CandidateState& s, Stage stage, std::uint64_t threshold) {
  if (stage == Stage::Identify) {
    return s.n_round() < s.budget;
  }
  return s.n_accum() + s.n_round() < threshold;
}

// Exact active status of every universe member, kept current as blocks are
// consumed. Status only moves from active to inactive within a phase.
class ActiveTracker {
 public:
  ActiveTracker(const BlockSampler& sampler, std::span<const CandidateState> states, const PhaseRequest& req)
      : sampler_(sampler), states_(states), req_(req), active_(states.size(), 0) {
    for (CandidateId id : req.universe) {
      if (still_active(id)) {
        active_[id] = 1;
        ++count_;
      }
    }
  }

  std::size_t count() const noexcept { return count_; }

  void update(std::span<const CandidateId> touched) {
    for (CandidateId id : touched) {
      if (active_[id] && !still_active(id)) {
        active_[id] = 0;
        --count_;
      }
    }
  }

  std::vector<CandidateId> list() const {
    std::vector<CandidateId> out;
    for (CandidateId id : req_.universe) {
      if (active_[id]) out.push_back(id);
    }
    return out;
  }

 private:
  bool still_active(CandidateId id) const {
    return !sampler_.exhausted(id) && wants_samples(states_[id], req_.stage, req_.stage3_threshold);
  }

  const BlockSampler& sampler_;
  std::span<const CandidateState> states_;
  const PhaseRequest& req_;
  std::vector<std::uint8_t> active_;
  std::size_t count_ = 0;
};

std::uint64_t batch_length(const BlockSampler& sampler, Policy policy, std::uint32_t lookahead) {
  const std::uint64_t len = policy == Policy::AnyActiveSync ? 1 : lookahead;
  return std::min<std::uint64_t>(len, sampler.block_count() - sampler.cursor());
}

MarkArray mark_batch(const BitmapIndex& z_index, Policy policy, std::span<const CandidateId> mark_set,
                     std::uint64_t start, std::uint64_t len) {
  if (policy == Policy::SequentialScan) {
    return MarkArray{start, std::vector<Mark>(len, Mark::Read)};
  }
  return mark_lookahead(z_index, mark_set, start, len);
}

class SingleContextDriver final : public SamplingDriver {
 public:
  SingleContextDriver(BlockSampler& sampler, const BitmapIndex& z_index, std::span<CandidateState> states,
                      Policy policy, std::uint32_t lookahead)
      : sampler_(sampler), z_index_(z_index), states_(states), policy_(policy), lookahead_(lookahead) {}

  std::uint64_t read_sequential(std::uint64_t tuples, std::span<const CandidateId> universe) override {
    const auto mask = mask_of(universe, states_.size());
    return sampler_.read_sequential(tuples, mask, states_);
  }

  void run_phase(const PhaseRequest& req) override {
    const auto mask = mask_of(req.universe, states_.size());
    ActiveTracker tracker(sampler_, states_, req);
    std::vector<CandidateId> touched;
    auto sink = [&](CandidateId z, GroupId x) { states_[z].counts_round.add(x); };
    while (tracker.count() > 0) {
      const std::uint64_t start = sampler_.cursor();
      const std::uint64_t len = batch_length(sampler_, policy_, lookahead_);
      const MarkArray marks = mark_batch(z_index_, policy_, tracker.list(), start, len);
      std::uint64_t consumed = len;
      for (std::uint64_t i = 0; i < len; ++i) {
        const std::uint64_t b = start + i;
        if (sampler_.is_read(b)) {
          continue;
        }
        if (marks.marks[i] == Mark::Skip) {
          sampler_.count_skip();
          continue;
        }
        sampler_.consume(b, mask, sink, touched);
        for (CandidateId id : touched) states_[id].exhausted = sampler_.exhausted(id);
        tracker.update(touched);
        touched.clear();
        if (tracker.count() == 0) {
          consumed = i + 1;
          break;
        }
      }
      sampler_.advance_cursor(consumed);
    }
  }

  void settle() override {
    for (CandidateId id = 0; id < states_.size(); ++id) {
      states_[id].exhausted = sampler_.exhausted(id);
    }
  }

  const BlockSampler& sampler() const override { return sampler_; }

 private:
  BlockSampler& sampler_;
  const BitmapIndex& z_index_;
  std::span<CandidateState> states_;
  Policy policy_;
  std::uint32_t lookahead_;
};

// The calling thread acts as the statistics worker; a second thread does
// marking, block reads and tuple accounting. During a phase the statistics
// worker turns the counts published after each block into fresh active sets,
// which the I/O worker uses when it marks its next batch. The I/O worker
// tracks exact completion itself and ends the phase at the block that meets
// the last budget.
class TwoWorkerDriver final : public SamplingDriver {
 public:
  TwoWorkerDriver(BlockSampler& sampler, const BitmapIndex& z_index, std::span<CandidateState> states,
                  Policy policy, std::uint32_t lookahead)
      : sampler_(sampler),
        z_index_(z_index),
        states_(states),
        policy_(policy),
        lookahead_(lookahead),
        published_round_(states.size(), 0),
        published_exhausted_(states.size(), 0) {
    io_ = std::thread([this] { io_main(); });
  }

  ~TwoWorkerDriver() override {
    {
      std::lock_guard lk(mu_);
      job_ = Job::Stop;
      ++job_id_;
    }
    cv_.notify_all();
    io_.join();
  }

  std::uint64_t read_sequential(std::uint64_t tuples, std::span<const CandidateId> universe) override {
    {
      std::lock_guard lk(mu_);
      request_ = PhaseRequest{Stage::Identify, {universe.begin(), universe.end()}, 0};
      sequential_tuples_ = tuples;
      start_job(Job::Sequential);
    }
    cv_.notify_all();
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] { return idle_; });
    return sequential_rows_;
  }

  void run_phase(const PhaseRequest& req) override {
    std::uint64_t job;
    {
      std::lock_guard lk(mu_);
      request_ = req;
      for (CandidateId id : req.universe) {
        published_round_[id] = states_[id].n_round();
        published_exhausted_[id] = states_[id].exhausted ? 1 : 0;
      }
      fresh_active_.clear();
      fresh_job_ = 0;
      job = start_job(Job::Phase);
    }
    cv_.notify_all();

    std::uint64_t seen = 0;
    std::vector<std::uint64_t> snapshot(states_.size(), 0);
    std::vector<std::uint8_t> snapshot_exhausted(states_.size(), 0);
    for (;;) {
      {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return phase_done_ || publish_seq_ != seen; });
        if (phase_done_) {
          break;
        }
        seen = publish_seq_;
        for (CandidateId id : req.universe) {
          snapshot[id] = published_round_[id];
          snapshot_exhausted[id] = published_exhausted_[id];
        }
      }
      std::vector<CandidateId> fresh;
      for (CandidateId id : req.universe) {
        const CandidateState& s = states_[id];
        const bool wants = req.stage == Stage::Identify ? snapshot[id] < s.budget
                                                        : s.n_accum() + snapshot[id] < req.stage3_threshold;
        if (wants && !snapshot_exhausted[id]) fresh.push_back(id);
      }
      std::lock_guard lk(mu_);
      if (job_id_ == job) {
        fresh_active_ = std::move(fresh);
        fresh_job_ = job;
      }
    }
  }

  void settle() override {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] { return idle_; });
    for (CandidateId id = 0; id < states_.size(); ++id) {
      states_[id].exhausted = sampler_.exhausted(id);
    }
  }

  const BlockSampler& sampler() const override { return sampler_; }

 private:
  enum class Job { None, Sequential, Phase, Stop };

  // Requires mu_.
  std::uint64_t start_job(Job job) {
    job_ = job;
    phase_done_ = false;
    idle_ = false;
    return ++job_id_;
  }

  void io_main() {
    std::uint64_t handled = 0;
    for (;;) {
      Job job;
      {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return job_id_ != handled; });
        handled = job_id_;
        job = job_;
      }
      if (job == Job::Stop) {
        return;
      }
      if (job == Job::Sequential) {
        const auto mask = mask_of(request_.universe, states_.size());
        const std::uint64_t rows = sampler_.read_sequential(sequential_tuples_, mask, states_);
        std::lock_guard lk(mu_);
        sequential_rows_ = rows;
      } else if (job == Job::Phase) {
        io_phase(handled);
      }
      {
        std::lock_guard lk(mu_);
        phase_done_ = true;
        idle_ = true;
      }
      cv_.notify_all();
    }
  }

  void io_phase(std::uint64_t job) {
    const PhaseRequest& req = request_;
    const auto mask = mask_of(req.universe, states_.size());
    ActiveTracker tracker(sampler_, states_, req);
    std::vector<CandidateId> touched;
    auto sink = [&](CandidateId z, GroupId x) { states_[z].counts_round.add(x); };

    while (tracker.count() > 0) {
      std::vector<CandidateId> mark_set;
      {
        std::lock_guard lk(mu_);
        if (fresh_job_ == job) mark_set = fresh_active_;
      }
      if (mark_set.empty()) {
        mark_set = tracker.list();
      }
      const std::uint64_t start = sampler_.cursor();
      const std::uint64_t len = batch_length(sampler_, policy_, lookahead_);
      const MarkArray marks = mark_batch(z_index_, policy_, mark_set, start, len);
      std::uint64_t consumed = len;
      for (std::uint64_t i = 0; i < len; ++i) {
        const std::uint64_t b = start + i;
        if (sampler_.is_read(b)) {
          continue;
        }
        if (marks.marks[i] == Mark::Skip) {
          sampler_.count_skip();
          continue;
        }
        sampler_.consume(b, mask, sink, touched);
        for (CandidateId id : touched) states_[id].exhausted = sampler_.exhausted(id);
        tracker.update(touched);
        {
          std::lock_guard lk(mu_);
          for (CandidateId id : touched) {
            published_round_[id] = states_[id].n_round();
            published_exhausted_[id] = states_[id].exhausted ? 1 : 0;
          }
          ++publish_seq_;
        }
        touched.clear();
        cv_.notify_all();
        if (tracker.count() == 0) {
          consumed = i + 1;
          break;
        }
      }
      sampler_.advance_cursor(consumed);
    }
  }

  BlockSampler& sampler_;
  const BitmapIndex& z_index_;
  std::span<CandidateState> states_;
  Policy policy_;
  std::uint32_t lookahead_;

  std::mutex mu_;
  std::condition_variable cv_;
  Job job_ = Job::None;
  std::uint64_t job_id_ = 0;
  PhaseRequest request_;
  std::uint64_t sequential_tuples_ = 0;
  std::uint64_t sequential_rows_ = 0;
  bool phase_done_ = true;
  bool idle_ = true;
  std::vector<std::uint64_t> published_round_;
  std::vector<std::uint8_t> published_exhausted_;
  std::uint64_t publish_seq_ = 0;
  std::vector<CandidateId> fresh_active_;
  std::uint64_t fresh_job_ = 0;
  std::thread io_;
};

}  // namespace

std::unique_ptr<SamplingDriver> make_sampling_driver(BlockSampler& sampler, const BitmapIndex& z_index,
                                                     std::span<CandidateState> states, Policy policy,
                                                     std::uint32_t lookahead, ExecutionMode mode) {
  if (mode == ExecutionMode::TwoWorker) {
    return std::make_unique<TwoWorkerDriver>(sampler, z_index, states, policy, lookahead);
  }
  return std::make_unique<SingleContextDriver>(sampler, z_index, states, policy, lookahead);
}

}  // namespace fastmatch
