// SPDX-License-Identifier: Apache-2.0
#include "fastmatch/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "fastmatch/error.hpp"
#include "fastmatch/random.hpp"
#include "fastmatch/sampler.hpp"
#include "fastmatch/scan.hpp"
#include "fastmatch/stats.hpp"

namespace fastmatch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

std::uint64_t extract_bits(std::span<const std::uint64_t> words, std::uint64_t pos) {
  const std::uint64_t w = pos >> 6;
  const unsigned off = static_cast<unsigned>(pos & 63);
  std::uint64_t v = words[w] >> off;
  if (off != 0 && w + 1 < words.size()) {
    v |= words[w + 1] << (64 - off);
  }
  return v;
}

}  // namespace

std::string_view policy_name(Policy policy) noexcept {
  switch (policy) {
    case Policy::AnyActiveLookahead: return "fastmatch";
    case Policy::AnyActiveSync: return "syncmatch";
    case Policy::SequentialScan: return "scanmatch";
  }
  return "unknown";
}

std::optional<Policy> parse_policy(std::string_view name) noexcept {
  if (name == "fastmatch") return Policy::AnyActiveLookahead;
  if (name == "syncmatch") return Policy::AnyActiveSync;
  if (name == "scanmatch") return Policy::SequentialScan;
  return std::nullopt;
}

void RunConfig::validate() const {
  if (m == 0) {
    throw Error(ErrorCode::InvalidArgument, "m must be at least 1");
  }
  if (lookahead == 0) {
    throw Error(ErrorCode::InvalidArgument, "lookahead must be at least 1");
  }
}

void QuerySpec::validate() const {
  if (k < 1) {
    throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "delta must lie in (0, 1)");
  }
  if (!(sigma >= 0.0 && sigma < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "sigma must lie in [0, 1)");
  }
}

std::vector<CandidateId> MatchResult::matched_ids() const {
  std::vector<CandidateId> ids;
  ids.reserve(matches.size());
  for (const auto& m : matches) ids.push_back(m.id);
  return ids;
}

MarkArray mark_lookahead(const BitmapIndex& index, std::span<const CandidateId> active,
                         std::uint64_t batch_start, std::uint64_t batch_len) {
  MarkArray out;
  out.batch_start = batch_start;
  const std::uint64_t blocks = index.num_blocks();
  if (batch_start >= blocks) {
    return out;
  }
  const std::uint64_t len = std::min(batch_len, blocks - batch_start);
  const std::size_t nwords = static_cast<std::size_t>((len + 63) / 64);
  std::vector<std::uint64_t> marked(nwords, 0);
  auto full = [&](std::size_t w) {
    const std::uint64_t bits = std::min<std::uint64_t>(64, len - 64 * w);
    return bits == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
  };
  for (CandidateId cand : active) {
    const auto words = index.words(cand);
    for (std::size_t w = 0; w < nwords; ++w) {
      const std::uint64_t mask = full(w);
      if (marked[w] == mask) {
        continue;
      }
      marked[w] |= extract_bits(words, batch_start + 64 * w) & mask;
    }
  }
  out.marks.resize(len, Mark::Skip);
  for (std::uint64_t i = 0; i < len; ++i) {
    if ((marked[i >> 6] >> (i & 63)) & 1u) {
      out.marks[i] = Mark::Read;
    }
  }
  return out;
}

std::vector<CandidateId> active_candidates(std::span<const CandidateState> states,
                                           std::span<const CandidateId> universe, Stage stage,
                                           std::uint64_t stage3_threshold) {
  std::vector<CandidateId> out;
  for (CandidateId id : universe) {
    const CandidateState& s = states[id];
    if (s.exhausted) {
      continue;
    }
    const bool wants = stage == Stage::Identify ? s.n_round() < s.budget
                                                : s.n_accum() + s.n_round() < stage3_threshold;
    if (wants) out.push_back(id);
  }
  return out;
}

std::uint64_t process_block(const BlockSlice& slice, std::span<const std::uint8_t> universe,
                            std::span<CandidateState> states) {
  if (slice.columns.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "process_block needs the X and Z columns");
  }
  const auto xs = slice.columns[0];
  const auto zs = slice.columns[1];
  std::uint64_t credited = 0;
  for (std::size_t r = 0; r < zs.size(); ++r) {
    if (universe[zs[r]]) {
      states[zs[r]].counts_round.add(xs[r]);
      ++credited;
    }
  }
  return credited;
}

HistSim::HistSim(const Dataset& dataset, const BitmapIndex& z_index, QuerySpec query, RunConfig config)
    : dataset_(dataset), z_index_(z_index), query_(std::move(query)), config_(config) {
  started_ms_ = now_ms();
  query_.validate();
  config_.validate();
  x_col_ = dataset_.attribute_index(query_.x_attribute);
  z_col_ = dataset_.attribute_index(query_.z_attribute);
  if (z_index_.attribute() != query_.z_attribute) {
    throw Error(ErrorCode::InvalidArgument, "bitmap index is for '" + z_index_.attribute() +
                                                "', not '" + query_.z_attribute + "'");
  }
  if (dataset_.row_count() == 0) {
    throw Error(ErrorCode::EmptyDataset, "dataset is empty");
  }
  num_groups_ = static_cast<std::uint32_t>(dataset_.dictionaries[x_col_].size());
  const std::size_t candidates = dataset_.dictionaries[z_col_].size();

  states_.resize(candidates);
  for (CandidateId id = 0; id < candidates; ++id) {
    states_[id].id = id;
    states_[id].counts_accum = HistogramCounts(num_groups_);
    states_[id].counts_round = HistogramCounts(num_groups_);
    states_[id].tau_accum = kInf;
  }
  eligible_.assign(candidates, 1);
  resolve_target();

  Rng rng(config_.rng_seed);
  start_block_ = config_.start_block ? *config_.start_block % dataset_.block_count()
                                     : rng.uniform_below(dataset_.block_count());
  diag_.start_block = start_block_;
  diag_.total_blocks = dataset_.block_count();
  diag_.total_rows = dataset_.row_count();
  diag_.stage3_threshold = stats::stage3_samples_needed(query_.epsilon, num_groups_, query_.k, query_.delta);

  sampler_storage_ = std::make_unique<BlockSampler>(dataset_, x_col_, z_col_, z_index_, start_block_);
  driver_ = make_sampling_driver(*sampler_storage_, z_index_, states_, config_.policy, config_.lookahead,
                                 config_.mode);
}

HistSim::~HistSim() = default;

void HistSim::resolve_target() {
  if (std::holds_alternative<UniformTarget>(query_.target)) {
    target_ = Distribution::uniform(num_groups_);
    return;
  }
  if (const auto* e = std::get_if<ExplicitTarget>(&query_.target)) {
    if (e->weights.size() != num_groups_) {
      throw Error(ErrorCode::LengthMismatch, "target has " + std::to_string(e->weights.size()) +
                                                 " entries but X has " + std::to_string(num_groups_) +
                                                 " groups");
    }
    target_ = Distribution::from_weights(e->weights);
    return;
  }
  const auto& named = std::get<CandidateTarget>(query_.target);
  const auto code = dataset_.dictionaries[z_col_].find(named.value);
  if (!code) {
    throw Error(ErrorCode::InvalidArgument, "target candidate '" + named.value + "' does not occur in '" +
                                                query_.z_attribute + "'");
  }
  // Exact pass over the blocks that hold the target candidate.
  HistogramCounts counts(num_groups_);
  const std::size_t cols[] = {x_col_, z_col_};
  for (std::uint64_t b = 0; b < dataset_.block_count(); ++b) {
    if (!z_index_.test(*code, b)) {
      continue;
    }
    ++diag_.target_scan_blocks;
    const BlockSlice slice = read_block(dataset_, b, cols);
    for (std::size_t r = 0; r < slice.size(); ++r) {
      if (slice.columns[1][r] == *code) counts.add(slice.columns[0][r]);
    }
  }
  target_ = normalize(counts);
  if (!query_.include_target_candidate) {
    eligible_[*code] = 0;
  }
}

void HistSim::refresh_tau(CandidateId id) {
  CandidateState& s = states_[id];
  s.tau_accum = s.n_accum() > 0 ? l1_distance(s.counts_accum, target_) : kInf;
}

void HistSim::fold_round(std::span<const CandidateId> ids) {
  for (CandidateId id : ids) {
    CandidateState& s = states_[id];
    if (s.n_round() > 0) {
      s.counts_accum += s.counts_round;
      s.counts_round.clear();
    }
    refresh_tau(id);
  }
}

bool HistSim::all_exhausted(std::span<const CandidateId> ids) const {
  return std::all_of(ids.begin(), ids.end(), [&](CandidateId id) { return states_[id].exhausted; });
}

std::vector<CandidateId> HistSim::sorted_by_tau(std::vector<CandidateId> ids) const {
  std::sort(ids.begin(), ids.end(), [&](CandidateId a, CandidateId b) {
    const double ta = states_[a].tau_accum;
    const double tb = states_[b].tau_accum;
    return ta < tb || (ta == tb && a < b);
  });
  return ids;
}

// Every surviving candidate has been read in full: its counts are exact, so
// the selectivity filter can be applied exactly and M is the true top-k.
void HistSim::finalize_exact() {
  const std::uint64_t need = stats::min_candidate_rows(dataset_.row_count(), query_.sigma);
  std::vector<CandidateId> kept;
  std::vector<ScoredCandidate> scored;
  for (CandidateId id : surviving_) {
    if (states_[id].n_accum() == 0 || states_[id].n_accum() < need) {
      states_[id].pruned = true;
      ++diag_.pruned_count;
      continue;
    }
    kept.push_back(id);
    scored.push_back({id, states_[id].tau_accum});
  }
  surviving_ = std::move(kept);
  diag_.surviving_count = surviving_.size();
  matching_ = top_k_select(scored, query_.k);
  exact_ = true;
}

const std::vector<CandidateId>& HistSim::stage1_prune() {
  if (stage1_done_) {
    return surviving_;
  }
  stage1_done_ = true;
  std::vector<CandidateId> universe;
  for (CandidateId id = 0; id < states_.size(); ++id) {
    if (eligible_[id]) universe.push_back(id);
  }
  const std::uint64_t draws = driver_->read_sequential(config_.m, universe);
  driver_->settle();
  diag_.stage1_tuples = draws;
  fold_round(universe);

  std::vector<std::uint64_t> observed;
  observed.reserve(universe.size());
  for (CandidateId id : universe) observed.push_back(states_[id].n_accum());

  std::vector<std::uint8_t> reject(states_.size(), 0);
  if (query_.sigma > 0.0) {
    const auto pvals =
        stats::underrepresentation_pvalues(dataset_.row_count(), query_.sigma, draws, observed);
    std::vector<stats::PValue> family;
    family.reserve(universe.size());
    for (std::size_t i = 0; i < universe.size(); ++i) family.push_back({universe[i], pvals[i]});
    for (CandidateId id : stats::holm_bonferroni(family, query_.delta / 3.0)) reject[id] = 1;
  }

  for (CandidateId id : universe) {
    CandidateState& s = states_[id];
    // Candidates with no rows at all have no defined distance.
    const bool empty = s.exhausted && s.n_accum() == 0;
    if (reject[id] || empty) {
      s.pruned = true;
      ++diag_.pruned_count;
    } else {
      surviving_.push_back(id);
    }
  }
  for (CandidateId id = 0; id < states_.size(); ++id) {
    if (!eligible_[id]) states_[id].pruned = true;
  }
  diag_.surviving_count = surviving_.size();
  diag_.no_candidates_survive = surviving_.empty();
  return surviving_;
}

const std::vector<CandidateId>& HistSim::stage2_identify() {
  stage1_prune();
  if (stage2_done_) {
    return matching_;
  }
  stage2_done_ = true;
  if (surviving_.empty()) {
    return matching_;
  }
  if (all_exhausted(surviving_)) {
    finalize_exact();
    return matching_;
  }
  if (surviving_.size() <= query_.k) {
    matching_ = sorted_by_tau(surviving_);
    return matching_;
  }

  const std::uint32_t G = num_groups_;
  const double eps = query_.epsilon;
  double delta_upper = query_.delta / 3.0;
  std::vector<std::uint8_t> in_matching(states_.size(), 0);
  for (;;) {
    delta_upper /= 2.0;
    ++diag_.rounds;
    driver_->settle();
    fold_round(surviving_);
    if (all_exhausted(surviving_)) {
      finalize_exact();
      break;
    }

    std::vector<ScoredCandidate> scored;
    scored.reserve(surviving_.size());
    for (CandidateId id : surviving_) scored.push_back({id, states_[id].tau_accum});
    matching_ = top_k_select(scored, query_.k);
    std::fill(in_matching.begin(), in_matching.end(), 0);
    for (CandidateId id : matching_) in_matching[id] = 1;
    std::vector<double> m_taus;
    std::vector<double> c_taus;
    for (CandidateId id : surviving_) {
      (in_matching[id] ? m_taus : c_taus).push_back(states_[id].tau_accum);
    }
    const double split = split_point(m_taus, c_taus);

    for (CandidateId id : surviving_) {
      CandidateState& s = states_[id];
      const double slack = in_matching[id] ? split + eps / 2.0 - s.tau_accum
                                           : s.tau_accum - (split - eps / 2.0);
      // No estimate yet (infinite distance or split): one sample gets one.
      s.budget = (std::isnan(slack) || !(slack > 0.0)) ? 1 : stats::samples_needed(slack, G, delta_upper);
    }
    driver_->run_phase(PhaseRequest{Stage::Identify, surviving_, 0});

    stats::RoundTestInput test;
    test.split = split;
    test.epsilon = eps;
    test.num_groups = G;
    test.candidates.reserve(surviving_.size());
    for (CandidateId id : surviving_) {
      CandidateState& s = states_[id];
      stats::RoundTestEntry e;
      e.id = id;
      e.matching = in_matching[id] != 0;
      e.n_round = s.n_round();
      e.exhausted = s.exhausted;
      if (s.n_round() > 0) {
        s.tau_round = l1_distance(s.counts_round, target_);
        e.tau_round = s.tau_round;
      }
      if (s.exhausted) {
        HistogramCounts all = s.counts_accum;
        all += s.counts_round;
        e.exact_tau = l1_distance(all, target_);
      }
      test.candidates.push_back(e);
    }
    const auto pvals = stats::round_pvalues(test);
    if (stats::simultaneous_reject(pvals.pvalues, delta_upper)) {
      break;
    }
  }
  diag_.final_delta_upper = delta_upper;
  driver_->settle();
  fold_round(surviving_);
  return matching_;
}

void HistSim::stage3_reconstruct() {
  stage2_identify();
  if (stage3_done_) {
    return;
  }
  stage3_done_ = true;
  if (matching_.empty() || exact_) {
    return;
  }
  driver_->run_phase(PhaseRequest{Stage::Reconstruct, matching_, diag_.stage3_threshold});
  driver_->settle();
  fold_round(matching_);
  if (all_exhausted(surviving_)) {
    finalize_exact();
  }
}

MatchResult HistSim::result() const {
  MatchResult out;
  out.diagnostics = diag_;
  const BlockSampler& sampler = driver_->sampler();
  out.diagnostics.blocks_read = sampler.blocks_read();
  out.diagnostics.blocks_skipped = sampler.blocks_skipped();
  out.diagnostics.tuples_read = sampler.tuples_read();
  out.diagnostics.tuples_sampled = sampler.tuples_sampled();
  out.diagnostics.exact = exact_;
  out.diagnostics.elapsed_ms = now_ms() - started_ms_;
  const auto& dict = dataset_.dictionaries[z_col_];
  for (CandidateId id : sorted_by_tau(matching_)) {
    const CandidateState& s = states_[id];
    out.matches.push_back({id, dict.decode(id), s.counts_accum, s.tau_accum, s.exhausted});
  }
  return out;
}

MatchResult HistSim::run() {
  stage1_prune();
  stage2_identify();
  stage3_reconstruct();
  driver_->settle();
  return result();
}

MatchResult histsim_run(const Dataset& dataset, const BitmapIndex& z_index, const QuerySpec& query,
                        const RunConfig& config) {
  HistSim sim(dataset, z_index, query, config);
  return sim.run();
}

}  // namespace fastmatch
