// SPDX-License-Identifier: Apache-2.0
#include "fastmatch/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include <boost/math/distributions/binomial.hpp>

#include "fastmatch/error.hpp"
#include "fastmatch/random.hpp"
#include "fastmatch/stats.hpp"

namespace fastmatch {

namespace {

double exact_distance(const GroundTruth& truth, CandidateId id, const Distribution& target) {
  return l1_distance(truth.counts.at(id), target);
}

std::optional<CandidateId> excluded_candidate(const Dataset& dataset, const QuerySpec& query) {
  const auto* named = std::get_if<CandidateTarget>(&query.target);
  if (named == nullptr || query.include_target_candidate) {
    return std::nullopt;
  }
  return dataset.dictionaries[dataset.attribute_index(query.z_attribute)].find(named->value);
}

}  // namespace

Distribution exact_target(const Dataset& dataset, const GroundTruth& truth, const QuerySpec& query) {
  const std::size_t groups = dataset.dictionaries[dataset.attribute_index(query.x_attribute)].size();
  if (std::holds_alternative<UniformTarget>(query.target)) {
    return Distribution::uniform(groups);
  }
  if (const auto* e = std::get_if<ExplicitTarget>(&query.target)) {
    if (e->weights.size() != groups) {
      throw Error(ErrorCode::LengthMismatch, "target length does not match the number of groups");
    }
    return Distribution::from_weights(e->weights);
  }
  const auto& named = std::get<CandidateTarget>(query.target);
  const auto code = dataset.dictionaries[dataset.attribute_index(query.z_attribute)].find(named.value);
  if (!code) {
    throw Error(ErrorCode::InvalidArgument, "target candidate '" + named.value + "' does not occur");
  }
  return normalize(truth.counts.at(*code));
}

std::vector<CandidateId> eligible_candidates(const Dataset& dataset, const GroundTruth& truth,
                                             const QuerySpec& query) {
  const std::uint64_t need = stats::min_candidate_rows(truth.row_count, query.sigma);
  const auto excluded = excluded_candidate(dataset, query);
  std::vector<CandidateId> out;
  for (CandidateId id = 0; id < truth.counts.size(); ++id) {
    const std::uint64_t n = truth.counts[id].total();
    if (n > 0 && n >= need && excluded != id) out.push_back(id);
  }
  return out;
}

std::vector<CandidateId> oracle_top_k(const Dataset& dataset, const GroundTruth& truth, const Distribution& target,
                                      const QuerySpec& query) {
  std::vector<ScoredCandidate> scored;
  for (CandidateId id : eligible_candidates(dataset, truth, query)) {
    scored.push_back({id, exact_distance(truth, id, target)});
  }
  return top_k_select(scored, query.k);
}

double delta_d(std::span<const CandidateId> matched, std::span<const CandidateId> oracle_ids,
               const GroundTruth& truth, const Distribution& target) {
  double got = 0.0;
  double best = 0.0;
  for (CandidateId id : matched) got += exact_distance(truth, id, target);
  for (CandidateId id : oracle_ids) best += exact_distance(truth, id, target);
  if (best == 0.0) {
    return got == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return (got - best) / best;
}

GuaranteeReport check_guarantees(const MatchResult& result, const Dataset& dataset, const GroundTruth& truth,
                                 const QuerySpec& query) {
  const Distribution target = exact_target(dataset, truth, query);
  const std::vector<CandidateId> eligible = eligible_candidates(dataset, truth, query);
  const std::vector<CandidateId> oracle = oracle_top_k(dataset, truth, target, query);
  const std::vector<CandidateId> matched = result.matched_ids();

  GuaranteeReport report;
  report.exact_flag = result.diagnostics.exact;
  report.delta_d = delta_d(matched, oracle, truth, target);
  if (report.exact_flag) {
    return report;
  }

  double worst = -std::numeric_limits<double>::infinity();
  for (CandidateId id : matched) worst = std::max(worst, exact_distance(truth, id, target));
  if (matched.size() < std::min<std::size_t>(query.k, eligible.size())) {
    worst = std::numeric_limits<double>::infinity();
  }
  for (CandidateId id : eligible) {
    if (std::find(matched.begin(), matched.end(), id) != matched.end()) {
      continue;
    }
    if (worst - exact_distance(truth, id, target) >= query.epsilon) {
      report.separation_ok = false;
      report.violated_candidates.push_back(id);
    }
  }
  for (const MatchedCandidate& m : result.matches) {
    const bool close = m.histogram.total() > 0 && l1_distance(m.histogram, truth.counts.at(m.id)) < query.epsilon;
    if (!close) {
      report.reconstruction_ok = false;
      report.violated_candidates.push_back(m.id);
    }
  }
  std::sort(report.violated_candidates.begin(), report.violated_candidates.end());
  report.violated_candidates.erase(std::unique(report.violated_candidates.begin(), report.violated_candidates.end()),
                                   report.violated_candidates.end());
  return report;
}

bool stage3_satisfied(const MatchResult& result, const QuerySpec& query, std::uint32_t num_groups) {
  const std::uint64_t threshold = stats::stage3_samples_needed(query.epsilon, num_groups, query.k, query.delta);
  return std::all_of(result.matches.begin(), result.matches.end(), [&](const MatchedCandidate& m) {
    return m.exhausted || m.histogram.total() >= threshold;
  });
}

std::string_view baseline_name(Baseline baseline) noexcept {
  switch (baseline) {
    case Baseline::Scan: return "scan";
    case Baseline::ScanMatch: return "scanmatch";
    case Baseline::SyncMatch: return "syncmatch";
    case Baseline::FastMatch: return "fastmatch";
  }
  return "unknown";
}

std::optional<Baseline> parse_baseline(std::string_view name) noexcept {
  for (Baseline b : {Baseline::Scan, Baseline::ScanMatch, Baseline::SyncMatch, Baseline::FastMatch}) {
    if (baseline_name(b) == name) return b;
  }
  return std::nullopt;
}

MatchResult run_baseline(const Dataset& dataset, const BitmapIndex& z_index, const QuerySpec& query,
                         Baseline baseline, RunConfig config) {
  switch (baseline) {
    case Baseline::ScanMatch:
      config.policy = Policy::SequentialScan;
      return histsim_run(dataset, z_index, query, config);
    case Baseline::SyncMatch:
      config.policy = Policy::AnyActiveSync;
      config.lookahead = 1;
      return histsim_run(dataset, z_index, query, config);
    case Baseline::FastMatch:
      config.policy = Policy::AnyActiveLookahead;
      return histsim_run(dataset, z_index, query, config);
    case Baseline::Scan:
      break;
  }

  const auto started = std::chrono::steady_clock::now();
  query.validate();
  const GroundTruth truth = exact_truth(dataset, query.x_attribute, query.z_attribute);
  const Distribution target = exact_target(dataset, truth, query);
  const auto eligible = eligible_candidates(dataset, truth, query);
  const auto& dict = dataset.dictionaries[dataset.attribute_index(query.z_attribute)];

  MatchResult out;
  for (CandidateId id : oracle_top_k(dataset, truth, target, query)) {
    out.matches.push_back({id, dict.decode(id), truth.counts[id], exact_distance(truth, id, target), true});
  }
  Diagnostics& d = out.diagnostics;
  d.total_rows = dataset.row_count();
  d.total_blocks = dataset.block_count();
  d.blocks_read = d.total_blocks;
  d.tuples_read = d.total_rows;
  d.tuples_sampled = d.total_rows;
  d.surviving_count = eligible.size();
  d.pruned_count = dict.size() - eligible.size();
  d.exact = true;
  d.no_candidates_survive = eligible.empty();
  d.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return out;
}

CampaignSummary monte_carlo_verify(const SynthOutput& data, const QuerySpec& query, const RunConfig& config,
                                   const CampaignOptions& options) {
  if (options.runs == 0) {
    throw Error(ErrorCode::InvalidArgument, "a campaign needs at least one run");
  }
  const auto groups = static_cast<std::uint32_t>(
      data.dataset.dictionaries[data.dataset.attribute_index(query.x_attribute)].size());
  CampaignSummary summary;
  summary.runs = options.runs;
  summary.records.resize(options.runs);

  auto one_run = [&](std::uint32_t r) {
    RunRecord& rec = summary.records[r];
    rec.seed = Rng::derive(options.base_seed, r);
    RunConfig cfg = config;
    cfg.rng_seed = rec.seed;
    MatchResult result;
    if (options.reshuffle) {
      const Dataset ds = shuffle(data.dataset, rec.seed);
      const BitmapIndex index = build_bitmap_index(ds, query.z_attribute);
      result = run_baseline(ds, index, query, options.baseline, cfg);
      rec.report = check_guarantees(result, ds, data.truth, query);
    } else {
      result = run_baseline(data.dataset, data.z_index, query, options.baseline, cfg);
      rec.report = check_guarantees(result, data.dataset, data.truth, query);
    }
    const Diagnostics& d = result.diagnostics;
    rec.stage3_ok = stage3_satisfied(result, query, groups);
    rec.rounds = d.rounds;
    rec.blocks_read = d.blocks_read;
    rec.tuples_read_fraction = static_cast<double>(d.tuples_read) / static_cast<double>(d.total_rows);
    rec.blocks_skipped_fraction =
        1.0 - static_cast<double>(d.blocks_read) / static_cast<double>(d.total_blocks);
    rec.elapsed_ms = d.elapsed_ms;
  };

  const std::uint32_t workers = std::clamp<std::uint32_t>(options.workers, 1, options.runs);
  if (workers == 1) {
    for (std::uint32_t r = 0; r < options.runs; ++r) one_run(r);
  } else {
    std::atomic<std::uint32_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::uint32_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::uint32_t r = next++; r < options.runs; r = next++) one_run(r);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (const RunRecord& rec : summary.records) {
    summary.violations += rec.report.ok() ? 0 : 1;
    summary.stage3_failures += rec.stage3_ok ? 0 : 1;
    summary.exact_runs += rec.report.exact_flag ? 1 : 0;
    summary.mean_delta_d += rec.report.delta_d;
    summary.mean_tuples_read_fraction += rec.tuples_read_fraction;
    summary.mean_blocks_skipped_fraction += rec.blocks_skipped_fraction;
    summary.mean_rounds += static_cast<double>(rec.rounds);
    summary.mean_elapsed_ms += rec.elapsed_ms;
  }
  const double n = options.runs;
  summary.violation_rate = summary.violations / n;
  summary.violation_upper_99 = binomial_upper_bound(options.runs, summary.violations, 0.99);
  summary.mean_delta_d /= n;
  summary.mean_tuples_read_fraction /= n;
  summary.mean_blocks_skipped_fraction /= n;
  summary.mean_rounds /= n;
  summary.mean_elapsed_ms /= n;
  return summary;
}

double binomial_upper_bound(std::uint64_t trials, std::uint64_t successes, double confidence) {
  using boost::math::binomial_distribution;
  return binomial_distribution<>::find_upper_bound_on_p(static_cast<double>(trials),
                                                        static_cast<double>(successes), 1.0 - confidence);
}

double binomial_lower_bound(std::uint64_t trials, std::uint64_t successes, double confidence) {
  using boost::math::binomial_distribution;
  return binomial_distribution<>::find_lower_bound_on_p(static_cast<double>(trials),
                                                        static_cast<double>(successes), 1.0 - confidence);
}

bool binomial_consistent(std::uint64_t trials, std::uint64_t successes, double p0, double confidence) {
  return binomial_lower_bound(trials, successes, confidence) <= p0;
}

}  // namespace fastmatch
