// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "fastmatch/eval.hpp"
#include "test_util.hpp"

namespace fastmatch {
namespace {

QuerySpec synth_query(std::uint32_t k, double epsilon, double delta, double sigma) {
  QuerySpec q;
  q.x_attribute = std::string(SynthSpec::kGroupAttribute);
  q.z_attribute = std::string(SynthSpec::kCandidateAttribute);
  q.k = k;
  q.epsilon = epsilon;
  q.delta = delta;
  q.sigma = sigma;
  return q;
}

TEST(Synth, PlantedDistancesAreReached) {
  SynthSpec s;
  s.num_candidates = 2;
  s.num_groups = 5;
  s.rows = 200000;
  s.distance = DistanceProfile::Explicit;
  s.distances = {0.0, 1.0};
  const SynthOutput d = synth_generate(s);
  EXPECT_EQ(d.truth.counts[0].total(), 100000u);
  EXPECT_NEAR(l1_distance(d.truth.counts[0], d.target), 0.0, 0.02);
  EXPECT_NEAR(l1_distance(d.truth.counts[1], d.target), 1.0, 0.02);
  EXPECT_NEAR(l1_distance(d.planted[1], d.target), 1.0, 1e-12);
}

TEST(Synth, ExplicitTargetAndRandomDistances) {
  SynthSpec s;
  s.num_candidates = 20;
  s.num_groups = 4;
  s.rows = 400000;
  s.target = {4.0, 3.0, 2.0, 1.0};
  s.distance = DistanceProfile::UniformRandom;
  s.distance_lo = 0.2;
  s.distance_hi = 1.0;
  const SynthOutput d = synth_generate(s);
  for (CandidateId i = 0; i < 20; ++i) {
    EXPECT_GE(d.planted_distances[i], 0.2);
    EXPECT_LE(d.planted_distances[i], 1.0);
    EXPECT_NEAR(l1_distance(d.planted[i], d.target), d.planted_distances[i], 1e-12);
    EXPECT_NEAR(l1_distance(d.truth.counts[i], d.target), d.planted_distances[i], 0.02);
  }
}

TEST(Synth, TruthMatchesScan) {
  SynthSpec s;
  s.num_candidates = 30;
  s.rows = 50000;
  s.selectivity = SelectivityProfile::Zipf;
  const SynthOutput d = synth_generate(s);
  const auto scan = scan_groupby(d.dataset, "group", "candidate", 0.0);
  for (const auto& [id, counts] : scan) EXPECT_EQ(counts, d.truth.counts[id]);
  std::uint64_t total = 0;
  for (const auto& c : d.truth.counts) total += c.total();
  EXPECT_EQ(total, s.rows);
}

TEST(Synth, ZipfHasRareTail) {
  SynthSpec s;
  s.num_candidates = 1000;
  s.rows = 1000000;
  s.selectivity = SelectivityProfile::Zipf;
  const SynthOutput d = synth_generate(s);
  int rare = 0;
  for (CandidateId i = 0; i < 1000; ++i) rare += d.truth.selectivity(i) < 0.0008 ? 1 : 0;
  EXPECT_GT(rare, 500);
}

TEST(Synth, DeterministicPerSeed) {
  SynthSpec s;
  s.rows = 20000;
  s.distance = DistanceProfile::UniformRandom;
  s.rng_seed = 4;
  const SynthOutput a = synth_generate(s);
  const SynthOutput b = synth_generate(s);
  EXPECT_EQ(a.dataset, b.dataset);
  EXPECT_EQ(a.z_index, b.z_index);
  s.rng_seed = 5;
  EXPECT_NE(synth_generate(s).dataset.columns, a.dataset.columns);
}

TEST(Synth, InfeasibleSpecs) {
  SynthSpec s;
  s.num_candidates = 1;
  s.num_groups = 4;
  s.distance = DistanceProfile::Explicit;
  s.distances = {2.5};
  EXPECT_FM_ERROR(synth_generate(s), ErrorCode::InfeasibleSpec);
  s.distances = {1.9};  // uniform over 4 groups reaches at most 1.5
  EXPECT_FM_ERROR(synth_generate(s), ErrorCode::InfeasibleSpec);
  s.distances = {1.5};
  EXPECT_NO_THROW(synth_generate(s));
}

// Candidates with hand-set exact histograms against a uniform 2-group target.
struct Fixture {
  Dataset dataset;
  GroundTruth truth;
  Distribution target = Distribution::uniform(2);
};

Fixture fixture(const std::vector<HistogramCounts>& counts) {
  Fixture f;
  const auto z = f.dataset.add_attribute("candidate");
  const auto x = f.dataset.add_attribute("group");
  f.dataset.dictionaries[x].encode("g0");
  f.dataset.dictionaries[x].encode("g1");
  for (CandidateId i = 0; i < counts.size(); ++i) {
    f.dataset.dictionaries[z].encode("c" + std::to_string(i));
    for (GroupId g = 0; g < 2; ++g)
      for (std::uint64_t n = 0; n < counts[i][g]; ++n) {
        f.dataset.columns[z].push_back(i);
        f.dataset.columns[x].push_back(g);
      }
  }
  f.truth = exact_truth(f.dataset, "group", "candidate");
  return f;
}

TEST(DeltaD, HandComputed) {
  // Exact distances 0.1, 0.2, 0.3 from the uniform target.
  const Fixture f = fixture({{55, 45}, {60, 40}, {65, 35}});
  const std::vector<CandidateId> best{0, 1};
  const std::vector<CandidateId> worse{0, 2};
  EXPECT_NEAR(delta_d(best, best, f.truth, f.target), 0.0, 1e-15);
  EXPECT_NEAR(delta_d(worse, best, f.truth, f.target), 1.0 / 3.0, 1e-12);
}

TEST(DeltaD, ZeroDenominator) {
  const Fixture f = fixture({{50, 50}, {60, 40}});
  const std::vector<CandidateId> zero{0};
  const std::vector<CandidateId> other{1};
  EXPECT_EQ(delta_d(zero, zero, f.truth, f.target), 0.0);
  EXPECT_TRUE(std::isinf(delta_d(other, zero, f.truth, f.target)));
}

TEST(DeltaD, NegativeWithSubSigmaOutput) {
  // Candidate 2 is closest but too rare for sigma = 0.1.
  const Fixture f = fixture({{60, 40}, {65, 35}, {5, 5}});
  const QuerySpec q = synth_query(1, 0.05, 0.05, 0.1);
  const auto oracle = oracle_top_k(f.dataset, f.truth, f.target, q);
  EXPECT_EQ(oracle, (std::vector<CandidateId>{0}));
  const std::vector<CandidateId> got{2};
  EXPECT_LT(delta_d(got, oracle, f.truth, f.target), 0.0);
}

MatchResult result_with(const Fixture& f, std::vector<CandidateId> ids, bool exact = false) {
  MatchResult r;
  for (CandidateId id : ids) r.matches.push_back({id, "", f.truth.counts[id], 0.0, false});
  r.diagnostics.exact = exact;
  return r;
}

TEST(CheckGuarantees, SeparationAndReconstruction) {
  const Fixture f = fixture({{55, 45}, {60, 40}, {80, 20}});
  const QuerySpec q = synth_query(1, 0.05, 0.05, 0.0);
  EXPECT_TRUE(check_guarantees(result_with(f, {0}), f.dataset, f.truth, q).ok());
  // 0.1 vs 0.2: within epsilon = 0.15 but not 0.05.
  GuaranteeReport bad = check_guarantees(result_with(f, {1}), f.dataset, f.truth, q);
  EXPECT_FALSE(bad.separation_ok);
  EXPECT_EQ(bad.violated_candidates, (std::vector<CandidateId>{0}));
  QuerySpec loose = q;
  loose.epsilon = 0.15;
  EXPECT_TRUE(check_guarantees(result_with(f, {1}), f.dataset, f.truth, loose).separation_ok);

  MatchResult off = result_with(f, {0});
  off.matches[0].histogram = HistogramCounts{80, 20};
  const GuaranteeReport rec = check_guarantees(off, f.dataset, f.truth, q);
  EXPECT_TRUE(rec.separation_ok);
  EXPECT_FALSE(rec.reconstruction_ok);
}

TEST(CheckGuarantees, ExactResultsPass) {
  const Fixture f = fixture({{55, 45}, {60, 40}});
  const GuaranteeReport r = check_guarantees(result_with(f, {1}, true), f.dataset, f.truth,
                                             synth_query(1, 0.01, 0.05, 0.0));
  EXPECT_TRUE(r.exact_flag);
  EXPECT_TRUE(r.ok());
}

TEST(CheckGuarantees, ShortOutputIsASeparationFailure) {
  const Fixture f = fixture({{55, 45}, {60, 40}});
  EXPECT_FALSE(check_guarantees(result_with(f, {}), f.dataset, f.truth, synth_query(1, 0.5, 0.05, 0.0)).ok());
}

TEST(Baselines, Names) {
  for (Baseline b : {Baseline::Scan, Baseline::ScanMatch, Baseline::SyncMatch, Baseline::FastMatch}) {
    EXPECT_EQ(parse_baseline(baseline_name(b)), b);
  }
}

TEST(Baselines, AllPoliciesOnEasyData) {
  SynthSpec s;
  s.num_candidates = 10;
  s.num_groups = 5;
  s.rows = 300000;
  s.distance = DistanceProfile::Linspace;
  s.distance_lo = 0.0;
  s.distance_hi = 1.5;
  s.rows_per_block = 128;
  const SynthOutput data = synth_generate(s);
  const QuerySpec q = synth_query(2, 0.05, 0.05, 0.001);
  const auto oracle = oracle_top_k(data.dataset, data.truth, data.target, q);
  RunConfig c;
  c.m = 20000;
  for (Baseline b : {Baseline::Scan, Baseline::ScanMatch, Baseline::SyncMatch, Baseline::FastMatch}) {
    const MatchResult r = run_baseline(data.dataset, data.z_index, q, b, c);
    const GuaranteeReport rep = check_guarantees(r, data.dataset, data.truth, q);
    EXPECT_TRUE(rep.ok()) << baseline_name(b);
    if (b == Baseline::Scan) {
      EXPECT_EQ(r.matched_ids(), oracle);
      EXPECT_EQ(rep.delta_d, 0.0);
      EXPECT_TRUE(r.diagnostics.exact);
    }
  }
}

TEST(Campaign, EasySpecHasNoViolations) {
  SynthSpec s;
  s.num_candidates = 12;
  s.num_groups = 6;
  s.rows = 200000;
  s.distance = DistanceProfile::Linspace;
  s.distance_lo = 0.0;
  s.distance_hi = 1.5;
  s.rows_per_block = 128;
  const SynthOutput data = synth_generate(s);
  RunConfig c;
  c.m = 20000;
  CampaignOptions o;
  o.runs = 20;
  o.workers = 2;
  const CampaignSummary sum = monte_carlo_verify(data, synth_query(2, 0.05, 0.05, 0.001), c, o);
  EXPECT_EQ(sum.records.size(), 20u);
  EXPECT_EQ(sum.violations, 0u);
  EXPECT_EQ(sum.stage3_failures, 0u);
  EXPECT_GT(sum.mean_tuples_read_fraction, 0.0);
  EXPECT_LE(sum.mean_tuples_read_fraction, 1.0);
  EXPECT_TRUE(binomial_consistent(sum.runs, sum.violations, 0.05, 0.99));
}

TEST(Binomial, Bounds) {
  // Zero failures in 200 trials: 1 - 0.01^(1/200).
  EXPECT_NEAR(binomial_upper_bound(200, 0, 0.99), 1.0 - std::pow(0.01, 1.0 / 200), 1e-9);
  EXPECT_EQ(binomial_lower_bound(200, 0, 0.99), 0.0);
  EXPECT_TRUE(binomial_consistent(200, 10, 0.05, 0.99));
  EXPECT_FALSE(binomial_consistent(200, 30, 0.05, 0.99));
}

}  // namespace
}  // namespace fastmatch
