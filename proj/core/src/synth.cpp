// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fastmatch/error.hpp"
#include "fastmatch/eval.hpp"
#include "fastmatch/random.hpp"

namespace fastmatch {

namespace {

std::string padded_label(char prefix, std::uint64_t index, int width) {
  std::string digits = std::to_string(index);
  if (digits.size() < static_cast<std::size_t>(width)) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

int label_width(std::uint64_t count, int min_width) {
  int w = 1;
  for (std::uint64_t v = count > 0 ? count - 1 : 0; v >= 10; v /= 10) ++w;
  return std::max(w, min_width);
}

std::vector<double> selectivity_weights(const SynthSpec& spec) {
  std::vector<double> w(spec.num_candidates, 1.0);
  switch (spec.selectivity) {
    case SelectivityProfile::Uniform:
      break;
    case SelectivityProfile::Zipf:
      for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = 1.0 / std::pow(static_cast<double>(i + 1), spec.zipf_exponent);
      }
      break;
    case SelectivityProfile::Explicit:
      w = spec.selectivities;
      break;
  }
  return w;
}

// Largest-remainder apportionment of `rows` proportional to `weights`.
std::vector<std::uint64_t> apportion(const std::vector<double>& weights, std::uint64_t rows) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::uint64_t> out(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = weights[i] / sum * static_cast<double>(rows);
    out[i] = static_cast<std::uint64_t>(std::floor(exact));
    assigned += out[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t j = 0; assigned < rows; ++j, ++assigned) {
    ++out[remainders[j % remainders.size()].second];
  }
  return out;
}

std::vector<double> requested_distances(const SynthSpec& spec, Rng& rng) {
  std::vector<double> d(spec.num_candidates);
  switch (spec.distance) {
    case DistanceProfile::Explicit:
      d = spec.distances;
      break;
    case DistanceProfile::Linspace:
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double t = d.size() > 1 ? static_cast<double>(i) / static_cast<double>(d.size() - 1) : 0.0;
        d[i] = spec.distance_lo + (spec.distance_hi - spec.distance_lo) * t;
      }
      break;
    case DistanceProfile::UniformRandom:
      for (double& v : d) v = spec.distance_lo + (spec.distance_hi - spec.distance_lo) * rng.uniform01();
      break;
  }
  return d;
}

// Moves mass lambda of q onto group j: ||p - q||_1 = 2 lambda (1 - q_j).
std::vector<double> plant(const std::vector<double>& q, double d, Rng& rng) {
  if (d == 0.0) {
    return q;
  }
  std::vector<std::size_t> feasible;
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (2.0 * (1.0 - q[j]) >= d) feasible.push_back(j);
  }
  if (feasible.empty()) {
    throw Error(ErrorCode::InfeasibleSpec, "planted distance " + std::to_string(d) + " is unreachable from the target");
  }
  const std::size_t j = feasible[rng.uniform_below(feasible.size())];
  const double lambda = d / (2.0 * (1.0 - q[j]));
  std::vector<double> p(q.size());
  for (std::size_t g = 0; g < q.size(); ++g) p[g] = (1.0 - lambda) * q[g];
  p[j] += lambda;
  return p;
}

}  // namespace

void SynthSpec::validate() const {
  if (num_candidates == 0 || num_groups == 0 || rows == 0) {
    throw Error(ErrorCode::InvalidArgument, "candidates, groups and rows must all be positive");
  }
  if (rows_per_block == 0) {
    throw Error(ErrorCode::InvalidArgument, "rows_per_block must be positive");
  }
  if (rows > (std::uint64_t{1} << 31)) {
    throw Error(ErrorCode::InvalidArgument, "at most 2^31 rows are supported");
  }
  if (selectivity == SelectivityProfile::Explicit) {
    if (selectivities.size() != num_candidates) {
      throw Error(ErrorCode::LengthMismatch, "one selectivity per candidate is required");
    }
    double sum = 0.0;
    for (double s : selectivities) {
      if (!(s >= 0.0) || !std::isfinite(s)) {
        throw Error(ErrorCode::InvalidArgument, "selectivities must be non-negative");
      }
      sum += s;
    }
    if (!(sum > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "selectivities must have a positive sum");
    }
  }
  if (selectivity == SelectivityProfile::Zipf && !(zipf_exponent >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "zipf exponent must be non-negative");
  }
  if (!target.empty() && target.size() != num_groups) {
    throw Error(ErrorCode::LengthMismatch, "target must have one weight per group");
  }
  if (distance == DistanceProfile::Explicit && distances.size() != num_candidates) {
    throw Error(ErrorCode::LengthMismatch, "one planted distance per candidate is required");
  }
  const Distribution q = target.empty() ? Distribution::uniform(num_groups) : Distribution::from_weights(target);
  const auto probs = q.probs();
  const double reach = 2.0 * (1.0 - *std::min_element(probs.begin(), probs.end()));
  auto check = [&](double d) {
    if (!(d >= 0.0 && d <= 2.0)) {
      throw Error(ErrorCode::InfeasibleSpec, "planted distances must lie in [0, 2]");
    }
    if (d > reach + 1e-12) {
      throw Error(ErrorCode::InfeasibleSpec, "planted distance " + std::to_string(d) +
                                                 " exceeds the largest reachable distance " + std::to_string(reach));
    }
  };
  if (distance == DistanceProfile::Explicit) {
    for (double d : distances) check(d);
  } else {
    if (distance_lo > distance_hi) {
      throw Error(ErrorCode::InvalidArgument, "distance range is empty");
    }
    check(distance_lo);
    check(distance_hi);
  }
}

SynthOutput synth_generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.rng_seed);
  SynthOutput out;
  out.target = spec.target.empty() ? Distribution::uniform(spec.num_groups) : Distribution::from_weights(spec.target);
  const std::vector<double> q(out.target.probs().begin(), out.target.probs().end());

  out.planted_distances = requested_distances(spec, rng);
  std::vector<std::vector<double>> cdfs;
  cdfs.reserve(spec.num_candidates);
  for (double d : out.planted_distances) {
    std::vector<double> p = plant(q, std::min(d, 2.0), rng);
    out.planted.push_back(Distribution::from_weights(p));
    std::partial_sum(p.begin(), p.end(), p.begin());
    cdfs.push_back(std::move(p));
  }
  const std::vector<std::uint64_t> sizes = apportion(selectivity_weights(spec), spec.rows);

  Dataset& ds = out.dataset;
  ds.rows_per_block = spec.rows_per_block;
  const std::size_t z = ds.add_attribute(std::string(SynthSpec::kCandidateAttribute));
  const std::size_t x = ds.add_attribute(std::string(SynthSpec::kGroupAttribute));
  const int zw = label_width(spec.num_candidates, 4);
  const int xw = label_width(spec.num_groups, 2);
  for (std::uint32_t i = 0; i < spec.num_candidates; ++i) ds.dictionaries[z].encode(padded_label('c', i, zw));
  for (std::uint32_t g = 0; g < spec.num_groups; ++g) ds.dictionaries[x].encode(padded_label('g', g, xw));

  ds.columns[z].reserve(spec.rows);
  ds.columns[x].reserve(spec.rows);
  for (std::uint32_t i = 0; i < spec.num_candidates; ++i) {
    const auto& cdf = cdfs[i];
    for (std::uint64_t r = 0; r < sizes[i]; ++r) {
      const double u = rng.uniform01() * cdf.back();
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      const auto g = static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), cdf.size() - 1));
      ds.columns[z].push_back(i);
      ds.columns[x].push_back(g);
    }
  }
  ds = shuffle(std::move(ds), Rng::derive(spec.rng_seed, 0));
  out.z_index = build_bitmap_index(ds, SynthSpec::kCandidateAttribute);
  out.truth = exact_truth(ds, SynthSpec::kGroupAttribute, SynthSpec::kCandidateAttribute);
  return out;
}

}  // namespace fastmatch
