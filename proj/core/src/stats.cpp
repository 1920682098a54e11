// SPDX-License-Identifier: Apache-2.0
#include "fastmatch/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "fastmatch/error.hpp"

namespace fastmatch::stats {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Budgets beyond this are unreachable on any dataset we can address.
constexpr double kMaxBudget = 4.0e18;

void check_probability(double p, const char* what) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::InvalidProbability, std::string(what) + " must lie in (0, 1]");
  }
}

std::uint64_t ceil_clamped(double v) {
  if (!(v > 1.0)) {
    return 1;
  }
  if (v >= kMaxBudget) {
    return static_cast<std::uint64_t>(kMaxBudget);
  }
  return static_cast<std::uint64_t>(std::ceil(v));
}

double log_choose(double n, double r) {
  return std::lgamma(n + 1.0) - std::lgamma(r + 1.0) - std::lgamma(n - r + 1.0);
}

struct Support {
  std::uint64_t lo;
  std::uint64_t hi;
};

Support support_of(std::uint64_t population, std::uint64_t successes, std::uint64_t draws) {
  const std::uint64_t failures = population - successes;
  return {draws > failures ? draws - failures : 0, std::min(draws, successes)};
}

// f(j+1) / f(j)
double pmf_ratio_up(double N, double K, double m, double j) {
  return ((K - j) * (m - j)) / ((j + 1.0) * (N - K - m + j + 1.0));
}

// Lower tail P(X <= n) of a hypergeometric with n inside the support.
// Walks away from n in the direction where terms shrink and stops once they
// no longer move the sum.
double hypergeom_lower_tail(std::uint64_t population, std::uint64_t successes, std::uint64_t draws,
                            std::uint64_t n) {
  const Support sup = support_of(population, successes, draws);
  if (n < sup.lo) {
    return 0.0;
  }
  if (n >= sup.hi) {
    return 1.0;
  }
  const double N = static_cast<double>(population);
  const double K = static_cast<double>(successes);
  const double m = static_cast<double>(draws);
  const double mode = std::floor((m + 1.0) * (K + 1.0) / (N + 2.0));
  const double log_anchor = hypergeom_log_pmf(population, successes, draws, n);

  if (static_cast<double>(n) <= mode) {
    // Terms decrease as j goes down from n.
    double sum = 1.0;
    double term = 1.0;
    for (std::uint64_t j = n; j > sup.lo; --j) {
      term /= pmf_ratio_up(N, K, m, static_cast<double>(j - 1));
      sum += term;
      if (term < sum * 1e-17) {
        break;
      }
    }
    return std::clamp(std::exp(log_anchor + std::log(sum)), 0.0, 1.0);
  }
  // Upper tail P(X > n) starting from n + 1, terms decreasing upward.
  double term = std::exp(log_anchor) * pmf_ratio_up(N, K, m, static_cast<double>(n));
  double sum = term;
  for (std::uint64_t j = n + 1; j < sup.hi; ++j) {
    term *= pmf_ratio_up(N, K, m, static_cast<double>(j));
    sum += term;
    if (term < sum * 1e-17) {
      break;
    }
  }
  return std::clamp(1.0 - sum, 0.0, 1.0);
}

}  // namespace

std::uint64_t min_candidate_rows(std::uint64_t population, double sigma) {
  if (!(sigma >= 0.0 && sigma < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "sigma must lie in [0, 1)");
  }
  const double k = std::ceil(sigma * static_cast<double>(population));
  return std::min<std::uint64_t>(population, static_cast<std::uint64_t>(k));
}

double deviation_epsilon(std::uint64_t n, std::uint32_t num_groups, double delta_i) {
  check_probability(delta_i, "delta_i");
  if (n == 0) {
    throw Error(ErrorCode::InvalidArgument, "deviation_epsilon needs at least one sample");
  }
  const double g = static_cast<double>(num_groups);
  return std::sqrt((2.0 / static_cast<double>(n)) * (g * std::numbers::ln2 - std::log(delta_i)));
}

double deviation_pvalue(std::uint64_t n, std::uint32_t num_groups, double eps) {
  if (std::isnan(eps) || eps <= 0.0) {
    return 1.0;
  }
  if (eps == kInf) {
    return 0.0;
  }
  const double log_p = static_cast<double>(num_groups) * std::numbers::ln2 -
                       eps * eps * static_cast<double>(n) / 2.0;
  if (log_p >= 0.0) {
    return 1.0;
  }
  return std::exp(log_p);
}

std::uint64_t samples_needed(double eps_prime, std::uint32_t num_groups, double delta_upper) {
  if (std::isnan(eps_prime) || eps_prime <= 0.0) {
    throw Error(ErrorCode::NonPositiveEpsilon, "samples_needed requires eps' > 0");
  }
  check_probability(delta_upper, "delta_upper");
  if (eps_prime == kInf) {
    return 1;
  }
  const double g = static_cast<double>(num_groups);
  return ceil_clamped(2.0 * (g * std::numbers::ln2 - std::log(delta_upper)) / (eps_prime * eps_prime));
}

std::uint64_t stage3_samples_needed(double epsilon, std::uint32_t num_groups, std::uint32_t k,
                                    double delta) {
  if (std::isnan(epsilon) || epsilon <= 0.0) {
    throw Error(ErrorCode::NonPositiveEpsilon, "stage 3 requires epsilon > 0");
  }
  check_probability(delta, "delta");
  const double g = static_cast<double>(num_groups);
  const double v = (2.0 / (epsilon * epsilon)) *
                   (g * std::numbers::ln2 + std::log(3.0 * static_cast<double>(k) / delta));
  return ceil_clamped(v);
}

double hypergeom_log_pmf(std::uint64_t population, std::uint64_t successes, std::uint64_t draws,
                         std::uint64_t observed) {
  if (successes > population || draws > population) {
    throw Error(ErrorCode::InvalidArgument, "hypergeometric parameters out of range");
  }
  const Support sup = support_of(population, successes, draws);
  if (observed < sup.lo || observed > sup.hi) {
    throw Error(ErrorCode::OutOfSupport, "observation outside hypergeometric support");
  }
  const double N = static_cast<double>(population);
  const double K = static_cast<double>(successes);
  const double m = static_cast<double>(draws);
  const double j = static_cast<double>(observed);
  return log_choose(K, j) + log_choose(N - K, m - j) - log_choose(N, m);
}

double underrepresentation_pvalue(std::uint64_t population, double sigma, std::uint64_t draws,
                                  std::uint64_t n_obs) {
  if (draws > population) {
    throw Error(ErrorCode::InvalidArgument, "cannot draw more tuples than the population holds");
  }
  const std::uint64_t k = min_candidate_rows(population, sigma);
  return hypergeom_lower_tail(population, k, draws, n_obs);
}

std::vector<double> underrepresentation_pvalues(std::uint64_t population, double sigma,
                                                std::uint64_t draws,
                                                std::span<const std::uint64_t> n_obs) {
  if (draws > population) {
    throw Error(ErrorCode::InvalidArgument, "cannot draw more tuples than the population holds");
  }
  const std::uint64_t k = min_candidate_rows(population, sigma);
  const Support sup = support_of(population, k, draws);
  const double N = static_cast<double>(population);
  const double K = static_cast<double>(k);
  const double m = static_cast<double>(draws);
  const double mode = std::floor((m + 1.0) * (K + 1.0) / (N + 2.0));

  // Candidates are visited in increasing count order. Below the mode the
  // CDF at the next distinct count extends the previous one by the pmf terms
  // in between; everything else falls back to the standalone tail walk.
  std::map<std::uint64_t, double> cache;
  for (std::uint64_t n : n_obs) {
    cache.emplace(n, 0.0);
  }
  bool have_prev = false;
  std::uint64_t prev_n = 0;
  double prev_cdf = 0.0;
  double prev_log_pmf = 0.0;
  for (auto& [n, p] : cache) {
    if (n < sup.lo) {
      p = 0.0;
      continue;
    }
    if (n >= sup.hi) {
      p = 1.0;
      continue;
    }
    if (static_cast<double>(n) > mode) {
      p = hypergeom_lower_tail(population, k, draws, n);
      continue;
    }
    if (!have_prev) {
      p = hypergeom_lower_tail(population, k, draws, n);
      prev_log_pmf = hypergeom_log_pmf(population, k, draws, n);
    } else {
      double cdf = prev_cdf;
      double log_term = prev_log_pmf;
      for (std::uint64_t j = prev_n; j < n; ++j) {
        log_term += std::log(pmf_ratio_up(N, K, m, static_cast<double>(j)));
        cdf += std::exp(log_term);
      }
      p = std::clamp(cdf, 0.0, 1.0);
      prev_log_pmf = log_term;
    }
    have_prev = true;
    prev_n = n;
    prev_cdf = p;
  }

  std::vector<double> out;
  out.reserve(n_obs.size());
  for (std::uint64_t n : n_obs) {
    out.push_back(cache.at(n));
  }
  return out;
}

std::vector<CandidateId> holm_bonferroni(std::span<const PValue> pvalues, double level) {
  std::vector<PValue> sorted(pvalues.begin(), pvalues.end());
  std::sort(sorted.begin(), sorted.end(), [](const PValue& a, const PValue& b) {
    return a.p < b.p || (a.p == b.p && a.id < b.id);
  });
  const std::size_t n = sorted.size();
  std::vector<CandidateId> rejected;
  for (std::size_t j = 0; j < n; ++j) {
    // 1-based index j+1 gives threshold level / (n - j).
    if (sorted[j].p > level / static_cast<double>(n - j)) {
      break;
    }
    rejected.push_back(sorted[j].id);
  }
  std::sort(rejected.begin(), rejected.end());
  return rejected;
}

bool simultaneous_reject(std::span<const double> pvalues, double delta_upper) {
  return std::all_of(pvalues.begin(), pvalues.end(), [&](double p) { return p <= delta_upper; });
}

bool simultaneous_reject(std::span<const PValue> pvalues, double delta_upper) {
  return std::all_of(pvalues.begin(), pvalues.end(),
                     [&](const PValue& p) { return p.p <= delta_upper; });
}

RoundPValues round_pvalues(const RoundTestInput& input) {
  if (!(input.split >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "split point must be non-negative");
  }
  const double upper = input.split + input.epsilon / 2.0;
  const double lower = input.split - input.epsilon / 2.0;
  RoundPValues out;
  out.pvalues.reserve(input.candidates.size());
  for (const RoundTestEntry& c : input.candidates) {
    if (c.exhausted) {
      // Null for a matching candidate: tau* > s + eps/2; otherwise tau* < s - eps/2.
      const bool null_holds = c.matching ? (c.exact_tau > upper) : (c.exact_tau < lower);
      out.pvalues.push_back({c.id, null_holds ? 1.0 : 0.0});
      continue;
    }
    if (c.n_round == 0) {
      out.missing_tau.push_back(c.id);
      out.pvalues.push_back({c.id, 1.0});
      continue;
    }
    double slack;
    if (c.matching) {
      slack = upper - c.tau_round;
    } else {
      slack = lower >= 0.0 ? c.tau_round - lower : kInf;
    }
    out.pvalues.push_back({c.id, deviation_pvalue(c.n_round, input.num_groups, slack)});
  }
  return out;
}

}  // namespace fastmatch::stats
