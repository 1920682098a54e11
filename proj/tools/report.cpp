// SPDX-License-Identifier: Apache-2.0
#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "fastmatch/error.hpp"

namespace fastmatch::cli {

namespace {

// JSON has no infinity; an unbounded value is written as null.
json number(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}

std::string_view selectivity_name(SelectivityProfile p) {
  switch (p) {
    case SelectivityProfile::Uniform: return "uniform";
    case SelectivityProfile::Zipf: return "zipf";
    case SelectivityProfile::Explicit: return "explicit";
  }
  return "uniform";
}

std::string_view distance_name(DistanceProfile p) {
  switch (p) {
    case DistanceProfile::Explicit: return "explicit";
    case DistanceProfile::Linspace: return "linspace";
    case DistanceProfile::UniformRandom: return "uniform";
  }
  return "linspace";
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) {
    std::ostringstream os;
    os << std::setprecision(6) << v.get<double>();
    return os.str();
  }
  return v.dump();
}

}  // namespace

json query_to_json(const QuerySpec& query) {
  json target;
  if (std::holds_alternative<UniformTarget>(query.target)) {
    target = {{"kind", "uniform"}};
  } else if (const auto* e = std::get_if<ExplicitTarget>(&query.target)) {
    target = {{"kind", "explicit"}, {"weights", e->weights}};
  } else {
    target = {{"kind", "candidate"}, {"value", std::get<CandidateTarget>(query.target).value}};
  }
  return {{"x", query.x_attribute},
          {"z", query.z_attribute},
          {"target", target},
          {"k", query.k},
          {"epsilon", query.epsilon},
          {"delta", query.delta},
          {"sigma", query.sigma},
          {"include_target_candidate", query.include_target_candidate}};
}

json config_to_json(const RunConfig& config, std::string_view policy) {
  return {{"policy", policy},
          {"mode", config.mode == ExecutionMode::TwoWorker ? "two-worker" : "single"},
          {"m", config.m},
          {"lookahead", config.lookahead},
          {"seed", config.rng_seed}};
}

json diagnostics_to_json(const Diagnostics& d) {
  return {{"rounds", d.rounds},
          {"tuples_read", d.tuples_read},
          {"tuples_sampled", d.tuples_sampled},
          {"stage1_tuples", d.stage1_tuples},
          {"blocks_read", d.blocks_read},
          {"blocks_skipped", d.blocks_skipped},
          {"total_blocks", d.total_blocks},
          {"total_rows", d.total_rows},
          {"pruned_count", d.pruned_count},
          {"surviving_count", d.surviving_count},
          {"target_scan_blocks", d.target_scan_blocks},
          {"start_block", d.start_block},
          {"stage3_threshold", d.stage3_threshold},
          {"final_delta_upper", d.final_delta_upper},
          {"exact_flag", d.exact},
          {"no_candidates_survive", d.no_candidates_survive},
          {"elapsed_ms", d.elapsed_ms}};
}

json result_document(const MatchResult& result, const Dataset& dataset, const QuerySpec& query,
                     const RunConfig& config, std::string_view policy) {
  const auto& groups = dataset.dictionaries[dataset.attribute_index(query.x_attribute)].values();
  json matches = json::array();
  std::size_t rank = 1;
  for (const MatchedCandidate& m : result.matches) {
    json dist = json::array();
    const double total = static_cast<double>(m.histogram.total());
    for (std::size_t g = 0; g < m.histogram.size(); ++g) {
      dist.push_back(total > 0 ? static_cast<double>(m.histogram[g]) / total : 0.0);
    }
    matches.push_back({{"rank", rank++},
                       {"candidate", m.label},
                       {"distance", number(m.distance)},
                       {"samples", m.histogram.total()},
                       {"exhausted", m.exhausted},
                       {"distribution", dist}});
  }
  json config_doc = config_to_json(config, policy);
  config_doc["start_block"] = result.diagnostics.start_block;
  return {{"query", query_to_json(query)},
          {"config", config_doc},
          {"groups", groups},
          {"matches", matches},
          {"diagnostics", diagnostics_to_json(result.diagnostics)}};
}

json synth_spec_to_json(const SynthSpec& spec) {
  json doc = {{"candidates", spec.num_candidates},
              {"groups", spec.num_groups},
              {"rows", spec.rows},
              {"selectivity", selectivity_name(spec.selectivity)},
              {"zipf_exponent", spec.zipf_exponent},
              {"distance", distance_name(spec.distance)},
              {"distance_lo", spec.distance_lo},
              {"distance_hi", spec.distance_hi},
              {"rows_per_block", spec.rows_per_block},
              {"seed", spec.rng_seed}};
  if (!spec.selectivities.empty()) doc["selectivities"] = spec.selectivities;
  if (!spec.distances.empty()) doc["distances"] = spec.distances;
  if (!spec.target.empty()) doc["target"] = spec.target;
  return doc;
}

void synth_spec_from_json(const json& doc, SynthSpec& spec) {
  if (!doc.is_object()) {
    throw Error(ErrorCode::InvalidArgument, "spec must be a JSON object");
  }
  try {
    if (doc.contains("candidates")) spec.num_candidates = doc["candidates"].get<std::uint32_t>();
    if (doc.contains("groups")) spec.num_groups = doc["groups"].get<std::uint32_t>();
    if (doc.contains("rows")) spec.rows = doc["rows"].get<std::uint64_t>();
    if (doc.contains("selectivity")) {
      const auto name = doc["selectivity"].get<std::string>();
      if (name == "uniform") spec.selectivity = SelectivityProfile::Uniform;
      else if (name == "zipf") spec.selectivity = SelectivityProfile::Zipf;
      else if (name == "explicit") spec.selectivity = SelectivityProfile::Explicit;
      else throw Error(ErrorCode::InvalidArgument, "unknown selectivity profile '" + name + "'");
    }
    if (doc.contains("zipf_exponent")) spec.zipf_exponent = doc["zipf_exponent"].get<double>();
    if (doc.contains("selectivities")) spec.selectivities = doc["selectivities"].get<std::vector<double>>();
    if (doc.contains("distance")) {
      const auto name = doc["distance"].get<std::string>();
      if (name == "explicit") spec.distance = DistanceProfile::Explicit;
      else if (name == "linspace") spec.distance = DistanceProfile::Linspace;
      else if (name == "uniform") spec.distance = DistanceProfile::UniformRandom;
      else throw Error(ErrorCode::InvalidArgument, "unknown distance profile '" + name + "'");
    }
    if (doc.contains("distance_lo")) spec.distance_lo = doc["distance_lo"].get<double>();
    if (doc.contains("distance_hi")) spec.distance_hi = doc["distance_hi"].get<double>();
    if (doc.contains("distances")) spec.distances = doc["distances"].get<std::vector<double>>();
    if (doc.contains("target")) spec.target = doc["target"].get<std::vector<double>>();
    if (doc.contains("rows_per_block")) spec.rows_per_block = doc["rows_per_block"].get<std::uint32_t>();
    if (doc.contains("seed")) spec.rng_seed = doc["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad spec: ") + e.what());
  }
}

json truth_document(const SynthSpec& spec, const SynthOutput& data) {
  const auto& names = data.dataset.dictionaries[data.dataset.attribute_index(SynthSpec::kCandidateAttribute)];
  json candidates = json::array();
  for (CandidateId id = 0; id < data.truth.counts.size(); ++id) {
    const HistogramCounts& c = data.truth.counts[id];
    candidates.push_back({{"candidate", names.decode(id)},
                          {"rows", c.total()},
                          {"selectivity", data.truth.selectivity(id)},
                          {"planted_distance", data.planted_distances[id]},
                          {"exact_distance", c.total() > 0 ? number(l1_distance(c, data.target)) : json(nullptr)},
                          {"counts", c.counts()}});
  }
  return {{"spec", synth_spec_to_json(spec)},
          {"target", data.target.probs()},
          {"candidates", candidates}};
}

json run_record_to_json(const RunRecord& r) {
  return {{"seed", r.seed},
          {"separation_ok", r.report.separation_ok},
          {"reconstruction_ok", r.report.reconstruction_ok},
          {"exact_flag", r.report.exact_flag},
          {"delta_d", number(r.report.delta_d)},
          {"violated_candidates", r.report.violated_candidates},
          {"stage3_ok", r.stage3_ok},
          {"rounds", r.rounds},
          {"blocks_read", r.blocks_read},
          {"tuples_read_fraction", r.tuples_read_fraction},
          {"blocks_skipped_fraction", r.blocks_skipped_fraction},
          {"elapsed_ms", r.elapsed_ms}};
}

json campaign_to_json(const CampaignSummary& s) {
  return {{"runs", s.runs},
          {"violations", s.violations},
          {"violation_rate", s.violation_rate},
          {"violation_upper_99", s.violation_upper_99},
          {"stage3_failures", s.stage3_failures},
          {"exact_runs", s.exact_runs},
          {"mean_delta_d", number(s.mean_delta_d)},
          {"mean_tuples_read_fraction", s.mean_tuples_read_fraction},
          {"mean_blocks_skipped_fraction", s.mean_blocks_skipped_fraction},
          {"mean_rounds", s.mean_rounds},
          {"mean_elapsed_ms", s.mean_elapsed_ms}};
}

json schema_of(const json& doc) {
  if (doc.is_object()) {
    json out = json::object();
    for (const auto& [key, value] : doc.items()) out[key] = schema_of(value);
    return out;
  }
  if (doc.is_array()) {
    json out = json::array();
    if (!doc.empty()) out.push_back(schema_of(doc.front()));
    return out;
  }
  if (doc.is_boolean()) return "boolean";
  if (doc.is_number()) return "number";
  if (doc.is_string()) return "string";
  return "null";
}

json strip_timing(json doc) {
  if (doc.is_object()) {
    doc.erase("elapsed_ms");
    doc.erase("mean_elapsed_ms");
    for (auto& [key, value] : doc.items()) value = strip_timing(value);
  } else if (doc.is_array()) {
    for (auto& value : doc) value = strip_timing(value);
  }
  return doc;
}

std::string render_result_table(const json& doc) {
  std::ostringstream os;
  const json& q = doc["query"];
  os << "query   " << q["z"].get<std::string>() << " by " << q["x"].get<std::string>() << ", k=" << q["k"]
     << ", epsilon=" << scalar_text(q["epsilon"]) << ", delta=" << scalar_text(q["delta"])
     << ", sigma=" << scalar_text(q["sigma"]) << "\n";
  os << "policy  " << doc["config"]["policy"].get<std::string>() << "\n\n";
  os << std::left << std::setw(6) << "rank" << std::setw(24) << "candidate" << std::right << std::setw(12)
     << "distance" << std::setw(12) << "samples" << std::setw(11) << "exhausted" << "\n";
  for (const json& m : doc["matches"]) {
    os << std::left << std::setw(6) << m["rank"].get<int>() << std::setw(24) << m["candidate"].get<std::string>()
       << std::right << std::setw(12) << scalar_text(m["distance"]) << std::setw(12) << m["samples"].dump()
       << std::setw(11) << (m["exhausted"].get<bool>() ? "yes" : "no") << "\n";
  }
  os << "\n" << render_key_values(doc["diagnostics"]);
  return os.str();
}

std::string render_key_values(const json& doc) {
  std::size_t width = 0;
  for (const auto& [key, value] : doc.items()) width = std::max(width, key.size());
  std::ostringstream os;
  for (const auto& [key, value] : doc.items()) {
    if (value.is_structured()) continue;
    os << std::left << std::setw(static_cast<int>(width) + 2) << key << scalar_text(value) << "\n";
  }
  return os.str();
}

std::string render_rows(const json& rows) {
  if (!rows.is_array() || rows.empty()) {
    return "";
  }
  std::vector<std::string> keys;
  for (const auto& [key, value] : rows.front().items()) keys.push_back(key);
  std::vector<std::size_t> widths;
  for (const auto& key : keys) {
    std::size_t w = key.size();
    for (const json& row : rows) w = std::max(w, scalar_text(row[key]).size());
    widths.push_back(w + 2);
  }
  std::ostringstream os;
  for (std::size_t i = 0; i < keys.size(); ++i) os << std::left << std::setw(static_cast<int>(widths[i])) << keys[i];
  os << "\n";
  for (const json& row : rows) {
    for (std::size_t i = 0; i < keys.size(); ++i) {
      os << std::left << std::setw(static_cast<int>(widths[i])) << scalar_text(row[keys[i]]);
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace fastmatch::cli
