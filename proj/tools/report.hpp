// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "fastmatch/engine.hpp"
#include "fastmatch/eval.hpp"
#include "fastmatch/query.hpp"

namespace fastmatch::cli {

using json = nlohmann::ordered_json;

json query_to_json(const QuerySpec& query);
json config_to_json(const RunConfig& config, std::string_view policy);
json diagnostics_to_json(const Diagnostics& diag);

/// The `query` result document: query echo, run configuration, matches with
/// their estimated distributions, diagnostics.
json result_document(const MatchResult& result, const Dataset& dataset, const QuerySpec& query,
                     const RunConfig& config, std::string_view policy);

json synth_spec_to_json(const SynthSpec& spec);
/// Missing keys keep the defaults already in `spec`. Throws InvalidArgument.
void synth_spec_from_json(const json& doc, SynthSpec& spec);

/// Planted distributions and exact counts written next to a generated dataset.
json truth_document(const SynthSpec& spec, const SynthOutput& data);

json run_record_to_json(const RunRecord& record);
json campaign_to_json(const CampaignSummary& summary);

/// Type skeleton of a document: objects keep their keys, arrays keep the
/// skeleton of their first element, scalars become their type name.
json schema_of(const json& doc);

/// Removes wall-clock fields so documents from different runs compare equal.
json strip_timing(json doc);

std::string render_result_table(const json& doc);
std::string render_key_values(const json& doc);
std::string render_rows(const json& rows);

}  // namespace fastmatch::cli
