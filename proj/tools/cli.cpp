// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>

#include "fastmatch/csv.hpp"
#include "fastmatch/error.hpp"
#include "fastmatch/eval.hpp"
#include "fastmatch/persist.hpp"
#include "report.hpp"

namespace fastmatch::cli {

namespace {

struct NoSurvivors {};

std::uint64_t default_seed() {
  const char* env = std::getenv(kSeedEnv);
  if (env == nullptr || *env == '\0') {
    return 0;
  }
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') {
    throw Error(ErrorCode::InvalidArgument, std::string(kSeedEnv) + " is not an unsigned integer");
  }
  return v;
}

void emit(std::ostream& out, const std::string& format, const json& doc, const std::string& table) {
  if (format == "json") {
    out << doc.dump(2) << "\n";
  } else {
    out << table;
  }
}

void write_json(const std::string& path, const json& doc) {
  std::ofstream f(path);
  if (!f) {
    throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  }
  f << doc.dump(2) << "\n";
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  }
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "'" + path + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string csv;
  std::string out;
  std::vector<std::string> schema;
  std::vector<std::string> bins;
  std::vector<std::string> index;
  std::string na = "drop";
  char delimiter = ',';
  bool no_header = false;
  std::uint32_t rows_per_block = Dataset::kDefaultRowsPerBlock;
  std::uint64_t seed = 0;
  std::string format = "json";
};

int cmd_ingest(const IngestArgs& a, bool seed_given, std::ostream& out) {
  IngestOptions opts;
  opts.schema = a.schema;
  opts.header = !a.no_header;
  opts.na_policy = a.na == "keep" ? NaPolicy::Keep : NaPolicy::Drop;
  opts.delimiter = a.delimiter;
  opts.rows_per_block = a.rows_per_block;
  for (const auto& b : a.bins) opts.bins.push_back(BinSpec::parse(b));
  IngestResult ingested = ingest_csv(a.csv, opts);
  const std::uint64_t seed = seed_given ? a.seed : default_seed();
  Dataset ds = shuffle(std::move(ingested.dataset), seed);

  std::vector<std::string> index_attrs = a.index.empty() ? ds.schema : a.index;
  std::vector<BitmapIndex> indexes;
  for (const auto& attr : index_attrs) indexes.push_back(build_bitmap_index(ds, attr));
  save_dataset(a.out, ds, indexes);

  json attrs = json::array();
  for (std::size_t i = 0; i < ds.schema.size(); ++i) {
    attrs.push_back({{"name", ds.schema[i]}, {"distinct", ds.dictionaries[i].size()}});
  }
  const json doc = {{"out", a.out},
                    {"rows", ds.row_count()},
                    {"dropped_rows", ingested.dropped_rows},
                    {"blocks", ds.block_count()},
                    {"rows_per_block", ds.rows_per_block},
                    {"seed", seed},
                    {"attributes", attrs},
                    {"indexes", index_attrs}};
  emit(out, a.format, doc, render_key_values(doc));
  return kExitOk;
}

// ---------------------------------------------------------------- query

struct QueryArgs {
  std::string dataset;
  std::string x;
  std::string z;
  std::string target = "uniform";
  std::vector<double> target_weights;
  std::string target_candidate;
  bool exclude_target = false;
  std::uint32_t k = 10;
  double epsilon = QuerySpec::kDefaultEpsilon;
  double delta = QuerySpec::kDefaultDelta;
  double sigma = QuerySpec::kDefaultSigma;
  std::uint64_t m = RunConfig::kDefaultStage1Samples;
  std::uint32_t lookahead = RunConfig::kDefaultLookahead;
  std::string policy = "fastmatch";
  std::string mode = "single";
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> start_block;
  std::string format = "json";
};

ExecutionMode parse_mode(const std::string& name) {
  return name == "two-worker" ? ExecutionMode::TwoWorker : ExecutionMode::SingleContext;
}

int cmd_query(const QueryArgs& a, bool seed_given, std::ostream& out) {
  const StoredDataset stored = load_dataset(a.dataset);
  QuerySpec query;
  query.x_attribute = a.x;
  query.z_attribute = a.z;
  if (!a.target_weights.empty()) {
    query.target = ExplicitTarget{a.target_weights};
  } else if (!a.target_candidate.empty()) {
    query.target = CandidateTarget{a.target_candidate};
  }
  query.include_target_candidate = !a.exclude_target;
  query.k = a.k;
  query.epsilon = a.epsilon;
  query.delta = a.delta;
  query.sigma = a.sigma;

  RunConfig config;
  config.m = a.m;
  config.lookahead = a.lookahead;
  config.mode = parse_mode(a.mode);
  config.rng_seed = seed_given ? a.seed : default_seed();
  config.start_block = a.start_block;

  const Baseline baseline = *parse_baseline(a.policy);
  const BitmapIndex index = stored.index_or_build(a.z);
  const MatchResult result = run_baseline(stored.dataset, index, query, baseline, config);
  const json doc = result_document(result, stored.dataset, query, config, baseline_name(baseline));
  emit(out, a.format, doc, render_result_table(doc));
  if (result.diagnostics.no_candidates_survive) {
    throw NoSurvivors{};
  }
  return kExitOk;
}

// ---------------------------------------------------------------- gen / verify / bench

struct SynthArgs {
  std::string spec_file;
  std::uint32_t candidates = 0;
  std::uint32_t groups = 0;
  std::uint64_t rows = 0;
  std::string selectivity;
  double zipf_exponent = 1.0;
  std::vector<double> selectivities;
  std::string distance;
  double distance_lo = 0.0;
  double distance_hi = 1.0;
  std::vector<double> distances;
  std::vector<double> target;
  std::uint32_t rows_per_block = Dataset::kDefaultRowsPerBlock;
  std::uint64_t data_seed = 0;
  std::string seed_flag = "--data-seed";
};

struct CampaignArgs {
  std::uint32_t k = 5;
  double epsilon = 0.05;
  double delta = 0.05;
  double sigma = 0.001;
  std::uint64_t m = RunConfig::kDefaultStage1Samples;
  std::uint32_t lookahead = RunConfig::kDefaultLookahead;
  std::string mode = "single";
  std::string policy = "fastmatch";
  std::uint32_t runs = 100;
  std::uint32_t workers = 1;
  std::uint64_t seed = 0;
  std::string records;
  std::string out;
  std::string format = "json";
};

void add_synth_flags(CLI::App* cmd, SynthArgs& s) {
  cmd->add_option("--spec", s.spec_file, "JSON spec file; flags override its fields")->check(CLI::ExistingFile);
  cmd->add_option("--candidates", s.candidates, "number of candidate values");
  cmd->add_option("--groups", s.groups, "number of group values");
  cmd->add_option("--rows", s.rows, "total rows");
  cmd->add_option("--selectivity", s.selectivity, "uniform | zipf | explicit")
      ->check(CLI::IsMember({"uniform", "zipf", "explicit"}));
  cmd->add_option("--zipf-exponent", s.zipf_exponent, "zipf exponent");
  cmd->add_option("--selectivities", s.selectivities, "explicit per-candidate selectivities")->delimiter(',');
  cmd->add_option("--distance", s.distance, "linspace | uniform | explicit")
      ->check(CLI::IsMember({"linspace", "uniform", "explicit"}));
  cmd->add_option("--distance-lo", s.distance_lo, "smallest planted distance");
  cmd->add_option("--distance-hi", s.distance_hi, "largest planted distance");
  cmd->add_option("--distances", s.distances, "explicit planted distances")->delimiter(',');
  cmd->add_option("--target-weights", s.target, "target weights (default uniform)")->delimiter(',');
  cmd->add_option("--rows-per-block", s.rows_per_block, "rows per block")->check(CLI::PositiveNumber);
  cmd->add_option(s.seed_flag, s.data_seed, "generator seed");
}

// Spec file first, then every flag that was given on the command line.
SynthSpec resolve_synth(const CLI::App* cmd, const SynthArgs& s, json* query_section) {
  SynthSpec spec;
  bool seeded = false;
  if (!s.spec_file.empty()) {
    const json doc = read_json(s.spec_file);
    const json& synth = doc.contains("synth") ? doc["synth"] : doc;
    synth_spec_from_json(synth, spec);
    seeded = synth.contains("seed");
    if (query_section != nullptr && doc.contains("query")) *query_section = doc["query"];
  }
  if (!seeded) spec.rng_seed = default_seed();
  json flags = json::object();
  auto given = [&](const char* name) { return cmd->count(name) > 0; };
  if (given("--candidates")) flags["candidates"] = s.candidates;
  if (given("--groups")) flags["groups"] = s.groups;
  if (given("--rows")) flags["rows"] = s.rows;
  if (given("--selectivity")) flags["selectivity"] = s.selectivity;
  if (given("--zipf-exponent")) flags["zipf_exponent"] = s.zipf_exponent;
  if (given("--selectivities")) flags["selectivities"] = s.selectivities;
  if (given("--distance")) flags["distance"] = s.distance;
  if (given("--distance-lo")) flags["distance_lo"] = s.distance_lo;
  if (given("--distance-hi")) flags["distance_hi"] = s.distance_hi;
  if (given("--distances")) flags["distances"] = s.distances;
  if (given("--target-weights")) flags["target"] = s.target;
  if (given("--rows-per-block")) flags["rows_per_block"] = s.rows_per_block;
  if (given(s.seed_flag.c_str())) flags["seed"] = s.data_seed;
  synth_spec_from_json(flags, spec);
  spec.validate();
  return spec;
}

void add_campaign_flags(CLI::App* cmd, CampaignArgs& c) {
  cmd->add_option("--k", c.k, "matches to return")->check(CLI::PositiveNumber);
  cmd->add_option("--epsilon", c.epsilon, "separation and reconstruction tolerance");
  cmd->add_option("--delta", c.delta, "failure probability");
  cmd->add_option("--sigma", c.sigma, "selectivity threshold");
  cmd->add_option("--m", c.m, "stage-1 sample size");
  cmd->add_option("--lookahead", c.lookahead, "blocks marked per batch")->check(CLI::PositiveNumber);
  cmd->add_option("--mode", c.mode, "single | two-worker")->check(CLI::IsMember({"single", "two-worker"}));
  cmd->add_option("--runs", c.runs, "seeded runs")->check(CLI::PositiveNumber);
  cmd->add_option("--workers", c.workers, "concurrent runs")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "base seed of the campaign");
  cmd->add_option("--format", c.format, "json | table")->check(CLI::IsMember({"json", "table"}));
}

void apply_query_section(const json& section, const CLI::App* cmd, CampaignArgs& c) {
  auto take = [&](const char* key, const char* flag, auto& field) {
    if (section.contains(key) && cmd->count(flag) == 0) {
      field = section[key].get<std::remove_reference_t<decltype(field)>>();
    }
  };
  try {
    take("k", "--k", c.k);
    take("epsilon", "--epsilon", c.epsilon);
    take("delta", "--delta", c.delta);
    take("sigma", "--sigma", c.sigma);
    take("m", "--m", c.m);
    take("lookahead", "--lookahead", c.lookahead);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad query section: ") + e.what());
  }
}

QuerySpec campaign_query(const SynthSpec& spec, const CampaignArgs& c) {
  QuerySpec q;
  q.x_attribute = std::string(SynthSpec::kGroupAttribute);
  q.z_attribute = std::string(SynthSpec::kCandidateAttribute);
  if (!spec.target.empty()) q.target = ExplicitTarget{spec.target};
  q.k = c.k;
  q.epsilon = c.epsilon;
  q.delta = c.delta;
  q.sigma = c.sigma;
  q.validate();
  return q;
}

RunConfig campaign_config(const CampaignArgs& c) {
  RunConfig config;
  config.m = c.m;
  config.lookahead = c.lookahead;
  config.mode = parse_mode(c.mode);
  config.validate();
  return config;
}

int cmd_gen(const CLI::App* cmd, const SynthArgs& s, const std::string& out_path, const std::string& format,
            std::ostream& out) {
  const SynthSpec spec = resolve_synth(cmd, s, nullptr);
  const SynthOutput data = synth_generate(spec);
  save_dataset(out_path, data.dataset, {data.z_index, build_bitmap_index(data.dataset, SynthSpec::kGroupAttribute)});
  const std::string truth_path = out_path + ".truth.json";
  write_json(truth_path, truth_document(spec, data));
  const json doc = {{"out", out_path},
                    {"truth", truth_path},
                    {"rows", data.dataset.row_count()},
                    {"blocks", data.dataset.block_count()},
                    {"spec", synth_spec_to_json(spec)}};
  emit(out, format, doc, render_key_values(doc));
  return kExitOk;
}

int cmd_verify(const CLI::App* cmd, const SynthArgs& s, CampaignArgs c, std::ostream& out) {
  json section;
  const SynthSpec spec = resolve_synth(cmd, s, &section);
  apply_query_section(section, cmd, c);
  const QuerySpec query = campaign_query(spec, c);
  const RunConfig config = campaign_config(c);
  const SynthOutput data = synth_generate(spec);

  CampaignOptions options;
  options.runs = c.runs;
  options.workers = c.workers;
  options.base_seed = cmd->count("--seed") > 0 ? c.seed : default_seed();
  options.baseline = *parse_baseline(c.policy);
  const CampaignSummary summary = monte_carlo_verify(data, query, config, options);

  if (!c.records.empty()) {
    std::ofstream f(c.records);
    if (!f) {
      throw Error(ErrorCode::IoError, "cannot write '" + c.records + "'");
    }
    for (const RunRecord& r : summary.records) f << run_record_to_json(r).dump() << "\n";
  }
  json doc = campaign_to_json(summary);
  doc["binomial_consistent"] = binomial_consistent(summary.runs, summary.violations, query.delta, 0.99);
  doc["policy"] = c.policy;
  doc["query"] = query_to_json(query);
  doc["config"] = config_to_json(config, c.policy);
  doc["config"]["base_seed"] = options.base_seed;
  doc["spec"] = synth_spec_to_json(spec);
  if (!c.out.empty()) write_json(c.out, doc);
  emit(out, c.format, doc, render_key_values(doc));
  return kExitOk;
}

int cmd_bench(const CLI::App* cmd, const SynthArgs& s, CampaignArgs c, std::ostream& out) {
  json section;
  const SynthSpec spec = resolve_synth(cmd, s, &section);
  apply_query_section(section, cmd, c);
  const QuerySpec query = campaign_query(spec, c);
  const RunConfig config = campaign_config(c);
  const SynthOutput data = synth_generate(spec);

  json rows = json::array();
  double scan_ms = 0.0;
  for (Baseline b : {Baseline::Scan, Baseline::ScanMatch, Baseline::SyncMatch, Baseline::FastMatch}) {
    CampaignOptions options;
    options.runs = c.runs;
    options.base_seed = cmd->count("--seed") > 0 ? c.seed : default_seed();
    options.baseline = b;
    const CampaignSummary summary = monte_carlo_verify(data, query, config, options);
    double blocks = 0.0;
    for (const RunRecord& r : summary.records) blocks += static_cast<double>(r.blocks_read);
    if (b == Baseline::Scan) scan_ms = summary.mean_elapsed_ms;
    rows.push_back({{"policy", baseline_name(b)},
                    {"runs", summary.runs},
                    {"mean_elapsed_ms", summary.mean_elapsed_ms},
                    {"speedup_vs_scan", summary.mean_elapsed_ms > 0 ? scan_ms / summary.mean_elapsed_ms : 0.0},
                    {"mean_blocks_read", blocks / summary.runs},
                    {"mean_tuples_read_fraction", summary.mean_tuples_read_fraction},
                    {"violations", summary.violations}});
  }
  json doc = {{"query", query_to_json(query)}, {"spec", synth_spec_to_json(spec)}, {"policies", rows}};
  if (!c.out.empty()) write_json(c.out, doc);
  emit(out, c.format, doc, render_rows(rows));
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Approximate top-k histogram matching over block-sampled data", "fastmatch"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fastmatch 0.1.0");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Encode a CSV file into a shuffled, indexed dataset file");
  c_ingest->add_option("csv", ingest.csv, "input CSV")->required();
  c_ingest->add_option("-o,--out", ingest.out, "dataset file to write")->required();
  c_ingest->add_option("--schema", ingest.schema, "columns to keep (default: all)")->delimiter(',');
  c_ingest->add_option("--bin", ingest.bins, "bin a numeric column: attr=e0,e1,...");
  c_ingest->add_option("--index", ingest.index, "attributes to index (default: all)")->delimiter(',');
  c_ingest->add_option("--na", ingest.na, "drop | keep rows with missing values")
      ->check(CLI::IsMember({"drop", "keep"}));
  c_ingest->add_option("--delimiter", ingest.delimiter, "field delimiter");
  c_ingest->add_flag("--no-header", ingest.no_header, "first row is data (requires --schema)");
  c_ingest->add_option("--rows-per-block", ingest.rows_per_block, "rows per block")->check(CLI::PositiveNumber);
  c_ingest->add_option("--seed", ingest.seed, "shuffle seed");
  c_ingest->add_option("--format", ingest.format, "json | table")->check(CLI::IsMember({"json", "table"}));

  QueryArgs query;
  auto* c_query = app.add_subcommand("query", "Find the k candidates whose histograms best match a target");
  c_query->add_option("dataset", query.dataset, "dataset file")->required()->check(CLI::ExistingFile);
  c_query->add_option("-x,--x", query.x, "grouping attribute")->required();
  c_query->add_option("-z,--z", query.z, "candidate attribute")->required();
  auto* t_weights =
      c_query->add_option("--target-weights", query.target_weights, "explicit target weights")->delimiter(',');
  auto* t_cand = c_query->add_option("--target-candidate", query.target_candidate, "use a candidate's histogram");
  t_weights->excludes(t_cand);
  c_query->add_flag("--exclude-target", query.exclude_target, "never return the target candidate itself");
  c_query->add_option("--k", query.k, "matches to return")->check(CLI::PositiveNumber);
  c_query->add_option("--epsilon", query.epsilon, "separation and reconstruction tolerance");
  c_query->add_option("--delta", query.delta, "failure probability");
  c_query->add_option("--sigma", query.sigma, "selectivity threshold");
  c_query->add_option("--m", query.m, "stage-1 sample size");
  c_query->add_option("--lookahead", query.lookahead, "blocks marked per batch")->check(CLI::PositiveNumber);
  c_query->add_option("--policy", query.policy, "fastmatch | syncmatch | scanmatch | scan")
      ->check(CLI::IsMember({"fastmatch", "syncmatch", "scanmatch", "scan"}));
  c_query->add_option("--mode", query.mode, "single | two-worker")->check(CLI::IsMember({"single", "two-worker"}));
  c_query->add_option("--seed", query.seed, "sampling seed");
  c_query->add_option("--start-block", query.start_block, "first block to read (default: random)");
  c_query->add_option("--format", query.format, "json | table")->check(CLI::IsMember({"json", "table"}));

  SynthArgs gen_synth;
  std::string gen_out;
  std::string gen_format = "json";
  auto* c_gen = app.add_subcommand("gen", "Generate a synthetic dataset with planted distances");
  gen_synth.seed_flag = "--seed";
  add_synth_flags(c_gen, gen_synth);
  c_gen->add_option("-o,--out", gen_out, "dataset file to write")->required();
  c_gen->add_option("--format", gen_format, "json | table")->check(CLI::IsMember({"json", "table"}));

  SynthArgs verify_synth;
  CampaignArgs verify;
  auto* c_verify = app.add_subcommand("verify", "Check the guarantees over many seeded runs");
  add_synth_flags(c_verify, verify_synth);
  add_campaign_flags(c_verify, verify);
  c_verify->add_option("--policy", verify.policy, "fastmatch | syncmatch | scanmatch | scan")
      ->check(CLI::IsMember({"fastmatch", "syncmatch", "scanmatch", "scan"}));
  c_verify->add_option("--records", verify.records, "write one JSON line per run");
  c_verify->add_option("-o,--out", verify.out, "write the aggregate report");

  SynthArgs bench_synth;
  CampaignArgs bench;
  bench.runs = 5;
  auto* c_bench = app.add_subcommand("bench", "Compare the four policies on a synthetic dataset");
  add_synth_flags(c_bench, bench_synth);
  add_campaign_flags(c_bench, bench);
  c_bench->add_option("-o,--out", bench.out, "write the report");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_ingest->parsed()) return cmd_ingest(ingest, c_ingest->count("--seed") > 0, out);
    if (c_query->parsed()) return cmd_query(query, c_query->count("--seed") > 0, out);
    if (c_gen->parsed()) return cmd_gen(c_gen, gen_synth, gen_out, gen_format, out);
    if (c_verify->parsed()) return cmd_verify(c_verify, verify_synth, verify, out);
    if (c_bench->parsed()) return cmd_bench(c_bench, bench_synth, bench, out);
  } catch (const NoSurvivors&) {
    err << "fastmatch: no candidate survives the selectivity threshold\n";
    return kExitEmpty;
  } catch (const Error& e) {
    err << "fastmatch: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace fastmatch::cli
