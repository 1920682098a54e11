// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "report.hpp"
#include "test_util.hpp"

namespace fastmatch::cli {
namespace {

using fastmatch::testing::TempDir;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

json parse(const Outcome& o) { return json::parse(o.out); }

json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// A small generated dataset shared by several tests.
std::string gen_small(const TempDir& dir, const std::string& seed = "3") {
  const std::string path = dir.file("small.fm").string();
  const Outcome o = invoke({"gen", "--candidates", "8", "--groups", "4", "--rows", "40000", "--distance",
                            "linspace", "--distance-lo", "0", "--distance-hi", "1.2", "--rows-per-block", "64",
                            "--seed", seed, "-o", path});
  EXPECT_EQ(o.code, kExitOk) << o.err;
  return path;
}

TEST(Cli, IngestCsv) {
  TempDir dir;
  const auto csv = dir.write("t.csv",
                             "city,price,kind\n"
                             "a,3,x\nb,12,y\na,NA,x\n\"c, d\",0.5,y\nb,7,x\n");
  const std::string out = dir.file("t.fm").string();
  const Outcome o = invoke({"ingest", csv.string(), "-o", out, "--bin", "price=0,5,10", "--seed", "1"});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const json doc = parse(o);
  EXPECT_EQ(doc["rows"], 4);
  EXPECT_EQ(doc["dropped_rows"], 1);
  EXPECT_EQ(doc["attributes"][0]["distinct"], 3);
  EXPECT_TRUE(std::filesystem::exists(out));

  const Outcome q = invoke({"query", out, "-x", "price", "-z", "city", "--k", "1", "--sigma", "0", "--m", "2",
                            "--seed", "1"});
  ASSERT_EQ(q.code, kExitOk) << q.err;
  EXPECT_EQ(parse(q)["matches"].size(), 1u);
}

TEST(Cli, UsageErrors) {
  TempDir dir;
  EXPECT_EQ(invoke({"ingest", dir.file("missing.csv").string(), "-o", dir.file("x.fm").string()}).code, kExitUsage);
  EXPECT_EQ(invoke({"query"}).code, kExitUsage);
  EXPECT_EQ(invoke({"bogus"}).code, kExitUsage);
  EXPECT_EQ(invoke({"gen", "--candidates", "2", "--groups", "4", "--distance", "explicit", "--distances", "0,3",
                    "-o", dir.file("bad.fm").string()})
                .code,
            kExitUsage);
  const std::string path = gen_small(dir);
  EXPECT_EQ(invoke({"query", path, "-x", "group", "-z", "nope"}).code, kExitUsage);
  EXPECT_EQ(invoke({"query", path, "-x", "group", "-z", "candidate", "--epsilon", "0"}).code, kExitUsage);
  EXPECT_EQ(invoke({"query", path, "-x", "group", "-z", "candidate", "--policy", "magic"}).code, kExitUsage);
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
}

TEST(Cli, QueryEchoesDefaults) {
  TempDir dir;
  const std::string path = gen_small(dir);
  const Outcome o = invoke({"query", path, "-x", "group", "-z", "candidate", "--seed", "9"});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const json doc = parse(o);
  EXPECT_EQ(doc["query"]["epsilon"], 0.04);
  EXPECT_EQ(doc["query"]["delta"], 0.01);
  EXPECT_EQ(doc["query"]["sigma"], 0.0008);
  EXPECT_EQ(doc["query"]["k"], 10);
  EXPECT_EQ(doc["config"]["m"], 500000);
  EXPECT_EQ(doc["config"]["lookahead"], 1024);
  EXPECT_EQ(doc["config"]["policy"], "fastmatch");
  EXPECT_EQ(doc["matches"].size(), 8u);
}

TEST(Cli, QueryIsReproducible) {
  TempDir dir;
  const std::string path = gen_small(dir);
  const std::vector<std::string> args{"query", path, "-x", "group", "-z", "candidate", "--k", "2", "--epsilon",
                                      "0.1", "--m", "4000", "--seed", "5"};
  const json a = strip_timing(parse(invoke(args)));
  const json b = strip_timing(parse(invoke(args)));
  EXPECT_EQ(a, b);
}

TEST(Cli, ScanPolicyIsExact) {
  TempDir dir;
  const std::string path = gen_small(dir);
  const Outcome o = invoke({"query", path, "-x", "group", "-z", "candidate", "--k", "3", "--policy", "scan"});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const json doc = parse(o);
  EXPECT_TRUE(doc["diagnostics"]["exact_flag"].get<bool>());
  ASSERT_EQ(doc["matches"].size(), 3u);
  EXPECT_EQ(doc["matches"][0]["candidate"], "c0000");
  EXPECT_EQ(doc["matches"][1]["candidate"], "c0001");
  EXPECT_EQ(doc["matches"][2]["candidate"], "c0002");
}

TEST(Cli, TableFormat) {
  TempDir dir;
  const std::string path = gen_small(dir);
  const Outcome o = invoke({"query", path, "-x", "group", "-z", "candidate", "--k", "2", "--policy", "scan",
                            "--format", "table"});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  EXPECT_NE(o.out.find("c0000"), std::string::npos);
  EXPECT_FALSE(json::accept(o.out));
}

TEST(Cli, NoSurvivorsExitCode) {
  TempDir dir;
  const std::string path = gen_small(dir);
  // Every candidate holds 1/8 of the rows.
  const Outcome o = invoke({"query", path, "-x", "group", "-z", "candidate", "--sigma", "0.5", "--seed", "1"});
  EXPECT_EQ(o.code, kExitEmpty);
  EXPECT_TRUE(parse(o)["matches"].empty());
}

TEST(Cli, GenIsDeterministic) {
  TempDir a;
  const std::string p1 = gen_small(a, "11");
  const std::string bytes = read_text(p1);
  const json truth = read_json(p1 + ".truth.json");
  const std::string p2 = gen_small(a, "11");
  EXPECT_EQ(read_text(p2), bytes);
  EXPECT_EQ(read_json(p2 + ".truth.json"), truth);
  gen_small(a, "12");
  EXPECT_NE(read_text(p1), bytes);
}

TEST(Cli, SpecFileWithOverrides) {
  TempDir dir;
  const auto spec = dir.write("s.json", R"({"synth": {"candidates": 6, "groups": 3, "rows": 30000,
    "distance": "linspace", "distance_lo": 0.0, "distance_hi": 1.0, "rows_per_block": 64},
    "query": {"k": 2, "epsilon": 0.1, "m": 3000}})");
  const Outcome o = invoke({"verify", "--spec", spec.string(), "--runs", "4", "--k", "1", "--seed", "2"});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const json doc = parse(o);
  EXPECT_EQ(doc["spec"]["candidates"], 6);
  EXPECT_EQ(doc["query"]["k"], 1);
  EXPECT_EQ(doc["query"]["epsilon"], 0.1);
  EXPECT_EQ(doc["config"]["m"], 3000);
  EXPECT_EQ(doc["runs"], 4);
  EXPECT_EQ(doc["violation_rate"], 0.0);
  EXPECT_TRUE(doc["binomial_consistent"].get<bool>());
}

TEST(Cli, VerifyWritesRecords) {
  TempDir dir;
  const std::string records = dir.file("runs.jsonl").string();
  const std::string report = dir.file("report.json").string();
  const Outcome o = invoke({"verify", "--candidates", "6", "--groups", "3", "--rows", "30000", "--distance-hi",
                            "1.0", "--rows-per-block", "64", "--k", "2", "--epsilon", "0.1", "--m", "3000",
                            "--runs", "3", "--workers", "2", "--records", records, "-o", report});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  std::ifstream in(records);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    EXPECT_TRUE(json::parse(line).contains("seed"));
    ++lines;
  }
  EXPECT_EQ(lines, 3);
  EXPECT_EQ(strip_timing(read_json(report)), strip_timing(parse(o)));
}

TEST(Cli, BenchReportsFourPolicies) {
  const Outcome o = invoke({"bench", "--candidates", "6", "--groups", "3", "--rows", "30000", "--distance-hi", "1.0",
                            "--rows-per-block", "64", "--k", "2", "--epsilon", "0.1", "--m", "3000", "--runs", "2"});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const json doc = parse(o);
  ASSERT_EQ(doc["policies"].size(), 4u);
  EXPECT_EQ(doc["policies"][0]["policy"], "scan");
  EXPECT_EQ(doc["policies"][3]["policy"], "fastmatch");
  for (const auto& row : doc["policies"]) EXPECT_EQ(row["violations"], 0);
}

TEST(Cli, EnvironmentSeed) {
  TempDir dir;
  const std::string path = gen_small(dir);
  const std::vector<std::string> args{"query", path, "-x", "group", "-z", "candidate", "--k", "2", "--m", "4000"};
  ::setenv(kSeedEnv, "77", 1);
  const json a = parse(invoke(args));
  ::unsetenv(kSeedEnv);
  EXPECT_EQ(a["config"]["seed"], 77);
}


json golden(const std::string& name) { return read_json(std::filesystem::path(FASTMATCH_GOLDEN_DIR) / name); }

TEST(GoldenSchema, QueryDocument) {
  TempDir dir;
  const std::string path = gen_small(dir);
  const json doc = parse(invoke({"query", path, "-x", "group", "-z", "candidate", "--k", "2", "--seed", "1"}));
  EXPECT_EQ(schema_of(doc), golden("query.schema.json"));
}

TEST(GoldenSchema, VerifyDocument) {
  const json doc = parse(invoke({"verify", "--candidates", "6", "--groups", "3", "--rows", "30000", "--distance-hi",
                                 "1.0", "--k", "2", "--epsilon", "0.1", "--m", "3000", "--runs", "2"}));
  json s = schema_of(doc);
  EXPECT_EQ(s, golden("verify.schema.json"));
}

TEST(GoldenSchema, GenDocument) {
  TempDir dir;
  const Outcome o = invoke({"gen", "--candidates", "4", "--groups", "3", "--rows", "1000", "-o",
                            dir.file("g.fm").string()});
  EXPECT_EQ(schema_of(parse(o)), golden("gen.schema.json"));
}

}  // namespace
}  // namespace fastmatch::cli
