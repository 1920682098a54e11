// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "fastmatch/bitmap.hpp"
#include "fastmatch/csv.hpp"
#include "fastmatch/dataset.hpp"
#include "fastmatch/persist.hpp"
#include "fastmatch/scan.hpp"
#include "test_util.hpp"

namespace fastmatch {
namespace {

using fastmatch::testing::TempDir;

Dataset make_dataset(const std::vector<std::string>& z, const std::vector<std::string>& x,
                     std::uint32_t rows_per_block = 4) {
  Dataset ds;
  ds.rows_per_block = rows_per_block;
  const auto zi = ds.add_attribute("z");
  const auto xi = ds.add_attribute("x");
  for (std::size_t r = 0; r < z.size(); ++r) {
    ds.columns[zi].push_back(ds.dictionaries[zi].encode(z[r]));
    ds.columns[xi].push_back(ds.dictionaries[xi].encode(x[r]));
  }
  return ds;
}

Dataset random_dataset(std::uint64_t rows, std::uint32_t values, std::uint32_t rows_per_block, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::uint32_t> v(0, values - 1);
  std::vector<std::string> z, x;
  for (std::uint64_t r = 0; r < rows; ++r) {
    z.push_back("z" + std::to_string(v(gen)));
    x.push_back("x" + std::to_string(v(gen) % 5));
  }
  return make_dataset(z, x, rows_per_block);
}

TEST(Dictionary, FirstAppearanceOrderAndRoundTrip) {
  Dictionary d;
  EXPECT_EQ(d.encode("b"), 0u);
  EXPECT_EQ(d.encode("a"), 1u);
  EXPECT_EQ(d.encode("b"), 0u);
  EXPECT_EQ(d.size(), 2u);
  for (std::uint32_t c = 0; c < d.size(); ++c) EXPECT_EQ(*d.find(d.decode(c)), c);
  EXPECT_FALSE(d.find("zzz").has_value());
}

TEST(Dataset, AttributeLookup) {
  const Dataset ds = make_dataset({"a"}, {"0"});
  EXPECT_EQ(ds.attribute_index("x"), 1u);
  EXPECT_FM_ERROR(ds.attribute_index("nope"), ErrorCode::UnknownAttribute);
}

TEST(ReadBlock, FullAndPartialBlocks) {
  const Dataset ds = random_dataset(10, 3, 4, 1);
  const std::size_t cols[] = {0, 1};
  EXPECT_EQ(ds.block_count(), 3u);
  EXPECT_EQ(read_block(ds, 0, cols).size(), 4u);
  const BlockSlice last = read_block(ds, 2, cols);
  EXPECT_EQ(last.size(), 2u);
  EXPECT_EQ(last.first_row, 8u);
  EXPECT_EQ(last.columns[1][1], ds.columns[1][9]);
  EXPECT_FM_ERROR(read_block(ds, 3, cols), ErrorCode::OutOfRange);
}

TEST(Shuffle, DeterministicAndPreservesRows) {
  const Dataset ds = random_dataset(500, 7, 16, 2);
  const Dataset a = shuffle(ds, 42);
  const Dataset b = shuffle(ds, 42);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.shuffle_seed, 42u);
  EXPECT_NE(a.columns, ds.columns);
  auto pairs = [](const Dataset& d) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> rows;
    for (std::size_t r = 0; r < d.row_count(); ++r) rows.emplace_back(d.columns[0][r], d.columns[1][r]);
    std::sort(rows.begin(), rows.end());
    return rows;
  };
  EXPECT_EQ(pairs(a), pairs(ds));
}

TEST(Shuffle, SingleRowIsIdentity) {
  const Dataset ds = make_dataset({"a"}, {"0"});
  EXPECT_EQ(shuffle(ds, 9).columns, ds.columns);
}

TEST(Shuffle, SortedColumnKeepsItsMultiset) {
  Dataset ds;
  const auto c = ds.add_attribute("n");
  for (int i = 0; i < 300; ++i) ds.columns[c].push_back(ds.dictionaries[c].encode(std::to_string(i)));
  Dataset s = shuffle(ds, 5);
  std::sort(s.columns[c].begin(), s.columns[c].end());
  EXPECT_EQ(s.columns[c], ds.columns[c]);
}

TEST(Bitmap, SmallCases) {
  const Dataset one = make_dataset({"a", "b"}, {"0", "0"});
  const BitmapIndex i1 = build_bitmap_index(one, "z");
  EXPECT_TRUE(i1.test(0, 0));
  EXPECT_TRUE(i1.test(1, 0));

  const Dataset two = make_dataset({"a", "a", "a", "a", "b"}, {"0", "0", "0", "0", "0"});
  const BitmapIndex i2 = build_bitmap_index(two, "z");
  EXPECT_TRUE(i2.test(0, 0));
  EXPECT_FALSE(i2.test(0, 1));
  EXPECT_FALSE(i2.test(1, 0));
  EXPECT_TRUE(i2.test(1, 1));
  EXPECT_EQ(i2.popcount(1), 1u);
  EXPECT_FM_ERROR(build_bitmap_index(two, "w"), ErrorCode::UnknownAttribute);
}

TEST(Bitmap, MatchesBruteForceMembership) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset ds = random_dataset(700 + seed * 13, 40, 8, seed);
    const BitmapIndex idx = build_bitmap_index(ds, "z");
    for (std::uint32_t v = 0; v < ds.dictionaries[0].size(); ++v) {
      std::uint64_t pop = 0;
      for (std::uint64_t b = 0; b < ds.block_count(); ++b) {
        const auto [lo, hi] = ds.block_rows(b);
        const bool present = std::find(ds.columns[0].begin() + lo, ds.columns[0].begin() + hi, v) !=
                             ds.columns[0].begin() + hi;
        EXPECT_EQ(idx.test(v, b), present);
        pop += present;
      }
      EXPECT_EQ(idx.popcount(v), pop);
    }
  }
}

TEST(Csv, SplitsQuotedFields) {
  std::vector<std::string> f;
  ASSERT_TRUE(split_csv_record(R"(a,"b,c","say ""hi""",)", ',', f));
  EXPECT_EQ(f, (std::vector<std::string>{"a", "b,c", "say \"hi\"", ""}));
  EXPECT_FALSE(split_csv_record(R"(a,"open)", ',', f));
}

TEST(Csv, MissingSpellings) {
  for (const char* s : {"", "N/A", "na", "NaN", "null", "  "}) EXPECT_TRUE(is_missing_value(s)) << s;
  EXPECT_FALSE(is_missing_value("0"));
}

TEST(Csv, IngestsRows) {
  TempDir dir;
  const auto path = dir.write("t.csv", "origin,delay\nORD,1\nSFO,2\nORD,1\n");
  const IngestResult r = ingest_csv(path, {});
  EXPECT_EQ(r.dataset.row_count(), 3u);
  EXPECT_EQ(r.dropped_rows, 0u);
  EXPECT_EQ(r.dataset.schema, (std::vector<std::string>{"origin", "delay"}));
  EXPECT_EQ(r.dataset.dictionaries[0].decode(r.dataset.columns[0][2]), "ORD");
}

TEST(Csv, DropsMissingValues) {
  TempDir dir;
  const auto path = dir.write("t.csv", "origin,delay\nORD,1\nSFO,N/A\nORD,1\n");
  const IngestResult r = ingest_csv(path, {});
  EXPECT_EQ(r.dataset.row_count(), 2u);
  EXPECT_EQ(r.dropped_rows, 1u);

  IngestOptions keep;
  keep.na_policy = NaPolicy::Keep;
  EXPECT_EQ(ingest_csv(path, keep).dataset.row_count(), 3u);
}

TEST(Csv, SchemaSelectionAndErrors) {
  TempDir dir;
  const auto path = dir.write("t.csv", "a,b,c\n1,2,3\n4,5,6\n");
  IngestOptions opts;
  opts.schema = {"c", "a"};
  const IngestResult r = ingest_csv(path, opts);
  EXPECT_EQ(r.dataset.schema, (std::vector<std::string>{"c", "a"}));
  EXPECT_EQ(r.dataset.dictionaries[0].decode(r.dataset.columns[0][1]), "6");

  opts.schema = {"missing"};
  EXPECT_FM_ERROR(ingest_csv(path, opts), ErrorCode::SchemaMismatch);
  EXPECT_FM_ERROR(ingest_csv(dir.file("absent.csv"), {}), ErrorCode::IoError);
  EXPECT_FM_ERROR(ingest_csv(dir.write("empty.csv", ""), {}), ErrorCode::EmptyDataset);
}

TEST(Csv, BinsNumericColumns) {
  TempDir dir;
  const auto path = dir.write("t.csv", "z,v\na,-1\na,0.5\nb,3\nb,99\nb,oops\n");
  IngestOptions opts;
  opts.bins = {BinSpec::parse("v=0,1,10")};
  const IngestResult r = ingest_csv(path, opts);
  EXPECT_EQ(r.dropped_rows, 1u);
  EXPECT_EQ(r.dataset.dictionaries[1].values(), (std::vector<std::string>{"<0", "[0,1)", "[1,10)", ">=10"}));
  EXPECT_FM_ERROR(BinSpec::parse("v=3,1"), ErrorCode::InvalidArgument);
}

TEST(Persist, RoundTrip) {
  TempDir dir;
  const Dataset ds = shuffle(random_dataset(1000, 30, 16, 7), 3);
  const std::vector<BitmapIndex> idx{build_bitmap_index(ds, "z"), build_bitmap_index(ds, "x")};
  save_dataset(dir.file("d.fmds"), ds, idx);
  const StoredDataset loaded = load_dataset(dir.file("d.fmds"));
  EXPECT_EQ(loaded.dataset, ds);
  EXPECT_EQ(loaded.indexes, idx);
  ASSERT_NE(loaded.index_for("x"), nullptr);
  EXPECT_EQ(loaded.index_or_build("z"), idx[0]);
}

TEST(Persist, RejectsCorruptFiles) {
  TempDir dir;
  EXPECT_FM_ERROR(load_dataset(dir.write("bad.fmds", "not a dataset")), ErrorCode::CorruptFile);
  const Dataset ds = random_dataset(100, 5, 8, 1);
  save_dataset(dir.file("d.fmds"), ds, {});
  std::string bytes;
  {
    std::ifstream f(dir.file("d.fmds"), std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(f), {});
  }
  bytes.resize(bytes.size() / 2);
  EXPECT_FM_ERROR(load_dataset(dir.write("cut.fmds", bytes)), ErrorCode::CorruptFile);
  EXPECT_FM_ERROR(load_dataset(dir.file("absent.fmds")), ErrorCode::IoError);
}

TEST(ScanGroupby, HandEnumeration) {
  const Dataset ds = make_dataset({"a", "a", "b", "b"}, {"0", "1", "0", "0"});
  const auto all = scan_groupby(ds, "x", "z", 0.0);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all.at(0), (HistogramCounts{1, 1}));
  EXPECT_EQ(all.at(1), (HistogramCounts{2, 0}));
  EXPECT_TRUE(scan_groupby(ds, "x", "z", 0.6).empty());
  EXPECT_FM_ERROR(scan_groupby(ds, "x", "nope", 0.0), ErrorCode::UnknownAttribute);
}

TEST(ScanGroupby, MatchesDoubleLoop) {
  const Dataset ds = random_dataset(3000, 25, 32, 8);
  const double sigma = 0.04;
  const auto got = scan_groupby(ds, "x", "z", sigma);
  for (std::uint32_t z = 0; z < ds.dictionaries[0].size(); ++z) {
    std::vector<std::uint64_t> counts(ds.dictionaries[1].size(), 0);
    std::uint64_t total = 0;
    for (std::size_t r = 0; r < ds.row_count(); ++r) {
      if (ds.columns[0][r] == z) {
        ++counts[ds.columns[1][r]];
        ++total;
      }
    }
    const bool kept = static_cast<double>(total) >= sigma * static_cast<double>(ds.row_count());
    ASSERT_EQ(got.count(z) == 1, kept) << z;
    if (kept) EXPECT_EQ(got.at(z), HistogramCounts(counts));
  }
}

}  // namespace
}  // namespace fastmatch
