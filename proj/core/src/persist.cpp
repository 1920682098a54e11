// SPDX-License-Identifier: Apache-2.0
#include "fastmatch/persist.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <string>

#include "fastmatch/error.hpp"

namespace fastmatch {

namespace {

constexpr std::array<char, 4> kMagic = {'F', 'M', 'D', 'S'};

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}

  template <typename T>
  void put(T v) {
    std::array<char, sizeof(T)> bytes;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes[i] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF);
    }
    out_.write(bytes.data(), bytes.size());
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void put_codes(const std::vector<std::uint32_t>& codes) {
    std::vector<char> buf(codes.size() * 4);
    for (std::size_t i = 0; i < codes.size(); ++i) {
      for (std::size_t b = 0; b < 4; ++b) {
        buf[4 * i + b] = static_cast<char>((codes[i] >> (8 * b)) & 0xFF);
      }
    }
    out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  explicit Reader(std::ifstream& in) : in_(in) {}

  template <typename T>
  T get() {
    std::array<unsigned char, sizeof(T)> bytes;
    read_raw(reinterpret_cast<char*>(bytes.data()), bytes.size());
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    }
    return static_cast<T>(v);
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    std::string s(n, '\0');
    read_raw(s.data(), n);
    return s;
  }
  std::vector<std::uint32_t> get_codes(std::uint64_t n) {
    std::vector<unsigned char> buf(n * 4);
    read_raw(reinterpret_cast<char*>(buf.data()), buf.size());
    std::vector<std::uint32_t> codes(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      codes[i] = static_cast<std::uint32_t>(buf[4 * i]) | (static_cast<std::uint32_t>(buf[4 * i + 1]) << 8) |
                 (static_cast<std::uint32_t>(buf[4 * i + 2]) << 16) |
                 (static_cast<std::uint32_t>(buf[4 * i + 3]) << 24);
    }
    return codes;
  }

 private:
  void read_raw(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw Error(ErrorCode::CorruptFile, "dataset file is truncated");
    }
  }

  std::ifstream& in_;
};

}  // namespace

const BitmapIndex* StoredDataset::index_for(std::string_view attribute) const {
  for (const auto& idx : indexes) {
    if (idx.attribute() == attribute) {
      return &idx;
    }
  }
  return nullptr;
}

BitmapIndex StoredDataset::index_or_build(std::string_view attribute) const {
  if (const BitmapIndex* idx = index_for(attribute)) {
    return *idx;
  }
  return build_bitmap_index(dataset, attribute);
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset,
                  const std::vector<BitmapIndex>& indexes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  }
  Writer w(out);
  out.write(kMagic.data(), kMagic.size());
  w.put<std::uint32_t>(kDatasetFormatVersion);
  w.put<std::uint32_t>(dataset.rows_per_block);
  w.put<std::uint64_t>(dataset.shuffle_seed);
  w.put<std::uint64_t>(dataset.row_count());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.schema.size()));
  for (std::size_t a = 0; a < dataset.schema.size(); ++a) {
    w.put_string(dataset.schema[a]);
    const auto& values = dataset.dictionaries[a].values();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(values.size()));
    for (const auto& v : values) w.put_string(v);
  }
  for (const auto& col : dataset.columns) {
    w.put_codes(col);
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(indexes.size()));
  for (const auto& idx : indexes) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.attribute_index(idx.attribute())));
    w.put<std::uint64_t>(idx.num_blocks());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(idx.num_values()));
    for (std::uint64_t word : idx.raw_words()) w.put<std::uint64_t>(word);
  }
  if (!out) {
    throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
  }
}

StoredDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  }
  Reader r(in);
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kMagic) {
    throw Error(ErrorCode::CorruptFile, "'" + path.string() + "' is not a dataset file");
  }
  if (const auto version = r.get<std::uint32_t>(); version != kDatasetFormatVersion) {
    throw Error(ErrorCode::CorruptFile, "unsupported dataset format version " + std::to_string(version));
  }
  StoredDataset out;
  Dataset& ds = out.dataset;
  ds.rows_per_block = r.get<std::uint32_t>();
  ds.shuffle_seed = r.get<std::uint64_t>();
  const auto rows = r.get<std::uint64_t>();
  const auto attrs = r.get<std::uint32_t>();
  for (std::uint32_t a = 0; a < attrs; ++a) {
    ds.add_attribute(r.get_string());
    const auto n = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) {
      ds.dictionaries[a].encode(r.get_string());
    }
    if (ds.dictionaries[a].size() != n) {
      throw Error(ErrorCode::CorruptFile, "duplicate dictionary entry");
    }
  }
  for (std::uint32_t a = 0; a < attrs; ++a) {
    ds.columns[a] = r.get_codes(rows);
  }
  ds.validate();
  const auto index_count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < index_count; ++i) {
    const auto a = r.get<std::uint32_t>();
    const auto blocks = r.get<std::uint64_t>();
    const auto values = r.get<std::uint32_t>();
    if (a >= attrs || blocks != ds.block_count() || values != ds.dictionaries[a].size()) {
      throw Error(ErrorCode::CorruptFile, "bitmap index header does not match the dataset");
    }
    BitmapIndex idx(ds.schema[a], blocks, values);
    for (auto& word : idx.raw_words()) word = r.get<std::uint64_t>();
    out.indexes.push_back(std::move(idx));
  }
  return out;
}

}  // namespace fastmatch
