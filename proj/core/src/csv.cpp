// SPDX-License-Identifier: Apache-2.0
#include "fastmatch/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "fastmatch/error.hpp"

namespace fastmatch {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::optional<double> parse_number(std::string_view s) {
  std::string t = trim(s);
  if (t.empty()) {
    return std::nullopt;
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    return std::nullopt;
  }
  return v;
}

std::string format_edge(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Reads one logical record, which may span lines inside quotes.
bool next_record(std::istream& in, char delimiter, std::vector<std::string>& fields) {
  std::string line;
  if (!std::getline(in, line)) {
    return false;
  }
  std::string record = line;
  while (!split_csv_record(record, delimiter, fields)) {
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::SchemaMismatch, "unterminated quoted field at end of file");
    }
    record += '\n';
    record += line;
  }
  return true;
}

}  // namespace

BinSpec BinSpec::parse(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::InvalidArgument, "bin spec must look like attr=e0,e1,...");
  }
  BinSpec spec;
  spec.attribute = text.substr(0, eq);
  std::stringstream ss(text.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto v = parse_number(item);
    if (!v) {
      throw Error(ErrorCode::InvalidArgument, "bad bin edge '" + item + "'");
    }
    spec.edges.push_back(*v);
  }
  if (spec.edges.size() < 2 || !std::is_sorted(spec.edges.begin(), spec.edges.end(), std::less_equal<>())) {
    throw Error(ErrorCode::InvalidArgument, "bin edges must be at least two strictly increasing values");
  }
  return spec;
}

std::string BinSpec::label(double value) const {
  if (value < edges.front()) {
    return "<" + format_edge(edges.front());
  }
  if (value >= edges.back()) {
    return ">=" + format_edge(edges.back());
  }
  const auto it = std::upper_bound(edges.begin(), edges.end(), value);
  const std::size_t hi = static_cast<std::size_t>(it - edges.begin());
  return "[" + format_edge(edges[hi - 1]) + "," + format_edge(edges[hi]) + ")";
}

bool is_missing_value(std::string_view value) {
  std::string t = trim(value);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::toupper(c); });
  return t.empty() || t == "N/A" || t == "NA" || t == "NAN" || t == "NULL";
}

bool split_csv_record(std::string_view line, char delimiter, std::vector<std::string>& fields) {
  fields.clear();
  if (!line.empty() && line.back() == '\r') {
    line.remove_suffix(1);
  }
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) {
    return false;
  }
  fields.push_back(std::move(field));
  return true;
}

IngestResult ingest_csv(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  }
  if (options.rows_per_block == 0) {
    throw Error(ErrorCode::InvalidArgument, "rows_per_block must be positive");
  }

  std::vector<std::string> fields;
  std::vector<std::string> header;
  if (options.header) {
    if (!next_record(in, options.delimiter, fields)) {
      throw Error(ErrorCode::EmptyDataset, "'" + path.string() + "' is empty");
    }
    for (auto& f : fields) header.push_back(trim(f));
  } else {
    if (options.schema.empty()) {
      throw Error(ErrorCode::SchemaMismatch, "a schema is required when the file has no header");
    }
    header = options.schema;
  }

  const std::vector<std::string> schema = options.schema.empty() ? header : options.schema;
  std::vector<std::size_t> source;
  for (const auto& name : schema) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorCode::SchemaMismatch, "attribute '" + name + "' not found in header");
    }
    source.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  std::vector<const BinSpec*> binning(schema.size(), nullptr);
  for (const auto& b : options.bins) {
    auto it = std::find(schema.begin(), schema.end(), b.attribute);
    if (it == schema.end()) {
      throw Error(ErrorCode::SchemaMismatch, "bin spec for unknown attribute '" + b.attribute + "'");
    }
    binning[static_cast<std::size_t>(it - schema.begin())] = &b;
  }

  IngestResult result;
  Dataset& ds = result.dataset;
  ds.rows_per_block = options.rows_per_block;
  for (const auto& name : schema) ds.add_attribute(name);

  std::vector<std::string> values(schema.size());
  while (next_record(in, options.delimiter, fields)) {
    if (fields.size() == 1 && trim(fields[0]).empty() && header.size() > 1) {
      continue;  // blank line
    }
    if (fields.size() != header.size()) {
      ++result.dropped_rows;
      continue;
    }
    bool keep = true;
    for (std::size_t a = 0; a < schema.size() && keep; ++a) {
      const std::string& raw = fields[source[a]];
      if (options.na_policy == NaPolicy::Drop && is_missing_value(raw)) {
        keep = false;
      } else if (binning[a] != nullptr) {
        auto v = parse_number(raw);
        if (!v) {
          keep = false;
        } else {
          values[a] = binning[a]->label(*v);
        }
      } else {
        values[a] = trim(raw);
      }
    }
    if (!keep) {
      ++result.dropped_rows;
      continue;
    }
    for (std::size_t a = 0; a < schema.size(); ++a) {
      ds.columns[a].push_back(ds.dictionaries[a].encode(values[a]));
    }
  }
  if (ds.row_count() == 0) {
    throw Error(ErrorCode::EmptyDataset, "'" + path.string() + "' has no usable rows");
  }
  return result;
}

}  // namespace fastmatch
