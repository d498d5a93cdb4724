#pragma once

// Delimited-text readers and writers for datasets, labels, constraints and
// fused output.
//
// Dataset files carry a header row. The column `__cluster_id` is required,
// `__source_id` is optional; every other column is an attribute, in order.

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "recfuse/core_model.hpp"
#include "recfuse/dc.hpp"
#include "recfuse/error.hpp"
#include "recfuse/stagewise.hpp"

namespace recfuse {

inline constexpr std::string_view kClusterColumn = "__cluster_id";
inline constexpr std::string_view kSourceColumn = "__source_id";

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line where the record starts
};

/// Quote-aware delimited text parser. Fields may be wrapped in double
/// quotes; inside quotes "" is a literal quote and newlines are kept.
/// Blank lines are skipped.
inline std::vector<CsvRecord> parse_csv(std::string_view text, char delim = ',') {
  std::vector<CsvRecord> out;
  std::size_t pos = 0, line = 1, col = 1;
  auto at_end = [&] { return pos >= text.size(); };
  while (!at_end()) {
    if (text[pos] == '\n' || (text[pos] == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n')) {
      pos += text[pos] == '\r' ? 2 : 1;
      ++line;
      col = 1;
      continue;
    }
    CsvRecord rec;
    rec.line = line;
    for (;;) {
      std::string field;
      if (!at_end() && text[pos] == '"') {
        const std::size_t qline = line, qcol = col;
        ++pos, ++col;
        for (;;) {
          if (at_end()) throw DataError("unterminated quoted field", qline, qcol);
          char ch = text[pos];
          if (ch == '"') {
            if (pos + 1 < text.size() && text[pos + 1] == '"') {
              field += '"';
              pos += 2, col += 2;
              continue;
            }
            ++pos, ++col;
            break;
          }
          field += ch;
          ++pos;
          if (ch == '\n') {
            ++line;
            col = 1;
          } else {
            ++col;
          }
        }
        if (!at_end() && text[pos] != delim && text[pos] != '\n' && text[pos] != '\r') {
          throw DataError("unexpected character after closing quote", line, col);
        }
      } else {
        while (!at_end() && text[pos] != delim && text[pos] != '\n' && text[pos] != '\r') {
          field += text[pos++];
          ++col;
        }
      }
      rec.fields.push_back(std::move(field));
      if (!at_end() && text[pos] == delim) {
        ++pos, ++col;
        continue;
      }
      break;
    }
    if (!at_end() && text[pos] == '\r') ++pos;
    if (!at_end() && text[pos] == '\n') ++pos;
    ++line;
    col = 1;
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::string csv_escape(std::string_view v, char delim = ',') {
  bool quote = v.find_first_of(std::string{delim, '"', '\n', '\r'}) != std::string_view::npos;
  if (!quote && !v.empty() && (v.front() == ' ' || v.back() == ' ')) quote = true;
  if (!quote) return std::string(v);
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_line(const std::vector<std::string>& fields, char delim = ',') {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += delim;
    out += csv_escape(fields[i], delim);
  }
  return out + "\n";
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

/// Header of a dataset file: schema plus the positions of the id columns.
struct DatasetHeader {
  std::vector<std::string> schema;
  std::size_t cluster_col = 0;
  std::optional<std::size_t> source_col;
  std::vector<std::size_t> attribute_cols;
};

inline DatasetHeader parse_header(const CsvRecord& rec) {
  DatasetHeader h;
  bool have_cluster = false;
  for (std::size_t i = 0; i < rec.fields.size(); ++i) {
    auto name = trim(rec.fields[i]);
    if (name == kClusterColumn) {
      if (have_cluster) throw DataError("duplicate " + std::string(kClusterColumn) + " column", rec.line, i + 1);
      have_cluster = true;
      h.cluster_col = i;
    } else if (name == kSourceColumn) {
      if (h.source_col) throw DataError("duplicate " + std::string(kSourceColumn) + " column", rec.line, i + 1);
      h.source_col = i;
    } else {
      h.schema.push_back(name);
      h.attribute_cols.push_back(i);
    }
  }
  if (!have_cluster) throw DataError("header has no " + std::string(kClusterColumn) + " column", rec.line);
  if (h.schema.empty()) throw DataError("header has no attribute columns", rec.line);
  return h;
}

inline FusionDataset parse_dataset(std::string_view text, std::vector<DenialConstraint> constraints = {},
                                   char delim = ',') {
  auto records = parse_csv(text, delim);
  if (records.empty()) throw DataError("dataset file is empty");
  auto header = parse_header(records[0]);
  const std::size_t width = records[0].fields.size();
  std::vector<FusionDataset::RowInput> rows;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != width) {
      throw DataError("expected " + std::to_string(width) + " fields, found " + std::to_string(rec.fields.size()),
                      rec.line);
    }
    FusionDataset::RowInput in;
    in.line = rec.line;
    in.cluster_id = trim(rec.fields[header.cluster_col]);
    if (in.cluster_id.empty()) throw DataError("empty cluster id", rec.line, header.cluster_col + 1);
    if (header.source_col) in.source_id = trim(rec.fields[*header.source_col]);
    for (auto c : header.attribute_cols) in.cells.push_back(rec.fields[c]);
    rows.push_back(std::move(in));
  }
  if (rows.empty()) throw DataError("dataset has no rows");
  return FusionDataset::build(header.schema, std::move(rows), std::move(constraints));
}

/// One denial constraint per line; blank lines and lines starting with '#'
/// are ignored.
inline std::vector<DenialConstraint> parse_constraints(std::string_view text, std::span<const std::string> schema) {
  std::vector<DenialConstraint> out;
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line[0] == '#') {
      if (end == text.size()) break;
      continue;
    }
    try {
      out.push_back(parse_dc(line, schema));
    } catch (const ParseError& e) {
      throw DataError(e.what(), line_no, e.position() + 1);
    }
    if (end == text.size()) break;
  }
  return out;
}

inline std::string format_constraints(std::span<const DenialConstraint> dcs, std::span<const std::string> schema) {
  std::string out;
  for (const auto& dc : dcs) out += dc.to_string(schema) + "\n";
  return out;
}

/// Rows `cluster_id,attribute,value`; a first row reading
/// "cluster_id,attribute,value" is treated as a header.
inline GroundTruth parse_labels(std::string_view text, const FusionDataset& ds, char delim = ',') {
  GroundTruth truth;
  auto records = parse_csv(text, delim);
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (r == 0 && rec.fields.size() == 3 && trim(rec.fields[0]) == "cluster_id" && trim(rec.fields[1]) == "attribute") {
      continue;
    }
    if (rec.fields.size() != 3) {
      throw DataError("label rows need 3 fields (cluster_id, attribute, value), found " +
                          std::to_string(rec.fields.size()),
                      rec.line);
    }
    auto cluster = trim(rec.fields[0]);
    auto k = ds.cluster_index(cluster);
    if (!k) throw DataError("label refers to unknown cluster '" + cluster + "'", rec.line, 1);
    auto attr = trim(rec.fields[1]);
    auto j = ds.attribute_index(attr);
    if (!j) throw DataError("label refers to unknown attribute '" + attr + "'", rec.line, 2);
    auto value = trim(rec.fields[2]);
    if (const auto* prev = truth.find(*k, *j); prev && *prev != value) {
      throw DataError("conflicting labels for cluster '" + cluster + "', attribute '" + attr + "'", rec.line);
    }
    truth.set(*k, *j, std::move(value));
  }
  return truth;
}

inline std::string format_labels(const GroundTruth& truth, const FusionDataset& ds, char delim = ',') {
  std::string out = csv_line({"cluster_id", "attribute", "value"}, delim);
  for (const auto& [key, v] : truth.entries()) {
    out += csv_line({ds.cluster_name(key.first), ds.schema()[key.second], v}, delim);
  }
  return out;
}

/// Dataset in file form. Synthetic clusters are included.
inline std::string format_dataset(const FusionDataset& ds, char delim = ',') {
  std::vector<std::string> header{std::string(kClusterColumn)};
  if (ds.has_sources()) header.emplace_back(kSourceColumn);
  header.insert(header.end(), ds.schema().begin(), ds.schema().end());
  std::string out = csv_line(header, delim);
  for (std::size_t i = 0; i < ds.num_rows(); ++i) {
    std::vector<std::string> f{ds.cluster_name(ds.cluster_of(i))};
    if (ds.has_sources()) f.push_back(ds.source_name(ds.source_of(i)));
    f.insert(f.end(), ds.row(i).begin(), ds.row(i).end());
    out += csv_line(f, delim);
  }
  return out;
}

/// Fused records; with `confidence` each attribute is followed by a
/// `<attr>__confidence` column.
inline std::string format_fused(const FusedTable& t, bool confidence, char delim = ',') {
  std::vector<std::string> header{std::string(kClusterColumn)};
  for (const auto& a : t.schema) {
    header.push_back(a);
    if (confidence) header.push_back(a + "__confidence");
  }
  std::string out = csv_line(header, delim);
  char buf[32];
  for (std::size_t k = 0; k < t.cluster_ids.size(); ++k) {
    std::vector<std::string> f{t.cluster_ids[k]};
    for (std::size_t j = 0; j < t.schema.size(); ++j) {
      f.push_back(t.values[k][j]);
      if (confidence) {
        std::snprintf(buf, sizeof buf, "%.6f", t.confidence[k][j]);
        f.emplace_back(buf);
      }
    }
    out += csv_line(f, delim);
  }
  return out;
}

}  // namespace recfuse
