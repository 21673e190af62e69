#include "tabscm/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "tabscm/common.hpp"

namespace tabscm {

namespace {

std::optional<double> parse_finite(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool is_missing_token(const std::string& cell, const CsvOptions& options) {
  return std::find(options.missing_tokens.begin(), options.missing_tokens.end(), cell) !=
         options.missing_tokens.end();
}

bool needs_quotes(std::string_view s) {
  return s.find_first_of(",\"\r\n") != std::string_view::npos;
}

void append_field(std::string& out, std::string_view s) {
  if (!needs_quotes(s)) {
    out.append(s);
    return;
  }
  out.push_back('"');
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool after_quote = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF) {
    text.remove_prefix(3);
  }

  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    // A lone empty field on a blank line is not a record.
    if (!(record.size() == 1 && record[0].empty() && !field_started)) records.push_back(std::move(record));
    record.clear();
    field_started = false;
    after_quote = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
          after_quote = true;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = true;
      after_quote = false;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
      ++line;
      record_line = line;
    } else if (c == '"') {
      if (!field.empty() || after_quote) {
        throw ParseError("malformed CSV row at line " + std::to_string(line) + ": stray quote");
      }
      in_quotes = true;
      field_started = true;
    } else {
      if (after_quote) {
        throw ParseError("malformed CSV row at line " + std::to_string(line) +
                         ": text after closing quote");
      }
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) {
    throw ParseError("malformed CSV row at line " + std::to_string(record_line) + ": unterminated quote");
  }
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

Table parse_csv(std::string_view text, const std::optional<TableSchema>& schema, const CsvOptions& options) {
  auto records = parse_csv_records(text);
  if (records.size() <= 1) throw ParseError("empty file");
  const auto& header = records.front();
  const std::size_t n_cols = header.size();
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != n_cols) {
      throw ParseError("column count mismatch at data row " + std::to_string(r) + ": expected " +
                       std::to_string(n_cols) + ", got " + std::to_string(records[r].size()));
    }
  }
  const std::size_t n_rows = records.size() - 1;

  std::vector<ColumnSchema> col_schemas;
  if (schema) {
    if (schema->size() != n_cols) throw SchemaError("schema column count does not match CSV header");
    for (std::size_t c = 0; c < n_cols; ++c) {
      if ((*schema)[c].name != header[c]) {
        throw SchemaError("CSV header '" + header[c] + "' does not match schema column '" + (*schema)[c].name +
                          "'");
      }
    }
    col_schemas = schema->columns();
  } else {
    for (std::size_t c = 0; c < n_cols; ++c) {
      ColumnSchema cs;
      cs.name = header[c];
      bool numeric = true;
      for (std::size_t r = 1; r <= n_rows && numeric; ++r) {
        const auto& cell = records[r][c];
        if (is_missing_token(cell, options)) continue;
        numeric = parse_finite(cell).has_value();
      }
      cs.kind = numeric ? ColumnKind::Numerical : ColumnKind::Categorical;
      if (!numeric) {
        std::unordered_map<std::string, bool> seen;
        for (std::size_t r = 1; r <= n_rows; ++r) {
          const auto& cell = records[r][c];
          if (is_missing_token(cell, options)) continue;
          if (seen.emplace(cell, true).second) cs.categories.push_back(cell);
        }
      }
      col_schemas.push_back(std::move(cs));
    }
  }

  for (const auto& cs : col_schemas) {
    if (cs.is_categorical() && !cs.missing_category_added && cs.code_of(kMissingCategory)) {
      throw SchemaError("column '" + cs.name + "' contains the reserved category name " +
                        std::string(kMissingCategory));
    }
  }

  std::vector<Column> columns(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) {
    const auto& cs = col_schemas[c];
    if (cs.is_numerical()) {
      auto& out = columns[c].values;
      out.reserve(n_rows);
      for (std::size_t r = 1; r <= n_rows; ++r) {
        const auto& cell = records[r][c];
        if (is_missing_token(cell, options)) {
          out.push_back(std::numeric_limits<double>::quiet_NaN());
          continue;
        }
        auto v = parse_finite(cell);
        if (!v) {
          throw ParseError("data row " + std::to_string(r) + ", column '" + cs.name + "': '" + cell +
                           "' is not a finite number");
        }
        out.push_back(*v);
      }
    } else {
      std::unordered_map<std::string, std::int32_t> lookup;
      for (std::size_t k = 0; k < cs.categories.size(); ++k) lookup.emplace(cs.categories[k], static_cast<std::int32_t>(k));
      auto& out = columns[c].codes;
      out.reserve(n_rows);
      for (std::size_t r = 1; r <= n_rows; ++r) {
        const auto& cell = records[r][c];
        if (is_missing_token(cell, options)) {
          out.push_back(kMissingCode);
          continue;
        }
        auto it = lookup.find(cell);
        if (it == lookup.end()) {
          throw SchemaError("data row " + std::to_string(r) + ", column '" + cs.name + "': unknown category '" +
                            cell + "'");
        }
        out.push_back(it->second);
      }
    }
  }
  return Table(TableSchema(std::move(col_schemas)), std::move(columns));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

Table load_csv(const std::filesystem::path& path, const std::optional<TableSchema>& schema,
               const CsvOptions& options) {
  if (!std::filesystem::exists(path)) throw IoError("file not found: '" + path.string() + "'");
  return parse_csv(read_text_file(path), schema, options);
}

std::string to_csv(const Table& table) {
  std::string out;
  const auto& schema = table.schema();
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (c) out.push_back(',');
    append_field(out, schema[c].name);
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (c) out.push_back(',');
      append_field(out, table.cell_string(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Table& table, const std::filesystem::path& path) { write_text_file(path, to_csv(table)); }

}  // namespace tabscm
