#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tabscm/table.hpp"

namespace tabscm {

struct CsvOptions {
  /// Cell texts treated as missing, for both column kinds.
  std::vector<std::string> missing_tokens{"", "NaN", "?"};
};

/// RFC 4180 record splitter. Returns header + data records; throws
/// ParseError naming the 1-based line of the first malformed record.
std::vector<std::vector<std::string>> parse_csv_records(std::string_view text);

/// Builds a raw table (missing cells flagged, not yet imputed). Without a
/// schema, a column is numerical iff every non-missing cell parses as a
/// finite decimal; categories are kept in first-appearance order.
Table parse_csv(std::string_view text, const std::optional<TableSchema>& schema = std::nullopt,
                const CsvOptions& options = {});
Table load_csv(const std::filesystem::path& path, const std::optional<TableSchema>& schema = std::nullopt,
               const CsvOptions& options = {});

std::string to_csv(const Table& table);
void write_csv(const Table& table, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace tabscm
