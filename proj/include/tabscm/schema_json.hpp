#pragma once

#include <filesystem>

#include "json.hpp"

#include "tabscm/table.hpp"

namespace tabscm {

using json = nlohmann::json;

/// `{"columns":[{"name":…,"kind":"numerical"|"categorical","categories":[…]}]}`
json schema_to_json(const TableSchema& schema);
TableSchema schema_from_json(const json& j);

TableSchema load_schema(const std::filesystem::path& path);
void save_schema(const TableSchema& schema, const std::filesystem::path& path);

}  // namespace tabscm
