#include "tabscm/schema_json.hpp"

#include "tabscm/common.hpp"
#include "tabscm/csv.hpp"

namespace tabscm {

json schema_to_json(const TableSchema& schema) {
  json cols = json::array();
  for (const auto& c : schema.columns()) {
    json col{{"name", c.name}, {"kind", std::string(to_string(c.kind))}};
    if (c.is_categorical()) {
      col["categories"] = c.categories;
      if (c.missing_category_added) col["missing_category_added"] = true;
    }
    cols.push_back(std::move(col));
  }
  return json{{"columns", std::move(cols)}};
}

TableSchema schema_from_json(const json& j) {
  try {
    std::vector<ColumnSchema> cols;
    for (const auto& col : j.at("columns")) {
      ColumnSchema cs;
      cs.name = col.at("name").get<std::string>();
      cs.kind = parse_column_kind(col.at("kind").get<std::string>());
      if (col.contains("categories")) cs.categories = col.at("categories").get<std::vector<std::string>>();
      cs.missing_category_added = col.value("missing_category_added", false);
      if (cs.is_categorical() && cs.categories.empty()) {
        throw SchemaError("categorical column '" + cs.name + "' lists no categories");
      }
      cols.push_back(std::move(cs));
    }
    return TableSchema(std::move(cols));
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid schema JSON: ") + e.what());
  }
}

TableSchema load_schema(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("cannot parse schema '" + path.string() + "': " + e.what());
  }
  return schema_from_json(j);
}

void save_schema(const TableSchema& schema, const std::filesystem::path& path) {
  write_text_file(path, schema_to_json(schema).dump(2) + "\n");
}

}  // namespace tabscm
