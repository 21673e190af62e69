#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabscm/table.hpp"

namespace tabscm {

/// A named violation condition, e.g. `experience > age - 14`.
///
/// Grammar (lowest precedence first):
///   or_expr   := and_expr ("or" and_expr)*
///   and_expr  := not_expr ("and" not_expr)*
///   not_expr  := "not" not_expr | cmp
///   cmp       := sum (("=" | "==" | "!=" | "<" | "<=" | ">" | ">=") sum
///                     | "not"? "in" "[" literal ("," literal)* "]")?
///   sum       := product (("+" | "-") product)*
///   product   := unary (("*" | "/") unary)*
///   unary     := "-" unary | atom
///   atom      := number | 'string' | "string" | identifier | `quoted id` | "(" or_expr ")"
struct Rule {
  std::string name;
  std::string violation_if;
};

std::vector<Rule> rules_from_json(const nlohmann::json& j);
std::vector<Rule> load_rules(const std::filesystem::path& path);

namespace rules_detail {
struct Node;
}

/// A rule parsed and type-checked against a schema.
class CompiledRule {
 public:
  /// Throws ParseError on syntax errors and SchemaError on unknown columns or
  /// type mismatches; messages name the rule.
  static CompiledRule compile(const Rule& rule, const TableSchema& schema);

  const std::string& name() const { return name_; }
  /// Throws Error naming the rule and row when a cell is missing or a
  /// division by zero occurs.
  bool violated(const Table& table, std::size_t row) const;

 private:
  std::string name_;
  std::shared_ptr<const rules_detail::Node> root_;
};

/// Fraction of rows on which each rule's condition holds (0 for an empty table).
std::map<std::string, double> violation_rates(const Table& table, const std::vector<Rule>& rules);

}  // namespace tabscm
