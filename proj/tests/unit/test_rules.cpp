#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>

#include "tabscm/common.hpp"
#include "tabscm/rules.hpp"
#include "toy.hpp"

using namespace tabscm;

namespace {

Table people() {
  TableSchema schema({{"age", ColumnKind::Numerical, {}, false},
                      {"experience", ColumnKind::Numerical, {}, false},
                      {"job", ColumnKind::Categorical, {"clerk", "nurse", "chef"}, false}});
  return Table(schema, {Column::numerical({30, 20, 50, 16}), Column::numerical({10, 9, 40, 1}),
                        Column::categorical({0, 1, 2, 1})});
}

std::vector<bool> flags(const std::string& cond, const Table& t) {
  const auto r = CompiledRule::compile({"r", cond}, t.schema());
  std::vector<bool> out;
  for (std::size_t i = 0; i < t.n_rows(); ++i) out.push_back(r.violated(t, i));
  return out;
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

/// Random expression over columns a and b with its own evaluator.
struct Expr {
  std::string text;
  std::function<double(double, double)> num;
  std::function<bool(double, double)> cond;
};

Expr random_numeric(Stream& rng, int depth) {
  const auto pick = depth == 0 ? rng.index(3) : rng.index(7);
  if (pick == 0) return {"a", [](double a, double) { return a; }, {}};
  if (pick == 1) return {"b", [](double, double b) { return b; }, {}};
  if (pick == 2) {
    const double v = static_cast<double>(rng.index(7));
    return {format_double(v), [v](double, double) { return v; }, {}};
  }
  if (pick == 3) {
    auto e = random_numeric(rng, depth - 1);
    return {"-" + e.text, [f = e.num](double a, double b) { return -f(a, b); }, {}};
  }
  auto l = random_numeric(rng, depth - 1);
  auto r = random_numeric(rng, depth - 1);
  static const char* ops[] = {"+", "-", "*"};
  const auto op = rng.index(3);
  std::function<double(double, double)> f;
  if (op == 0) f = [l = l.num, r = r.num](double a, double b) { return l(a, b) + r(a, b); };
  if (op == 1) f = [l = l.num, r = r.num](double a, double b) { return l(a, b) - r(a, b); };
  if (op == 2) f = [l = l.num, r = r.num](double a, double b) { return l(a, b) * r(a, b); };
  return {"(" + l.text + " " + ops[op] + " " + r.text + ")", f, {}};
}

Expr random_condition(Stream& rng, int depth) {
  const auto pick = depth == 0 ? 0 : rng.index(4);
  if (pick == 0) {
    auto l = random_numeric(rng, 2);
    auto r = random_numeric(rng, 2);
    static const char* ops[] = {"<", "<=", ">", ">=", "=", "!="};
    const auto op = rng.index(6);
    auto f = [l = l.num, r = r.num, op](double a, double b) {
      const double x = l(a, b), y = r(a, b);
      switch (op) {
        case 0: return x < y;
        case 1: return x <= y;
        case 2: return x > y;
        case 3: return x >= y;
        case 4: return x == y;
        default: return x != y;
      }
    };
    return {l.text + " " + ops[op] + " " + r.text, {}, f};
  }
  if (pick == 1) {
    auto e = random_condition(rng, depth - 1);
    return {"not (" + e.text + ")", {}, [f = e.cond](double a, double b) { return !f(a, b); }};
  }
  auto l = random_condition(rng, depth - 1);
  auto r = random_condition(rng, depth - 1);
  if (pick == 2) {
    return {"(" + l.text + ") and (" + r.text + ")", {},
            [l = l.cond, r = r.cond](double a, double b) { return l(a, b) && r(a, b); }};
  }
  return {"(" + l.text + ") or (" + r.text + ")", {},
          [l = l.cond, r = r.cond](double a, double b) { return l(a, b) || r(a, b); }};
}

}  // namespace

TEST(Rules, ExperienceExample) {
  // age - 14 per row: 16, 6, 36, 2.
  EXPECT_EQ(flags("experience > age - 14", people()), (std::vector<bool>{false, true, true, false}));
  // age - 15 per row: 15, 5, 35, 1.
  EXPECT_EQ(flags("experience > age - 15", people()), (std::vector<bool>{false, true, true, false}));
  EXPECT_EQ(flags("experience >= age - 15", people()), (std::vector<bool>{false, true, true, true}));
  EXPECT_EQ(flags("experience > age - 25", people()), (std::vector<bool>{true, true, true, true}));
}

TEST(Rules, Precedence) {
  EXPECT_EQ(flags("age = 20 + 5 * 2", people()), (std::vector<bool>{true, false, false, false}));
  EXPECT_EQ(flags("age = (20 + 5) * 2", people()), (std::vector<bool>{false, false, true, false}));
  EXPECT_EQ(flags("age > 25 or age < 18 and job = 'clerk'", people()), (std::vector<bool>{true, false, true, false}));
  EXPECT_EQ(flags("not age > 25 and job = \"nurse\"", people()), (std::vector<bool>{false, true, false, true}));
  EXPECT_EQ(flags("-age < -40", people()), (std::vector<bool>{false, false, true, false}));
  EXPECT_EQ(flags("age / 2 == 10", people()), (std::vector<bool>{false, true, false, false}));
}

TEST(Rules, MembershipAndStrings) {
  EXPECT_EQ(flags("job in ['nurse', 'chef']", people()), (std::vector<bool>{false, true, true, true}));
  EXPECT_EQ(flags("job not in ['nurse']", people()), (std::vector<bool>{true, false, true, false}));
  EXPECT_EQ(flags("age in [16, 50]", people()), (std::vector<bool>{false, false, true, true}));
  EXPECT_EQ(flags("job != 'clerk'", people()), (std::vector<bool>{false, true, true, true}));
}

TEST(Rules, QuotedIdentifier) {
  TableSchema schema({{"years worked", ColumnKind::Numerical, {}, false}});
  const Table t(schema, {Column::numerical({1, 5})});
  EXPECT_EQ(flags("`years worked` > 2", t), (std::vector<bool>{false, true}));
}

TEST(Rules, SyntaxErrorsNameRuleAndPosition) {
  const auto schema = people().schema();
  const auto msg = error_of([&] { CompiledRule::compile({"bad", "age > > 3"}, schema); });
  EXPECT_NE(msg.find("rule 'bad'"), std::string::npos);
  EXPECT_NE(msg.find("position"), std::string::npos);
  EXPECT_THROW(CompiledRule::compile({"r", "age > 3)"}, schema), ParseError);
  EXPECT_THROW(CompiledRule::compile({"r", "job = 'clerk"}, schema), ParseError);
  EXPECT_THROW(CompiledRule::compile({"r", "age # 3"}, schema), ParseError);
  EXPECT_THROW(CompiledRule::compile({"r", "job in []"}, schema), ParseError);
  EXPECT_THROW(CompiledRule::compile({"r", "job not 'x'"}, schema), ParseError);
}

TEST(Rules, TypeErrors) {
  const auto schema = people().schema();
  EXPECT_NE(error_of([&] { CompiledRule::compile({"r", "salary > 3"}, schema); }).find("unknown column 'salary'"),
            std::string::npos);
  EXPECT_THROW(CompiledRule::compile({"r", "age + 1"}, schema), SchemaError);
  EXPECT_THROW(CompiledRule::compile({"r", "job > 'a'"}, schema), SchemaError);
  EXPECT_THROW(CompiledRule::compile({"r", "job = 3"}, schema), SchemaError);
  EXPECT_THROW(CompiledRule::compile({"r", "age in ['a']"}, schema), SchemaError);
  EXPECT_THROW(CompiledRule::compile({"r", "(age > 1) = (age > 2)"}, schema), SchemaError);
  EXPECT_THROW(CompiledRule::compile({"r", "job * 2 > 1"}, schema), SchemaError);
}

TEST(Rules, RuntimeErrors) {
  const Table t = people();
  const auto r = CompiledRule::compile({"div", "age / (experience - 9) > 1"}, t.schema());
  const auto msg = error_of([&] { r.violated(t, 1); });
  EXPECT_NE(msg.find("division by zero"), std::string::npos);
  EXPECT_NE(msg.find("row 1"), std::string::npos);

  TableSchema schema({{"v", ColumnKind::Numerical, {}, false}});
  const Table missing(schema, {Column::numerical({1.0, std::nan("")})});
  const auto m = CompiledRule::compile({"m", "v > 0"}, schema);
  EXPECT_TRUE(m.violated(missing, 0));
  EXPECT_NE(error_of([&] { m.violated(missing, 1); }).find("missing"), std::string::npos);
}

TEST(Rules, MatchesEvaluatorOnRandomExpressions) {
  Stream rng(17);
  TableSchema schema({{"a", ColumnKind::Numerical, {}, false}, {"b", ColumnKind::Numerical, {}, false}});
  std::vector<double> av, bv;
  for (int i = -3; i <= 3; ++i) {
    for (int j = -3; j <= 3; ++j) {
      av.push_back(i);
      bv.push_back(j);
    }
  }
  const Table t(schema, {Column::numerical(av), Column::numerical(bv)});
  for (int trial = 0; trial < 300; ++trial) {
    const Expr e = random_condition(rng, 3);
    const auto rule = CompiledRule::compile({"r", e.text}, schema);
    for (std::size_t row = 0; row < t.n_rows(); ++row) {
      ASSERT_EQ(rule.violated(t, row), e.cond(av[row], bv[row])) << e.text << " at a=" << av[row] << " b=" << bv[row];
    }
  }
}

TEST(ViolationRates, CountsAndEmptyTable) {
  const Table t = people();
  const std::vector<Rule> rules{{"young", "age < 18"}, {"chef", "job = 'chef'"}, {"none", "age < 0"}};
  const auto rates = violation_rates(t, rules);
  EXPECT_DOUBLE_EQ(rates.at("young"), 0.25);
  EXPECT_DOUBLE_EQ(rates.at("chef"), 0.25);
  EXPECT_DOUBLE_EQ(rates.at("none"), 0.0);
  EXPECT_EQ(violation_rates(Table::empty(t.schema()), rules).at("young"), 0.0);
  EXPECT_THROW(violation_rates(t, {{"x", "age > 1"}, {"x", "age > 2"}}), ParseError);
}

TEST(RulesFile, LoadAndErrors) {
  const auto dir = std::filesystem::temp_directory_path() / "tabscm_rules_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "rules.json";
  std::ofstream(path) << R"([{"name": "young", "violation_if": "age < 18"}])";
  const auto rules = load_rules(path);
  ASSERT_EQ(rules.size(), 1u);
  EXPECT_EQ(rules[0].name, "young");
  std::ofstream(path) << R"({"name": "young"})";
  EXPECT_THROW(load_rules(path), ParseError);
  std::ofstream(path) << R"([{"name": "young"}])";
  EXPECT_THROW(load_rules(path), ParseError);
  std::ofstream(path) << "[";
  EXPECT_THROW(load_rules(path), ParseError);
  EXPECT_THROW(load_rules(dir / "absent.json"), Error);
  std::filesystem::remove_all(dir);
}
