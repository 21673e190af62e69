#include "tabscm/rules.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string_view>
#include <variant>

#include "tabscm/common.hpp"
#include "tabscm/csv.hpp"

namespace tabscm {

std::vector<Rule> rules_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("rules file must be a JSON list of {\"name\", \"violation_if\"} objects");
  std::vector<Rule> rules;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& r = j[i];
    if (!r.is_object() || !r.contains("name") || !r.contains("violation_if") || !r["name"].is_string() ||
        !r["violation_if"].is_string()) {
      throw ParseError("rule #" + std::to_string(i) + " needs string fields \"name\" and \"violation_if\"");
    }
    rules.push_back({r["name"].get<std::string>(), r["violation_if"].get<std::string>()});
  }
  return rules;
}

std::vector<Rule> load_rules(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("rules file '" + path.string() + "': " + e.what());
  }
  return rules_from_json(j);
}

namespace rules_detail {

enum class Type { Number, String, Bool };

enum class Op { Num, Str, Column, Neg, Not, Add, Sub, Mul, Div, Eq, Ne, Lt, Le, Gt, Ge, And, Or, In };

struct Node {
  Op op;
  Type type;
  double number = 0.0;
  std::string text;
  std::size_t column = 0;
  bool negate_in = false;
  std::vector<std::shared_ptr<const Node>> kids;
};

using NodePtr = std::shared_ptr<const Node>;

namespace {

enum class Tok { Number, String, Ident, Symbol, End };

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  std::size_t pos = 0;
};

class Parser {
 public:
  Parser(const Rule& rule, const TableSchema& schema) : rule_(rule), schema_(schema) { tokenize(); }

  NodePtr parse() {
    auto root = parse_or();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'", peek().pos);
    if (root->type != Type::Bool) type_error("condition must be a comparison or boolean expression");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, std::size_t pos) const {
    throw ParseError("rule '" + rule_.name + "': " + msg + " at position " + std::to_string(pos));
  }
  [[noreturn]] void type_error(const std::string& msg) const {
    throw SchemaError("rule '" + rule_.name + "': " + msg);
  }

  void tokenize() {
    const std::string& s = rule_.violation_if;
    std::size_t i = 0;
    while (i < s.size()) {
      const char c = s[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      const std::size_t start = i;
      if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
        while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.' ||
                                ((s[i] == 'e' || s[i] == 'E') && i + 1 < s.size()) ||
                                ((s[i] == '+' || s[i] == '-') && (s[i - 1] == 'e' || s[i - 1] == 'E')))) {
          ++i;
        }
        double v = 0.0;
        auto res = std::from_chars(s.data() + start, s.data() + i, v);
        if (res.ec != std::errc() || res.ptr != s.data() + i) fail("bad number '" + s.substr(start, i - start) + "'", start);
        tokens_.push_back({Tok::Number, s.substr(start, i - start), v, start});
      } else if (c == '\'' || c == '"' || c == '`') {
        const auto end = s.find(c, i + 1);
        if (end == std::string::npos) fail("unterminated quote", start);
        tokens_.push_back({c == '`' ? Tok::Ident : Tok::String, s.substr(i + 1, end - i - 1), 0.0, start});
        i = end + 1;
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_' || s[i] == '.')) ++i;
        tokens_.push_back({Tok::Ident, s.substr(start, i - start), 0.0, start});
      } else {
        static constexpr std::string_view two[] = {"==", "!=", "<=", ">="};
        std::string sym(1, c);
        for (auto t : two) {
          if (s.compare(i, 2, t) == 0) sym = std::string(t);
        }
        if (sym.size() == 1 && std::string_view("=<>+-*/()[],").find(c) == std::string_view::npos) {
          fail(std::string("unexpected character '") + c + "'", start);
        }
        i += sym.size();
        tokens_.push_back({Tok::Symbol, sym, 0.0, start});
      }
    }
    tokens_.push_back({Tok::End, "end of expression", 0.0, s.size()});
  }

  const Token& peek() const { return tokens_[pos_]; }
  bool is_symbol(std::string_view s) const { return peek().kind == Tok::Symbol && peek().text == s; }
  bool is_keyword(std::string_view s) const { return peek().kind == Tok::Ident && peek().text == s; }
  Token next() { return tokens_[pos_++]; }
  void expect(std::string_view s) {
    if (!is_symbol(s)) fail("expected '" + std::string(s) + "' but found '" + peek().text + "'", peek().pos);
    ++pos_;
  }

  static NodePtr make(Op op, Type type, std::vector<NodePtr> kids) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->type = type;
    n->kids = std::move(kids);
    return n;
  }

  void require(const NodePtr& n, Type t, std::string_view what) const {
    if (n->type != t) {
      static constexpr const char* names[] = {"numeric", "string", "boolean"};
      type_error(std::string(what) + " needs " + names[static_cast<int>(t)] + " operands, got " +
                 names[static_cast<int>(n->type)]);
    }
  }

  NodePtr parse_or() {
    auto lhs = parse_and();
    while (is_keyword("or")) {
      ++pos_;
      auto rhs = parse_and();
      require(lhs, Type::Bool, "'or'");
      require(rhs, Type::Bool, "'or'");
      lhs = make(Op::Or, Type::Bool, {lhs, rhs});
    }
    return lhs;
  }

  NodePtr parse_and() {
    auto lhs = parse_not();
    while (is_keyword("and")) {
      ++pos_;
      auto rhs = parse_not();
      require(lhs, Type::Bool, "'and'");
      require(rhs, Type::Bool, "'and'");
      lhs = make(Op::And, Type::Bool, {lhs, rhs});
    }
    return lhs;
  }

  NodePtr parse_not() {
    if (is_keyword("not")) {
      ++pos_;
      auto operand = parse_not();
      require(operand, Type::Bool, "'not'");
      return make(Op::Not, Type::Bool, {operand});
    }
    return parse_cmp();
  }

  NodePtr parse_cmp() {
    auto lhs = parse_sum();
    static const std::pair<std::string_view, Op> ops[] = {{"=", Op::Eq}, {"==", Op::Eq}, {"!=", Op::Ne}, {"<", Op::Lt},
                                                           {"<=", Op::Le}, {">", Op::Gt}, {">=", Op::Ge}};
    for (const auto& [sym, op] : ops) {
      if (!is_symbol(sym)) continue;
      ++pos_;
      auto rhs = parse_sum();
      if (lhs->type == Type::Bool || rhs->type == Type::Bool) type_error("cannot compare boolean expressions");
      if (lhs->type != rhs->type) type_error("cannot compare a numeric value with a string");
      if (lhs->type == Type::String && op != Op::Eq && op != Op::Ne) type_error("strings support only = and !=");
      return make(op, Type::Bool, {lhs, rhs});
    }
    bool negate = false;
    if (is_keyword("not") && pos_ + 1 < tokens_.size() && tokens_[pos_ + 1].kind == Tok::Ident &&
        tokens_[pos_ + 1].text == "in") {
      negate = true;
      ++pos_;
    }
    if (is_keyword("in")) {
      ++pos_;
      if (lhs->type == Type::Bool) type_error("'in' needs a numeric or string operand");
      expect("[");
      std::vector<NodePtr> kids{lhs};
      while (true) {
        auto item = parse_literal();
        if (item->type != lhs->type) type_error("'in' list items must match the operand type");
        kids.push_back(item);
        if (is_symbol(",")) {
          ++pos_;
          continue;
        }
        expect("]");
        break;
      }
      auto n = std::make_shared<Node>(*make(Op::In, Type::Bool, std::move(kids)));
      n->negate_in = negate;
      return n;
    }
    if (negate) fail("expected 'in' after 'not'", peek().pos);
    return lhs;
  }

  NodePtr parse_literal() {
    const bool neg = is_symbol("-");
    if (neg) ++pos_;
    const Token t = next();
    auto n = std::make_shared<Node>();
    if (t.kind == Tok::Number) {
      n->op = Op::Num;
      n->type = Type::Number;
      n->number = neg ? -t.number : t.number;
    } else if (t.kind == Tok::String && !neg) {
      n->op = Op::Str;
      n->type = Type::String;
      n->text = t.text;
    } else {
      fail("expected a literal but found '" + t.text + "'", t.pos);
    }
    return n;
  }

  NodePtr parse_sum() {
    auto lhs = parse_product();
    while (is_symbol("+") || is_symbol("-")) {
      const Op op = next().text == "+" ? Op::Add : Op::Sub;
      auto rhs = parse_product();
      require(lhs, Type::Number, "arithmetic");
      require(rhs, Type::Number, "arithmetic");
      lhs = make(op, Type::Number, {lhs, rhs});
    }
    return lhs;
  }

  NodePtr parse_product() {
    auto lhs = parse_unary();
    while (is_symbol("*") || is_symbol("/")) {
      const Op op = next().text == "*" ? Op::Mul : Op::Div;
      auto rhs = parse_unary();
      require(lhs, Type::Number, "arithmetic");
      require(rhs, Type::Number, "arithmetic");
      lhs = make(op, Type::Number, {lhs, rhs});
    }
    return lhs;
  }

  NodePtr parse_unary() {
    if (is_symbol("-")) {
      ++pos_;
      auto operand = parse_unary();
      require(operand, Type::Number, "negation");
      return make(Op::Neg, Type::Number, {operand});
    }
    return parse_atom();
  }

  NodePtr parse_atom() {
    const Token t = next();
    auto n = std::make_shared<Node>();
    switch (t.kind) {
      case Tok::Number:
        n->op = Op::Num;
        n->type = Type::Number;
        n->number = t.number;
        return n;
      case Tok::String:
        n->op = Op::Str;
        n->type = Type::String;
        n->text = t.text;
        return n;
      case Tok::Ident: {
        if (t.text == "and" || t.text == "or" || t.text == "not" || t.text == "in") {
          fail("unexpected keyword '" + t.text + "'", t.pos);
        }
        const auto col = schema_.find(t.text);
        if (!col) type_error("unknown column '" + t.text + "'");
        n->op = Op::Column;
        n->column = *col;
        n->type = schema_[*col].is_numerical() ? Type::Number : Type::String;
        n->text = t.text;
        return n;
      }
      case Tok::Symbol:
        if (t.text == "(") {
          auto inner = parse_or();
          expect(")");
          return inner;
        }
        [[fallthrough]];
      case Tok::End:
        break;
    }
    fail("unexpected '" + t.text + "'", t.pos);
  }

  const Rule& rule_;
  const TableSchema& schema_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

struct Value {
  double number = 0.0;
  std::string_view text;
  bool flag = false;
};

struct Evaluator {
  const Table& table;
  std::size_t row;
  const std::string& rule;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error("rule '" + rule + "': row " + std::to_string(row) + ": " + msg);
  }

  Value eval(const Node& n) const {
    Value v;
    switch (n.op) {
      case Op::Num:
        v.number = n.number;
        return v;
      case Op::Str:
        v.text = n.text;
        return v;
      case Op::Column: {
        if (table.is_missing(row, n.column)) fail("column '" + n.text + "' is missing");
        const auto& cs = table.schema()[n.column];
        if (cs.is_numerical()) {
          v.number = table.numeric(n.column)[row];
        } else {
          v.text = cs.categories[static_cast<std::size_t>(table.codes(n.column)[row])];
        }
        return v;
      }
      case Op::Neg:
        v.number = -eval(*n.kids[0]).number;
        return v;
      case Op::Not:
        v.flag = !eval(*n.kids[0]).flag;
        return v;
      case Op::And:
        v.flag = eval(*n.kids[0]).flag && eval(*n.kids[1]).flag;
        return v;
      case Op::Or:
        v.flag = eval(*n.kids[0]).flag || eval(*n.kids[1]).flag;
        return v;
      case Op::In: {
        const Value lhs = eval(*n.kids[0]);
        bool found = false;
        for (std::size_t i = 1; i < n.kids.size() && !found; ++i) {
          const Value item = eval(*n.kids[i]);
          found = n.kids[0]->type == Type::Number ? lhs.number == item.number : lhs.text == item.text;
        }
        v.flag = found != n.negate_in;
        return v;
      }
      default:
        break;
    }
    const Value a = eval(*n.kids[0]);
    const Value b = eval(*n.kids[1]);
    const bool numeric = n.kids[0]->type == Type::Number;
    switch (n.op) {
      case Op::Add:
        v.number = a.number + b.number;
        break;
      case Op::Sub:
        v.number = a.number - b.number;
        break;
      case Op::Mul:
        v.number = a.number * b.number;
        break;
      case Op::Div:
        if (b.number == 0.0) fail("division by zero");
        v.number = a.number / b.number;
        break;
      case Op::Eq:
        v.flag = numeric ? a.number == b.number : a.text == b.text;
        break;
      case Op::Ne:
        v.flag = numeric ? a.number != b.number : a.text != b.text;
        break;
      case Op::Lt:
        v.flag = a.number < b.number;
        break;
      case Op::Le:
        v.flag = a.number <= b.number;
        break;
      case Op::Gt:
        v.flag = a.number > b.number;
        break;
      case Op::Ge:
        v.flag = a.number >= b.number;
        break;
      default:
        break;
    }
    return v;
  }
};

}  // namespace
}  // namespace rules_detail

CompiledRule CompiledRule::compile(const Rule& rule, const TableSchema& schema) {
  CompiledRule c;
  c.name_ = rule.name;
  c.root_ = rules_detail::Parser(rule, schema).parse();
  return c;
}

bool CompiledRule::violated(const Table& table, std::size_t row) const {
  return rules_detail::Evaluator{table, row, name_}.eval(*root_).flag;
}

std::map<std::string, double> violation_rates(const Table& table, const std::vector<Rule>& rules) {
  std::map<std::string, double> rates;
  for (const auto& rule : rules) {
    const auto compiled = CompiledRule::compile(rule, table.schema());
    if (rates.count(rule.name)) throw ParseError("duplicate rule name '" + rule.name + "'");
    std::size_t hits = 0;
    for (std::size_t r = 0; r < table.n_rows(); ++r) hits += compiled.violated(table, r) ? 1 : 0;
    rates[rule.name] = table.n_rows() ? static_cast<double>(hits) / static_cast<double>(table.n_rows()) : 0.0;
  }
  return rates;
}

}  // namespace tabscm
