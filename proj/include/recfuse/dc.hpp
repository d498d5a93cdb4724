#pragma once

// Denial constraints over two tuple variables: the rule type, its textual
// grammar and predicate evaluation. Counting violations against a dataset
// lives in constraints.hpp.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recfuse/error.hpp"

namespace recfuse {

enum class CompareOp { Eq, Ne, Ge, Le, Lt, Gt };

inline std::string_view op_symbol(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "!=";
    case CompareOp::Ge: return ">=";
    case CompareOp::Le: return "<=";
    case CompareOp::Lt: return "<";
    case CompareOp::Gt: return ">";
  }
  return "?";
}

/// Parses `s` as a plain decimal number (optional sign, digits, optional
/// fraction, optional exponent). Anything else, including "inf" and "nan",
/// is not a number.
inline std::optional<double> parse_decimal(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  if (s[pos] == '+' || s[pos] == '-') ++pos;
  std::size_t int_digits = 0, frac_digits = 0;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos, ++int_digits;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos, ++frac_digits;
  }
  if (int_digits + frac_digits == 0) return std::nullopt;
  if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
    ++pos;
    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) ++pos;
    std::size_t exp_digits = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos, ++exp_digits;
    if (exp_digits == 0) return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  std::string_view body = s;
  if (body.front() == '+') body.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
  if (ec != std::errc{} || ptr != body.data() + body.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

/// Compares two cell values: numerically when both parse as decimal
/// numbers, otherwise as byte strings.
inline bool compare_values(CompareOp op, std::string_view a, std::string_view b) {
  int cmp = 0;
  auto na = parse_decimal(a);
  auto nb = na ? parse_decimal(b) : std::nullopt;
  if (na && nb) {
    cmp = (*na < *nb) ? -1 : (*na > *nb ? 1 : 0);
  } else {
    int c = a.compare(b);
    cmp = c < 0 ? -1 : (c > 0 ? 1 : 0);
  }
  switch (op) {
    case CompareOp::Eq: return cmp == 0;
    case CompareOp::Ne: return cmp != 0;
    case CompareOp::Ge: return cmp >= 0;
    case CompareOp::Le: return cmp <= 0;
    case CompareOp::Lt: return cmp < 0;
    case CompareOp::Gt: return cmp > 0;
  }
  return false;
}

struct Operand {
  enum class Kind { Attribute, Constant };
  Kind kind = Kind::Attribute;
  int tuple = 0;               // 0 for t1, 1 for t2
  std::size_t attribute = 0;   // schema index
  std::string constant;

  bool operator==(const Operand&) const = default;
};

struct Predicate {
  Operand lhs;
  CompareOp op = CompareOp::Eq;
  Operand rhs;

  bool operator==(const Predicate&) const = default;
};

/// ¬(P1 ∧ … ∧ Pm) over tuple variables t1 and t2.
class DenialConstraint {
 public:
  DenialConstraint() = default;
  explicit DenialConstraint(std::vector<Predicate> predicates) : predicates_(std::move(predicates)) {}

  const std::vector<Predicate>& predicates() const { return predicates_; }

  /// Sorted distinct schema indices referenced by any predicate.
  std::vector<std::size_t> attributes() const {
    std::vector<std::size_t> out;
    auto add = [&](const Operand& o) {
      if (o.kind != Operand::Kind::Attribute) return;
      for (auto a : out)
        if (a == o.attribute) return;
      out.push_back(o.attribute);
    };
    for (const auto& p : predicates_) add(p.lhs), add(p.rhs);
    std::sort(out.begin(), out.end());
    return out;
  }

  bool mentions(std::size_t attribute) const {
    for (const auto& p : predicates_) {
      if (p.lhs.kind == Operand::Kind::Attribute && p.lhs.attribute == attribute) return true;
      if (p.rhs.kind == Operand::Kind::Attribute && p.rhs.attribute == attribute) return true;
    }
    return false;
  }

  /// True when only t1 appears; such rules are judged on a single row.
  bool is_single_tuple() const {
    for (const auto& p : predicates_) {
      if (p.lhs.kind == Operand::Kind::Attribute && p.lhs.tuple == 1) return false;
      if (p.rhs.kind == Operand::Kind::Attribute && p.rhs.tuple == 1) return false;
    }
    return true;
  }

  /// Whether the binding (t1, t2) satisfies every predicate, i.e. violates
  /// the rule. Rows are indexed by schema position.
  bool satisfied_by(std::span<const std::string_view> t1, std::span<const std::string_view> t2) const {
    for (const auto& p : predicates_) {
      std::string_view lhs = value_of(p.lhs, t1, t2);
      std::string_view rhs = value_of(p.rhs, t1, t2);
      if (!compare_values(p.op, lhs, rhs)) return false;
    }
    return true;
  }

  /// Canonical text form; reparses to an equal constraint.
  std::string to_string(std::span<const std::string> schema) const {
    std::string out = "!(";
    for (std::size_t i = 0; i < predicates_.size(); ++i) {
      if (i) out += " & ";
      const auto& p = predicates_[i];
      out += operand_text(p.lhs, schema);
      out += ' ';
      out += op_symbol(p.op);
      out += ' ';
      out += operand_text(p.rhs, schema);
    }
    return out + ")";
  }

  bool operator==(const DenialConstraint&) const = default;

 private:
  static std::string_view value_of(const Operand& o, std::span<const std::string_view> t1,
                                   std::span<const std::string_view> t2) {
    if (o.kind == Operand::Kind::Constant) return o.constant;
    return o.tuple == 0 ? t1[o.attribute] : t2[o.attribute];
  }

  static std::string operand_text(const Operand& o, std::span<const std::string> schema) {
    if (o.kind == Operand::Kind::Attribute) {
      return (o.tuple == 0 ? "t1." : "t2.") + schema[o.attribute];
    }
    std::string out = "'";
    for (char c : o.constant) {
      if (c == '\'' || c == '\\') out += '\\';
      out += c;
    }
    return out + "'";
  }

  std::vector<Predicate> predicates_;
};

namespace detail {

class DcParser {
 public:
  DcParser(std::string_view text, std::span<const std::string> schema) : text_(text), schema_(schema) {}

  DenialConstraint parse() {
    skip_ws();
    expect('!');
    skip_ws();
    expect('(');
    std::vector<Predicate> preds;
    preds.push_back(predicate());
    skip_ws();
    while (peek() == '&') {
      ++pos_;
      if (peek() == '&') ++pos_;  // accept "&&" too
      preds.push_back(predicate());
      skip_ws();
    }
    expect(')');
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return DenialConstraint(std::move(preds));
  }

 private:
  Predicate predicate() {
    skip_ws();
    Predicate p;
    if (peek() == '\'') fail("left-hand side must be a tuple attribute (t1.Attr or t2.Attr)");
    p.lhs = operand();
    skip_ws();
    p.op = comparison();
    skip_ws();
    p.rhs = operand();
    return p;
  }

  Operand operand() {
    Operand o;
    if (peek() == '\'') {
      o.kind = Operand::Kind::Constant;
      o.constant = quoted();
      return o;
    }
    std::size_t start = pos_;
    if (peek() != 't') fail("expected tuple variable t1 or t2");
    ++pos_;
    std::size_t digits_start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string_view num = text_.substr(digits_start, pos_ - digits_start);
    if (num.empty()) fail("expected tuple variable t1 or t2", start);
    if (num != "1" && num != "2") {
      fail("only two tuple variables (t1, t2) are supported, found t" + std::string(num), start);
    }
    o.tuple = num == "1" ? 0 : 1;
    expect('.');
    std::size_t attr_start = pos_;
    while (pos_ < text_.size() && !is_delimiter(text_[pos_])) ++pos_;
    std::string_view name = text_.substr(attr_start, pos_ - attr_start);
    if (name.empty()) fail("expected attribute name", attr_start);
    for (std::size_t j = 0; j < schema_.size(); ++j) {
      if (schema_[j] == name) {
        o.attribute = j;
        return o;
      }
    }
    fail("unknown attribute '" + std::string(name) + "'", attr_start);
  }

  CompareOp comparison() {
    auto rest = text_.substr(pos_);
    auto take = [&](std::string_view tok, CompareOp op) -> std::optional<CompareOp> {
      if (rest.substr(0, tok.size()) == tok) {
        pos_ += tok.size();
        return op;
      }
      return std::nullopt;
    };
    for (auto [tok, op] : {std::pair{std::string_view("!="), CompareOp::Ne},
                           std::pair{std::string_view(">="), CompareOp::Ge},
                           std::pair{std::string_view("<="), CompareOp::Le},
                           std::pair{std::string_view("<>"), CompareOp::Ne},
                           std::pair{std::string_view("=="), CompareOp::Eq},
                           std::pair{std::string_view("="), CompareOp::Eq},
                           std::pair{std::string_view("<"), CompareOp::Lt},
                           std::pair{std::string_view(">"), CompareOp::Gt}}) {
      if (auto r = take(tok, op)) return *r;
    }
    fail("expected comparison operator (=, !=, >=, <=, <, >)");
  }

  std::string quoted() {
    std::size_t start = pos_;
    ++pos_;
    std::string out;
    while (pos_ < text_.size()) {
      char c = text_[pos_++];
      if (c == '\\' && pos_ < text_.size()) {
        out += text_[pos_++];
      } else if (c == '\'') {
        return out;
      } else {
        out += c;
      }
    }
    fail("unterminated constant", start);
  }

  static bool is_delimiter(char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '=' || c == '!' || c == '<' ||
           c == '>' || c == '&' || c == '(' || c == ')' || c == '\'';
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }
  [[noreturn]] void fail(const std::string& what, std::size_t at) const { throw ParseError(what, at); }

  std::string_view text_;
  std::span<const std::string> schema_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses `!( t1.A OP (t2.B | 'const') [& ...] )` against `schema`.
inline DenialConstraint parse_dc(std::string_view text, std::span<const std::string> schema) {
  return detail::DcParser(text, schema).parse();
}

}  // namespace recfuse
