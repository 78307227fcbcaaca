#include "libmlab/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>

#include "libmlab/errors.hpp"

namespace libmlab::expr {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr run() {
    Expr e;
    out_ = &e;
    e.root_ = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("unexpected character", pos_);
    return e;
  }

 private:
  std::int32_t push(Node n) {
    out_->nodes_.push_back(n);
    return static_cast<std::int32_t>(out_->nodes_.size() - 1);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c))
      throw ParseError(std::string("expected '") + c + "'", pos_);
  }

  std::int32_t binary(BinaryOp op, std::int32_t l, std::int32_t r) {
    Node n;
    n.kind = NodeKind::binary;
    n.op = op;
    n.lhs = l;
    n.rhs = r;
    return push(n);
  }

  std::int32_t parse_expr() {
    std::int32_t lhs = parse_term();
    for (;;) {
      if (accept('+'))
        lhs = binary(BinaryOp::add, lhs, parse_term());
      else if (accept('-'))
        lhs = binary(BinaryOp::sub, lhs, parse_term());
      else
        return lhs;
    }
  }

  std::int32_t parse_term() {
    std::int32_t lhs = parse_unary();
    for (;;) {
      if (accept('*'))
        lhs = binary(BinaryOp::mul, lhs, parse_unary());
      else if (accept('/'))
        lhs = binary(BinaryOp::div, lhs, parse_unary());
      else
        return lhs;
    }
  }

  std::int32_t negate(std::int32_t operand) {
    Node n;
    n.kind = NodeKind::negate;
    n.lhs = operand;
    return push(n);
  }

  std::int32_t parse_unary() {
    if (accept('-')) return negate(parse_unary());
    return parse_power();
  }

  std::int32_t parse_power() {
    std::int32_t base = parse_primary();
    while (accept('^')) base = binary(BinaryOp::pow, base, parse_exponent());
    return base;
  }

  std::int32_t parse_exponent() {
    if (accept('-')) return negate(parse_exponent());
    return parse_primary();
  }

  std::int32_t parse_primary() {
    skip_ws();
    if (pos_ >= text_.size())
      throw ParseError("unexpected end of expression", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      std::int32_t inner = parse_expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  std::int32_t parse_number() {
    const std::size_t start = pos_;
    double v = 0.0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr == first)
      throw ParseError("malformed number", start);
    pos_ += static_cast<std::size_t>(ptr - first);
    Node n;
    n.kind = NodeKind::number;
    n.value = v;
    return push(n);
  }

  std::int32_t parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_'))
      ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    Node n;
    if (name == "x") {
      n.kind = NodeKind::var_x;
      return push(n);
    }
    if (name == "pi") {
      n.kind = NodeKind::pi;
      return push(n);
    }
    if (name == "sin" || name == "cos" || name == "exp") {
      n.kind = NodeKind::call;
      n.func = name == "sin" ? Func::sin : name == "cos" ? Func::cos : Func::exp;
      expect('(');
      n.lhs = parse_expr();
      expect(')');
      return push(n);
    }
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Expr* out_ = nullptr;
};

Expr parse(std::string_view text) { return Parser(text).run(); }

namespace {

double eval_node(const std::vector<Node>& nodes, std::int32_t i, double x) {
  const Node& n = nodes[static_cast<std::size_t>(i)];
  switch (n.kind) {
    case NodeKind::number:
      return n.value;
    case NodeKind::var_x:
      return x;
    case NodeKind::pi:
      return std::numbers::pi;
    case NodeKind::negate:
      return -eval_node(nodes, n.lhs, x);
    case NodeKind::call: {
      const double a = eval_node(nodes, n.lhs, x);
      switch (n.func) {
        case Func::sin:
          return std::sin(a);
        case Func::cos:
          return std::cos(a);
        case Func::exp:
          return std::exp(a);
      }
      break;
    }
    case NodeKind::binary: {
      const double a = eval_node(nodes, n.lhs, x);
      const double b = eval_node(nodes, n.rhs, x);
      switch (n.op) {
        case BinaryOp::add:
          return a + b;
        case BinaryOp::sub:
          return a - b;
        case BinaryOp::mul:
          return a * b;
        case BinaryOp::div:
          if (b == 0.0) throw EvalError("division by zero");
          return a / b;
        case BinaryOp::pow:
          return std::pow(a, b);
      }
      break;
    }
  }
  throw EvalError("corrupt expression node");
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void print_node(const std::vector<Node>& nodes, std::int32_t i,
                std::string& out) {
  const Node& n = nodes[static_cast<std::size_t>(i)];
  switch (n.kind) {
    case NodeKind::number:
      out += format_number(n.value);
      return;
    case NodeKind::var_x:
      out += 'x';
      return;
    case NodeKind::pi:
      out += "pi";
      return;
    case NodeKind::negate:
      out += "(-";
      print_node(nodes, n.lhs, out);
      out += ')';
      return;
    case NodeKind::call:
      out += n.func == Func::sin ? "sin(" : n.func == Func::cos ? "cos(" : "exp(";
      print_node(nodes, n.lhs, out);
      out += ')';
      return;
    case NodeKind::binary: {
      static constexpr char ops[] = {'+', '-', '*', '/', '^'};
      out += '(';
      print_node(nodes, n.lhs, out);
      out += ops[static_cast<int>(n.op)];
      print_node(nodes, n.rhs, out);
      out += ')';
      return;
    }
  }
}

bool equal_nodes(const Expr& a, std::int32_t i, const Expr& b,
                 std::int32_t j) {
  const Node& x = a.nodes()[static_cast<std::size_t>(i)];
  const Node& y = b.nodes()[static_cast<std::size_t>(j)];
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case NodeKind::number:
      return x.value == y.value;
    case NodeKind::var_x:
    case NodeKind::pi:
      return true;
    case NodeKind::negate:
      return equal_nodes(a, x.lhs, b, y.lhs);
    case NodeKind::call:
      return x.func == y.func && equal_nodes(a, x.lhs, b, y.lhs);
    case NodeKind::binary:
      return x.op == y.op && equal_nodes(a, x.lhs, b, y.lhs) &&
             equal_nodes(a, x.rhs, b, y.rhs);
  }
  return false;
}

}  // namespace

double Expr::eval(double x) const {
  if (root_ < 0) throw EvalError("empty expression");
  const double v = eval_node(nodes_, root_, x);
  if (!std::isfinite(v)) throw EvalError("expression is not finite at x");
  return v;
}

std::string Expr::print() const {
  std::string out;
  if (root_ >= 0) print_node(nodes_, root_, out);
  return out;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.root_ < 0 || b.root_ < 0) return a.root_ == b.root_;
  return equal_nodes(a, a.root_, b, b.root_);
}

double eval(const Expr& e, double x) { return e.eval(x); }

}  // namespace libmlab::expr
