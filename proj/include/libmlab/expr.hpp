#pragma once

// A tiny expression language for initial density profiles, e.g.
//   "0.5 + 0.2*cos(2*pi*x)"
//
// Grammar (whitespace is ignored):
//   expr     := term (('+' | '-') term)*
//   term     := unary (('*' | '/') unary)*
//   unary    := '-' unary | power
//   power    := primary ('^' exponent)*        left associative
//   exponent := '-' exponent | primary
//   primary  := number | 'x' | 'pi' | func '(' expr ')' | '(' expr ')'
//   func     := 'sin' | 'cos' | 'exp'
//
// So '^' binds tighter than unary minus (-x^2 == -(x^2)), and every binary
// operator, '^' included, groups to the left (2^3^2 == 64).

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace libmlab::expr {

enum class NodeKind : std::uint8_t { number, var_x, pi, negate, binary, call };
enum class BinaryOp : std::uint8_t { add, sub, mul, div, pow };
enum class Func : std::uint8_t { sin, cos, exp };

struct Node {
  NodeKind kind = NodeKind::number;
  double value = 0.0;             // number
  BinaryOp op = BinaryOp::add;    // binary
  Func func = Func::sin;          // call
  std::int32_t lhs = -1;          // negate / call operand, binary left
  std::int32_t rhs = -1;          // binary right
};

// Immutable expression tree stored as an index arena; copies are deep.
class Expr {
 public:
  double eval(double x) const;
  // Fully parenthesised canonical form; parse(print()) is structurally equal.
  std::string print() const;

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::int32_t root() const noexcept { return root_; }

  // Structural equality (arena layout may differ).
  friend bool operator==(const Expr& a, const Expr& b);

 private:
  friend class Parser;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

// Throws ParseError (byte offset) on malformed input or unknown identifiers.
Expr parse(std::string_view text);

// Convenience for one-off evaluation. Throws EvalError on division by zero or
// a non-finite result.
double eval(const Expr& e, double x);

}  // namespace libmlab::expr
