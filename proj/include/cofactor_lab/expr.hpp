#pragma once

#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coflab {

class ExprError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Syntax error; `offset` is the byte position in the input string.
class ParseError : public ExprError {
public:
  ParseError(const std::string& msg, std::size_t offset)
      : ExprError(msg + " (at offset " + std::to_string(offset) + ")"), offset(offset) {}
  std::size_t offset;
};

/// Unbound name or arithmetic domain failure during evaluation.
class EvalError : public ExprError {
public:
  using ExprError::ExprError;
};

/// Name -> value map used for evaluation. Variables and parameters share
/// one namespace; a lookup miss is always an error, never a default.
class Bindings {
public:
  Bindings() = default;
  void set(const std::string& name, double value);
  double get(const std::string& name) const;  // throws EvalError if missing
  bool has(const std::string& name) const;
  std::size_t size() const { return items_.size(); }
  const std::vector<std::pair<std::string, double>>& items() const { return items_; }
  /// Copy of *this with all entries of `other` added (other wins on clash).
  Bindings merged(const Bindings& other) const;

private:
  std::vector<std::pair<std::string, double>> items_;  // kept sorted by name
};

namespace detail {
struct Node;
using NodePtr = std::shared_ptr<const Node>;
}  // namespace detail

/// Immutable symbolic scalar expression over named symbols.
/// Construction folds constants and the 0/1 identities; nothing deeper.
class Expr {
public:
  Expr();  // the constant 0
  static Expr constant(double v);
  static Expr symbol(const std::string& name);
  static Expr call(const std::string& fn, const Expr& arg);  // sin cos exp log sqrt

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr pow(const Expr& base, const Expr& exponent);

  double eval(const Bindings& b) const;
  Expr diff(const std::string& var) const;
  std::string str() const;

  bool is_zero() const;
  bool is_constant(double* value = nullptr) const;
  bool structurally_equal(const Expr& other) const;
  /// Collects every symbol name referenced by the tree.
  void free_symbols(std::set<std::string>& out) const;
  bool depends_on(const std::string& name) const;

private:
  explicit Expr(detail::NodePtr n) : node_(std::move(n)) {}
  detail::NodePtr node_;
  friend Expr parse_expr(std::string_view);
  friend struct detail::Node;
};

/// Parses the expression grammar: identifiers, decimal literals,
/// + - * / ^ (with ^ right-associative and tightest), unary minus,
/// parentheses and one-argument function calls. Whitespace ignored.
Expr parse_expr(std::string_view text);

}  // namespace coflab
