#include "cofactor_lab/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace coflab {

// ---------------------------------------------------------------------------
// Bindings

void Bindings::set(const std::string& name, double value) {
  auto it = std::lower_bound(items_.begin(), items_.end(), name,
                             [](const auto& kv, const std::string& n) { return kv.first < n; });
  if (it != items_.end() && it->first == name) {
    it->second = value;
  } else {
    items_.insert(it, {name, value});
  }
}

double Bindings::get(const std::string& name) const {
  auto it = std::lower_bound(items_.begin(), items_.end(), name,
                             [](const auto& kv, const std::string& n) { return kv.first < n; });
  if (it == items_.end() || it->first != name) {
    throw EvalError("unbound name '" + name + "'");
  }
  return it->second;
}

bool Bindings::has(const std::string& name) const {
  auto it = std::lower_bound(items_.begin(), items_.end(), name,
                             [](const auto& kv, const std::string& n) { return kv.first < n; });
  return it != items_.end() && it->first == name;
}

Bindings Bindings::merged(const Bindings& other) const {
  Bindings out = *this;
  for (const auto& [k, v] : other.items_) out.set(k, v);
  return out;
}

// ---------------------------------------------------------------------------
// Nodes

namespace detail {

enum class Kind { Const, Sym, Add, Sub, Mul, Div, Pow, Neg, Call };

enum class Fn { Sin, Cos, Exp, Log, Sqrt };

struct Node {
  Kind kind;
  double value = 0.0;  // Const
  std::string name;    // Sym
  Fn fn = Fn::Sin;     // Call
  NodePtr a, b;
};

namespace {

NodePtr make_const(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Const;
  n->value = v;
  return n;
}

NodePtr make_sym(const std::string& s) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Sym;
  n->name = s;
  return n;
}

NodePtr make2(Kind k, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr make1(Kind k, NodePtr a) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  return n;
}

NodePtr make_call(Fn f, NodePtr a) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Call;
  n->fn = f;
  n->a = std::move(a);
  return n;
}

bool is_const(const NodePtr& n, double* v = nullptr) {
  if (n->kind != Kind::Const) return false;
  if (v) *v = n->value;
  return true;
}

bool is_const_value(const NodePtr& n, double v) {
  return n->kind == Kind::Const && n->value == v;
}

bool is_int(double v) { return std::floor(v) == v && std::abs(v) < 1e15; }

const char* fn_name(Fn f) {
  switch (f) {
    case Fn::Sin: return "sin";
    case Fn::Cos: return "cos";
    case Fn::Exp: return "exp";
    case Fn::Log: return "log";
    case Fn::Sqrt: return "sqrt";
  }
  return "?";
}

// forward declarations of folding constructors
NodePtr f_add(NodePtr a, NodePtr b);
NodePtr f_sub(NodePtr a, NodePtr b);
NodePtr f_mul(NodePtr a, NodePtr b);
NodePtr f_div(NodePtr a, NodePtr b);
NodePtr f_pow(NodePtr a, NodePtr b);
NodePtr f_neg(NodePtr a);

NodePtr f_add(NodePtr a, NodePtr b) {
  double x, y;
  if (is_const(a, &x) && is_const(b, &y)) return make_const(x + y);
  if (is_const_value(a, 0.0)) return b;
  if (is_const_value(b, 0.0)) return a;
  return make2(Kind::Add, std::move(a), std::move(b));
}

NodePtr f_sub(NodePtr a, NodePtr b) {
  double x, y;
  if (is_const(a, &x) && is_const(b, &y)) return make_const(x - y);
  if (is_const_value(b, 0.0)) return a;
  if (is_const_value(a, 0.0)) return f_neg(std::move(b));
  return make2(Kind::Sub, std::move(a), std::move(b));
}

NodePtr f_mul(NodePtr a, NodePtr b) {
  double x, y;
  if (is_const(a, &x) && is_const(b, &y)) return make_const(x * y);
  if (is_const_value(a, 0.0) || is_const_value(b, 0.0)) return make_const(0.0);
  if (is_const_value(a, 1.0)) return b;
  if (is_const_value(b, 1.0)) return a;
  if (is_const_value(a, -1.0)) return f_neg(std::move(b));
  if (is_const_value(b, -1.0)) return f_neg(std::move(a));
  return make2(Kind::Mul, std::move(a), std::move(b));
}

NodePtr f_div(NodePtr a, NodePtr b) {
  double x, y;
  if (is_const(b, &y) && y != 0.0) {
    if (is_const(a, &x)) return make_const(x / y);
    if (y == 1.0) return a;
  }
  if (is_const_value(a, 0.0) && !is_const_value(b, 0.0)) return make_const(0.0);
  return make2(Kind::Div, std::move(a), std::move(b));
}

double pow_int(double base, long long k) {
  // repeated multiplication; handles negative bases exactly
  bool inv = k < 0;
  unsigned long long e = inv ? static_cast<unsigned long long>(-k) : static_cast<unsigned long long>(k);
  double r = 1.0, f = base;
  while (e) {
    if (e & 1ull) r *= f;
    f *= f;
    e >>= 1;
  }
  return inv ? 1.0 / r : r;
}

NodePtr f_pow(NodePtr a, NodePtr b) {
  double x, y;
  if (is_const(b, &y)) {
    if (y == 1.0) return a;
    if (y == 0.0) return make_const(1.0);
    if (is_const(a, &x)) {
      if (is_int(y)) return make_const(pow_int(x, static_cast<long long>(y)));
      if (x > 0.0) return make_const(std::pow(x, y));
      // domain-invalid constant: keep the node so eval reports it
    }
  }
  if (is_const_value(a, 1.0)) return make_const(1.0);
  return make2(Kind::Pow, std::move(a), std::move(b));
}

NodePtr f_neg(NodePtr a) {
  double x;
  if (is_const(a, &x)) return make_const(-x);
  if (a->kind == Kind::Neg) return a->a;
  return make1(Kind::Neg, std::move(a));
}

NodePtr f_call(Fn f, NodePtr a) {
  double x;
  if (is_const(a, &x)) {
    switch (f) {
      case Fn::Sin: return make_const(std::sin(x));
      case Fn::Cos: return make_const(std::cos(x));
      case Fn::Exp: return make_const(std::exp(x));
      case Fn::Log:
        if (x > 0.0) return make_const(std::log(x));
        break;  // keep node, eval reports domain error
      case Fn::Sqrt:
        if (x >= 0.0) return make_const(std::sqrt(x));
        break;
    }
  }
  return make_call(f, std::move(a));
}

// ---------------------------------------------------------------------------
// printing (precedence-aware, stable)

enum Prec { P_ADD = 1, P_MUL = 2, P_UNARY = 3, P_POW = 4, P_ATOM = 5 };

std::string format_double(double v) {
  if (v == static_cast<long long>(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
    return buf;
  }
  for (int prec = 15; prec <= 17; ++prec) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int node_prec(const Node& n) {
  switch (n.kind) {
    case Kind::Add:
    case Kind::Sub: return P_ADD;
    case Kind::Mul:
    case Kind::Div: return P_MUL;
    case Kind::Neg: return P_UNARY;
    case Kind::Pow: return P_POW;
    case Kind::Const: return n.value < 0.0 ? P_UNARY : P_ATOM;
    default: return P_ATOM;
  }
}

void print_node(const Node& n, int min_prec, std::string& out) {
  const int prec = node_prec(n);
  const bool parens = prec < min_prec;
  if (parens) out += '(';
  switch (n.kind) {
    case Kind::Const: out += format_double(n.value); break;
    case Kind::Sym: out += n.name; break;
    case Kind::Add:
      print_node(*n.a, P_ADD, out);
      out += " + ";
      print_node(*n.b, P_ADD + 1, out);
      break;
    case Kind::Sub:
      print_node(*n.a, P_ADD, out);
      out += " - ";
      print_node(*n.b, P_ADD + 1, out);
      break;
    case Kind::Mul:
      print_node(*n.a, P_MUL, out);
      out += "*";
      print_node(*n.b, P_MUL + 1, out);
      break;
    case Kind::Div:
      print_node(*n.a, P_MUL, out);
      out += "/";
      print_node(*n.b, P_MUL + 1, out);
      break;
    case Kind::Neg:
      out += '-';
      print_node(*n.a, P_UNARY, out);
      break;
    case Kind::Pow:
      print_node(*n.a, P_ATOM, out);  // (a)^b whenever a is not atomic
      out += '^';
      print_node(*n.b, P_UNARY, out);
      break;
    case Kind::Call:
      out += fn_name(n.fn);
      out += '(';
      print_node(*n.a, 0, out);
      out += ')';
      break;
  }
  if (parens) out += ')';
}

[[noreturn]] void domain_error(const char* what, const Node& n) {
  std::string s;
  print_node(n, 0, s);
  throw EvalError(std::string(what) + " in '" + s + "'");
}

double eval_node(const Node& n, const Bindings& b) {
  switch (n.kind) {
    case Kind::Const: return n.value;
    case Kind::Sym: return b.get(n.name);
    case Kind::Add: return eval_node(*n.a, b) + eval_node(*n.b, b);
    case Kind::Sub: return eval_node(*n.a, b) - eval_node(*n.b, b);
    case Kind::Mul: return eval_node(*n.a, b) * eval_node(*n.b, b);
    case Kind::Div: {
      const double den = eval_node(*n.b, b);
      if (den == 0.0) domain_error("division by zero", n);
      return eval_node(*n.a, b) / den;
    }
    case Kind::Pow: {
      const double base = eval_node(*n.a, b);
      const double e = eval_node(*n.b, b);
      if (is_int(e)) {
        if (base == 0.0 && e < 0.0) domain_error("zero raised to negative power", n);
        return pow_int(base, static_cast<long long>(e));
      }
      if (base <= 0.0) domain_error("non-integer power of non-positive base", n);
      return std::exp(e * std::log(base));
    }
    case Kind::Neg: return -eval_node(*n.a, b);
    case Kind::Call: {
      const double x = eval_node(*n.a, b);
      switch (n.fn) {
        case Fn::Sin: return std::sin(x);
        case Fn::Cos: return std::cos(x);
        case Fn::Exp: return std::exp(x);
        case Fn::Log:
          if (x <= 0.0) domain_error("log of non-positive value", n);
          return std::log(x);
        case Fn::Sqrt:
          if (x < 0.0) domain_error("sqrt of negative value", n);
          return std::sqrt(x);
      }
    }
  }
  throw EvalError("corrupt expression node");
}

NodePtr diff_node(const NodePtr& n, const std::string& var) {
  switch (n->kind) {
    case Kind::Const: return make_const(0.0);
    case Kind::Sym: return make_const(n->name == var ? 1.0 : 0.0);
    case Kind::Add: return f_add(diff_node(n->a, var), diff_node(n->b, var));
    case Kind::Sub: return f_sub(diff_node(n->a, var), diff_node(n->b, var));
    case Kind::Mul:
      return f_add(f_mul(diff_node(n->a, var), n->b), f_mul(n->a, diff_node(n->b, var)));
    case Kind::Div:
      // (a/b)' = (a'b - ab') / b^2
      return f_div(f_sub(f_mul(diff_node(n->a, var), n->b), f_mul(n->a, diff_node(n->b, var))),
                   f_pow(n->b, make_const(2.0)));
    case Kind::Pow: {
      double c;
      if (is_const(n->b, &c)) {
        // c * a^(c-1) * a'
        return f_mul(f_mul(make_const(c), f_pow(n->a, make_const(c - 1.0))), diff_node(n->a, var));
      }
      // a^b * (b' log a + b a'/a)
      NodePtr t1 = f_mul(diff_node(n->b, var), f_call(Fn::Log, n->a));
      NodePtr t2 = f_div(f_mul(n->b, diff_node(n->a, var)), n->a);
      return f_mul(make2(Kind::Pow, n->a, n->b), f_add(std::move(t1), std::move(t2)));
    }
    case Kind::Neg: return f_neg(diff_node(n->a, var));
    case Kind::Call: {
      NodePtr da = diff_node(n->a, var);
      switch (n->fn) {
        case Fn::Sin: return f_mul(f_call(Fn::Cos, n->a), std::move(da));
        case Fn::Cos: return f_neg(f_mul(f_call(Fn::Sin, n->a), std::move(da)));
        case Fn::Exp: return f_mul(f_call(Fn::Exp, n->a), std::move(da));
        case Fn::Log: return f_div(std::move(da), n->a);
        case Fn::Sqrt:
          return f_div(std::move(da), f_mul(make_const(2.0), f_call(Fn::Sqrt, n->a)));
      }
    }
  }
  throw ExprError("corrupt expression node");
}

bool equal_nodes(const Node& x, const Node& y) {
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case Kind::Const: return x.value == y.value;
    case Kind::Sym: return x.name == y.name;
    case Kind::Call:
      return x.fn == y.fn && equal_nodes(*x.a, *y.a);
    case Kind::Neg: return equal_nodes(*x.a, *y.a);
    default: return equal_nodes(*x.a, *y.a) && equal_nodes(*x.b, *y.b);
  }
}

void collect_symbols(const Node& n, std::set<std::string>& out) {
  switch (n.kind) {
    case Kind::Const: return;
    case Kind::Sym: out.insert(n.name); return;
    case Kind::Neg:
    case Kind::Call: collect_symbols(*n.a, out); return;
    default:
      collect_symbols(*n.a, out);
      collect_symbols(*n.b, out);
  }
}

// ---------------------------------------------------------------------------
// parser

struct Parser {
  std::string_view s;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }
  bool accept(char c) {
    if (peek() == c) {
      ++pos;
      return true;
    }
    return false;
  }

  NodePtr parse() {
    NodePtr e = expr();
    skip_ws();
    if (pos != s.size()) throw ParseError("unexpected trailing input", pos);
    return e;
  }

  NodePtr expr() {
    NodePtr a = term();
    for (;;) {
      if (accept('+')) a = f_add(std::move(a), term());
      else if (accept('-')) a = f_sub(std::move(a), term());
      else return a;
    }
  }

  NodePtr term() {
    NodePtr a = unary();
    for (;;) {
      if (accept('*')) a = f_mul(std::move(a), unary());
      else if (accept('/')) a = f_div(std::move(a), unary());
      else return a;
    }
  }

  NodePtr unary() {
    if (accept('-')) return f_neg(unary());
    return power();
  }

  NodePtr power() {
    NodePtr a = atom();
    if (accept('^')) return f_pow(std::move(a), unary());  // right-assoc, binds tighter than -
    return a;
  }

  NodePtr atom() {
    skip_ws();
    if (pos >= s.size()) throw ParseError("unexpected end of input", pos);
    const char c = s[pos];
    if (c == '(') {
      ++pos;
      NodePtr e = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError(std::string("unexpected character '") + c + "'", pos);
  }

  NodePtr number() {
    const std::size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
      std::size_t mark = pos;
      ++pos;
      if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) ++pos;
      if (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
      } else {
        pos = mark;  // 'e' belongs to an identifier that follows, not this literal
      }
    }
    if (pos == start) throw ParseError("expected number", pos);
    const std::string text(s.substr(start, pos - start));
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size()) throw ParseError("malformed number '" + text + "'", start);
    return make_const(v);
  }

  NodePtr identifier() {
    const std::size_t start = pos;
    while (pos < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      ++pos;
    const std::string name(s.substr(start, pos - start));
    if (peek() == '(') {
      ++pos;  // consume '('
      Fn f;
      if (name == "sin") f = Fn::Sin;
      else if (name == "cos") f = Fn::Cos;
      else if (name == "exp") f = Fn::Exp;
      else if (name == "log") f = Fn::Log;
      else if (name == "sqrt") f = Fn::Sqrt;
      else throw ParseError("unknown function '" + name + "'", start);
      NodePtr arg = expr();
      if (!accept(')')) throw ParseError("expected ')' after function argument", pos);
      return f_call(f, std::move(arg));
    }
    return make_sym(name);
  }
};

}  // namespace
}  // namespace detail

// ---------------------------------------------------------------------------
// Expr surface

using detail::Kind;

Expr::Expr() : node_(detail::make_const(0.0)) {}

Expr Expr::constant(double v) { return Expr(detail::make_const(v)); }

Expr Expr::symbol(const std::string& name) { return Expr(detail::make_sym(name)); }

Expr Expr::call(const std::string& fn, const Expr& arg) {
  detail::Fn f;
  if (fn == "sin") f = detail::Fn::Sin;
  else if (fn == "cos") f = detail::Fn::Cos;
  else if (fn == "exp") f = detail::Fn::Exp;
  else if (fn == "log") f = detail::Fn::Log;
  else if (fn == "sqrt") f = detail::Fn::Sqrt;
  else throw ExprError("unknown function '" + fn + "'");
  return Expr(detail::f_call(f, arg.node_));
}

Expr operator+(const Expr& a, const Expr& b) { return Expr(detail::f_add(a.node_, b.node_)); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(detail::f_sub(a.node_, b.node_)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(detail::f_mul(a.node_, b.node_)); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(detail::f_div(a.node_, b.node_)); }
Expr operator-(const Expr& a) { return Expr(detail::f_neg(a.node_)); }
Expr pow(const Expr& a, const Expr& b) { return Expr(detail::f_pow(a.node_, b.node_)); }

double Expr::eval(const Bindings& b) const { return detail::eval_node(*node_, b); }

Expr Expr::diff(const std::string& var) const { return Expr(detail::diff_node(node_, var)); }

std::string Expr::str() const {
  std::string out;
  detail::print_node(*node_, 0, out);
  return out;
}

bool Expr::is_zero() const { return node_->kind == Kind::Const && node_->value == 0.0; }

bool Expr::is_constant(double* value) const {
  if (node_->kind != Kind::Const) return false;
  if (value) *value = node_->value;
  return true;
}

bool Expr::structurally_equal(const Expr& other) const {
  return detail::equal_nodes(*node_, *other.node_);
}

void Expr::free_symbols(std::set<std::string>& out) const { detail::collect_symbols(*node_, out); }

bool Expr::depends_on(const std::string& name) const {
  std::set<std::string> syms;
  free_symbols(syms);
  return syms.count(name) > 0;
}

Expr parse_expr(std::string_view text) {
  detail::Parser p{text};
  return Expr(p.parse());
}

}  // namespace coflab
