#include "fsishape/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace fsi {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::EvalError: return "EVAL_ERROR";
    case ErrorCode::NestingViolation: return "NESTING_VIOLATION";
    case ErrorCode::QualityFailure: return "QUALITY_FAILURE";
    case ErrorCode::InvalidMesh: return "INVALID_MESH";
    case ErrorCode::TangledMesh: return "TANGLED_MESH";
    case ErrorCode::QuadratureDataMissing: return "QUADRATURE_DATA_MISSING";
    case ErrorCode::SingularSystem: return "SINGULAR_SYSTEM";
    case ErrorCode::NoninvertibleTransform: return "NONINVERTIBLE_TRANSFORM";
    case ErrorCode::MaxIterExceeded: return "MAX_ITER_EXCEEDED";
    case ErrorCode::AdjointUnavailable: return "ADJOINT_UNAVAILABLE";
    case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::IoError: return "IO_ERROR";
  }
  return "ERROR";
}

namespace detail {

enum class Kind {
  Const, Var, Add, Sub, Mul, Div, Neg, Pow,
  Sin, Cos, Exp, Sqrt,
  // BumpRat(cx, cy, r; p, k) = p(x,y) * exp(-r^2/s) / s^k inside the support
  // disk (s = r^2 - (x-cx)^2 - (y-cy)^2 > 0) and identically 0 outside.
  // Closure of the bump primitive under differentiation.
  BumpRat,
};

struct Node {
  Kind kind;
  double cval = 0.0;              // Const
  int var = -1;                   // Var
  int ipow = 0;                   // Pow exponent, BumpRat k
  double bp[3] = {0, 0, 0};       // BumpRat cx, cy, r
  std::shared_ptr<const Node> a, b;
};

using P = std::shared_ptr<const Node>;

P make_const(double c) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Const;
  n->cval = c;
  return n;
}

bool is_const(const P& n, double v) { return n->kind == Kind::Const && n->cval == v; }

P make_var(int i) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Var;
  n->var = i;
  return n;
}

P make_bin(Kind k, P a, P b) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

P make_un(Kind k, P a) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  return n;
}

// Smart constructors with light constant folding; keeps derivative trees small.
P add(P a, P b) {
  if (a->kind == Kind::Const && b->kind == Kind::Const) return make_const(a->cval + b->cval);
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return make_bin(Kind::Add, std::move(a), std::move(b));
}

P neg(P a);

P sub(P a, P b) {
  if (a->kind == Kind::Const && b->kind == Kind::Const) return make_const(a->cval - b->cval);
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return neg(b);
  return make_bin(Kind::Sub, std::move(a), std::move(b));
}

P mul(P a, P b) {
  if (a->kind == Kind::Const && b->kind == Kind::Const) return make_const(a->cval * b->cval);
  if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return make_bin(Kind::Mul, std::move(a), std::move(b));
}

P div(P a, P b) {
  if (is_const(a, 0.0)) return a;
  if (is_const(b, 1.0)) return a;
  if (a->kind == Kind::Const && b->kind == Kind::Const && b->cval != 0.0)
    return make_const(a->cval / b->cval);
  return make_bin(Kind::Div, std::move(a), std::move(b));
}

P neg(P a) {
  if (a->kind == Kind::Const) return make_const(-a->cval);
  if (a->kind == Kind::Neg) return a->a;
  return make_un(Kind::Neg, std::move(a));
}

P powi(P a, int n) {
  if (n == 0) return make_const(1.0);
  if (n == 1) return a;
  auto r = make_un(Kind::Pow, std::move(a));
  const_cast<Node*>(r.get())->ipow = n;
  return r;
}

P bumprat(double cx, double cy, double r, P p, int k) {
  if (is_const(p, 0.0)) return make_const(0.0);
  auto n = std::make_shared<Node>();
  n->kind = Kind::BumpRat;
  n->bp[0] = cx;
  n->bp[1] = cy;
  n->bp[2] = r;
  n->ipow = k;
  n->a = std::move(p);
  return n;
}

double ipow_eval(double x, int n) {
  if (n < 0) {
    if (x == 0.0) throw Error(ErrorCode::EvalError, "zero raised to a negative power");
    return 1.0 / ipow_eval(x, -n);
  }
  double r = 1.0, base = x;
  while (n > 0) {
    if (n & 1) r *= base;
    base *= base;
    n >>= 1;
  }
  return r;
}

double eval_node(const Node* n, std::span<const double> vars) {
  switch (n->kind) {
    case Kind::Const: return n->cval;
    case Kind::Var: return vars[static_cast<size_t>(n->var)];
    case Kind::Add: return eval_node(n->a.get(), vars) + eval_node(n->b.get(), vars);
    case Kind::Sub: return eval_node(n->a.get(), vars) - eval_node(n->b.get(), vars);
    case Kind::Mul: return eval_node(n->a.get(), vars) * eval_node(n->b.get(), vars);
    case Kind::Div: {
      double den = eval_node(n->b.get(), vars);
      if (den == 0.0) throw Error(ErrorCode::EvalError, "division by zero");
      return eval_node(n->a.get(), vars) / den;
    }
    case Kind::Neg: return -eval_node(n->a.get(), vars);
    case Kind::Pow: return ipow_eval(eval_node(n->a.get(), vars), n->ipow);
    case Kind::Sin: return std::sin(eval_node(n->a.get(), vars));
    case Kind::Cos: return std::cos(eval_node(n->a.get(), vars));
    case Kind::Exp: return std::exp(eval_node(n->a.get(), vars));
    case Kind::Sqrt: {
      double v = eval_node(n->a.get(), vars);
      if (v < 0.0) throw Error(ErrorCode::EvalError, "sqrt of negative value");
      return std::sqrt(v);
    }
    case Kind::BumpRat: {
      double dx = vars[0] - n->bp[0];
      double dy = vars[1] - n->bp[1];
      double r2 = n->bp[2] * n->bp[2];
      double s = r2 - dx * dx - dy * dy;
      if (s <= 0.0) return 0.0;
      // exp(-r^2/s) / s^k, fused in the exponent to stay finite near the rim
      double expo = -r2 / s - n->ipow * std::log(s);
      if (expo < -700.0) return 0.0;
      return eval_node(n->a.get(), vars) * std::exp(expo);
    }
  }
  throw Error(ErrorCode::EvalError, "corrupt expression node");
}

P diff_node(const P& n, int var) {
  switch (n->kind) {
    case Kind::Const: return make_const(0.0);
    case Kind::Var: return make_const(n->var == var ? 1.0 : 0.0);
    case Kind::Add: return add(diff_node(n->a, var), diff_node(n->b, var));
    case Kind::Sub: return sub(diff_node(n->a, var), diff_node(n->b, var));
    case Kind::Mul:
      return add(mul(diff_node(n->a, var), n->b), mul(n->a, diff_node(n->b, var)));
    case Kind::Div:
      // (a/b)' = a'/b - a b'/b^2
      return sub(div(diff_node(n->a, var), n->b),
                 div(mul(n->a, diff_node(n->b, var)), powi(n->b, 2)));
    case Kind::Neg: return neg(diff_node(n->a, var));
    case Kind::Pow:
      return mul(mul(make_const(n->ipow), powi(n->a, n->ipow - 1)), diff_node(n->a, var));
    case Kind::Sin: return mul(make_un(Kind::Cos, n->a), diff_node(n->a, var));
    case Kind::Cos: return neg(mul(make_un(Kind::Sin, n->a), diff_node(n->a, var)));
    case Kind::Exp: return mul(make_un(Kind::Exp, n->a), diff_node(n->a, var));
    case Kind::Sqrt:
      return div(diff_node(n->a, var), mul(make_const(2.0), make_un(Kind::Sqrt, n->a)));
    case Kind::BumpRat: {
      // d/dx [p B s^{-k}] with B = exp(-r^2/s), s = r^2 - |x-c|^2:
      //   = p_x B s^{-k} - 2 dx r^2 p B s^{-k-2} + 2 k dx p B s^{-k-1}
      double cx = n->bp[0], cy = n->bp[1], r = n->bp[2];
      double r2 = r * r;
      P delta = (var == 0) ? sub(make_var(0), make_const(cx))
                           : sub(make_var(1), make_const(cy));
      if (var > 1) return bumprat(cx, cy, r, diff_node(n->a, var), n->ipow);
      P t1 = bumprat(cx, cy, r, diff_node(n->a, var), n->ipow);
      P t2 = bumprat(cx, cy, r, mul(mul(make_const(-2.0 * r2), delta), n->a), n->ipow + 2);
      P t3 = bumprat(cx, cy, r, mul(mul(make_const(2.0 * n->ipow), delta), n->a), n->ipow + 1);
      return add(add(t1, t2), t3);
    }
  }
  throw Error(ErrorCode::EvalError, "corrupt expression node");
}

int precedence(Kind k) {
  switch (k) {
    case Kind::Add: case Kind::Sub: return 1;
    case Kind::Mul: case Kind::Div: return 2;
    case Kind::Neg: return 3;
    case Kind::Pow: return 4;
    default: return 5;
  }
}

void print_node(const Node* n, const std::vector<std::string>& vars, std::ostream& os);

void print_child(const P& c, int parent_prec, const std::vector<std::string>& vars,
                 std::ostream& os, bool strict) {
  int p = precedence(c->kind);
  bool parens = strict ? (p <= parent_prec) : (p < parent_prec);
  if (parens) os << '(';
  print_node(c.get(), vars, os);
  if (parens) os << ')';
}

void print_node(const Node* n, const std::vector<std::string>& vars, std::ostream& os) {
  char buf[40];
  switch (n->kind) {
    case Kind::Const:
      if (n->cval < 0) {
        std::snprintf(buf, sizeof buf, "(%.17g)", n->cval);
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", n->cval);
      }
      os << buf;
      return;
    case Kind::Var: os << vars[static_cast<size_t>(n->var)]; return;
    case Kind::Add:
      print_child(n->a, 1, vars, os, false);
      os << " + ";
      print_child(n->b, 1, vars, os, false);
      return;
    case Kind::Sub:
      print_child(n->a, 1, vars, os, false);
      os << " - ";
      print_child(n->b, 1, vars, os, true);
      return;
    case Kind::Mul:
      print_child(n->a, 2, vars, os, false);
      os << "*";
      print_child(n->b, 2, vars, os, false);
      return;
    case Kind::Div:
      print_child(n->a, 2, vars, os, false);
      os << "/";
      print_child(n->b, 2, vars, os, true);
      return;
    case Kind::Neg:
      os << "-";
      print_child(n->a, 3, vars, os, true);
      return;
    case Kind::Pow:
      print_child(n->a, 4, vars, os, true);
      os << "^" << n->ipow;
      return;
    case Kind::Sin: os << "sin("; print_node(n->a.get(), vars, os); os << ")"; return;
    case Kind::Cos: os << "cos("; print_node(n->a.get(), vars, os); os << ")"; return;
    case Kind::Exp: os << "exp("; print_node(n->a.get(), vars, os); os << ")"; return;
    case Kind::Sqrt: os << "sqrt("; print_node(n->a.get(), vars, os); os << ")"; return;
    case Kind::BumpRat: {
      std::snprintf(buf, sizeof buf, "%.17g", n->bp[0]);
      std::string cx = buf;
      std::snprintf(buf, sizeof buf, "%.17g", n->bp[1]);
      std::string cy = buf;
      std::snprintf(buf, sizeof buf, "%.17g", n->bp[2]);
      std::string r = buf;
      if (n->ipow == 0 && is_const(n->a, 1.0)) {
        os << "bump(" << cx << ", " << cy << ", " << r << ")";
      } else {
        os << "bumprat(" << cx << ", " << cy << ", " << r << ", " << n->ipow << ", ";
        print_node(n->a.get(), vars, os);
        os << ")";
      }
      return;
    }
  }
}

// ---- recursive-descent parser ----

class Parser {
public:
  Parser(std::string_view src, const std::vector<std::string>& vars)
      : src_(src), vars_(vars) {}

  P parse() {
    P e = expr();
    skip_ws();
    if (pos_ != src_.size()) fail("end of input or operator");
    return e;
  }

private:
  std::string_view src_;
  const std::vector<std::string>& vars_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& expected) {
    throw Error(ErrorCode::ParseError,
                "at byte offset " + std::to_string(pos_) + ": expected " + expected);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  P expr() {
    P e = term();
    for (;;) {
      skip_ws();
      if (eat('+')) e = add(e, term());
      else if (eat('-')) e = sub(e, term());
      else return e;
    }
  }

  P term() {
    P e = unary();
    for (;;) {
      skip_ws();
      if (eat('*')) e = mul(e, unary());
      else if (eat('/')) e = div(e, unary());
      else return e;
    }
  }

  P unary() {
    skip_ws();
    if (eat('-')) return neg(unary());
    return power();
  }

  P power() {
    P e = atom();
    while (eat('^')) e = powi(e, integer());
    return e;
  }

  int integer() {
    skip_ws();
    size_t start = pos_;
    bool negative = false;
    if (pos_ < src_.size() && src_[pos_] == '-') {
      negative = true;
      ++pos_;
    }
    if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      pos_ = start;
      fail("integer exponent");
    }
    long v = 0;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      v = v * 10 + (src_[pos_] - '0');
      if (v > 64) fail("exponent magnitude <= 64");
      ++pos_;
    }
    return negative ? static_cast<int>(-v) : static_cast<int>(v);
  }

  P atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("number, variable, function or '('");
    char c = src_[pos_];
    if (eat('(')) {
      P e = expr();
      if (!eat(')')) fail("')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("number, variable, function or '('");
  }

  P number() {
    size_t end = pos_;
    auto digits = [&] {
      while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
    };
    digits();
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      digits();
    }
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      size_t mark = end;
      ++end;
      if (end < src_.size() && (src_[end] == '+' || src_[end] == '-')) ++end;
      if (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) digits();
      else end = mark;
    }
    double v = std::strtod(std::string(src_.substr(pos_, end - pos_)).c_str(), nullptr);
    pos_ = end;
    return make_const(v);
  }

  double const_arg(const char* what) {
    P e = expr();
    if (e->kind != Kind::Const)
      throw Error(ErrorCode::ParseError, "at byte offset " + std::to_string(pos_) +
                                             ": " + what + " must be a constant");
    return e->cval;
  }

  P identifier() {
    size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    std::string name(src_.substr(start, pos_ - start));
    for (size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == name) return make_var(static_cast<int>(i));

    auto paren_open = [&] {
      if (!eat('(')) fail("'('");
    };
    if (name == "sin" || name == "cos" || name == "exp" || name == "sqrt") {
      paren_open();
      P a = expr();
      if (!eat(')')) fail("')'");
      if (name == "sin") return make_un(Kind::Sin, a);
      if (name == "cos") return make_un(Kind::Cos, a);
      if (name == "exp") return make_un(Kind::Exp, a);
      return make_un(Kind::Sqrt, a);
    }
    if (name == "bump") {
      paren_open();
      double cx = const_arg("bump center");
      if (!eat(',')) fail("','");
      double cy = const_arg("bump center");
      if (!eat(',')) fail("','");
      double r = const_arg("bump radius");
      if (!eat(')')) fail("')'");
      if (r <= 0.0)
        throw Error(ErrorCode::ParseError, "bump radius must be positive");
      return bumprat(cx, cy, r, make_const(1.0), 0);
    }
    if (name == "bumprat") {
      paren_open();
      double cx = const_arg("bumprat center");
      if (!eat(',')) fail("','");
      double cy = const_arg("bumprat center");
      if (!eat(',')) fail("','");
      double r = const_arg("bumprat radius");
      if (!eat(',')) fail("','");
      int k = integer();
      if (!eat(',')) fail("','");
      P p = expr();
      if (!eat(')')) fail("')'");
      if (r <= 0.0)
        throw Error(ErrorCode::ParseError, "bumprat radius must be positive");
      return bumprat(cx, cy, r, p, k);
    }
    pos_ = start;
    fail("known variable or function, got '" + name + "'");
  }
};

} // namespace detail

Expr::Expr() : root_(detail::make_const(0.0)), nvars_(2) {}
Expr::Expr(std::shared_ptr<const detail::Node> root, int nvars)
    : root_(std::move(root)), nvars_(nvars) {}

const std::vector<std::string>& Expr::field_vars() {
  static const std::vector<std::string> v = {"x", "y"};
  return v;
}

const std::vector<std::string>& Expr::integrand_vars() {
  static const std::vector<std::string> v = {"x", "y", "u1", "u2", "g11", "g12", "g21", "g22"};
  return v;
}

Expr Expr::parse(std::string_view src) { return parse(src, field_vars()); }

Expr Expr::parse(std::string_view src, const std::vector<std::string>& vars) {
  detail::Parser p(src, vars);
  return Expr(p.parse(), static_cast<int>(vars.size()));
}

Expr Expr::constant(double c) { return Expr(detail::make_const(c), 2); }

double Expr::eval(std::span<const double> vars) const {
  return detail::eval_node(root_.get(), vars);
}

Expr Expr::diff(int var) const { return Expr(detail::diff_node(root_, var), nvars_); }

bool Expr::is_zero() const { return detail::is_const(root_, 0.0); }

std::string Expr::str() const {
  std::ostringstream os;
  const auto& vars = nvars_ <= 2 ? field_vars() : integrand_vars();
  detail::print_node(root_.get(), vars, os);
  return os.str();
}

Expr operator+(const Expr& a, const Expr& b) {
  return Expr(detail::add(a.root_, b.root_), std::max(a.nvars_, b.nvars_));
}
Expr operator-(const Expr& a, const Expr& b) {
  return Expr(detail::sub(a.root_, b.root_), std::max(a.nvars_, b.nvars_));
}
Expr operator*(const Expr& a, const Expr& b) {
  return Expr(detail::mul(a.root_, b.root_), std::max(a.nvars_, b.nvars_));
}
Expr operator-(const Expr& a) { return Expr(detail::neg(a.root_), a.nvars_); }
Expr operator*(double s, const Expr& a) {
  return Expr(detail::mul(detail::make_const(s), a.root_), a.nvars_);
}

VectorField::VectorField() : x(Expr::constant(0.0)), y(Expr::constant(0.0)) {}

VectorField VectorField::parse(std::string_view sx, std::string_view sy) {
  return VectorField(Expr::parse(sx), Expr::parse(sy));
}

VectorField VectorField::zero() { return VectorField(); }

std::array<Expr, 4> VectorField::grad() const {
  return {x.diff(0), x.diff(1), y.diff(0), y.diff(1)};
}

Mat2 VectorField::grad_eval(Vec2 p) const {
  return {x.diff(0).eval(p.x, p.y), x.diff(1).eval(p.x, p.y),
          y.diff(0).eval(p.x, p.y), y.diff(1).eval(p.x, p.y)};
}

} // namespace fsi
