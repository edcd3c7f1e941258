#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsishape/error.hpp"
#include "fsishape/linalg.hpp"

namespace fsi {

namespace detail {
struct Node;
}

// Immutable analytic scalar expression over a fixed variable list.
// Field expressions use {x, y}; functional integrands additionally see the
// state value and gradient slots {u1, u2, g11, g12, g21, g22}.
class Expr {
public:
  Expr();

  static const std::vector<std::string>& field_vars();      // {x, y}
  static const std::vector<std::string>& integrand_vars();  // {x, y, u1, u2, g11, g12, g21, g22}

  static Expr parse(std::string_view src);
  static Expr parse(std::string_view src, const std::vector<std::string>& vars);
  static Expr constant(double c);

  double eval(std::span<const double> vars) const;
  double eval(double x, double y) const { const double v[2] = {x, y}; return eval(std::span<const double>(v, 2)); }

  // Exact symbolic partial with respect to variable index `var`.
  Expr diff(int var) const;

  bool is_zero() const;
  std::string str() const;

  int var_count() const { return nvars_; }

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr operator*(double s, const Expr& a);

  // Laplacian with respect to (x, y).
  Expr laplacian() const { return diff(0).diff(0) + diff(1).diff(1); }

private:
  Expr(std::shared_ptr<const detail::Node> root, int nvars);
  std::shared_ptr<const detail::Node> root_;
  int nvars_ = 2;
  friend class ExprBuilder;
};

// Analytic planar vector field (two components over {x, y}).
struct VectorField {
  Expr x, y;

  VectorField();
  VectorField(Expr fx, Expr fy) : x(std::move(fx)), y(std::move(fy)) {}

  static VectorField parse(std::string_view sx, std::string_view sy);
  static VectorField zero();

  Vec2 eval(Vec2 p) const { return {x.eval(p.x, p.y), y.eval(p.x, p.y)}; }

  // Row i of the result is the gradient of component i.
  std::array<Expr, 4> grad() const;
  Mat2 grad_eval(Vec2 p) const;

  bool is_zero() const { return x.is_zero() && y.is_zero(); }
};

} // namespace fsi
