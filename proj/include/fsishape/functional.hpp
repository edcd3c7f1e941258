#pragma once

#include <array>

#include "fsishape/solver.hpp"

namespace fsi {

// Shape functional: a solid-side integrand over (Y, w, grad w) plus a
// fluid-side integrand over (x, u, grad u), both given as expressions in the
// variables {x, y, u1, u2, g11, g12, g21, g22} with exact symbolic partials.
struct FunctionalSpec {
  std::string name;
  Expr jF, jS;
  std::array<Expr, 2> d1F, d2F, d1S, d2S;
  std::array<Expr, 4> d3F, d3S;

  static FunctionalSpec energy();
  static FunctionalSpec custom(const std::string& name, const std::string& jf_src,
                               const std::string& js_src);
  static FunctionalSpec from_exprs(const std::string& name, Expr jf, Expr js);
};

// Pointwise integrand evaluation bundle.
struct IntegrandPoint {
  double vars[8];
  void set(Vec2 x, Vec2 u, const Mat2& g) {
    vars[0] = x.x;
    vars[1] = x.y;
    vars[2] = u.x;
    vars[3] = u.y;
    vars[4] = g(0, 0);
    vars[5] = g(0, 1);
    vars[6] = g(1, 0);
    vars[7] = g(1, 1);
  }
  double eval(const Expr& e) const { return e.eval(std::span<const double>(vars, 8)); }
  Vec2 eval2(const std::array<Expr, 2>& a) const { return {eval(a[0]), eval(a[1])}; }
  Mat2 eval4(const std::array<Expr, 4>& a) const {
    return {eval(a[0]), eval(a[1]), eval(a[2]), eval(a[3])};
  }
};

// Value of the functional on a (possibly t-transported) solved state: the
// fluid term is pulled back through T, the solid term through Phi_t.
double eval_functional(const Discretization& disc, const FunctionalSpec& spec,
                       const FsiState& state, const TransformState& ts,
                       const SolidMap* phi = nullptr);

} // namespace fsi
