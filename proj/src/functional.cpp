#include "fsishape/functional.hpp"

namespace fsi {

FunctionalSpec FunctionalSpec::from_exprs(const std::string& name, Expr jf, Expr js) {
  FunctionalSpec s;
  s.name = name;
  s.jF = std::move(jf);
  s.jS = std::move(js);
  for (int i = 0; i < 2; ++i) {
    s.d1F[i] = s.jF.diff(i);
    s.d2F[i] = s.jF.diff(2 + i);
    s.d1S[i] = s.jS.diff(i);
    s.d2S[i] = s.jS.diff(2 + i);
  }
  for (int i = 0; i < 4; ++i) {
    s.d3F[i] = s.jF.diff(4 + i);
    s.d3S[i] = s.jS.diff(4 + i);
  }
  return s;
}

FunctionalSpec FunctionalSpec::custom(const std::string& name, const std::string& jf_src,
                                      const std::string& js_src) {
  return from_exprs(name, Expr::parse(jf_src, Expr::integrand_vars()),
                    Expr::parse(js_src, Expr::integrand_vars()));
}

FunctionalSpec FunctionalSpec::energy() {
  // 0.5 |sym(grad)|^2 for both phases
  const char* density = "0.5*(g11^2 + g22^2) + 0.25*(g12 + g21)^2";
  return custom("energy", density, density);
}

double eval_functional(const Discretization& disc, const FunctionalSpec& spec,
                       const FsiState& state, const TransformState& ts, const SolidMap* phi) {
  const auto& qp = disc.kin.qp();
  const auto& quad = TriQuadrature::get();
  IntegrandPoint pt;
  double acc = 0.0;

  for (size_t i = 0; i < qp.fluid_tris.size(); ++i) {
    int tri = qp.fluid_tris[i];
    for (int q = 0; q < quad.n; ++q) {
      size_t id = i * quad.n + q;
      Vec2 ref{quad.xi[q], quad.eta[q]};
      const auto& s = ts.fluid[id];
      Vec2 u = eval_vec(state.v, tri, ref);
      Mat2 g = eval_vec_grad(state.v, tri, ref) * s.A.inverse();
      pt.set(s.Tx, u, g);
      acc += qp.fluid_w[id] * pt.eval(spec.jF) * s.J;
    }
  }

  SolidMap ident;
  const SolidMap* ph = phi;
  if (!ph) {
    ident = disc.kin.solid_map(nullptr, 0.0, 0.0);
    ph = &ident;
  }
  for (size_t i = 0; i < qp.solid_tris.size(); ++i) {
    int tri = qp.solid_tris[i];
    for (int q = 0; q < quad.n; ++q) {
      size_t id = i * quad.n + q;
      Vec2 ref{quad.xi[q], quad.eta[q]};
      const auto& s = ph->qp[id];
      Vec2 u = eval_vec(state.w, tri, ref);
      Mat2 g = eval_vec_grad(state.w, tri, ref);
      if (!ph->identity) g = g * s.A.inverse();
      pt.set(s.Tx, u, g);
      acc += qp.solid_w[id] * pt.eval(spec.jS) * s.J;
    }
  }
  return acc;
}

} // namespace fsi
