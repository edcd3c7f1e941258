#include "fsishape/fem.hpp"

#include <cmath>

namespace fsi {

const TriQuadrature& TriQuadrature::get() {
  static const TriQuadrature q = [] {
    TriQuadrature r;
    // Dunavant degree-6 rule: 3 + 3 + 6 points.
    const double a1 = 0.063089014491502228, w1 = 0.050844906370206817;
    const double a2 = 0.249286745170910421, w2 = 0.116786275726379366;
    const double b1 = 0.310352451033785405, b2 = 0.053145049844816947,
                 w3 = 0.082851075618373575;
    int k = 0;
    auto put = [&](double l1, double l2, double l3, double w) {
      // barycentric (l1, l2, l3) -> (xi, eta) with l1 = 1-xi-eta
      (void)l1;
      r.xi[k] = l2;
      r.eta[k] = l3;
      r.w[k] = w;
      ++k;
    };
    put(1 - 2 * a1, a1, a1, w1);
    put(a1, 1 - 2 * a1, a1, w1);
    put(a1, a1, 1 - 2 * a1, w1);
    put(1 - 2 * a2, a2, a2, w2);
    put(a2, 1 - 2 * a2, a2, w2);
    put(a2, a2, 1 - 2 * a2, w2);
    double b3 = 1.0 - b1 - b2;
    put(b1, b2, b3, w3);
    put(b2, b1, b3, w3);
    put(b1, b3, b2, w3);
    put(b2, b3, b1, w3);
    put(b3, b1, b2, w3);
    put(b3, b2, b1, w3);
    return r;
  }();
  return q;
}

const EdgeQuadrature& EdgeQuadrature::get() {
  static const EdgeQuadrature q = [] {
    EdgeQuadrature r;
    const double x1 = 0.33998104358485626, w1 = 0.65214515486254614;
    const double x2 = 0.86113631159405258, w2 = 0.34785484513745386;
    const double xs[4] = {-x2, -x1, x1, x2};
    const double ws[4] = {w2, w1, w1, w2};
    for (int i = 0; i < 4; ++i) {
      r.s[i] = 0.5 * (1.0 + xs[i]);
      r.w[i] = 0.5 * ws[i];
    }
    return r;
  }();
  return q;
}

void shape_values(ElemKind kind, double xi, double eta, double* out) {
  double l1 = 1.0 - xi - eta, l2 = xi, l3 = eta;
  if (kind == ElemKind::ScalarP1) {
    out[0] = l1;
    out[1] = l2;
    out[2] = l3;
    return;
  }
  out[0] = l1 * (2 * l1 - 1);
  out[1] = l2 * (2 * l2 - 1);
  out[2] = l3 * (2 * l3 - 1);
  out[3] = 4 * l1 * l2;
  out[4] = 4 * l2 * l3;
  out[5] = 4 * l3 * l1;
}

void shape_ref_grads(ElemKind kind, double xi, double eta, Vec2* out) {
  double l1 = 1.0 - xi - eta, l2 = xi, l3 = eta;
  const Vec2 d1{-1, -1}, d2{1, 0}, d3{0, 1};
  if (kind == ElemKind::ScalarP1) {
    out[0] = d1;
    out[1] = d2;
    out[2] = d3;
    return;
  }
  out[0] = d1 * (4 * l1 - 1);
  out[1] = d2 * (4 * l2 - 1);
  out[2] = d3 * (4 * l3 - 1);
  out[3] = 4.0 * (d1 * l2 + d2 * l1);
  out[4] = 4.0 * (d2 * l3 + d3 * l2);
  out[5] = 4.0 * (d3 * l1 + d1 * l3);
}

FunctionSpace::FunctionSpace(const Mesh& mesh, Region region, ElemKind kind,
                             std::vector<BoundaryTag> dirichlet)
    : mesh_(&mesh), region_(region), kind_(kind) {
  uint8_t mask = 0;
  for (auto t : dirichlet) mask |= static_cast<uint8_t>(1u << static_cast<int>(t));

  std::vector<uint8_t> v_active(mesh.nodes.size(), 0), e_active(mesh.edges.size(), 0);
  for (size_t t = 0; t < mesh.tris.size(); ++t) {
    if (mesh.tris[t].region != region) continue;
    region_tris_.push_back(static_cast<int>(t));
    for (int k = 0; k < 3; ++k) {
      v_active[mesh.tris[t].v[k]] = 1;
      e_active[mesh.tri_edges[t][k]] = 1;
    }
  }

  vertex_dof_.assign(mesh.nodes.size(), -1);
  for (size_t v = 0; v < mesh.nodes.size(); ++v)
    if (v_active[v] && !(mesh.vertex_tags[v] & mask)) vertex_dof_[v] = n_scalar_++;
  if (kind != ElemKind::ScalarP1) {
    edge_dof_.assign(mesh.edges.size(), -1);
    for (size_t e = 0; e < mesh.edges.size(); ++e)
      if (e_active[e] && !(mesh.edge_tags[e] & mask)) edge_dof_[e] = n_scalar_++;
  }
}

void FunctionSpace::local_dofs(int tri, int* out) const {
  const auto& t = mesh_->tris[tri];
  for (int k = 0; k < 3; ++k) out[k] = vertex_dof_[t.v[k]];
  if (kind_ != ElemKind::ScalarP1)
    for (int k = 0; k < 3; ++k) out[3 + k] = edge_dof_[mesh_->tri_edges[tri][k]];
}

std::vector<Vec2> FunctionSpace::dof_points() const {
  std::vector<Vec2> pts(static_cast<size_t>(n_scalar_));
  for (size_t v = 0; v < mesh_->nodes.size(); ++v)
    if (vertex_dof_[v] >= 0) pts[vertex_dof_[v]] = mesh_->nodes[v];
  if (kind_ != ElemKind::ScalarP1) {
    for (size_t e = 0; e < mesh_->edges.size(); ++e) {
      if (edge_dof_[e] >= 0) {
        auto [a, b] = mesh_->edges[e];
        pts[edge_dof_[e]] = (mesh_->nodes[a] + mesh_->nodes[b]) * 0.5;
      }
    }
  }
  return pts;
}

TriGeom tri_geom(const Mesh& mesh, int tri) {
  const auto& t = mesh.tris[tri];
  Vec2 p0 = mesh.nodes[t.v[0]], p1 = mesh.nodes[t.v[1]], p2 = mesh.nodes[t.v[2]];
  TriGeom g;
  g.p0 = p0;
  g.jac = Mat2(p1.x - p0.x, p2.x - p0.x, p1.y - p0.y, p2.y - p0.y);
  g.inv_jac_t = g.jac.inverse().transpose();
  g.area = 0.5 * g.jac.det();
  return g;
}

Vec2 ref_coords(const Mesh& mesh, int tri, Vec2 p) {
  TriGeom g = tri_geom(mesh, tri);
  Vec2 d = p - g.p0;
  Vec2 r = g.jac.inverse() * d;
  return r;
}

void eval_basis(const FunctionSpace& sp, int tri, Vec2 ref, ElemBasis& out) {
  out.n = local_basis_of(sp.kind());
  sp.local_dofs(tri, out.dof);
  shape_values(sp.kind(), ref.x, ref.y, out.val);
  Vec2 rg[6];
  shape_ref_grads(sp.kind(), ref.x, ref.y, rg);
  TriGeom g = tri_geom(sp.mesh(), tri);
  for (int i = 0; i < out.n; ++i) out.grad[i] = g.inv_jac_t * rg[i];
}

Vec2 eval_vec(const DiscreteField& f, int tri, Vec2 ref) {
  ElemBasis b;
  eval_basis(*f.space, tri, ref, b);
  Vec2 v{0, 0};
  for (int i = 0; i < b.n; ++i) {
    if (b.dof[i] < 0) continue;
    v.x += f.coef[2 * b.dof[i]] * b.val[i];
    v.y += f.coef[2 * b.dof[i] + 1] * b.val[i];
  }
  return v;
}

Mat2 eval_vec_grad(const DiscreteField& f, int tri, Vec2 ref) {
  ElemBasis b;
  eval_basis(*f.space, tri, ref, b);
  Mat2 g;
  for (int i = 0; i < b.n; ++i) {
    if (b.dof[i] < 0) continue;
    double cx = f.coef[2 * b.dof[i]], cy = f.coef[2 * b.dof[i] + 1];
    g(0, 0) += cx * b.grad[i].x;
    g(0, 1) += cx * b.grad[i].y;
    g(1, 0) += cy * b.grad[i].x;
    g(1, 1) += cy * b.grad[i].y;
  }
  return g;
}

double eval_scalar(const DiscreteField& f, int tri, Vec2 ref) {
  ElemBasis b;
  eval_basis(*f.space, tri, ref, b);
  double v = 0;
  for (int i = 0; i < b.n; ++i)
    if (b.dof[i] >= 0) v += f.coef[b.dof[i]] * b.val[i];
  return v;
}

Vec2 eval_scalar_grad(const DiscreteField& f, int tri, Vec2 ref) {
  ElemBasis b;
  eval_basis(*f.space, tri, ref, b);
  Vec2 v{0, 0};
  for (int i = 0; i < b.n; ++i)
    if (b.dof[i] >= 0) v += b.grad[i] * f.coef[b.dof[i]];
  return v;
}

DiscreteField interpolate(const FunctionSpace& sp, const VectorField& v) {
  DiscreteField f(sp);
  auto pts = sp.dof_points();
  for (size_t i = 0; i < pts.size(); ++i) {
    Vec2 val = v.eval(pts[i]);
    f.coef[2 * i] = val.x;
    f.coef[2 * i + 1] = val.y;
  }
  return f;
}

DiscreteField interpolate(const FunctionSpace& sp, const Expr& e) {
  DiscreteField f(sp);
  auto pts = sp.dof_points();
  for (size_t i = 0; i < pts.size(); ++i) f.coef[i] = e.eval(pts[i].x, pts[i].y);
  return f;
}

double compute_norm(const DiscreteField& f, NormKind kind) {
  const auto& sp = *f.space;
  const auto& quad = TriQuadrature::get();
  double acc = 0.0;
  bool vec = sp.kind() == ElemKind::VectorP2;
  for (int tri : sp.region_tris()) {
    TriGeom g = tri_geom(sp.mesh(), tri);
    for (int q = 0; q < quad.n; ++q) {
      Vec2 ref{quad.xi[q], quad.eta[q]};
      double w = quad.w[q] * g.area;
      if (kind == NormKind::L2) {
        if (vec) {
          Vec2 v = eval_vec(f, tri, ref);
          acc += w * v.dot(v);
        } else {
          double v = eval_scalar(f, tri, ref);
          acc += w * v * v;
        }
      } else {
        if (vec) {
          Mat2 gr = eval_vec_grad(f, tri, ref);
          acc += w * gr.ddot(gr);
        } else {
          Vec2 gr = eval_scalar_grad(f, tri, ref);
          acc += w * gr.dot(gr);
        }
      }
    }
  }
  return std::sqrt(acc);
}

} // namespace fsi
