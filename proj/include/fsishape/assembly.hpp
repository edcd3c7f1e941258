#pragma once

#include "fsishape/kinematics.hpp"
#include "fsishape/sparse.hpp"

namespace fsi {

// Generic element-wise assembly of volume and interface forms. Kernels are
// called per quadrature point and basis pair; the quadrature weight is applied
// by the assembler. `comp` is the vector component a basis function acts on
// (always 0 for scalar spaces), `qid` the dense region sample id
// (tri_pos * 12 + q for volumes, edge_pos * 4 + q on the interface).

struct TrialFn {
  int comp;
  double val;
  Vec2 grad;
};

template <class Kernel>
void assemble_volume_form(const QpTables& qp, const FunctionSpace& trial,
                          const FunctionSpace& test, SparseSystem& sys, int row_offset,
                          int col_offset, Kernel&& kernel) {
  if (trial.region() != test.region())
    throw Error(ErrorCode::QuadratureDataMissing, "trial and test spaces live on different regions");
  const auto& quad = TriQuadrature::get();
  const auto& tris = trial.region() == Region::Fluid ? qp.fluid_tris : qp.solid_tris;
  const auto& xs = trial.region() == Region::Fluid ? qp.fluid_x : qp.solid_x;
  const auto& ws = trial.region() == Region::Fluid ? qp.fluid_w : qp.solid_w;
  const int ctrial = trial.components(), ctest = test.components();
  ElemBasis bu, bv;
  for (size_t i = 0; i < tris.size(); ++i) {
    int tri = tris[i];
    for (int q = 0; q < quad.n; ++q) {
      size_t qid = i * quad.n + q;
      Vec2 ref{quad.xi[q], quad.eta[q]};
      eval_basis(trial, tri, ref, bu);
      if (&trial == &test) bv = bu;
      else eval_basis(test, tri, ref, bv);
      double w = ws[qid];
      for (int a = 0; a < bv.n; ++a) {
        if (bv.dof[a] < 0) continue;
        for (int ca = 0; ca < ctest; ++ca) {
          int row = row_offset + ctest * bv.dof[a] + ca;
          TrialFn v{ca, bv.val[a], bv.grad[a]};
          for (int b = 0; b < bu.n; ++b) {
            if (bu.dof[b] < 0) continue;
            for (int cb = 0; cb < ctrial; ++cb) {
              TrialFn u{cb, bu.val[b], bu.grad[b]};
              double val = kernel(static_cast<int>(qid), xs[qid], u, v);
              if (val != 0.0) sys.add(row, col_offset + ctrial * bu.dof[b] + cb, w * val);
            }
          }
        }
      }
    }
  }
}

template <class Kernel>
void assemble_rhs_volume(const QpTables& qp, const FunctionSpace& test, Eigen::VectorXd& rhs,
                         int row_offset, Kernel&& kernel) {
  const auto& quad = TriQuadrature::get();
  const auto& tris = test.region() == Region::Fluid ? qp.fluid_tris : qp.solid_tris;
  const auto& xs = test.region() == Region::Fluid ? qp.fluid_x : qp.solid_x;
  const auto& ws = test.region() == Region::Fluid ? qp.fluid_w : qp.solid_w;
  const int ctest = test.components();
  ElemBasis bv;
  for (size_t i = 0; i < tris.size(); ++i) {
    int tri = tris[i];
    for (int q = 0; q < quad.n; ++q) {
      size_t qid = i * quad.n + q;
      eval_basis(test, tri, {quad.xi[q], quad.eta[q]}, bv);
      double w = ws[qid];
      for (int a = 0; a < bv.n; ++a) {
        if (bv.dof[a] < 0) continue;
        for (int ca = 0; ca < ctest; ++ca) {
          TrialFn v{ca, bv.val[a], bv.grad[a]};
          rhs[row_offset + ctest * bv.dof[a] + ca] += w * kernel(static_cast<int>(qid), xs[qid], v);
        }
      }
    }
  }
}

enum class InterfaceSide { Fluid, Solid };

template <class Kernel>
void assemble_interface_matrix(const QpTables& qp, const FunctionSpace& trial,
                               InterfaceSide trial_side, const FunctionSpace& test,
                               InterfaceSide test_side, SparseSystem& sys, int row_offset,
                               int col_offset, Kernel&& kernel) {
  const int ctrial = trial.components(), ctest = test.components();
  ElemBasis bu, bv;
  for (size_t id = 0; id < qp.g0.size(); ++id) {
    const auto& p = qp.g0[id];
    eval_basis(trial, trial_side == InterfaceSide::Fluid ? p.ftri : p.stri,
               trial_side == InterfaceSide::Fluid ? p.fref : p.sref, bu);
    eval_basis(test, test_side == InterfaceSide::Fluid ? p.ftri : p.stri,
               test_side == InterfaceSide::Fluid ? p.fref : p.sref, bv);
    for (int a = 0; a < bv.n; ++a) {
      if (bv.dof[a] < 0) continue;
      for (int ca = 0; ca < ctest; ++ca) {
        int row = row_offset + ctest * bv.dof[a] + ca;
        TrialFn v{ca, bv.val[a], bv.grad[a]};
        for (int b = 0; b < bu.n; ++b) {
          if (bu.dof[b] < 0) continue;
          for (int cb = 0; cb < ctrial; ++cb) {
            TrialFn u{cb, bu.val[b], bu.grad[b]};
            double val = kernel(static_cast<int>(id), p.x, p.n, u, v);
            if (val != 0.0) sys.add(row, col_offset + ctrial * bu.dof[b] + cb, p.w * val);
          }
        }
      }
    }
  }
}

// Line-integral contributions of a pointwise traction against interface test
// functions taken from one side.
template <class Kernel>
void assemble_interface_form(const QpTables& qp, const FunctionSpace& test, InterfaceSide side,
                             Eigen::VectorXd& rhs, int row_offset, Kernel&& kernel) {
  const int ctest = test.components();
  ElemBasis bv;
  for (size_t id = 0; id < qp.g0.size(); ++id) {
    const auto& p = qp.g0[id];
    eval_basis(test, side == InterfaceSide::Fluid ? p.ftri : p.stri,
               side == InterfaceSide::Fluid ? p.fref : p.sref, bv);
    for (int a = 0; a < bv.n; ++a) {
      if (bv.dof[a] < 0) continue;
      for (int ca = 0; ca < ctest; ++ca) {
        TrialFn v{ca, bv.val[a], bv.grad[a]};
        rhs[row_offset + ctest * bv.dof[a] + ca] += p.w * kernel(static_cast<int>(id), p.x, p.n, v);
      }
    }
  }
}

} // namespace fsi
