#include "qstab/invariance.hpp"

#include <algorithm>
#include <cmath>

namespace qstab {

namespace {

const cplx kI(0.0, 1.0);

Eigen::VectorXd singular_values(const CMatrix& m) {
  if (m.size() == 0) return Eigen::VectorXd();
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues();
}

int numerical_rank(const Eigen::VectorXd& sv, double rel_tol) {
  if (sv.size() == 0) return 0;
  const double smax = sv.maxCoeff();
  if (!(smax > 0.0)) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rel_tol * smax) ++rank;
  }
  return rank;
}

// Right-singular vectors spanning the numerical kernel of m, judged against
// rel_tol * scale.
CMatrix kernel_basis(const CMatrix& m, double threshold) {
  if (m.cols() == 0) return CMatrix(0, 0);
  Eigen::BDCSVD<CMatrix> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double s = j < sv.size() ? sv(j) : 0.0;
    if (s <= threshold) cols.push_back(j);
  }
  CMatrix basis(m.cols(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    basis.col(static_cast<Eigen::Index>(c)) = svd.matrixV().col(cols[c]);
  }
  return basis;
}

double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m).maxCoeff();
}

}  // namespace

std::vector<InvarianceWitness> InvarianceReport::violations() const {
  std::vector<InvarianceWitness> out;
  for (const auto& w : witnesses) {
    if (w.residual > tol) out.push_back(w);
  }
  return out;
}

InvarianceReport check_invariant(const ControlModel& model,
                                 const Decomposition& decomp, double u,
                                 double tol) {
  if (decomp.dim() != model.dim()) {
    throw DimensionError("check_invariant: decomposition dimension mismatch");
  }
  InvarianceReport report;
  report.tol = tol;
  const Decomposition d = decomp.coarsened();
  if (d.parts() == 1) return report;

  const CMatrix h = model.hamiltonian(u);
  CMatrix cond = kI * block(h, d, 0, 1);
  for (std::size_t k = 0; k < model.L.size(); ++k) {
    const CMatrix lq = block(model.L[k], d, 1, 0);
    report.witnesses.push_back({kCondLQ, static_cast<int>(k), lq.norm()});
    cond -= 0.5 * block(model.L[k], d, 0, 0).adjoint() * block(model.L[k], d, 0, 1);
  }
  report.witnesses.push_back({kCondHP, -1, cond.norm()});
  report.invariant = std::all_of(report.witnesses.begin(), report.witnesses.end(),
                                 [tol](const auto& w) { return w.residual <= tol; });
  return report;
}

bool check_R_not_invariant(const ControlModel& model,
                           const Decomposition& decomp, double u, double tol) {
  const Decomposition d = decomp.coarsened();
  if (d.parts() == 1) return false;
  const Decomposition swapped = d.reordered({1, 0});
  return !check_invariant(model, swapped, u, tol).invariant;
}

std::string to_string(Stabilizability s) {
  switch (s) {
    case Stabilizability::Stabilizable: return "Stabilizable";
    case Stabilizability::NeedsFeedback: return "NeedsFeedback";
    case Stabilizability::TargetNotInvariantable: return "TargetNotInvariantable";
  }
  return "unknown";
}

Stabilizability openloop_stabilizable(const ControlModel& model,
                                      const Decomposition& decomp, double tol) {
  const Decomposition d = decomp.coarsened();
  if (d.parts() == 1) return Stabilizability::Stabilizable;
  bool any_p = false;
  for (const auto& l : model.L) {
    if (block(l, d, 1, 0).norm() > tol) return Stabilizability::TargetNotInvariantable;
    if (block(l, d, 0, 1).norm() > tol) any_p = true;
  }
  return any_p ? Stabilizability::Stabilizable : Stabilizability::NeedsFeedback;
}

bool observability_escape(const CMatrix& A, const Decomposition& decomp,
                          double tol) {
  const Decomposition d = decomp.coarsened();
  const int n = d.dim();
  const int s = d.dims()[0];
  const int r = n - s;
  if (r == 0) return true;
  if (s == 0) return false;
  CMatrix a = d.to_adapted(A);
  const double scale = spectral_norm(a);
  if (scale > 0.0) a /= scale;

  CMatrix stacked(static_cast<Eigen::Index>(n) * s, r);
  CMatrix power = CMatrix::Identity(n, n);
  for (int k = 0; k < n; ++k) {
    stacked.block(static_cast<Eigen::Index>(k) * s, 0, s, r) = power.block(0, s, s, r);
    power = a * power;
  }
  return numerical_rank(singular_values(stacked), tol) == r;
}

bool deterministic_invariance(const ControlModel& model,
                              const Decomposition& decomp, double tol,
                              double u) {
  const Decomposition d = decomp.coarsened();
  if (d.parts() == 1) return true;
  const CMatrix drift = stratonovich_drift_matrix(model, u);
  const CMatrix input = model.measurement();
  return block(drift, d, 1, 0).norm() <= tol && block(input, d, 1, 0).norm() <= tol;
}

AuxConditionReport lemma_aux_conditions(const ControlModel& model,
                                        const Decomposition& decomp3,
                                        const std::vector<CMatrix>& probes,
                                        double tol) {
  if (decomp3.parts() != 3 || decomp3.dims()[1] != 1) {
    throw DimensionError("lemma_aux_conditions needs an S (+) C (+) Z split with dim C = 1");
  }
  if (decomp3.dim() != model.dim()) {
    throw DimensionError("lemma_aux_conditions: decomposition dimension mismatch");
  }
  const int z = decomp3.dims()[2];
  AuxConditionReport report;

  CMatrix vw = -kI * block(model.H_o, decomp3, 1, 2);
  CMatrix w_rows(static_cast<Eigen::Index>(model.L.size()), z);
  std::vector<CMatrix> lw, lz;
  for (std::size_t k = 0; k < model.L.size(); ++k) {
    const CMatrix& l = model.L[k];
    const CMatrix w = block(l, decomp3, 1, 2);
    const CMatrix c = block(l, decomp3, 1, 1);
    const CMatrix y = block(l, decomp3, 2, 1);
    const CMatrix zz = block(l, decomp3, 2, 2);
    vw -= 0.5 * (c.adjoint() * w + y.adjoint() * zz);
    w_rows.row(static_cast<Eigen::Index>(k)) = w.row(0);
    lw.push_back(w);
    lz.push_back(zz);
  }
  report.pcond_operator = vw;

  if (z == 0) {
    report.scond_universal = true;
  } else if (w_rows.rows() > 0) {
    const auto sv = singular_values(w_rows);
    report.scond_universal = sv.size() > 0 && sv.maxCoeff() > tol &&
                             numerical_rank(sv, tol) == z;
  }

  for (const auto& probe : probes) {
    if (probe.rows() != z || probe.cols() != z) {
      throw DimensionError("lemma_aux_conditions: probe must be a Z-block matrix");
    }
    CMatrix sc = CMatrix::Zero(1, 1);
    CMatrix pc = vw * probe;
    for (std::size_t k = 0; k < lw.size(); ++k) {
      sc += lw[k] * probe * lw[k].adjoint();
      pc += lw[k] * probe * lz[k].adjoint();
    }
    ProbeVerdict v;
    v.scond_norm = sc.norm();
    v.pcond_norm = pc.norm();
    v.satisfied = v.scond_norm > tol || v.pcond_norm > tol;
    report.probes.push_back(v);
  }
  return report;
}

StationaryReport stationary_support(const ControlModel& model, double u,
                                    const Decomposition& decomp, double tol) {
  if (decomp.dim() != model.dim()) {
    throw DimensionError("stationary_support: decomposition dimension mismatch");
  }
  const Decomposition d = decomp.coarsened();
  const Eigen::Index n = model.dim();
  const CMatrix liou = liouvillian_matrix(model, u);
  const double smax = spectral_norm(liou);
  const double threshold = tol * smax;

  StationaryReport report;
  report.kernel_dimension =
      smax > 0.0 ? static_cast<int>(kernel_basis(liou, threshold).cols())
                 : static_cast<int>(n * n);
  if (report.kernel_dimension == 0) {
    throw AnomalyError("stationary_support: generator has no numerical kernel; "
                       "the model is not a valid Lindbladian");
  }
  if (d.parts() == 1) return report;

  // Embedding of R-block operators (adapted basis) into vec space.
  const int s = d.dims()[0];
  const int r = static_cast<int>(n) - s;
  if (r == 0) return report;
  CMatrix embed(n * n, static_cast<Eigen::Index>(r) * r);
  for (int b = 0; b < r; ++b) {
    for (int a = 0; a < r; ++a) {
      CMatrix e = CMatrix::Zero(n, n);
      e(s + a, s + b) = 1.0;
      embed.col(static_cast<Eigen::Index>(b) * r + a) = vec(d.from_adapted(e));
    }
  }
  const CMatrix restricted = liou * embed;
  const CMatrix kr = smax > 0.0 ? kernel_basis(restricted, threshold)
                                : CMatrix(CMatrix::Identity(restricted.cols(), restricted.cols()));
  report.r_kernel_dimension = static_cast<int>(kr.cols());
  if (kr.cols() == 0) return report;

  report.has_R_supported_stationary_state = true;
  const CMatrix x = unvec(embed * kr.col(0), n);
  const CMatrix h1 = 0.5 * (x + x.adjoint());
  const CMatrix h2 = (x - x.adjoint()) / (2.0 * kI);
  const CMatrix herm = h1.norm() >= h2.norm() ? h1 : h2;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm);
  const Eigen::VectorXd ev = es.eigenvalues();
  const Eigen::VectorXd pos = ev.cwiseMax(0.0);
  const Eigen::VectorXd neg = (-ev).cwiseMax(0.0);
  const Eigen::VectorXd part = pos.sum() >= neg.sum() ? pos : neg;
  CMatrix state = es.eigenvectors() * (part / part.sum()).asDiagonal() *
                  es.eigenvectors().adjoint();
  state = 0.5 * (state + state.adjoint());

  const double residual = lindblad_rhs(model, state, u).norm();
  const double s_weight = std::abs(trace_product_real(projector(d, 0), state));
  const double scale = std::max(1.0, smax);
  report.conclusive = residual <= std::sqrt(tol) * scale && s_weight <= std::sqrt(tol);
  report.offending_state = QuantumState::trusted(std::move(state));
  return report;
}

}  // namespace qstab
