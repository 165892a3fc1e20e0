#include "qstab/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace qstab {

namespace {

const cplx kI(0.0, 1.0);

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += "; ";
    out += s;
  }
  return out;
}

double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

double model_scale(const ControlModel& model) {
  double s = std::max(spectral_norm(model.H_o), spectral_norm(model.H_f));
  for (const auto& l : model.L) s = std::max(s, spectral_norm(l));
  return s;
}

// Orthonormal basis (columns, standard coordinates) of part `part`.
CMatrix part_basis(const Decomposition& d, std::size_t part) {
  const int off = d.offset(part);
  const int dim = d.dims()[part];
  CMatrix cols = CMatrix::Zero(d.dim(), dim);
  for (int i = 0; i < dim; ++i) {
    CVector e = CVector::Zero(d.dim());
    e(off + i) = 1.0;
    cols.col(i) = d.vector_from_adapted(e);
  }
  return cols;
}

// Orthonormal complement of unit vector `a` inside span(basis); `a` is given
// in the coordinates of `basis`.
CMatrix complement(const CMatrix& basis, const CVector& a) {
  const Eigen::Index z = basis.cols();
  if (z <= 1) return CMatrix(basis.rows(), 0);
  Eigen::HouseholderQR<CMatrix> qr(a);
  const CMatrix q = qr.householderQ() * CMatrix::Identity(z, z);
  return basis * q.rightCols(z - 1);
}

// The recursion shared by the feedback design and the open-loop synthesis.
// `c` spans the current C subspace, `zb` holds an orthonormal basis of the
// current Z subspace; both in standard coordinates.
SynthesisTrace run_chain(Operator h, const std::vector<Operator>& ls, CVector c,
                         CMatrix zb, double threshold, double gain) {
  SynthesisTrace trace;
  trace.H_c = CMatrix::Zero(h.rows(), h.cols());
  trace.final_decomposition.push_back(c);
  int j = 0;
  while (zb.cols() > 0) {
    SynthesisStep step;
    step.index = j;
    CVector coords;  // new C direction in zb coordinates

    bool noise = false;
    for (const auto& l : ls) {
      const Eigen::RowVectorXcd lw = c.adjoint() * l * zb;
      if (lw.norm() > threshold) {
        coords = lw.adjoint();
        step.branch = Branch::NoiseConnected;
        step.coupling = cplx(lw.norm(), 0.0);
        noise = true;
        break;
      }
    }
    if (!noise) {
      auto drift_row = [&](const Operator& ham) {
        Eigen::RowVectorXcd v = -kI * (c.adjoint() * ham * zb);
        for (const auto& l : ls) {
          const CVector y = zb.adjoint() * l * c;
          const CMatrix lz = zb.adjoint() * l * zb;
          v -= 0.5 * (y.adjoint() * lz);
        }
        return v;
      };
      Eigen::RowVectorXcd v = drift_row(h);
      if (v.norm() <= threshold) {
        const CVector z1 = zb.col(0);
        const CMatrix term = gain * (c * z1.adjoint() + z1 * c.adjoint());
        trace.H_c += term;
        h += term;
        v = drift_row(h);
        step.branch = Branch::HamiltonianAdded;
        step.gain = gain;
      } else {
        step.branch = Branch::DriftConnected;
      }
      coords = v.adjoint();
    }
    coords /= coords.norm();
    const CVector next = zb * coords;
    step.direction = next;
    trace.steps.push_back(step);
    trace.final_decomposition.push_back(next);
    zb = complement(zb, coords);
    c = next;
    ++j;
  }
  trace.H_c = 0.5 * (trace.H_c + trace.H_c.adjoint());
  return trace;
}

}  // namespace

AssumptionError::AssumptionError(std::vector<std::string> violations)
    : Error("design assumptions violated: " + join(violations)),
      violations_(std::move(violations)) {}

NotStabilizableError::NotStabilizableError(Stabilizability cls)
    : Error("open-loop synthesis not applicable: " + to_string(cls)), cls_(cls) {}

std::string to_string(Branch b) {
  switch (b) {
    case Branch::NoiseConnected: return "NoiseConnected";
    case Branch::HamiltonianAdded: return "HamiltonianAdded";
    case Branch::DriftConnected: return "DriftConnected";
  }
  return "unknown";
}

Operator enforce_invariance(const ControlModel& model, const Decomposition& decomp,
                            double tol) {
  const Decomposition d = decomp.coarsened();
  if (d.parts() == 1) return CMatrix::Zero(model.dim(), model.dim());
  CMatrix p = -block(model.H_o, d, 0, 1);
  for (const auto& l : model.L) {
    if (block(l, d, 1, 0).norm() > tol) {
      throw NotStabilizableError(Stabilizability::TargetNotInvariantable);
    }
    p -= 0.5 * kI * (block(l, d, 0, 0).adjoint() * block(l, d, 0, 1));
  }
  CMatrix out = embed_block(p, d, 0, 1) + embed_block(p.adjoint(), d, 1, 0);
  return 0.5 * (out + out.adjoint());
}

std::vector<std::string> design_assumption_violations(const ControlModel& model,
                                                      double tol) {
  std::vector<std::string> v;
  const Decomposition d = model.decomp.coarsened();
  if (d.parts() != 2 || d.dims()[0] != 1) {
    v.push_back("assumption 1: target subspace must be one-dimensional");
    return v;
  }
  if (block(model.H_f, d, 0, 1).norm() <= tol) {
    v.push_back("feedback Hamiltonian block H_f,P is zero: no choice of H_o and u can stabilize");
  }
  if (block(model.H_f, d, 0, 0).norm() > tol || block(model.H_f, d, 1, 1).norm() > tol) {
    v.push_back("assumption 2: H_f,S and H_f,R must vanish");
  }
  if (block(model.H_o, d, 0, 1).norm() > tol) {
    v.push_back("H_o,P must vanish for target invariance");
  }
  for (std::size_t k = 0; k < model.L.size(); ++k) {
    if (block(model.L[k], d, 0, 1).norm() > tol || block(model.L[k], d, 1, 0).norm() > tol) {
      v.push_back("L_" + std::to_string(k) + " must be block diagonal (L_P = L_Q = 0)");
    }
  }
  const CMatrix l0 = model.measurement();
  if (!is_normal(l0, tol)) {
    v.push_back("assumption 3: L_0 must be normal");
  } else {
    Eigen::ComplexEigenSolver<CMatrix> es(l0, false);
    const auto& ev = es.eigenvalues();
    const double scale = std::max(1.0, spectral_norm(l0));
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      for (Eigen::Index j = i + 1; j < ev.size(); ++j) gap = std::min(gap, std::abs(ev(i) - ev(j)));
    if (ev.size() > 1 && gap <= 1e-6 * scale) {
      v.push_back("assumption 3: L_0 spectrum is degenerate");
    }
  }
  return v;
}

SynthesisTrace design_procedure(const ControlModel& model, const DesignOptions& opts) {
  if (auto v = design_assumption_violations(model); !v.empty()) {
    throw AssumptionError(std::move(v));
  }
  const Decomposition d = model.decomp.coarsened();
  const CVector s_dir = part_basis(d, 0).col(0);
  const CMatrix r_basis = part_basis(d, 1);

  // H_C = span(H_{f,P}^dag), written in R coordinates.
  CVector a = block(model.H_f, d, 0, 1).adjoint();
  a /= a.norm();
  const CVector c0 = r_basis * a;
  const CMatrix zb = complement(r_basis, a);

  const double threshold = opts.rel_tol * model_scale(model);
  SynthesisTrace trace = run_chain(model.H_o, model.L, c0, zb, threshold, opts.gain);
  trace.final_decomposition.insert(trace.final_decomposition.begin(), s_dir);
  return trace;
}

OpenLoopSynthesis synthesize_open_loop(const ControlModel& model,
                                       const Decomposition& decomp,
                                       const DesignOptions& opts) {
  const auto cls = openloop_stabilizable(model, decomp);
  if (cls != Stabilizability::Stabilizable) throw NotStabilizableError(cls);

  const Decomposition d = decomp.coarsened();
  OpenLoopSynthesis out;
  out.invariance_term = enforce_invariance(model, d);
  out.hamiltonian = out.invariance_term;
  out.trace.H_c = CMatrix::Zero(model.dim(), model.dim());
  if (d.parts() == 1 || d.dims()[1] == 0) return out;

  const double threshold = opts.rel_tol * model_scale(model);
  const CMatrix r_basis = part_basis(d, 1);
  CVector a;
  for (const auto& l : model.L) {
    const CMatrix lp = block(l, d, 0, 1);
    if (lp.norm() > threshold) {
      Eigen::JacobiSVD<CMatrix> svd(lp, Eigen::ComputeFullV);
      a = svd.matrixV().col(0);
      break;
    }
  }
  const CVector c0 = r_basis * a;
  const CMatrix zb = complement(r_basis, a);
  out.trace = run_chain(model.H_o + out.invariance_term, model.L, c0, zb,
                        threshold, opts.gain);
  for (int i = d.dims()[0] - 1; i >= 0; --i) {
    out.trace.final_decomposition.insert(out.trace.final_decomposition.begin(),
                                         part_basis(d, 0).col(i));
  }
  out.hamiltonian += out.trace.H_c;
  return out;
}

SynthesisVerification verify_synthesis(const ControlModel& model,
                                       const Operator& H_extra, double u_bar,
                                       double tol) {
  const ControlModel augmented = model.with_extra_hamiltonian(H_extra);
  SynthesisVerification out;
  out.invariance = check_invariant(augmented, augmented.decomp, 0.0, tol);
  out.stationary = stationary_support(augmented, u_bar, augmented.decomp, tol);
  out.verified = out.invariance.invariant &&
                 !out.stationary.has_R_supported_stationary_state;
  return out;
}

Operator generic_correction(const ControlModel& model, double u_bar,
                            std::uint64_t seed, int attempts, double tol) {
  const Decomposition d = model.decomp.coarsened();
  const int s = d.dims()[0];
  const int r = d.dim() - s;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    CMatrix g(r, r);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) g(i, j) = cplx(normal(rng), normal(rng));
    CMatrix h = 0.5 * (g + g.adjoint());
    const double nrm = spectral_norm(h);
    if (nrm > 0.0) h /= nrm;
    const CMatrix candidate = embed_block(h, d, 1, 1);
    if (verify_synthesis(model, candidate, u_bar, tol).verified) {
      return 0.5 * (candidate + candidate.adjoint());
    }
  }
  throw Error("generic_correction: no verified correction after " +
              std::to_string(attempts) + " attempts");
}

}  // namespace qstab
