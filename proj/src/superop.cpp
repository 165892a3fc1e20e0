#include "qstab/superop.hpp"

#include <cmath>
#include <string>

namespace qstab {

namespace {

const cplx kI(0.0, 1.0);

void require_same_dim(const CMatrix& a, const CMatrix& b, const char* what) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw DimensionError(std::string(what) + ": dimension mismatch");
  }
}

// Kronecker product for the vectorized generator.
CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace

void ControlModel::validate(double tol) const {
  const Eigen::Index n = H_o.rows();
  if (n == 0 || H_o.cols() != n) throw DimensionError("H_o must be square and non-empty");
  if (H_f.rows() != n || H_f.cols() != n) throw DimensionError("H_f dimension mismatch");
  for (std::size_t k = 0; k < L.size(); ++k) {
    if (L[k].rows() != n || L[k].cols() != n) {
      throw DimensionError("L[" + std::to_string(k) + "] dimension mismatch");
    }
  }
  if (decomp.dim() != n) throw DimensionError("decomposition dimension mismatch");
  if (!is_hermitian(H_o, tol)) throw DimensionError("H_o is not Hermitian");
  if (!is_hermitian(H_f, tol)) throw DimensionError("H_f is not Hermitian");
  if (!(eta >= 0.0 && eta <= 1.0)) throw DimensionError("eta must lie in [0, 1]");
  if (rho_d) {
    const CMatrix& r = rho_d->rho();
    if (r.rows() != n) throw DimensionError("rho_d dimension mismatch");
    if (std::abs(trace_product_real(r, r) - 1.0) > tol) {
      throw InvalidStateError("rho_d is not pure");
    }
    const CMatrix pr = projector(decomp, 0);
    if (std::abs(trace_product_real(pr, r) - 1.0) > tol) {
      throw InvalidStateError("rho_d is not supported on part 0");
    }
  }
}

Operator ControlModel::hamiltonian(double u) const { return H_o + u * H_f; }

Operator ControlModel::measurement() const {
  if (L.empty()) return CMatrix::Zero(H_o.rows(), H_o.cols());
  return L.front();
}

bool ControlModel::has_target() const {
  return rho_d.has_value() || decomp.dims().front() == 1;
}

CMatrix ControlModel::target() const {
  if (rho_d) return rho_d->rho();
  if (decomp.dims().front() == 1) return projector(decomp, 0);
  throw InvalidStateError("model has no pure target state");
}

ControlModel ControlModel::with_extra_hamiltonian(const Operator& extra) const {
  if (extra.rows() != H_o.rows() || extra.cols() != H_o.cols()) {
    throw DimensionError("extra Hamiltonian dimension mismatch");
  }
  ControlModel out = *this;
  out.H_o += extra;
  return out;
}

ControlModel make_model(Operator H_o, Operator H_f, std::vector<Operator> L,
                        double eta, Decomposition decomp,
                        std::optional<QuantumState> rho_d) {
  const Eigen::Index n = decomp.dim();
  ControlModel m;
  m.H_o = H_o.size() == 0 ? CMatrix::Zero(n, n) : std::move(H_o);
  m.H_f = H_f.size() == 0 ? CMatrix::Zero(n, n) : std::move(H_f);
  m.L = std::move(L);
  m.eta = eta;
  m.decomp = std::move(decomp);
  m.rho_d = std::move(rho_d);
  m.validate();
  return m;
}

CMatrix hamiltonian_part(const Operator& H, const CMatrix& rho) {
  require_same_dim(H, rho, "hamiltonian_part");
  return -kI * (H * rho - rho * H);
}

CMatrix dissipator(const Operator& L, const CMatrix& rho) {
  require_same_dim(L, rho, "dissipator");
  const CMatrix ldl = L.adjoint() * L;
  return L * rho * L.adjoint() - 0.5 * (ldl * rho + rho * ldl);
}

CMatrix diffusion(const Operator& L0, const CMatrix& rho, double eta) {
  require_same_dim(L0, rho, "diffusion");
  const CMatrix lr = L0 * rho;
  const CMatrix rl = rho * L0.adjoint();
  const cplx expect = lr.trace() + rl.trace();
  return std::sqrt(eta) * (lr + rl - expect * rho);
}

CMatrix lindblad_rhs(const ControlModel& model, const CMatrix& rho, double u) {
  CMatrix out = hamiltonian_part(model.hamiltonian(u), rho);
  for (const auto& l : model.L) out += dissipator(l, rho);
  return out;
}

CMatrix ito_drift_matrix(const ControlModel& model, double u) {
  CMatrix a = -kI * model.hamiltonian(u);
  for (const auto& l : model.L) a -= 0.5 * (l.adjoint() * l);
  return a;
}

CMatrix stratonovich_drift_matrix(const ControlModel& model, double u) {
  const CMatrix l0 = model.measurement();
  return ito_drift_matrix(model, u) - 0.5 * (l0 * l0);
}

double generator_linear(const ControlModel& model, const CMatrix& X,
                        const CMatrix& rho, double u) {
  require_same_dim(X, rho, "generator_linear");
  return trace_product_real(X, lindblad_rhs(model, rho, u));
}

double generator_quadratic_fidelity(const ControlModel& model,
                                    const CMatrix& rho, double u) {
  const CMatrix target = model.target();
  require_same_dim(target, rho, "generator_quadratic_fidelity");
  const double fid = trace_product_real(target, rho);
  const double drift = trace_product_real(target, lindblad_rhs(model, rho, u));
  const double diff = trace_product_real(target, sme_diffusion(model, rho));
  return -2.0 * drift * fid - diff * diff;
}

CMatrix liouvillian_matrix(const ControlModel& model, double u) {
  const Eigen::Index n = model.dim();
  const CMatrix id = CMatrix::Identity(n, n);
  const CMatrix h = model.hamiltonian(u);
  // vec(A X B) = (B^T (x) A) vec(X)
  CMatrix out = -kI * (kron(id, h) - kron(h.transpose(), id));
  for (const auto& l : model.L) {
    const CMatrix ldl = l.adjoint() * l;
    out += kron(l.conjugate(), l);
    out -= 0.5 * kron(id, ldl);
    out -= 0.5 * kron(ldl.transpose(), id);
  }
  return out;
}

CVector vec(const CMatrix& x) {
  return Eigen::Map<const CVector>(x.data(), x.size());
}

CMatrix unvec(const CVector& v, Eigen::Index dim) {
  if (v.size() != dim * dim) throw DimensionError("unvec: size mismatch");
  return Eigen::Map<const CMatrix>(v.data(), dim, dim);
}

}  // namespace qstab
