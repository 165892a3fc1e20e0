#include "qstab/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qstab {

namespace {

void require_square(const CMatrix& x, const char* what) {
  if (x.rows() != x.cols()) {
    throw DimensionError(std::string(what) + ": matrix is " +
                         std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()) + ", expected square");
  }
}

}  // namespace

double max_abs(const CMatrix& x) {
  return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
}

double hermiticity_residual(const CMatrix& x) {
  return max_abs(x - x.adjoint());
}

bool is_hermitian(const CMatrix& x, double tol) {
  return x.rows() == x.cols() && hermiticity_residual(x) <= tol;
}

bool is_normal(const CMatrix& x, double tol) {
  if (x.rows() != x.cols()) return false;
  return max_abs(x * x.adjoint() - x.adjoint() * x) <= tol;
}

bool is_unitary(const CMatrix& x, double tol) {
  if (x.rows() != x.cols()) return false;
  return max_abs(x.adjoint() * x - CMatrix::Identity(x.rows(), x.cols())) <=
         tol;
}

ValidationReport validate_state(const CMatrix& rho, double tol) {
  require_square(rho, "validate_state");
  ValidationReport report;
  const double herm = hermiticity_residual(rho);
  if (herm > tol) report.violations.push_back({"hermitian", herm});

  const double trace_err = std::abs(rho.trace() - cplx(1.0, 0.0));
  if (trace_err > tol) report.violations.push_back({"trace", trace_err});

  if (rho.size() > 0) {
    const CMatrix h = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin < -tol) report.violations.push_back({"psd", -lmin});
  }
  return report;
}

QuantumState::QuantumState(CMatrix rho, double tol) : rho_(std::move(rho)) {
  const auto report = validate_state(rho_, tol);
  if (!report.passed()) {
    std::string msg = "invalid density matrix:";
    for (const auto& v : report.violations) {
      msg += " " + v.check + "=" + std::to_string(v.magnitude);
    }
    throw InvalidStateError(msg);
  }
}

QuantumState QuantumState::trusted(CMatrix rho) {
  return QuantumState(std::move(rho), TrustedTag{});
}

double QuantumState::purity() const { return trace_product_real(rho_, rho_); }

Decomposition::Decomposition(std::vector<int> dims,
                             std::optional<CMatrix> basis, double tol)
    : dims_(std::move(dims)), basis_(std::move(basis)) {
  if (dims_.empty()) throw DimensionError("decomposition needs at least one part");
  offsets_.reserve(dims_.size());
  int acc = 0;
  for (int d : dims_) {
    if (d < 0) throw DimensionError("decomposition part dimension is negative");
    offsets_.push_back(acc);
    acc += d;
  }
  if (acc <= 0) throw DimensionError("decomposition has zero total dimension");
  dim_ = acc;
  if (basis_) {
    if (basis_->rows() != dim_ || basis_->cols() != dim_) {
      throw DimensionError("decomposition basis must be " +
                           std::to_string(dim_) + "x" + std::to_string(dim_));
    }
    if (!is_unitary(*basis_, tol)) {
      throw DimensionError("decomposition basis is not unitary");
    }
  }
}

int Decomposition::offset(std::size_t part) const {
  if (part >= dims_.size()) {
    throw DimensionError("decomposition part index " + std::to_string(part) +
                         " out of range");
  }
  return offsets_[part];
}

CMatrix Decomposition::to_adapted(const CMatrix& x) const {
  if (x.rows() != dim_ || x.cols() != dim_) {
    throw DimensionError("operator dimension does not match decomposition");
  }
  if (!basis_) return x;
  return basis_->adjoint() * x * (*basis_);
}

CMatrix Decomposition::from_adapted(const CMatrix& x) const {
  if (x.rows() != dim_ || x.cols() != dim_) {
    throw DimensionError("operator dimension does not match decomposition");
  }
  if (!basis_) return x;
  return (*basis_) * x * basis_->adjoint();
}

CVector Decomposition::vector_to_adapted(const CVector& v) const {
  if (v.size() != dim_) throw DimensionError("vector dimension mismatch");
  if (!basis_) return v;
  return basis_->adjoint() * v;
}

CVector Decomposition::vector_from_adapted(const CVector& v) const {
  if (v.size() != dim_) throw DimensionError("vector dimension mismatch");
  if (!basis_) return v;
  return (*basis_) * v;
}

Decomposition Decomposition::reordered(
    const std::vector<std::size_t>& order) const {
  if (order.size() != dims_.size()) {
    throw DimensionError("reorder must list every part exactly once");
  }
  std::vector<bool> seen(dims_.size(), false);
  std::vector<int> new_dims;
  CMatrix perm = CMatrix::Zero(dim_, dim_);
  int col = 0;
  for (std::size_t p : order) {
    if (p >= dims_.size() || seen[p]) {
      throw DimensionError("reorder must list every part exactly once");
    }
    seen[p] = true;
    new_dims.push_back(dims_[p]);
    for (int i = 0; i < dims_[p]; ++i) perm(offsets_[p] + i, col++) = 1.0;
  }
  CMatrix new_basis = basis_ ? CMatrix((*basis_) * perm) : perm;
  return Decomposition(std::move(new_dims), std::move(new_basis));
}

Decomposition Decomposition::coarsened() const {
  if (dims_.size() <= 2) return *this;
  const int rest = dim_ - dims_[0];
  return Decomposition({dims_[0], rest}, basis_);
}

CMatrix block(const CMatrix& x, const Decomposition& d, std::size_t row_part,
              std::size_t col_part) {
  require_square(x, "block");
  const int r0 = d.offset(row_part);
  const int c0 = d.offset(col_part);
  const CMatrix adapted = d.to_adapted(x);
  return adapted.block(r0, c0, d.dims()[row_part], d.dims()[col_part]);
}

CMatrix embed_block(const CMatrix& blk, const Decomposition& d,
                    std::size_t row_part, std::size_t col_part) {
  const int r0 = d.offset(row_part);
  const int c0 = d.offset(col_part);
  if (blk.rows() != d.dims()[row_part] || blk.cols() != d.dims()[col_part]) {
    throw DimensionError("embed_block: block shape does not match parts");
  }
  CMatrix full = CMatrix::Zero(d.dim(), d.dim());
  full.block(r0, c0, blk.rows(), blk.cols()) = blk;
  return d.from_adapted(full);
}

Operator projector(const Decomposition& d, std::size_t part) {
  const int off = d.offset(part);
  CMatrix p = CMatrix::Zero(d.dim(), d.dim());
  for (int i = 0; i < d.dims()[part]; ++i) p(off + i, off + i) = 1.0;
  return d.from_adapted(p);
}

PhysicalProjector::PhysicalProjector(Eigen::Index dim)
    : llt_(dim), eig_(dim), clipped_(dim), scratch_(dim, dim) {}

bool PhysicalProjector::apply(CMatrix& x) {
  scratch_ = x.adjoint();
  x += scratch_;
  x *= 0.5;
  // Positive definite after Hermitization: clipping is a no-op.
  llt_.compute(x);
  if (llt_.info() == Eigen::Success) {
    const double tr = x.trace().real();
    if (!(tr > 0.0)) return false;
    x /= tr;
    return true;
  }
  eig_.compute(x);
  if (eig_.info() != Eigen::Success) return false;
  clipped_ = eig_.eigenvalues().cwiseMax(0.0);
  const double total = clipped_.sum();
  const double scale = std::max(1.0, eig_.eigenvalues().cwiseAbs().maxCoeff());
  if (!(total > 1e-14 * scale)) return false;
  clipped_ /= total;
  const auto& v = eig_.eigenvectors();
  scratch_.noalias() = v * clipped_.asDiagonal() * v.adjoint();
  x = scratch_;
  scratch_ = x.adjoint();
  x += scratch_;
  x *= 0.5;
  return true;
}

QuantumState project_to_physical(const CMatrix& x) {
  require_square(x, "project_to_physical");
  if (x.size() == 0) throw DimensionError("project_to_physical: empty matrix");
  CMatrix work = x;
  PhysicalProjector projector(x.rows());
  if (!projector.apply(work)) {
    throw DegenerateStateError(
        "project_to_physical: no positive weight left after clipping");
  }
  return QuantumState::trusted(std::move(work));
}

CMatrix outer(const CVector& v) { return v * v.adjoint(); }

cplx trace_product(const CMatrix& a, const CMatrix& b) {
  // tr(AB) = sum_ij A_ij B_ji
  return a.cwiseProduct(b.transpose()).sum();
}

double trace_product_real(const CMatrix& a, const CMatrix& b) {
  return trace_product(a, b).real();
}

}  // namespace qstab
