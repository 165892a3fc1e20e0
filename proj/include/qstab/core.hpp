#pragma once

// Core numerical types shared by every qstab module: complex dense matrices,
// validated density matrices, orthogonal decompositions of the Hilbert space
// and the block views they induce.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qstab {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Operators (Hamiltonians, noise and measurement operators, projectors) are
/// plain square complex matrices; the role is carried by where they sit in a
/// ControlModel.
using Operator = CMatrix;

inline constexpr double kDefaultTol = 1e-9;

// Error hierarchy. Everything derives from qstab::Error so callers (the CLI in
// particular) can map categories to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DegenerateStateError : public Error {
 public:
  using Error::Error;
};

class InvalidStateError : public Error {
 public:
  using Error::Error;
};

class NumericalAbort : public Error {
 public:
  NumericalAbort(const std::string& what, std::size_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

bool is_hermitian(const CMatrix& x, double tol = kDefaultTol);
bool is_normal(const CMatrix& x, double tol = kDefaultTol);
bool is_unitary(const CMatrix& x, double tol = kDefaultTol);

/// Largest elementwise modulus of X - X^dagger.
double hermiticity_residual(const CMatrix& x);

/// Largest elementwise modulus.
double max_abs(const CMatrix& x);

struct Violation {
  std::string check;
  double magnitude = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool passed() const noexcept { return violations.empty(); }
};

/// Checks Hermiticity, positivity and unit trace of a candidate density
/// matrix, each against `tol`.
ValidationReport validate_state(const CMatrix& rho, double tol = kDefaultTol);

/// A density matrix that passed validation (or was produced by
/// project_to_physical). Immutable.
class QuantumState {
 public:
  explicit QuantumState(CMatrix rho, double tol = kDefaultTol);

  /// Wraps a matrix known to be physical without re-validating it.
  static QuantumState trusted(CMatrix rho);

  const CMatrix& rho() const noexcept { return rho_; }
  Eigen::Index dim() const noexcept { return rho_.rows(); }
  double purity() const;

 private:
  struct TrustedTag {};
  QuantumState(CMatrix rho, TrustedTag) : rho_(std::move(rho)) {}
  CMatrix rho_;
};

/// Orthogonal split H = H_0 (+) H_1 (+) ... of the Hilbert space. Part 0 is
/// the target subspace S; the remaining parts make up R (or C, Z in the
/// three-part refinement). The optional basis is a unitary whose columns are
/// the adapted basis vectors written in the standard basis.
class Decomposition {
 public:
  Decomposition() = default;
  explicit Decomposition(std::vector<int> dims,
                         std::optional<CMatrix> basis = std::nullopt,
                         double tol = kDefaultTol);

  const std::vector<int>& dims() const noexcept { return dims_; }
  const std::optional<CMatrix>& basis() const noexcept { return basis_; }
  int dim() const noexcept { return dim_; }
  std::size_t parts() const noexcept { return dims_.size(); }
  int offset(std::size_t part) const;

  /// Express X in the adapted basis (U^dagger X U), identity when no basis.
  CMatrix to_adapted(const CMatrix& x) const;
  /// Inverse of to_adapted.
  CMatrix from_adapted(const CMatrix& x) const;
  CVector vector_to_adapted(const CVector& v) const;
  CVector vector_from_adapted(const CVector& v) const;

  /// Same subspaces, with the parts listed in the given order. Used to swap
  /// the roles of S and R.
  Decomposition reordered(const std::vector<std::size_t>& order) const;

  /// Merge parts 1.. into a single R, giving an S (+) R view.
  Decomposition coarsened() const;

 private:
  std::vector<int> dims_;
  std::vector<int> offsets_;
  std::optional<CMatrix> basis_;
  int dim_ = 0;
};

/// Block (row_part, col_part) of X in the decomposition-adapted basis. With a
/// two-part decomposition (0,1) is the P block and (1,0) the Q block.
CMatrix block(const CMatrix& x, const Decomposition& d, std::size_t row_part,
              std::size_t col_part);

/// Inverse of block(): place a block into an otherwise zero matrix (adapted
/// basis) and rotate back to the standard basis.
CMatrix embed_block(const CMatrix& blk, const Decomposition& d,
                    std::size_t row_part, std::size_t col_part);

Operator projector(const Decomposition& d, std::size_t part);

/// Repairs numerical drift: Hermitize, clip negative eigenvalues, rescale to
/// unit trace. Throws DegenerateStateError if nothing positive survives.
QuantumState project_to_physical(const CMatrix& x);

/// Allocation-free variant of project_to_physical for integrator inner loops.
/// Reuses its eigen-solver workspace between calls.
class PhysicalProjector {
 public:
  explicit PhysicalProjector(Eigen::Index dim);
  /// Projects `x` in place. Returns false when the state degenerated.
  bool apply(CMatrix& x);

 private:
  Eigen::LLT<CMatrix> llt_;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig_;
  Eigen::VectorXd clipped_;
  CMatrix scratch_;
};

/// Outer product v v^dagger.
CMatrix outer(const CVector& v);

/// Real part of tr(A B) without forming the product.
double trace_product_real(const CMatrix& a, const CMatrix& b);
cplx trace_product(const CMatrix& a, const CMatrix& b);

}  // namespace qstab
