#pragma once

// Random operators, states and structured model families shared by the unit
// and acceptance tests.

#include "qstab/core.hpp"
#include "qstab/superop.hpp"

#include <cmath>
#include <random>

namespace qstab::testing {

using Rng = std::mt19937_64;

inline const cplx I1(0.0, 1.0);

inline CMatrix sx() { CMatrix m(2, 2); m << 0, 1, 1, 0; return m; }
inline CMatrix sy() { CMatrix m(2, 2); m << 0, -I1, I1, 0; return m; }
inline CMatrix sz() { CMatrix m(2, 2); m << 1, 0, 0, -1; return m; }
// |0><1| with |0> the first basis vector.
inline CMatrix sminus() { CMatrix m(2, 2); m << 0, 1, 0, 0; return m; }
inline CMatrix splus() { return sminus().adjoint(); }

inline CMatrix diag2(double a, double b) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

inline CMatrix plus_state() { return CMatrix::Constant(2, 2, 0.5); }

inline CMatrix random_complex(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * cplx(n(rng), n(rng));
  return m;
}

inline CMatrix random_hermitian(Rng& rng, Eigen::Index n, double scale = 1.0) {
  const CMatrix g = random_complex(rng, n, n, scale);
  return 0.5 * (g + g.adjoint());
}

inline CMatrix random_unitary(Rng& rng, Eigen::Index n) {
  Eigen::HouseholderQR<CMatrix> qr(random_complex(rng, n, n));
  return qr.householderQ() * CMatrix::Identity(n, n);
}

inline CVector random_unit_vector(Rng& rng, Eigen::Index n) {
  CVector v = random_complex(rng, n, 1);
  return v / v.norm();
}

/// Full-rank random density matrix (Ginibre).
inline CMatrix random_state(Rng& rng, Eigen::Index n) {
  const CMatrix g = random_complex(rng, n, n);
  CMatrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

/// Random density matrix of rank <= k.
inline CMatrix random_state_rank(Rng& rng, Eigen::Index n, Eigen::Index k) {
  const CMatrix g = random_complex(rng, n, k);
  CMatrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

/// Random state supported on the first s basis vectors.
inline CMatrix random_state_on_first(Rng& rng, Eigen::Index n, Eigen::Index s) {
  CMatrix rho = CMatrix::Zero(n, n);
  rho.topLeftCorner(s, s) = random_state(rng, s);
  return rho;
}

inline double uniform(Rng& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

inline int uniform_int(Rng& rng, int a, int b) {
  return std::uniform_int_distribution<int>(a, b)(rng);
}

/// Generic model with 1..3 channels and random eta.
inline ControlModel random_model(Rng& rng, int n, int s = 1) {
  std::vector<Operator> ls;
  const int k = uniform_int(rng, 1, 3);
  for (int i = 0; i < k; ++i) ls.push_back(random_complex(rng, n, n, 0.5));
  return make_model(random_hermitian(rng, n), random_hermitian(rng, n), ls,
                    uniform(rng, 0.2, 1.0), Decomposition({s, n - s}));
}

/// Model satisfying the feedback-design hypotheses with target e_0:
/// block-diagonal H_o and L_k, normal non-degenerate L_0 commuting with the
/// target, H_f coupling e_0 to R only. `diagonal` picks the structured
/// variant (diagonal H_o and L_k, H_f coupling e_0 to e_1 only).
inline ControlModel feedback_class_model(Rng& rng, int n, bool diagonal) {
  const int r = n - 1;
  CMatrix h_o = CMatrix::Zero(n, n);
  h_o(0, 0) = uniform(rng, -1.0, 1.0);
  CMatrix h_f = CMatrix::Zero(n, n);
  std::vector<Operator> ls;
  if (diagonal) {
    for (int i = 1; i < n; ++i) h_o(i, i) = static_cast<double>(i) + uniform(rng, 0.0, 0.5);
    h_f(0, 1) = 1.0;
    h_f(1, 0) = 1.0;
    CMatrix l0 = CMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) l0(i, i) = static_cast<double>(i) - 0.5 * n + uniform(rng, 0.0, 0.3);
    ls.push_back(l0);
  } else {
    h_o.bottomRightCorner(r, r) = random_hermitian(rng, r);
    const CVector c = random_complex(rng, r, 1);
    h_f.block(0, 1, 1, r) = c.transpose();
    h_f.block(1, 0, r, 1) = c.conjugate();
    // Normal L_0 with distinct eigenvalues, block diagonal.
    CMatrix u = CMatrix::Identity(n, n);
    u.bottomRightCorner(r, r) = random_unitary(rng, r);
    CMatrix d = CMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) d(i, i) = cplx(static_cast<double>(i) - 0.5 * n, uniform(rng, -0.3, 0.3));
    ls.push_back(u * d * u.adjoint());
    if (uniform_int(rng, 0, 1) == 1) {
      CMatrix l1 = CMatrix::Zero(n, n);
      l1(0, 0) = cplx(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5));
      l1.bottomRightCorner(r, r) = random_complex(rng, r, r, 0.4);
      ls.push_back(l1);
    }
  }
  return make_model(h_o, h_f, ls, uniform(rng, 0.5, 1.0), Decomposition({1, r}));
}

/// Open-loop stabilizable model: every L_Q = 0, L_0 has a nonzero P block.
inline ControlModel openloop_class_model(Rng& rng, int n, int s) {
  const int r = n - s;
  std::vector<Operator> ls;
  const int k = uniform_int(rng, 1, 2);
  for (int i = 0; i < k; ++i) {
    CMatrix l = random_complex(rng, n, n, 0.5);
    l.bottomLeftCorner(r, s).setZero();
    ls.push_back(l);
  }
  return make_model(random_hermitian(rng, n), random_hermitian(rng, n), ls,
                    uniform(rng, 0.3, 1.0), Decomposition({s, r}));
}

}  // namespace qstab::testing
