#pragma once

#include <Eigen/Dense>

#include "rigoletto/errors.hpp"

namespace rigoletto {

// Dense real symmetric matrix. Storage keeps entries (i,j) and (j,i)
// bit-identical: mutation goes through set(), and factory functions mirror
// the lower triangle into the upper one.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(int n);

  /// Wraps a matrix that is already exactly symmetric; throws otherwise.
  static SymmetricMatrix from_exact(const Eigen::MatrixXd& m);

  /// Symmetrizes (A + A^T)/2 and mirrors so storage is exact.
  static SymmetricMatrix symmetrized(const Eigen::MatrixXd& m);

  int dim() const { return static_cast<int>(values_.rows()); }
  double operator()(int i, int j) const { return values_(i, j); }
  void set(int i, int j, double v) {
    values_(i, j) = v;
    values_(j, i) = v;
  }

  const Eigen::MatrixXd& values() const { return values_; }
  double trace() const { return values_.trace(); }
  double frobenius_norm() const { return values_.norm(); }
  bool all_finite() const { return values_.allFinite(); }

 private:
  Eigen::MatrixXd values_;
};

/// Eigendecomposition of a symmetric matrix: ascending eigenvalues and an
/// orthogonal matrix whose columns are the matching eigenvectors.
struct EigenPair {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

// Symmetric matrix certified positive definite at construction. The stored
// bound is a floating-point-safe lower bound on the spectrum; construction
// throws InvalidInput when positivity cannot be certified.
class SpdMatrix {
 public:
  explicit SpdMatrix(SymmetricMatrix base);

  int dim() const { return base_.dim(); }
  const SymmetricMatrix& base() const { return base_; }
  const Eigen::MatrixXd& values() const { return base_.values(); }
  double operator()(int i, int j) const { return base_(i, j); }
  double min_eig_bound() const { return min_eig_bound_; }
  double trace() const { return base_.trace(); }

 private:
  SymmetricMatrix base_;
  double min_eig_bound_;
};

EigenPair sym_eig(const SymmetricMatrix& s);

SymmetricMatrix matrix_log(const SpdMatrix& a);
SpdMatrix matrix_exp(const SymmetricMatrix& s);
SpdMatrix matrix_power(const SpdMatrix& a, double p);

/// Frobenius-nearest matrix with spectrum floored at eps (eigenvalue clamp).
/// Inputs already satisfying the floor are returned unchanged.
SpdMatrix nearest_spd(const SymmetricMatrix& s, double eps);

/// Default spectral floor for nearest_spd: 1e-10 * tr(S)/n.
double default_spd_floor(const SymmetricMatrix& s);

/// (1-gamma)*C + gamma*(tr(C)/n)*I; preserves the trace.
SpdMatrix shrink_covariance(const SymmetricMatrix& c, double gamma);

}  // namespace rigoletto
