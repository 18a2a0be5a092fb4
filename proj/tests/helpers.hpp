#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "rigoletto/matrix.hpp"
#include "rigoletto/rng.hpp"

namespace rigoletto::testing {

inline Eigen::MatrixXd random_gaussian(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
  return m;
}

inline SymmetricMatrix random_symmetric(Rng& rng, int n, double scale = 1.0) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = scale * rng.uniform(-1.0, 1.0);
  return SymmetricMatrix::from_exact(m);
}

inline Eigen::MatrixXd random_orthogonal(Rng& rng, int n) {
  const Eigen::MatrixXd g = random_gaussian(rng, n, n);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  // Pin the sign convention so the draw is unique.
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i)
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  return q;
}

/// SPD matrix with eigenvalues exp(U(-log_spread, log_spread)).
inline SpdMatrix random_spd(Rng& rng, int n, double log_spread = 1.5) {
  const Eigen::MatrixXd q = random_orthogonal(rng, n);
  Eigen::VectorXd eigs(n);
  for (int i = 0; i < n; ++i) eigs(i) = std::exp(rng.uniform(-log_spread, log_spread));
  return SpdMatrix(SymmetricMatrix::symmetrized(q * eigs.asDiagonal() * q.transpose()));
}

inline SpdMatrix diag_spd(const Eigen::VectorXd& d) {
  Eigen::MatrixXd m = d.asDiagonal();
  return SpdMatrix(SymmetricMatrix::from_exact(m));
}

/// O(N^2) reference DFT used as the spectral oracle.
inline std::vector<std::complex<double>> naive_dft(
    const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = -2.0 * M_PI * static_cast<double>(k * t % n) /
                           static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

inline double rel_frob_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  const double denom = want.norm();
  return (got - want).norm() / (denom > 0.0 ? denom : 1.0);
}

}  // namespace rigoletto::testing
