#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rigoletto/errors.hpp"
#include "rigoletto/matrix.hpp"

namespace rigoletto {

enum class MetricKind { Airm, LogEuclidean };

const char* metric_name(MetricKind m);

/// Coordinates of a tangent-space image at a base point of dimension n;
/// coords has length n(n+1)/2 and its 2-norm equals the Frobenius norm of
/// the underlying symmetric matrix (off-diagonals carry a sqrt(2) weight).
struct TangentVector {
  int base_dim = 0;
  Eigen::VectorXd coords;
};

/// Iterative mean failed to reach tolerance; carries the last iterate.
class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& message, Eigen::MatrixXd last_iterate,
                     double residual)
      : Error(message),
        last_iterate_(std::move(last_iterate)),
        residual_(residual) {}
  const Eigen::MatrixXd& last_iterate() const { return last_iterate_; }
  double residual() const { return residual_; }

 private:
  Eigen::MatrixXd last_iterate_;
  double residual_;
};

/// Affine-invariant distance ||log(A^{-1/2} B A^{-1/2})||_F.
double dist_airm(const SpdMatrix& a, const SpdMatrix& b);

/// Log-Euclidean distance ||log A - log B||_F.
double dist_logeuclid(const SpdMatrix& a, const SpdMatrix& b);

double dist(const SpdMatrix& a, const SpdMatrix& b, MetricKind metric);

/// Closed-form log-Euclidean mean exp(mean(log X_i)).
SpdMatrix mean_logeuclid(std::span<const SpdMatrix> set);

/// Affine-invariant Frechet mean by fixed-point iteration from the
/// arithmetic mean; converges when the Riemannian gradient norm drops
/// below tol, else throws ConvergenceFailure.
SpdMatrix mean_airm(std::span<const SpdMatrix> set, double tol = 1e-8,
                    int max_iter = 50);

SpdMatrix karcher_mean(std::span<const SpdMatrix> set, MetricKind metric);

/// Congruence-transports each matrix by E = mean_train^{1/2} mean_test^{-1/2},
/// which maps mean_test exactly onto mean_train.
std::vector<SpdMatrix> transport_to_mean(std::span<const SpdMatrix> test_set,
                                         const SpdMatrix& mean_train,
                                         const SpdMatrix& mean_test);

TangentVector tangent_map(const SpdMatrix& x, const SpdMatrix& base);
SpdMatrix tangent_unmap(const TangentVector& t, const SpdMatrix& base);

/// Vectorization order used by tangent_map: upper triangle, row major.
Eigen::VectorXd vectorize_symmetric(const SymmetricMatrix& s);
SymmetricMatrix unvectorize_symmetric(const Eigen::VectorXd& coords, int n);

}  // namespace rigoletto
