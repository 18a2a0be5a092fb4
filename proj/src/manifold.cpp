#include "rigoletto/manifold.hpp"

#include <cmath>

namespace rigoletto {

namespace {

void require_same_dim(const SpdMatrix& a, const SpdMatrix& b, const char* where) {
  if (a.dim() != b.dim())
    throw InvalidInput(std::string(where) + ": dimension mismatch");
}

// log of the generalized spectrum of (B, A): eigenvalues of A^{-1/2} B A^{-1/2}.
Eigen::VectorXd log_gen_eigs(const SpdMatrix& a, const SpdMatrix& b) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      b.values(), a.values(), Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success)
    throw NumericFailure("generalized eigensolver did not converge");
  return solver.eigenvalues().array().log();
}

}  // namespace

const char* metric_name(MetricKind m) {
  return m == MetricKind::Airm ? "airm" : "logeuclid";
}

double dist_airm(const SpdMatrix& a, const SpdMatrix& b) {
  require_same_dim(a, b, "dist_airm");
  return log_gen_eigs(a, b).norm();
}

double dist_logeuclid(const SpdMatrix& a, const SpdMatrix& b) {
  require_same_dim(a, b, "dist_logeuclid");
  return (matrix_log(a).values() - matrix_log(b).values()).norm();
}

double dist(const SpdMatrix& a, const SpdMatrix& b, MetricKind metric) {
  return metric == MetricKind::Airm ? dist_airm(a, b) : dist_logeuclid(a, b);
}

SpdMatrix mean_logeuclid(std::span<const SpdMatrix> set) {
  if (set.empty()) throw InvalidInput("mean_logeuclid: empty set");
  const int n = set[0].dim();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  for (const SpdMatrix& x : set) {
    if (x.dim() != n) throw InvalidInput("mean_logeuclid: dimension mismatch");
    acc += matrix_log(x).values();
  }
  acc /= static_cast<double>(set.size());
  return matrix_exp(SymmetricMatrix::symmetrized(acc));
}

SpdMatrix mean_airm(std::span<const SpdMatrix> set, double tol, int max_iter) {
  if (set.empty()) throw InvalidInput("mean_airm: empty set");
  if (!(tol > 0.0)) throw InvalidInput("mean_airm: tol must be positive");
  const int n = set[0].dim();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  for (const SpdMatrix& x : set) {
    if (x.dim() != n) throw InvalidInput("mean_airm: dimension mismatch");
    acc += x.values();
  }
  SpdMatrix mean(SymmetricMatrix::symmetrized(acc / static_cast<double>(set.size())));

  double residual = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    const SpdMatrix root = matrix_power(mean, 0.5);
    const SpdMatrix inv_root = matrix_power(mean, -0.5);
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, n);
    for (const SpdMatrix& x : set) {
      const Eigen::MatrixXd whitened =
          inv_root.values() * x.values() * inv_root.values();
      grad += matrix_log(SpdMatrix(SymmetricMatrix::symmetrized(whitened))).values();
    }
    grad /= static_cast<double>(set.size());
    residual = grad.norm();
    if (residual <= tol) return mean;
    const SpdMatrix step = matrix_exp(SymmetricMatrix::symmetrized(grad));
    mean = SpdMatrix(SymmetricMatrix::symmetrized(
        root.values() * step.values() * root.values()));
  }
  // Check the gradient at the final iterate before giving up.
  {
    const SpdMatrix inv_root = matrix_power(mean, -0.5);
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, n);
    for (const SpdMatrix& x : set) {
      const Eigen::MatrixXd whitened =
          inv_root.values() * x.values() * inv_root.values();
      grad += matrix_log(SpdMatrix(SymmetricMatrix::symmetrized(whitened))).values();
    }
    grad /= static_cast<double>(set.size());
    residual = grad.norm();
    if (residual <= tol) return mean;
  }
  throw ConvergenceFailure("mean_airm: no convergence after " +
                               std::to_string(max_iter) + " iterations",
                           mean.values(), residual);
}

SpdMatrix karcher_mean(std::span<const SpdMatrix> set, MetricKind metric) {
  return metric == MetricKind::Airm ? mean_airm(set) : mean_logeuclid(set);
}

std::vector<SpdMatrix> transport_to_mean(std::span<const SpdMatrix> test_set,
                                         const SpdMatrix& mean_train,
                                         const SpdMatrix& mean_test) {
  require_same_dim(mean_train, mean_test, "transport_to_mean");
  const Eigen::MatrixXd e =
      matrix_power(mean_train, 0.5).values() * matrix_power(mean_test, -0.5).values();
  std::vector<SpdMatrix> out;
  out.reserve(test_set.size());
  for (const SpdMatrix& x : test_set) {
    if (x.dim() != mean_train.dim())
      throw InvalidInput("transport_to_mean: dimension mismatch");
    out.emplace_back(SymmetricMatrix::symmetrized(e * x.values() * e.transpose()));
  }
  return out;
}

Eigen::VectorXd vectorize_symmetric(const SymmetricMatrix& s) {
  const int n = s.dim();
  Eigen::VectorXd coords(n * (n + 1) / 2);
  const double root2 = std::sqrt(2.0);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    coords(k++) = s(i, i);
    for (int j = i + 1; j < n; ++j) coords(k++) = root2 * s(i, j);
  }
  return coords;
}

SymmetricMatrix unvectorize_symmetric(const Eigen::VectorXd& coords, int n) {
  if (coords.size() != n * (n + 1) / 2)
    throw InvalidInput("unvectorize_symmetric: coordinate length mismatch");
  SymmetricMatrix s(n);
  const double inv_root2 = 1.0 / std::sqrt(2.0);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    s.set(i, i, coords(k++));
    for (int j = i + 1; j < n; ++j) s.set(i, j, inv_root2 * coords(k++));
  }
  return s;
}

TangentVector tangent_map(const SpdMatrix& x, const SpdMatrix& base) {
  require_same_dim(x, base, "tangent_map");
  const SpdMatrix inv_root = matrix_power(base, -0.5);
  const Eigen::MatrixXd whitened =
      inv_root.values() * x.values() * inv_root.values();
  const SymmetricMatrix s =
      matrix_log(SpdMatrix(SymmetricMatrix::symmetrized(whitened)));
  return TangentVector{base.dim(), vectorize_symmetric(s)};
}

SpdMatrix tangent_unmap(const TangentVector& t, const SpdMatrix& base) {
  if (t.base_dim != base.dim())
    throw InvalidInput("tangent_unmap: dimension mismatch");
  const SymmetricMatrix s = unvectorize_symmetric(t.coords, base.dim());
  const SpdMatrix inner = matrix_exp(s);
  const SpdMatrix root = matrix_power(base, 0.5);
  return SpdMatrix(SymmetricMatrix::symmetrized(
      root.values() * inner.values() * root.values()));
}

}  // namespace rigoletto
