#include "rigoletto/matrix.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace rigoletto {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// exp(x) for x beyond this overflows the reconstruction headroom.
constexpr double kExpOverflowLimit = 700.0;

void mirror_lower(Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  for (int j = 0; j < n; ++j)
    for (int i = j + 1; i < n; ++i) m(j, i) = m(i, j);
}

}  // namespace

SymmetricMatrix::SymmetricMatrix(int n) {
  if (n < 1) throw InvalidInput("SymmetricMatrix dimension must be >= 1");
  values_ = Eigen::MatrixXd::Zero(n, n);
}

SymmetricMatrix SymmetricMatrix::from_exact(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw InvalidInput("SymmetricMatrix requires a square matrix");
  if (m != m.transpose().eval())
    throw InvalidInput("matrix is not exactly symmetric");
  SymmetricMatrix out(static_cast<int>(m.rows()));
  out.values_ = m;
  return out;
}

SymmetricMatrix SymmetricMatrix::symmetrized(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw InvalidInput("SymmetricMatrix requires a square matrix");
  SymmetricMatrix out(static_cast<int>(m.rows()));
  out.values_ = 0.5 * (m + m.transpose());
  mirror_lower(out.values_);
  return out;
}

EigenPair sym_eig(const SymmetricMatrix& s) {
  if (!s.all_finite()) throw InvalidInput("sym_eig: non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.values());
  if (solver.info() != Eigen::Success)
    throw NumericFailure("sym_eig: eigensolver did not converge");
  return EigenPair{solver.eigenvalues(), solver.eigenvectors()};
}

SpdMatrix::SpdMatrix(SymmetricMatrix base) : base_(std::move(base)), min_eig_bound_(0.0) {
  const EigenPair eig = sym_eig(base_);
  const double lo = eig.values(0);
  const double hi = eig.values(eig.values.size() - 1);
  const double slack = 8.0 * kEps * std::max(std::abs(lo), std::abs(hi));
  min_eig_bound_ = lo - slack;
  if (!(min_eig_bound_ > 0.0))
    throw InvalidInput("SpdMatrix: matrix is not positive definite (min eigenvalue " +
                       std::to_string(lo) + ")");
}

namespace {

// Applies f to the spectrum and rebuilds V f(D) V^T with exact symmetry.
template <typename F>
SymmetricMatrix map_spectrum(const EigenPair& eig, F&& f) {
  Eigen::VectorXd mapped(eig.values.size());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) mapped(i) = f(eig.values(i));
  Eigen::MatrixXd rebuilt =
      eig.vectors * mapped.asDiagonal() * eig.vectors.transpose();
  return SymmetricMatrix::symmetrized(rebuilt);
}

}  // namespace

SymmetricMatrix matrix_log(const SpdMatrix& a) {
  return map_spectrum(sym_eig(a.base()), [](double x) { return std::log(x); });
}

SpdMatrix matrix_exp(const SymmetricMatrix& s) {
  if (!s.all_finite()) throw InvalidInput("matrix_exp: non-finite entries");
  const EigenPair eig = sym_eig(s);
  if (eig.values(eig.values.size() - 1) > kExpOverflowLimit)
    throw NumericOverflow("matrix_exp: eigenvalue exceeds overflow limit");
  return SpdMatrix(map_spectrum(eig, [](double x) { return std::exp(x); }));
}

SpdMatrix matrix_power(const SpdMatrix& a, double p) {
  const EigenPair eig = sym_eig(a.base());
  return SpdMatrix(map_spectrum(eig, [p](double x) { return std::pow(x, p); }));
}

SpdMatrix nearest_spd(const SymmetricMatrix& s, double eps) {
  if (!(eps > 0.0)) throw InvalidInput("nearest_spd: eps must be positive");
  if (!s.all_finite()) throw InvalidInput("nearest_spd: non-finite entries");
  const EigenPair eig = sym_eig(s);
  const Eigen::Index n = eig.values.size();
  if (eig.values(0) >= eps) return SpdMatrix(s);
  // Clamp slightly above eps so the rebuilt matrix still certifies the floor
  // after eigensolver round-off; makes the projection idempotent.
  const double scale = std::max({std::abs(eig.values(0)), std::abs(eig.values(n - 1)), eps});
  const double floor = eps + 32.0 * kEps * scale;
  return SpdMatrix(map_spectrum(eig, [floor](double x) { return std::max(x, floor); }));
}

double default_spd_floor(const SymmetricMatrix& s) {
  const double mean_diag = s.trace() / s.dim();
  return 1e-10 * (mean_diag > 0.0 ? mean_diag : 1.0);
}

SpdMatrix shrink_covariance(const SymmetricMatrix& c, double gamma) {
  if (gamma < 0.0 || gamma > 1.0)
    throw InvalidInput("shrink_covariance: gamma must lie in [0, 1]");
  const double tr = c.trace();
  if (gamma > 0.0 && tr <= 0.0)
    throw DegenerateInput("shrink_covariance: non-positive trace");
  const int n = c.dim();
  Eigen::MatrixXd out = (1.0 - gamma) * c.values();
  out.diagonal().array() += gamma * tr / n;
  return SpdMatrix(SymmetricMatrix::symmetrized(out));
}

}  // namespace rigoletto
