#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rigoletto/connectivity.hpp"
#include "rigoletto/manifold.hpp"

namespace rigoletto {

struct Prediction {
  int label = 0;
  Eigen::VectorXd probabilities;
};

/// Minimum-distance-to-mean classifier: one Karcher mean per class.
struct MdmModel {
  MetricKind metric = MetricKind::LogEuclidean;
  std::vector<int> labels;          // ascending; index aligns with class_means
  std::vector<SpdMatrix> class_means;

  int dim() const { return class_means.empty() ? 0 : class_means[0].dim(); }
};

MdmModel mdm_fit(std::span<const SpdMatrix> mats, std::span<const int> labels,
                 MetricKind metric);

/// Softmax over negated distances to the class means; argmax equals the
/// nearest-mean decision.
Eigen::VectorXd mdm_predict_proba(const MdmModel& m, const SpdMatrix& x);

/// Argmax with ties resolved to the earliest class.
int argmax_label(std::span<const int> labels, const Eigen::VectorXd& probs);

/// Tangent-space discriminant filter: orthogonal projection onto the span
/// of the top generalized between/within eigenvectors at the grand mean.
struct FgdaFilter {
  SpdMatrix base_point;
  Eigen::MatrixXd projection;   // d x d, idempotent, rank <= classes-1
  double lambda = 0.1;
};

FgdaFilter fgda_fit(std::span<const SpdMatrix> mats, std::span<const int> labels,
                    double lambda, MetricKind mean_metric);

SpdMatrix fgda_apply(const FgdaFilter& f, const SpdMatrix& x);

struct FgmdmModel {
  FgdaFilter filter;
  MdmModel mdm;
};

FgmdmModel fgmdm_fit(std::span<const SpdMatrix> mats, std::span<const int> labels,
                     MetricKind metric, double lambda);
Eigen::VectorXd fgmdm_predict_proba(const FgmdmModel& m, const SpdMatrix& x);

/// Ridge regression on +/-1 targets; features centered internally with the
/// column means folded into the intercept.
struct RidgeModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double alpha = 1.0;
};

RidgeModel ridge_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                     double alpha);

struct RidgeDecision {
  double score = 0.0;
  int sign = -1;  // -1 maps to the first class; ties resolve to -1
};

RidgeDecision ridge_predict(const RidgeModel& m, const Eigen::VectorXd& row);

struct EnsembleConfig {
  MetricKind metric = MetricKind::LogEuclidean;
  double fgda_lambda = 0.1;
  double ridge_alpha = 1.0;
  int stack_folds = 5;
  std::uint64_t seed = 0;
  /// Explicit fold id per trial for the out-of-fold pass; overrides the
  /// seeded stratified split when set.
  std::optional<std::vector<int>> fold_assignment;
};

/// Per-estimator FgMDM level plus a ridge stacker trained on out-of-fold
/// level-1 probabilities.
struct EnsembleModel {
  std::vector<Estimator> estimator_order;
  std::map<Estimator, FgmdmModel> level1;
  RidgeModel stacker;
  std::vector<int> labels;  // ascending, binary
};

EnsembleModel ensemble_fit(const FeatureBundle& bundle, std::span<const int> labels,
                           const EnsembleConfig& cfg);

Prediction ensemble_predict(const EnsembleModel& m, const FeatureBundle& bundle,
                            int trial_index);

/// Level-1 probabilities concatenated in canonical estimator order.
Eigen::VectorXd ensemble_level1_row(const EnsembleModel& m,
                                    const FeatureBundle& bundle, int trial_index);

/// Spatial filters from the two-class variance-ratio eigenproblem, plus an
/// LDA stage on normalized log-variance features.
struct CspLdaModel {
  Eigen::MatrixXd filters;          // n x m, m even
  Eigen::VectorXd lda_weights;
  double lda_intercept = 0.0;
  Eigen::VectorXd feature_mean;     // log-variance normalization
  Eigen::VectorXd feature_scale;
  std::vector<int> labels;
};

Eigen::MatrixXd csp_fit(std::span<const SpdMatrix> covs, std::span<const int> labels,
                        int m_filters);

CspLdaModel csp_lda_fit(std::span<const SpdMatrix> covs, std::span<const int> labels,
                        int m_filters);
Prediction csp_lda_predict(const CspLdaModel& m, const SpdMatrix& cov);

/// Log-variance feature vector for one trial covariance under the filters.
Eigen::VectorXd csp_features(const Eigen::MatrixXd& filters, const SpdMatrix& cov);

}  // namespace rigoletto
