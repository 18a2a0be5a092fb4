#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rigoletto/classify.hpp"
#include "rigoletto/transfer.hpp"

namespace rigoletto {

/// Chance-corrected agreement; 1 when both vectors are identical even if
/// chance agreement is total.
double cohen_kappa(std::span<const int> y_true, std::span<const int> y_pred);

double accuracy(std::span<const int> y_true, std::span<const int> y_pred);

/// Repeated k-fold plan; folds are ordered repeat-major and the test sets
/// of one repeat partition [0, n).
struct SplitPlan {
  struct Fold {
    std::vector<int> train;
    std::vector<int> test;
  };
  std::vector<Fold> folds;
  int k = 0;
  int repeats = 0;
  std::uint64_t seed = 0;
  bool stratified = true;
};

SplitPlan make_splits(int n, std::span<const int> labels, int k, int repeats,
                      std::uint64_t seed, bool stratified = true);

struct ScoreReport {
  std::string pipeline_id;
  std::vector<double> fold_kappa;
  std::vector<double> fold_accuracy;
  double kappa_mean = 0.0;
  double kappa_std = 0.0;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;

  void finalize();  // recompute means/stds from the fold values
};

/// Train/predict interface consumed by cross_validate. Implementations see
/// only the trials they are fitted on.
class Pipeline {
 public:
  virtual ~Pipeline() = default;
  virtual std::string id() const = 0;
  virtual void fit(const FeatureBundle& train, const std::vector<int>& labels) = 0;
  virtual Prediction predict_trial(const FeatureBundle& bundle, int trial) const = 0;
  virtual std::unique_ptr<Pipeline> clone() const = 0;
};

std::unique_ptr<Pipeline> make_fgmdm_pipeline(Estimator estimator, MetricKind metric,
                                              double lambda);
std::unique_ptr<Pipeline> make_csp_lda_pipeline(int m_filters);
std::unique_ptr<Pipeline> make_ensemble_pipeline(const EnsembleConfig& cfg);

/// Per fold: fit a fresh pipeline on the train split, recenter the test
/// split onto the train covariance mean, predict, score.
ScoreReport cross_validate(const FeatureBundle& bundle, std::span<const int> labels,
                           const Pipeline& prototype, const SplitPlan& plan,
                           const std::string& config_hash = "");

/// Recenters every feature list by the congruence map that carries the
/// covariance mean of `test` onto the covariance mean of `train`; identity
/// when the bundle has no covariance features.
FeatureBundle recenter_onto_train(const FeatureBundle& test,
                                  const FeatureBundle& train);

struct SubjectData {
  std::string id;
  FeatureBundle bundle;
  std::vector<int> labels;
};

/// Full leave-one-subject-out transfer protocol: per-target source
/// selection by nearest covariance mean, transported prediction, and the
/// complete source-by-target score and distance grids.
struct LosoReport {
  std::vector<std::string> subject_ids;
  Eigen::MatrixXd kappa_grid;      // [source][target]
  Eigen::MatrixXd accuracy_grid;   // [source][target]
  Eigen::MatrixXd distance_grid;   // symmetric, zero diagonal
  std::vector<int> selected_source;  // per target, -1 never
  std::vector<ScoreReport> per_target;
};

LosoReport leave_one_subject_out(std::span<const SubjectData> subjects,
                                 const EnsembleConfig& cfg,
                                 const std::string& config_hash = "");

struct ThresholdedMatrix {
  double th = 0.0;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;
};

/// Threshold at min + 0.9*(max - min) over the off-diagonal entries.
ThresholdedMatrix figure_threshold(const Eigen::MatrixXd& values);

}  // namespace rigoletto
