#include "rigoletto/classify.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rigoletto/eval.hpp"
#include "rigoletto/rng.hpp"

namespace rigoletto {

namespace {

std::vector<int> distinct_sorted_labels(std::span<const int> labels) {
  std::set<int> s(labels.begin(), labels.end());
  return {s.begin(), s.end()};
}

}  // namespace

MdmModel mdm_fit(std::span<const SpdMatrix> mats, std::span<const int> labels,
                 MetricKind metric) {
  if (mats.size() != labels.size())
    throw InvalidInput("mdm_fit: sample/label count mismatch");
  if (mats.empty()) throw InvalidInput("mdm_fit: empty training set");
  MdmModel model;
  model.metric = metric;
  model.labels = distinct_sorted_labels(labels);
  if (model.labels.size() < 2)
    throw InvalidInput("mdm_fit: need at least 2 classes");
  for (int cls : model.labels) {
    std::vector<SpdMatrix> members;
    for (std::size_t i = 0; i < mats.size(); ++i)
      if (labels[i] == cls) members.push_back(mats[i]);
    model.class_means.push_back(karcher_mean(members, metric));
  }
  return model;
}

Eigen::VectorXd mdm_predict_proba(const MdmModel& m, const SpdMatrix& x) {
  const int k = static_cast<int>(m.class_means.size());
  Eigen::VectorXd neg_dist(k);
  for (int c = 0; c < k; ++c) neg_dist(c) = -dist(x, m.class_means[c], m.metric);
  // Softmax, stabilized by the max shift.
  const double shift = neg_dist.maxCoeff();
  Eigen::VectorXd p = (neg_dist.array() - shift).exp();
  p /= p.sum();
  return p;
}

int argmax_label(std::span<const int> labels, const Eigen::VectorXd& probs) {
  if (static_cast<int>(labels.size()) != probs.size())
    throw InvalidInput("argmax_label: size mismatch");
  int best = 0;
  for (int i = 1; i < probs.size(); ++i)
    if (probs(i) > probs(best)) best = i;
  return labels[best];
}

FgdaFilter fgda_fit(std::span<const SpdMatrix> mats, std::span<const int> labels,
                    double lambda, MetricKind mean_metric) {
  if (mats.size() != labels.size())
    throw InvalidInput("fgda_fit: sample/label count mismatch");
  const std::vector<int> classes = distinct_sorted_labels(labels);
  if (classes.size() < 2) throw InvalidInput("fgda_fit: need at least 2 classes");
  for (int cls : classes) {
    const auto count = std::count(labels.begin(), labels.end(), cls);
    if (count < 2)
      throw InvalidInput("fgda_fit: every class needs at least 2 samples");
  }

  const SpdMatrix base = karcher_mean(mats, mean_metric);
  const int n = base.dim();
  const int d = n * (n + 1) / 2;
  const int total = static_cast<int>(mats.size());

  Eigen::MatrixXd coords(total, d);
  for (int i = 0; i < total; ++i)
    coords.row(i) = tangent_map(mats[i], base).coords.transpose();

  const Eigen::RowVectorXd grand_mean = coords.colwise().mean();
  Eigen::MatrixXd scatter_within = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd scatter_between = Eigen::MatrixXd::Zero(d, d);
  for (int cls : classes) {
    std::vector<int> idx;
    for (int i = 0; i < total; ++i)
      if (labels[i] == cls) idx.push_back(i);
    Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(d);
    for (int i : idx) mu += coords.row(i);
    mu /= static_cast<double>(idx.size());
    for (int i : idx) {
      const Eigen::RowVectorXd delta = coords.row(i) - mu;
      scatter_within += delta.transpose() * delta;
    }
    const Eigen::RowVectorXd gap = mu - grand_mean;
    scatter_between += static_cast<double>(idx.size()) * gap.transpose() * gap;
  }
  scatter_within /= static_cast<double>(total);
  scatter_between /= static_cast<double>(total);

  const double tr_within = scatter_within.trace();
  Eigen::MatrixXd regularized = scatter_within;
  regularized.diagonal().array() += lambda * tr_within / d;
  if (!(regularized.diagonal().minCoeff() > 0.0) || !regularized.allFinite())
    throw NumericFailure("fgda_fit: degenerate within-class scatter");
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> check(regularized);
    if (check.info() != Eigen::Success ||
        check.eigenvalues()(0) <= 1e-14 * std::abs(check.eigenvalues()(d - 1)))
      throw NumericFailure("fgda_fit: degenerate within-class scatter");
  }

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      scatter_between, regularized, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success)
    throw NumericFailure("fgda_fit: generalized eigensolver failed");

  const int rank = static_cast<int>(classes.size()) - 1;
  Eigen::MatrixXd w(d, rank);
  for (int r = 0; r < rank; ++r) w.col(r) = solver.eigenvectors().col(d - 1 - r);

  // Orthogonal projector onto span(W) in tangent coordinates.
  const Eigen::MatrixXd gram = w.transpose() * w;
  const Eigen::MatrixXd projection = w * gram.ldlt().solve(w.transpose());

  FgdaFilter filter{base, projection, lambda};
  return filter;
}

SpdMatrix fgda_apply(const FgdaFilter& f, const SpdMatrix& x) {
  TangentVector t = tangent_map(x, f.base_point);
  t.coords = f.projection * t.coords;
  return tangent_unmap(t, f.base_point);
}

FgmdmModel fgmdm_fit(std::span<const SpdMatrix> mats, std::span<const int> labels,
                     MetricKind metric, double lambda) {
  FgdaFilter filter = fgda_fit(mats, labels, lambda, metric);
  std::vector<SpdMatrix> filtered;
  filtered.reserve(mats.size());
  for (const SpdMatrix& x : mats) filtered.push_back(fgda_apply(filter, x));
  MdmModel mdm = mdm_fit(filtered, labels, metric);
  return FgmdmModel{std::move(filter), std::move(mdm)};
}

Eigen::VectorXd fgmdm_predict_proba(const FgmdmModel& m, const SpdMatrix& x) {
  return mdm_predict_proba(m.mdm, fgda_apply(m.filter, x));
}

RidgeModel ridge_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                     double alpha) {
  if (features.rows() != targets.size())
    throw InvalidInput("ridge_fit: row/target count mismatch");
  if (features.rows() < 1) throw InvalidInput("ridge_fit: empty problem");
  if (alpha < 0.0) throw InvalidInput("ridge_fit: alpha must be >= 0");
  const int d = static_cast<int>(features.cols());
  const Eigen::RowVectorXd col_mean = features.colwise().mean();
  const Eigen::MatrixXd centered = features.rowwise() - col_mean;
  const double target_mean = targets.mean();

  Eigen::MatrixXd gram = centered.transpose() * centered;
  gram.diagonal().array() += alpha;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success)
    throw NumericFailure("ridge_fit: eigensolver failed");
  const double hi = eig.eigenvalues()(d - 1);
  if (!(hi > 0.0) || eig.eigenvalues()(0) <= 1e-12 * hi)
    throw NumericFailure(
        "ridge_fit: singular normal equations; increase alpha");
  const Eigen::VectorXd rhs = centered.transpose() * targets;
  const Eigen::VectorXd weights =
      eig.eigenvectors() *
      (eig.eigenvectors().transpose() * rhs).cwiseQuotient(eig.eigenvalues());

  RidgeModel model;
  model.weights = weights;
  model.intercept = target_mean - col_mean.dot(weights);
  model.alpha = alpha;
  return model;
}

RidgeDecision ridge_predict(const RidgeModel& m, const Eigen::VectorXd& row) {
  if (row.size() != m.weights.size())
    throw InvalidInput("ridge_predict: feature length mismatch");
  RidgeDecision out;
  out.score = m.weights.dot(row) + m.intercept;
  out.sign = out.score > 0.0 ? 1 : -1;  // exact tie falls to the first class
  return out;
}

namespace {

Eigen::VectorXd level1_row_for(const std::vector<Estimator>& order,
                               const std::map<Estimator, FgmdmModel>& models,
                               const FeatureBundle& bundle, int trial) {
  Eigen::VectorXd row;
  for (Estimator est : order) {
    const Eigen::VectorXd p =
        fgmdm_predict_proba(models.at(est), bundle.at(est)[trial]);
    const Eigen::Index offset = row.size();
    row.conservativeResize(offset + p.size());
    row.segment(offset, p.size()) = p;
  }
  return row;
}

}  // namespace

EnsembleModel ensemble_fit(const FeatureBundle& bundle, std::span<const int> labels,
                           const EnsembleConfig& cfg) {
  bundle.validate();
  const int n = bundle.n_trials();
  if (static_cast<int>(labels.size()) != n)
    throw InvalidInput("ensemble_fit: label count mismatch");

  EnsembleModel model;
  model.estimator_order = bundle.estimators();
  model.labels = distinct_sorted_labels(labels);
  if (model.labels.size() != 2)
    throw InvalidInput("ensemble_fit: exactly 2 classes required");

  // Fold ids for the out-of-fold probability pass.
  std::vector<int> fold_of(n, -1);
  if (cfg.fold_assignment) {
    if (static_cast<int>(cfg.fold_assignment->size()) != n)
      throw InvalidInput("ensemble_fit: fold assignment length mismatch");
    fold_of = *cfg.fold_assignment;
    for (int f : fold_of)
      if (f < 0) throw InvalidInput("ensemble_fit: fold ids must be non-negative");
  } else {
    const SplitPlan plan =
        make_splits(n, labels, cfg.stack_folds, 1,
                    splitmix64(cfg.seed ^ 0x9d2c5680u), true);
    for (int f = 0; f < static_cast<int>(plan.folds.size()); ++f)
      for (int idx : plan.folds[f].test) fold_of[idx] = f;
  }
  const int n_folds = *std::max_element(fold_of.begin(), fold_of.end()) + 1;

  const int n_classes = static_cast<int>(model.labels.size());
  const int stack_dim = static_cast<int>(model.estimator_order.size()) * n_classes;
  Eigen::MatrixXd oof_features = Eigen::MatrixXd::Zero(n, stack_dim);

  for (int f = 0; f < n_folds; ++f) {
    std::vector<int> train_idx, test_idx;
    for (int i = 0; i < n; ++i)
      (fold_of[i] == f ? test_idx : train_idx).push_back(i);
    if (test_idx.empty()) continue;
    std::vector<int> train_labels;
    for (int i : train_idx) train_labels.push_back(labels[i]);
    const FeatureBundle train_bundle = bundle.subset(train_idx);
    const FeatureBundle test_bundle = bundle.subset(test_idx);

    std::map<Estimator, FgmdmModel> fold_models;
    for (Estimator est : model.estimator_order)
      fold_models.emplace(est, fgmdm_fit(train_bundle.at(est), train_labels,
                                         cfg.metric, cfg.fgda_lambda));
    for (std::size_t r = 0; r < test_idx.size(); ++r)
      oof_features.row(test_idx[r]) =
          level1_row_for(model.estimator_order, fold_models, test_bundle,
                         static_cast<int>(r))
              .transpose();
  }

  // Level-1 models used at prediction time are fit on all training data.
  std::vector<int> all_labels(labels.begin(), labels.end());
  for (Estimator est : model.estimator_order)
    model.level1.emplace(est, fgmdm_fit(bundle.at(est), all_labels, cfg.metric,
                                        cfg.fgda_lambda));

  Eigen::VectorXd targets(n);
  for (int i = 0; i < n; ++i)
    targets(i) = labels[i] == model.labels[0] ? -1.0 : 1.0;
  model.stacker = ridge_fit(oof_features, targets, cfg.ridge_alpha);
  return model;
}

Eigen::VectorXd ensemble_level1_row(const EnsembleModel& m,
                                    const FeatureBundle& bundle, int trial_index) {
  for (Estimator est : m.estimator_order)
    if (!bundle.has(est))
      throw InvalidInput(std::string("ensemble_predict: bundle missing estimator ") +
                         estimator_name(est));
  return level1_row_for(m.estimator_order, m.level1, bundle, trial_index);
}

Prediction ensemble_predict(const EnsembleModel& m, const FeatureBundle& bundle,
                            int trial_index) {
  const Eigen::VectorXd row = ensemble_level1_row(m, bundle, trial_index);
  const RidgeDecision decision = ridge_predict(m.stacker, row);
  Prediction out;
  // Ridge score in [-1, 1] maps affinely onto the class-1 probability.
  const double clipped = std::clamp(decision.score, -1.0, 1.0);
  const double p1 = 0.5 * (clipped + 1.0);
  out.probabilities = Eigen::Vector2d(1.0 - p1, p1);
  out.label = decision.sign < 0 ? m.labels[0] : m.labels[1];
  return out;
}

Eigen::VectorXd csp_features(const Eigen::MatrixXd& filters, const SpdMatrix& cov) {
  const int m = static_cast<int>(filters.cols());
  Eigen::VectorXd variance(m);
  for (int k = 0; k < m; ++k)
    variance(k) = filters.col(k).dot(cov.values() * filters.col(k));
  const double total = variance.sum();
  if (!(total > 0.0)) throw NumericFailure("csp_features: non-positive variance");
  return (variance / total).array().log();
}

Eigen::MatrixXd csp_fit(std::span<const SpdMatrix> covs, std::span<const int> labels,
                        int m_filters) {
  if (covs.size() != labels.size())
    throw InvalidInput("csp_fit: sample/label count mismatch");
  const std::vector<int> classes = distinct_sorted_labels(labels);
  if (classes.size() != 2) throw InvalidInput("csp_fit: exactly 2 classes required");
  if (m_filters < 2 || m_filters % 2 != 0)
    throw InvalidInput("csp_fit: filter count must be even and >= 2");
  const int n = covs[0].dim();
  if (m_filters > n) throw InvalidInput("csp_fit: more filters than channels");

  Eigen::MatrixXd mean0 = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd mean1 = Eigen::MatrixXd::Zero(n, n);
  int count0 = 0, count1 = 0;
  for (std::size_t i = 0; i < covs.size(); ++i) {
    if (labels[i] == classes[0]) {
      mean0 += covs[i].values();
      ++count0;
    } else {
      mean1 += covs[i].values();
      ++count1;
    }
  }
  mean0 /= count0;
  mean1 /= count1;

  // C0 w = lambda (C0 + C1) w; eigenvalues in [0,1]. Extreme ends carry the
  // most class-discriminative variance ratios.
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      mean0, mean0 + mean1, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success)
    throw NumericFailure("csp_fit: generalized eigensolver failed");

  Eigen::MatrixXd filters(n, m_filters);
  const int half = m_filters / 2;
  for (int k = 0; k < half; ++k) {
    filters.col(k) = solver.eigenvectors().col(n - 1 - k);      // top
    filters.col(half + k) = solver.eigenvectors().col(k);       // bottom
  }
  return filters;
}

CspLdaModel csp_lda_fit(std::span<const SpdMatrix> covs, std::span<const int> labels,
                        int m_filters) {
  CspLdaModel model;
  model.filters = csp_fit(covs, labels, m_filters);
  model.labels = distinct_sorted_labels(labels);

  const int total = static_cast<int>(covs.size());
  const int m = m_filters;
  Eigen::MatrixXd feats(total, m);
  for (int i = 0; i < total; ++i)
    feats.row(i) = csp_features(model.filters, covs[i]).transpose();

  model.feature_mean = feats.colwise().mean();
  Eigen::MatrixXd centered = feats.rowwise() - model.feature_mean.transpose();
  model.feature_scale.resize(m);
  for (int k = 0; k < m; ++k) {
    const double sd = std::sqrt(centered.col(k).squaredNorm() / std::max(1, total - 1));
    model.feature_scale(k) = sd > 0.0 ? sd : 1.0;
  }
  for (int k = 0; k < m; ++k) centered.col(k) /= model.feature_scale(k);

  // Two-class LDA on standardized features.
  Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(m), mu1 = Eigen::VectorXd::Zero(m);
  int count0 = 0, count1 = 0;
  for (int i = 0; i < total; ++i) {
    if (labels[i] == model.labels[0]) {
      mu0 += centered.row(i).transpose();
      ++count0;
    } else {
      mu1 += centered.row(i).transpose();
      ++count1;
    }
  }
  mu0 /= count0;
  mu1 /= count1;
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < total; ++i) {
    const Eigen::VectorXd mu = labels[i] == model.labels[0] ? mu0 : mu1;
    const Eigen::VectorXd delta = centered.row(i).transpose() - mu;
    pooled += delta * delta.transpose();
  }
  pooled /= std::max(1, total - 2);

  Eigen::LDLT<Eigen::MatrixXd> ldlt(pooled);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericFailure("csp_lda_fit: singular pooled covariance");
  model.lda_weights = ldlt.solve(mu1 - mu0);
  model.lda_intercept = -0.5 * model.lda_weights.dot(mu0 + mu1);
  return model;
}

Prediction csp_lda_predict(const CspLdaModel& m, const SpdMatrix& cov) {
  Eigen::VectorXd f = csp_features(m.filters, cov);
  f = (f - m.feature_mean).cwiseQuotient(m.feature_scale);
  const double score = m.lda_weights.dot(f) + m.lda_intercept;
  Prediction out;
  const double p1 = 1.0 / (1.0 + std::exp(-score));
  out.probabilities = Eigen::Vector2d(1.0 - p1, p1);
  out.label = score > 0.0 ? m.labels[1] : m.labels[0];
  return out;
}

}  // namespace rigoletto
