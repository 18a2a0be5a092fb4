#include "rigoletto/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "rigoletto/rng.hpp"

namespace rigoletto {

double cohen_kappa(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size())
    throw InvalidInput("cohen_kappa: length mismatch");
  if (y_true.empty()) throw InvalidInput("cohen_kappa: empty input");
  const double n = static_cast<double>(y_true.size());
  std::map<int, double> marg_true, marg_pred;
  double agree = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    marg_true[y_true[i]] += 1.0;
    marg_pred[y_pred[i]] += 1.0;
    if (y_true[i] == y_pred[i]) agree += 1.0;
  }
  const double p_o = agree / n;
  double p_e = 0.0;
  for (const auto& [cls, count] : marg_true) {
    auto it = marg_pred.find(cls);
    if (it != marg_pred.end()) p_e += (count / n) * (it->second / n);
  }
  if (1.0 - p_e < 1e-15) {
    // Both vectors constant on one class: defined as 1 on exact agreement.
    return p_o >= 1.0 ? 1.0 : 0.0;
  }
  return (p_o - p_e) / (1.0 - p_e);
}

double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size())
    throw InvalidInput("accuracy: length mismatch");
  if (y_true.empty()) throw InvalidInput("accuracy: empty input");
  double agree = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i)
    if (y_true[i] == y_pred[i]) agree += 1.0;
  return agree / static_cast<double>(y_true.size());
}

SplitPlan make_splits(int n, std::span<const int> labels, int k, int repeats,
                      std::uint64_t seed, bool stratified) {
  if (k < 2) throw InvalidInput("make_splits: k must be >= 2");
  if (n < k) throw InvalidInput("make_splits: n must be >= k");
  if (repeats < 1) throw InvalidInput("make_splits: repeats must be >= 1");
  if (static_cast<int>(labels.size()) != n)
    throw InvalidInput("make_splits: label count mismatch");
  if (stratified) {
    std::map<int, int> counts;
    for (int l : labels) ++counts[l];
    for (const auto& [cls, count] : counts)
      if (count < k)
        throw InvalidInput("make_splits: every class needs at least k members");
  }

  SplitPlan plan;
  plan.k = k;
  plan.repeats = repeats;
  plan.seed = seed;
  plan.stratified = stratified;
  const Rng base(seed);

  for (int r = 0; r < repeats; ++r) {
    Rng rng = base.split(static_cast<std::uint64_t>(r) + 1);
    std::vector<std::vector<int>> fold_members(k);
    if (stratified) {
      std::map<int, std::vector<int>> by_class;
      for (int i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
      int next_fold = 0;
      for (auto& [cls, idx] : by_class) {
        rng.shuffle(idx);
        for (int i : idx) {
          fold_members[next_fold].push_back(i);
          next_fold = (next_fold + 1) % k;
        }
      }
    } else {
      std::vector<int> idx(n);
      for (int i = 0; i < n; ++i) idx[i] = i;
      rng.shuffle(idx);
      for (int i = 0; i < n; ++i) fold_members[i % k].push_back(idx[i]);
    }
    for (int f = 0; f < k; ++f) {
      SplitPlan::Fold fold;
      fold.test = fold_members[f];
      std::sort(fold.test.begin(), fold.test.end());
      for (int g = 0; g < k; ++g) {
        if (g == f) continue;
        fold.train.insert(fold.train.end(), fold_members[g].begin(),
                          fold_members[g].end());
      }
      std::sort(fold.train.begin(), fold.train.end());
      plan.folds.push_back(std::move(fold));
    }
  }
  return plan;
}

void ScoreReport::finalize() {
  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  auto std_of = [](const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  };
  kappa_mean = mean_of(fold_kappa);
  kappa_std = std_of(fold_kappa, kappa_mean);
  accuracy_mean = mean_of(fold_accuracy);
  accuracy_std = std_of(fold_accuracy, accuracy_mean);
}

namespace {

class FgmdmPipeline final : public Pipeline {
 public:
  FgmdmPipeline(Estimator estimator, MetricKind metric, double lambda)
      : estimator_(estimator), metric_(metric), lambda_(lambda) {}

  std::string id() const override {
    return std::string("fgmdm_") + estimator_name(estimator_);
  }
  void fit(const FeatureBundle& train, const std::vector<int>& labels) override {
    model_ = fgmdm_fit(train.at(estimator_), labels, metric_, lambda_);
  }
  Prediction predict_trial(const FeatureBundle& bundle, int trial) const override {
    Prediction out;
    out.probabilities = fgmdm_predict_proba(*model_, bundle.at(estimator_)[trial]);
    out.label = argmax_label(model_->mdm.labels, out.probabilities);
    return out;
  }
  std::unique_ptr<Pipeline> clone() const override {
    return std::make_unique<FgmdmPipeline>(estimator_, metric_, lambda_);
  }

 private:
  Estimator estimator_;
  MetricKind metric_;
  double lambda_;
  std::optional<FgmdmModel> model_;
};

class CspLdaPipeline final : public Pipeline {
 public:
  explicit CspLdaPipeline(int m_filters) : m_filters_(m_filters) {}

  std::string id() const override { return "csp_lda"; }
  void fit(const FeatureBundle& train, const std::vector<int>& labels) override {
    const int m = std::min(m_filters_, train.dim - train.dim % 2);
    model_ = csp_lda_fit(train.at(Estimator::Cov), labels, m);
  }
  Prediction predict_trial(const FeatureBundle& bundle, int trial) const override {
    return csp_lda_predict(*model_, bundle.at(Estimator::Cov)[trial]);
  }
  std::unique_ptr<Pipeline> clone() const override {
    return std::make_unique<CspLdaPipeline>(m_filters_);
  }

 private:
  int m_filters_;
  std::optional<CspLdaModel> model_;
};

class EnsemblePipeline final : public Pipeline {
 public:
  explicit EnsemblePipeline(EnsembleConfig cfg) : cfg_(std::move(cfg)) {}

  std::string id() const override { return "ensemble"; }
  void fit(const FeatureBundle& train, const std::vector<int>& labels) override {
    model_ = ensemble_fit(train, labels, cfg_);
  }
  Prediction predict_trial(const FeatureBundle& bundle, int trial) const override {
    return ensemble_predict(*model_, bundle, trial);
  }
  std::unique_ptr<Pipeline> clone() const override {
    return std::make_unique<EnsemblePipeline>(cfg_);
  }

 private:
  EnsembleConfig cfg_;
  std::optional<EnsembleModel> model_;
};

}  // namespace

std::unique_ptr<Pipeline> make_fgmdm_pipeline(Estimator estimator, MetricKind metric,
                                              double lambda) {
  return std::make_unique<FgmdmPipeline>(estimator, metric, lambda);
}

std::unique_ptr<Pipeline> make_csp_lda_pipeline(int m_filters) {
  return std::make_unique<CspLdaPipeline>(m_filters);
}

std::unique_ptr<Pipeline> make_ensemble_pipeline(const EnsembleConfig& cfg) {
  return std::make_unique<EnsemblePipeline>(cfg);
}

FeatureBundle recenter_onto_train(const FeatureBundle& test,
                                  const FeatureBundle& train) {
  if (!test.has(Estimator::Cov) || !train.has(Estimator::Cov)) return test;
  const SpdMatrix mean_train = mean_airm(train.at(Estimator::Cov));
  const SpdMatrix mean_test = mean_airm(test.at(Estimator::Cov));
  return recenter_bundle(test, mean_train, mean_test);
}

ScoreReport cross_validate(const FeatureBundle& bundle, std::span<const int> labels,
                           const Pipeline& prototype, const SplitPlan& plan,
                           const std::string& config_hash) {
  bundle.validate();
  if (static_cast<int>(labels.size()) != bundle.n_trials())
    throw InvalidInput("cross_validate: label count mismatch");

  ScoreReport report;
  report.pipeline_id = prototype.id();
  report.seed = plan.seed;
  report.config_hash = config_hash;

  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const SplitPlan::Fold& fold = plan.folds[f];
    try {
      const FeatureBundle train_bundle = bundle.subset(fold.train);
      std::vector<int> train_labels;
      train_labels.reserve(fold.train.size());
      for (int i : fold.train) train_labels.push_back(labels[i]);

      std::unique_ptr<Pipeline> pipeline = prototype.clone();
      pipeline->fit(train_bundle, train_labels);

      FeatureBundle test_bundle = bundle.subset(fold.test);
      test_bundle = recenter_onto_train(test_bundle, train_bundle);

      std::vector<int> y_true, y_pred;
      for (std::size_t t = 0; t < fold.test.size(); ++t) {
        y_true.push_back(labels[fold.test[t]]);
        y_pred.push_back(
            pipeline->predict_trial(test_bundle, static_cast<int>(t)).label);
      }
      report.fold_kappa.push_back(cohen_kappa(y_true, y_pred));
      report.fold_accuracy.push_back(accuracy(y_true, y_pred));
    } catch (const Error& e) {
      throw Error("cross_validate: fold " + std::to_string(f) + " failed: " +
                  e.what());
    }
  }
  report.finalize();
  return report;
}

LosoReport leave_one_subject_out(std::span<const SubjectData> subjects,
                                 const EnsembleConfig& cfg,
                                 const std::string& config_hash) {
  const int n_subjects = static_cast<int>(subjects.size());
  if (n_subjects < 2)
    throw InvalidInput("leave_one_subject_out: need at least 2 subjects");

  // Train one bundle per subject on its own data.
  std::vector<SubjectBundle> bundles;
  bundles.reserve(n_subjects);
  for (const SubjectData& s : subjects) {
    EnsembleModel model = ensemble_fit(s.bundle, s.labels, cfg);
    SpdMatrix mean = subject_mean(s.bundle.at(Estimator::Cov), MetricKind::Airm);
    bundles.push_back(SubjectBundle{s.id, std::move(model), std::move(mean),
                                    MetricKind::Airm});
  }

  LosoReport report;
  report.kappa_grid = Eigen::MatrixXd::Zero(n_subjects, n_subjects);
  report.accuracy_grid = Eigen::MatrixXd::Zero(n_subjects, n_subjects);
  report.distance_grid = Eigen::MatrixXd::Zero(n_subjects, n_subjects);
  report.selected_source.assign(n_subjects, -1);
  for (const SubjectData& s : subjects) report.subject_ids.push_back(s.id);

  for (int s = 0; s < n_subjects; ++s)
    for (int t = s + 1; t < n_subjects; ++t) {
      const double d = dist_airm(bundles[s].subject_mean, bundles[t].subject_mean);
      report.distance_grid(s, t) = report.distance_grid(t, s) = d;
    }

  // Source-by-target score grid (diagonal scores the model on its own data).
  for (int t = 0; t < n_subjects; ++t) {
    for (int s = 0; s < n_subjects; ++s) {
      const FeatureBundle recentered =
          s == t ? subjects[t].bundle
                 : recenter_bundle(subjects[t].bundle, bundles[s].subject_mean,
                                   bundles[t].subject_mean);
      std::vector<int> y_pred;
      for (int i = 0; i < recentered.n_trials(); ++i)
        y_pred.push_back(ensemble_predict(bundles[s].model, recentered, i).label);
      report.kappa_grid(s, t) = cohen_kappa(subjects[t].labels, y_pred);
      report.accuracy_grid(s, t) = accuracy(subjects[t].labels, y_pred);
    }
  }

  // Held-out evaluation with nearest-mean source selection.
  for (int t = 0; t < n_subjects; ++t) {
    std::vector<SubjectBundle> sources;
    std::vector<int> source_index;
    for (int s = 0; s < n_subjects; ++s) {
      if (s == t) continue;
      sources.push_back(bundles[s]);
      source_index.push_back(s);
    }
    const std::size_t chosen = select_source(bundles[t].subject_mean, sources);
    report.selected_source[t] = source_index[chosen];

    const std::vector<Prediction> preds =
        transfer_predict(subjects[t].bundle, bundles[t].subject_mean, sources);
    std::vector<int> y_pred;
    for (const Prediction& p : preds) y_pred.push_back(p.label);

    ScoreReport score;
    score.pipeline_id = "transfer_nearest_mean";
    score.seed = cfg.seed;
    score.config_hash = config_hash;
    score.fold_kappa.push_back(cohen_kappa(subjects[t].labels, y_pred));
    score.fold_accuracy.push_back(accuracy(subjects[t].labels, y_pred));
    score.finalize();
    report.per_target.push_back(std::move(score));
  }
  return report;
}

ThresholdedMatrix figure_threshold(const Eigen::MatrixXd& values) {
  const int n = static_cast<int>(values.rows());
  if (n == 0 || values.cols() != n)
    throw InvalidInput("figure_threshold: non-empty square matrix required");
  double lo = 0.0, hi = 0.0;
  bool seen = false;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v = values(i, j);
      if (!seen) {
        lo = hi = v;
        seen = true;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  if (!seen) {  // 1x1 matrix: fall back to the single entry
    lo = hi = values(0, 0);
  }
  ThresholdedMatrix out;
  out.th = lo + 0.9 * (hi - lo);
  out.mask.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.mask(i, j) = values(i, j) >= out.th;
  return out;
}

}  // namespace rigoletto
