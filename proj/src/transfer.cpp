#include "rigoletto/transfer.hpp"

#include <cmath>

namespace rigoletto {

SpdMatrix subject_mean(std::span<const SpdMatrix> covs, MetricKind metric) {
  if (covs.empty()) throw InvalidInput("subject_mean: empty set");
  return karcher_mean(covs, metric);
}

std::size_t select_source(const SpdMatrix& target_mean,
                          std::span<const SubjectBundle> sources) {
  if (sources.empty()) throw InvalidInput("select_source: no sources");
  std::size_t best = 0;
  double best_dist = dist_airm(target_mean, sources[0].subject_mean);
  for (std::size_t k = 1; k < sources.size(); ++k) {
    const double d = dist_airm(target_mean, sources[k].subject_mean);
    if (d < best_dist) {
      best_dist = d;
      best = k;
    }
  }
  return best;
}

FeatureBundle recenter_bundle(const FeatureBundle& target,
                              const SpdMatrix& onto_mean,
                              const SpdMatrix& target_mean) {
  FeatureBundle out;
  out.dim = target.dim;
  for (const auto& [est, mats] : target.features)
    out.features.emplace(est, transport_to_mean(mats, onto_mean, target_mean));
  return out;
}

std::vector<Prediction> transfer_predict(const FeatureBundle& target,
                                         const SpdMatrix& target_mean,
                                         std::span<const SubjectBundle> sources) {
  const std::size_t chosen = select_source(target_mean, sources);
  const SubjectBundle& source = sources[chosen];
  const FeatureBundle recentered =
      recenter_bundle(target, source.subject_mean, target_mean);
  std::vector<Prediction> out;
  out.reserve(target.n_trials());
  for (int t = 0; t < target.n_trials(); ++t)
    out.push_back(ensemble_predict(source.model, recentered, t));
  return out;
}

Prediction weighted_vote_predict(const FeatureBundle& target, int trial_index,
                                 const SpdMatrix& target_mean,
                                 std::span<const SubjectBundle> sources,
                                 double eps_d) {
  if (sources.empty()) throw InvalidInput("weighted_vote_predict: no sources");
  Eigen::VectorXd weights(sources.size());
  for (std::size_t k = 0; k < sources.size(); ++k)
    weights(k) = 1.0 / (dist_airm(target_mean, sources[k].subject_mean) + eps_d);
  weights /= weights.sum();

  Prediction out;
  std::vector<int> labels;
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const FeatureBundle recentered =
        recenter_bundle(target, sources[k].subject_mean, target_mean);
    const Prediction p = ensemble_predict(sources[k].model, recentered, trial_index);
    if (k == 0) {
      out.probabilities = weights(k) * p.probabilities;
      labels = sources[k].model.labels;
    } else {
      if (p.probabilities.size() != out.probabilities.size())
        throw InvalidInput("weighted_vote_predict: class count mismatch");
      out.probabilities += weights(k) * p.probabilities;
    }
  }
  out.label = argmax_label(labels, out.probabilities);
  return out;
}

}  // namespace rigoletto
