#pragma once

#include <span>
#include <string>
#include <vector>

#include "rigoletto/classify.hpp"
#include "rigoletto/manifold.hpp"

namespace rigoletto {

/// A trained subject: its ensemble model plus the Karcher mean of its
/// covariance matrices, the anchor for cross-subject matching.
struct SubjectBundle {
  std::string subject_id;
  EnsembleModel model;
  SpdMatrix subject_mean;
  MetricKind mean_metric = MetricKind::Airm;
};

SpdMatrix subject_mean(std::span<const SpdMatrix> covs, MetricKind metric);

/// Index of the source whose mean is closest to the target mean under the
/// affine-invariant distance; ties resolve to the earliest source.
std::size_t select_source(const SpdMatrix& target_mean,
                          std::span<const SubjectBundle> sources);

/// Recenter the target bundle onto the given covariance mean, using the
/// congruence map derived from the target's own covariance mean.
FeatureBundle recenter_bundle(const FeatureBundle& target,
                              const SpdMatrix& onto_mean,
                              const SpdMatrix& target_mean);

/// Nearest-source transfer: pick the closest source, transport the target
/// features onto its mean, predict every trial with its ensemble.
std::vector<Prediction> transfer_predict(const FeatureBundle& target,
                                         const SpdMatrix& target_mean,
                                         std::span<const SubjectBundle> sources);

/// Inverse-distance vote across all sources for one trial.
Prediction weighted_vote_predict(const FeatureBundle& target, int trial_index,
                                 const SpdMatrix& target_mean,
                                 std::span<const SubjectBundle> sources,
                                 double eps_d = 1e-9);

}  // namespace rigoletto
