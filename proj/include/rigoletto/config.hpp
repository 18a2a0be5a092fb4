#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "rigoletto/classify.hpp"
#include "rigoletto/connectivity.hpp"

namespace rigoletto {

using Json = nlohmann::ordered_json;

/// Resolved run configuration with every default filled in. Unknown keys in
/// the source document are rejected.
struct RunConfig {
  double window_t0_s = 3.0;
  double window_t1_s = 7.5;
  Band band{8.0, 30.0};
  std::set<Estimator> estimators = {Estimator::Cov, Estimator::Coh,
                                    Estimator::PLV};
  double welch_segment_s = 1.0;
  double welch_overlap = 0.5;
  Taper welch_taper = Taper::Hann;
  double edge_trim_s = 0.25;
  double cov_shrinkage = 0.0;
  double fc_eps_rel = 1e-6;
  MetricKind metric = MetricKind::LogEuclidean;
  double ridge_alpha = 1.0;
  double fgda_lambda = 0.1;
  int csp_filters = 6;
  int cv_k = 5;
  int cv_repeats = 10;
  std::uint64_t seed = 0;

  ExtractConfig extract_config() const;
  EnsembleConfig ensemble_config() const;

  /// Canonical document with stable key order; basis of the config hash.
  Json to_json() const;

  static RunConfig from_json(const Json& doc);
  static RunConfig load(const std::string& path);

  /// 64-bit FNV-1a over the canonical dump, excluding the seed.
  std::string hash() const;
};

std::string fnv1a_hex(const std::string& data);

}  // namespace rigoletto
