#pragma once

#include <string>

#include "rigoletto/classify.hpp"
#include "rigoletto/config.hpp"
#include "rigoletto/eval.hpp"

namespace rigoletto {

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

Json spd_to_json(const SpdMatrix& m);
SpdMatrix spd_from_json(const Json& j);

Json ensemble_to_json(const EnsembleModel& m);
EnsembleModel ensemble_from_json(const Json& j);

Json bundle_to_json(const FeatureBundle& b);
FeatureBundle bundle_from_json(const Json& j);

Json score_report_to_json(const ScoreReport& r);

/// Ensemble model plus artifact metadata as stored on disk by the CLI.
struct ModelFile {
  int format_version = 1;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::optional<SpdMatrix> train_cov_mean;
  EnsembleModel model;
};

Json model_file_to_json(const ModelFile& f);
ModelFile model_file_from_json(const Json& j);

}  // namespace rigoletto
