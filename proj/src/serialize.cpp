#include "rigoletto/serialize.hpp"

namespace rigoletto {

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw InvalidInput("matrix_from_json: bad document");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols)
      throw InvalidInput("matrix_from_json: ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

namespace {

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

Json mdm_to_json(const MdmModel& m) {
  Json doc;
  doc["metric"] = metric_name(m.metric);
  doc["labels"] = m.labels;
  Json means = Json::array();
  for (const SpdMatrix& mean : m.class_means) means.push_back(spd_to_json(mean));
  doc["class_means"] = std::move(means);
  return doc;
}

MdmModel mdm_from_json(const Json& j) {
  MdmModel m;
  m.metric = j.at("metric").get<std::string>() == "airm" ? MetricKind::Airm
                                                         : MetricKind::LogEuclidean;
  m.labels = j.at("labels").get<std::vector<int>>();
  for (const auto& mean : j.at("class_means")) m.class_means.push_back(spd_from_json(mean));
  return m;
}

Json fgmdm_to_json(const FgmdmModel& m) {
  Json doc;
  doc["filter"] = Json{{"base_point", spd_to_json(m.filter.base_point)},
                       {"projection", matrix_to_json(m.filter.projection)},
                       {"lambda", m.filter.lambda}};
  doc["mdm"] = mdm_to_json(m.mdm);
  return doc;
}

FgmdmModel fgmdm_from_json(const Json& j) {
  const Json& f = j.at("filter");
  FgdaFilter filter{spd_from_json(f.at("base_point")),
                    matrix_from_json(f.at("projection")),
                    f.at("lambda").get<double>()};
  return FgmdmModel{std::move(filter), mdm_from_json(j.at("mdm"))};
}

Json ridge_to_json(const RidgeModel& m) {
  return Json{{"weights", vector_to_json(m.weights)},
              {"intercept", m.intercept},
              {"alpha", m.alpha}};
}

RidgeModel ridge_from_json(const Json& j) {
  RidgeModel m;
  m.weights = vector_from_json(j.at("weights"));
  m.intercept = j.at("intercept").get<double>();
  m.alpha = j.at("alpha").get<double>();
  return m;
}

}  // namespace

Json spd_to_json(const SpdMatrix& m) { return matrix_to_json(m.values()); }

SpdMatrix spd_from_json(const Json& j) {
  return SpdMatrix(SymmetricMatrix::from_exact(matrix_from_json(j)));
}

Json ensemble_to_json(const EnsembleModel& m) {
  Json doc;
  Json order = Json::array();
  for (Estimator e : m.estimator_order) order.push_back(estimator_name(e));
  doc["estimator_order"] = std::move(order);
  Json level1;
  for (Estimator e : m.estimator_order)
    level1[estimator_name(e)] = fgmdm_to_json(m.level1.at(e));
  doc["level1"] = std::move(level1);
  doc["stacker"] = ridge_to_json(m.stacker);
  doc["labels"] = m.labels;
  return doc;
}

EnsembleModel ensemble_from_json(const Json& j) {
  EnsembleModel m;
  for (const auto& name : j.at("estimator_order")) {
    const auto est = estimator_from_name(name.get<std::string>());
    if (!est) throw InvalidInput("ensemble_from_json: unknown estimator");
    m.estimator_order.push_back(*est);
  }
  for (Estimator e : m.estimator_order)
    m.level1.emplace(e, fgmdm_from_json(j.at("level1").at(estimator_name(e))));
  m.stacker = ridge_from_json(j.at("stacker"));
  m.labels = j.at("labels").get<std::vector<int>>();
  return m;
}

Json bundle_to_json(const FeatureBundle& b) {
  Json doc;
  doc["dim"] = b.dim;
  doc["trials"] = b.n_trials();
  Json features;
  for (const auto& [est, mats] : b.features) {
    Json list = Json::array();
    for (const SpdMatrix& m : mats) list.push_back(spd_to_json(m));
    features[estimator_name(est)] = std::move(list);
  }
  doc["features"] = std::move(features);
  return doc;
}

FeatureBundle bundle_from_json(const Json& j) {
  FeatureBundle b;
  b.dim = j.at("dim").get<int>();
  for (const auto& [name, list] : j.at("features").items()) {
    const auto est = estimator_from_name(name);
    if (!est) throw InvalidInput("bundle_from_json: unknown estimator " + name);
    std::vector<SpdMatrix> mats;
    for (const auto& m : list) mats.push_back(spd_from_json(m));
    b.features.emplace(*est, std::move(mats));
  }
  b.validate();
  return b;
}

Json score_report_to_json(const ScoreReport& r) {
  Json doc;
  doc["pipeline"] = r.pipeline_id;
  doc["kappa_mean"] = r.kappa_mean;
  doc["kappa_std"] = r.kappa_std;
  doc["accuracy_mean"] = r.accuracy_mean;
  doc["accuracy_std"] = r.accuracy_std;
  doc["fold_kappa"] = r.fold_kappa;
  doc["fold_accuracy"] = r.fold_accuracy;
  doc["seed"] = r.seed;
  doc["config_hash"] = r.config_hash;
  return doc;
}

Json model_file_to_json(const ModelFile& f) {
  Json doc;
  doc["format_version"] = f.format_version;
  doc["kind"] = "ensemble";
  doc["config_hash"] = f.config_hash;
  doc["seed"] = f.seed;
  doc["train_cov_mean"] =
      f.train_cov_mean ? spd_to_json(*f.train_cov_mean) : Json(nullptr);
  doc["model"] = ensemble_to_json(f.model);
  return doc;
}

ModelFile model_file_from_json(const Json& j) {
  ModelFile f;
  f.format_version = j.at("format_version").get<int>();
  if (f.format_version != 1)
    throw InvalidInput("model file: unsupported format_version");
  f.config_hash = j.at("config_hash").get<std::string>();
  f.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("train_cov_mean").is_null())
    f.train_cov_mean = spd_from_json(j.at("train_cov_mean"));
  f.model = ensemble_from_json(j.at("model"));
  return f;
}

}  // namespace rigoletto
