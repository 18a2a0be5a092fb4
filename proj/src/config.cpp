#include "rigoletto/config.hpp"

#include <fstream>

#include "rigoletto/errors.hpp"

namespace rigoletto {

namespace {

void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> known,
                         const std::string& scope) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok) throw ConfigError("unknown config key", scope.empty() ? key : scope + "." + key);
  }
}

Taper taper_from_name(const std::string& name) {
  if (name == "hann") return Taper::Hann;
  if (name == "rectangular") return Taper::Rectangular;
  throw ConfigError("unknown taper", name);
}

const char* taper_name(Taper t) {
  return t == Taper::Hann ? "hann" : "rectangular";
}

MetricKind metric_from_name(const std::string& name) {
  if (name == "logeuclid") return MetricKind::LogEuclidean;
  if (name == "airm") return MetricKind::Airm;
  throw ConfigError("unknown metric", name);
}

}  // namespace

ExtractConfig RunConfig::extract_config() const {
  ExtractConfig cfg;
  cfg.window_s = {window_t0_s, window_t1_s};
  cfg.estimators = estimators;
  cfg.connectivity.band = band;
  cfg.connectivity.welch_seg_s = welch_segment_s;
  cfg.connectivity.welch_overlap = welch_overlap;
  cfg.connectivity.welch_taper = welch_taper;
  cfg.connectivity.edge_trim_s = edge_trim_s;
  cfg.cov_shrinkage = cov_shrinkage;
  cfg.fc_eps_rel = fc_eps_rel;
  return cfg;
}

EnsembleConfig RunConfig::ensemble_config() const {
  EnsembleConfig cfg;
  cfg.metric = metric;
  cfg.fgda_lambda = fgda_lambda;
  cfg.ridge_alpha = ridge_alpha;
  cfg.stack_folds = 5;
  cfg.seed = seed;
  return cfg;
}

Json RunConfig::to_json() const {
  Json doc;
  doc["window"] = Json{{"t0_s", window_t0_s}, {"t1_s", window_t1_s}};
  doc["band"] = Json{{"low_hz", band.low_hz}, {"high_hz", band.high_hz}};
  Json est = Json::array();
  for (Estimator e : kEstimatorOrder)
    if (estimators.count(e)) est.push_back(estimator_name(e));
  doc["estimators"] = est;
  doc["welch"] = Json{{"segment_s", welch_segment_s},
                      {"overlap", welch_overlap},
                      {"taper", taper_name(welch_taper)}};
  doc["edge_trim_s"] = edge_trim_s;
  doc["cov_shrinkage"] = cov_shrinkage;
  doc["fc_eps_rel"] = fc_eps_rel;
  doc["classifier"] = Json{{"metric", metric_name(metric)},
                           {"ridge_alpha", ridge_alpha},
                           {"fgda_lambda", fgda_lambda},
                           {"csp_filters", csp_filters}};
  doc["cv"] = Json{{"k", cv_k}, {"repeats", cv_repeats}};
  doc["seed"] = seed;
  return doc;
}

RunConfig RunConfig::from_json(const Json& doc) {
  RunConfig cfg;
  if (!doc.is_object()) throw ConfigError("config root must be an object", "");
  reject_unknown_keys(doc,
                      {"window", "band", "estimators", "welch", "edge_trim_s",
                       "cov_shrinkage", "fc_eps_rel", "classifier", "cv", "seed"},
                      "");
  if (doc.contains("window")) {
    const Json& w = doc["window"];
    reject_unknown_keys(w, {"t0_s", "t1_s"}, "window");
    cfg.window_t0_s = w.value("t0_s", cfg.window_t0_s);
    cfg.window_t1_s = w.value("t1_s", cfg.window_t1_s);
  }
  if (doc.contains("band")) {
    const Json& b = doc["band"];
    reject_unknown_keys(b, {"low_hz", "high_hz"}, "band");
    cfg.band.low_hz = b.value("low_hz", cfg.band.low_hz);
    cfg.band.high_hz = b.value("high_hz", cfg.band.high_hz);
  }
  if (doc.contains("estimators")) {
    cfg.estimators.clear();
    for (const auto& name : doc["estimators"]) {
      const auto est = estimator_from_name(name.get<std::string>());
      if (!est) throw ConfigError("unknown estimator", name.get<std::string>());
      cfg.estimators.insert(*est);
    }
    if (cfg.estimators.empty()) throw ConfigError("estimators list is empty", "estimators");
  }
  if (doc.contains("welch")) {
    const Json& w = doc["welch"];
    reject_unknown_keys(w, {"segment_s", "overlap", "taper"}, "welch");
    cfg.welch_segment_s = w.value("segment_s", cfg.welch_segment_s);
    cfg.welch_overlap = w.value("overlap", cfg.welch_overlap);
    if (w.contains("taper")) cfg.welch_taper = taper_from_name(w["taper"].get<std::string>());
  }
  cfg.edge_trim_s = doc.value("edge_trim_s", cfg.edge_trim_s);
  cfg.cov_shrinkage = doc.value("cov_shrinkage", cfg.cov_shrinkage);
  cfg.fc_eps_rel = doc.value("fc_eps_rel", cfg.fc_eps_rel);
  if (doc.contains("classifier")) {
    const Json& c = doc["classifier"];
    reject_unknown_keys(c, {"metric", "ridge_alpha", "fgda_lambda", "csp_filters"},
                        "classifier");
    if (c.contains("metric")) cfg.metric = metric_from_name(c["metric"].get<std::string>());
    cfg.ridge_alpha = c.value("ridge_alpha", cfg.ridge_alpha);
    cfg.fgda_lambda = c.value("fgda_lambda", cfg.fgda_lambda);
    cfg.csp_filters = c.value("csp_filters", cfg.csp_filters);
  }
  if (doc.contains("cv")) {
    const Json& c = doc["cv"];
    reject_unknown_keys(c, {"k", "repeats"}, "cv");
    cfg.cv_k = c.value("k", cfg.cv_k);
    cfg.cv_repeats = c.value("repeats", cfg.cv_repeats);
  }
  cfg.seed = doc.value("seed", cfg.seed);
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file", path);
  Json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what(), path);
  }
  return from_json(doc);
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::hash() const {
  Json doc = to_json();
  doc.erase("seed");
  return fnv1a_hex(doc.dump());
}

}  // namespace rigoletto
