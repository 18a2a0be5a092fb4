#include "rigoletto/cli_commands.hpp"

#include <cstdio>
#include <fstream>

#include "rigoletto/eval.hpp"
#include "rigoletto/rng.hpp"
#include "rigoletto/serialize.hpp"
#include "rigoletto/transfer.hpp"

namespace rigoletto {

namespace fs = std::filesystem;

namespace {

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file", path.string());
  Json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("parse failure: ") + e.what(), path.string());
  }
  return doc;
}

struct SubjectFeatures {
  std::string id;
  FeatureBundle bundle;
  std::vector<int> labels;
};

struct FeaturesFile {
  std::string config_hash;
  Json config;
  std::vector<SubjectFeatures> subjects;
};

FeaturesFile read_features_file(const fs::path& path) {
  const Json doc = read_json_file(path);
  if (doc.value("format_version", 0) != 1)
    throw InvalidInput("features file: unsupported format_version");
  FeaturesFile out;
  out.config_hash = doc.at("config_hash").get<std::string>();
  out.config = doc.at("config");
  for (const auto& s : doc.at("subjects")) {
    SubjectFeatures subject;
    subject.id = s.at("id").get<std::string>();
    subject.labels = s.at("labels").get<std::vector<int>>();
    subject.bundle = bundle_from_json(s.at("bundle"));
    if (static_cast<int>(subject.labels.size()) != subject.bundle.n_trials())
      throw InvalidInput("features file: label/trial mismatch for " + subject.id);
    out.subjects.push_back(std::move(subject));
  }
  if (out.subjects.empty()) throw InvalidInput("features file: no subjects");
  return out;
}

const SubjectFeatures& pick_subject(const FeaturesFile& file,
                                    const std::optional<std::string>& id) {
  if (!id) {
    if (file.subjects.size() != 1)
      throw InvalidInput(
          "features file holds several subjects; pass an explicit subject id");
    return file.subjects.front();
  }
  for (const auto& s : file.subjects)
    if (s.id == *id) return s;
  throw InvalidInput("subject not found in features file: " + *id);
}

void check_config_hash(const std::string& expected, const std::string& found,
                       bool allow_mismatch, const char* what) {
  if (expected != found && !allow_mismatch)
    throw InvalidInput(std::string(what) +
                       ": config hash mismatch (expected " + expected +
                       ", found " + found + "); rerun with matching config or "
                       "pass --allow-config-mismatch");
}

std::string format_probability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", p);
  return buf;
}

}  // namespace

void cmd_synth(const SynthArgs& args) {
  const std::vector<EpochSet> subjects = synth_subjects(args.params);
  std::vector<std::string> ids;
  for (int s = 0; s < args.params.subjects; ++s) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%02d", s + 1);
    ids.push_back(buf);
  }
  write_dataset(args.out_dir, ids, subjects);
}

void cmd_features(const FeaturesArgs& args) {
  const DatasetManifest manifest = read_manifest(args.dataset_dir);
  const ExtractConfig extract_cfg = args.config.extract_config();

  Json doc;
  doc["format_version"] = 1;
  doc["config_hash"] = args.config.hash();
  doc["config"] = args.config.to_json();
  Json subjects = Json::array();
  for (const SubjectMeta& meta : manifest.subjects) {
    const EpochSet epochs = load_subject(args.dataset_dir, meta);
    const FeatureBundle bundle = extract_features(epochs, extract_cfg);
    Json s;
    s["id"] = meta.id;
    s["labels"] = epochs.labels;
    s["bundle"] = bundle_to_json(bundle);
    subjects.push_back(std::move(s));
  }
  doc["subjects"] = std::move(subjects);
  write_file_atomic(args.out_path, doc.dump(2) + "\n");
}

void cmd_train(const TrainArgs& args) {
  const FeaturesFile file = read_features_file(args.features_path);
  check_config_hash(args.config.hash(), file.config_hash,
                    args.allow_config_mismatch, "train");
  const SubjectFeatures& subject = pick_subject(file, args.subject_id);
  for (int label : subject.labels)
    if (label < 0)
      throw InvalidInput("train: training set contains unlabeled trials");

  const EnsembleModel model =
      ensemble_fit(subject.bundle, subject.labels, args.config.ensemble_config());

  ModelFile out;
  out.config_hash = file.config_hash;
  out.seed = args.config.seed;
  if (subject.bundle.has(Estimator::Cov))
    out.train_cov_mean = mean_airm(subject.bundle.at(Estimator::Cov));
  out.model = model;
  write_file_atomic(args.out_model, model_file_to_json(out).dump(2) + "\n");
}

void cmd_predict(const PredictArgs& args) {
  const ModelFile model_file = model_file_from_json(read_json_file(args.model_path));
  const FeaturesFile features = read_features_file(args.features_path);
  check_config_hash(model_file.config_hash, features.config_hash,
                    args.allow_config_mismatch, "predict");
  const SubjectFeatures& subject = pick_subject(features, args.subject_id);

  for (Estimator est : model_file.model.estimator_order)
    if (!subject.bundle.has(est))
      throw InvalidInput(std::string("predict: features missing estimator ") +
                         estimator_name(est));

  FeatureBundle bundle = subject.bundle;
  if (model_file.train_cov_mean && bundle.has(Estimator::Cov)) {
    const SpdMatrix test_mean = mean_airm(bundle.at(Estimator::Cov));
    bundle = recenter_bundle(bundle, *model_file.train_cov_mean, test_mean);
  }

  std::string csv = "trial_index,label,prob_0,prob_1\n";
  for (int t = 0; t < bundle.n_trials(); ++t) {
    const Prediction p = ensemble_predict(model_file.model, bundle, t);
    csv += std::to_string(t) + "," + std::to_string(p.label) + "," +
           format_probability(p.probabilities(0)) + "," +
           format_probability(p.probabilities(1)) + "\n";
  }
  write_file_atomic(args.out_csv, csv);
}

void cmd_evaluate(const EvaluateArgs& args) {
  const DatasetManifest manifest = read_manifest(args.dataset_dir);
  const RunConfig& cfg = args.config;
  const ExtractConfig extract_cfg = cfg.extract_config();
  const std::string config_hash = cfg.hash();

  std::vector<std::unique_ptr<Pipeline>> pipelines;
  pipelines.push_back(make_fgmdm_pipeline(Estimator::Cov, cfg.metric, cfg.fgda_lambda));
  pipelines.push_back(make_fgmdm_pipeline(Estimator::Coh, cfg.metric, cfg.fgda_lambda));
  pipelines.push_back(make_fgmdm_pipeline(Estimator::PLV, cfg.metric, cfg.fgda_lambda));
  pipelines.push_back(make_csp_lda_pipeline(cfg.csp_filters));
  pipelines.push_back(make_ensemble_pipeline(cfg.ensemble_config()));

  Json doc;
  doc["format_version"] = 1;
  doc["config_hash"] = config_hash;
  doc["seed"] = cfg.seed;
  Json subject_list = Json::array();

  std::map<std::string, std::pair<double, double>> averages;  // id -> sums
  int subject_count = 0;

  for (const SubjectMeta& meta : manifest.subjects) {
    const EpochSet epochs = load_subject(args.dataset_dir, meta);
    for (int label : epochs.labels)
      if (label < 0)
        throw InvalidInput("evaluate: unlabeled trials in " + meta.id);
    const FeatureBundle bundle = extract_features(epochs, extract_cfg);
    const SplitPlan plan =
        make_splits(bundle.n_trials(), epochs.labels, cfg.cv_k, cfg.cv_repeats,
                    splitmix64(cfg.seed ^ 0x715a));

    Json subject;
    subject["id"] = meta.id;
    Json pipeline_reports = Json::array();
    for (const auto& pipeline : pipelines) {
      ScoreReport report =
          cross_validate(bundle, epochs.labels, *pipeline, plan, config_hash);
      pipeline_reports.push_back(score_report_to_json(report));
      auto& [kappa_sum, accuracy_sum] = averages[report.pipeline_id];
      kappa_sum += report.kappa_mean;
      accuracy_sum += report.accuracy_mean;
    }
    subject["pipelines"] = std::move(pipeline_reports);
    subject_list.push_back(std::move(subject));
    ++subject_count;
  }
  doc["subjects"] = std::move(subject_list);

  Json avg = Json::array();
  for (const auto& pipeline : pipelines) {
    const auto& [kappa_sum, accuracy_sum] = averages[pipeline->id()];
    avg.push_back(Json{{"pipeline", pipeline->id()},
                       {"kappa_mean", kappa_sum / subject_count},
                       {"accuracy_mean", accuracy_sum / subject_count}});
  }
  doc["pipeline_averages"] = std::move(avg);
  write_file_atomic(args.out_report, doc.dump(2) + "\n");
}

void cmd_transfer(const TransferArgs& args) {
  const DatasetManifest manifest = read_manifest(args.dataset_dir);
  if (manifest.subjects.size() < 2)
    throw InvalidInput("transfer: need at least 2 subjects");
  const RunConfig& cfg = args.config;
  const ExtractConfig extract_cfg = cfg.extract_config();

  std::vector<SubjectData> subjects;
  for (const SubjectMeta& meta : manifest.subjects) {
    const EpochSet epochs = load_subject(args.dataset_dir, meta);
    for (int label : epochs.labels)
      if (label < 0) throw InvalidInput("transfer: unlabeled trials in " + meta.id);
    SubjectData s;
    s.id = meta.id;
    s.bundle = extract_features(epochs, extract_cfg);
    s.labels = epochs.labels;
    subjects.push_back(std::move(s));
  }

  const LosoReport report =
      leave_one_subject_out(subjects, cfg.ensemble_config(), cfg.hash());

  Json doc;
  doc["format_version"] = 1;
  doc["config_hash"] = cfg.hash();
  doc["seed"] = cfg.seed;
  doc["subject_ids"] = report.subject_ids;
  doc["distance_grid"] = matrix_to_json(report.distance_grid);
  doc["kappa_grid"] = matrix_to_json(report.kappa_grid);
  doc["accuracy_grid"] = matrix_to_json(report.accuracy_grid);
  Json targets = Json::array();
  for (std::size_t t = 0; t < report.per_target.size(); ++t) {
    Json entry;
    entry["id"] = report.subject_ids[t];
    entry["selected_source"] = report.subject_ids[report.selected_source[t]];
    entry["report"] = score_report_to_json(report.per_target[t]);
    targets.push_back(std::move(entry));
  }
  doc["targets"] = std::move(targets);
  write_file_atomic(args.out_report, doc.dump(2) + "\n");
}

}  // namespace rigoletto
