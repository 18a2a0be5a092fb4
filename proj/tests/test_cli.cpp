#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "rigoletto/cli_commands.hpp"
#include "rigoletto/serialize.hpp"

using namespace rigoletto;
using namespace rigoletto::testing;

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string stderr_text;
};

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path err_file =
      fs::temp_directory_path() / ("rigoletto_stderr_" + std::to_string(counter++));
  const std::string cmd = std::string(RIGOLETTO_CLI_PATH) + " " + args +
                          " >/dev/null 2>" + err_file.string();
  const int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WEXITSTATUS(status);
  std::ifstream in(err_file);
  std::stringstream ss;
  ss << in.rdbuf();
  result.stderr_text = ss.str();
  fs::remove(err_file);
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Scratch directory rebuilt per test run.
fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rigoletto_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Small, fast dataset: 6 channels, 2 s trials at 128 Hz.
fs::path write_small_config(const fs::path& dir, int repeats = 1) {
  const fs::path path = dir / "config.json";
  std::ofstream out(path);
  out << R"({
  "window": {"t0_s": 0.25, "t1_s": 2.0},
  "band": {"low_hz": 8.0, "high_hz": 30.0},
  "estimators": ["Cov", "Coh", "PLV"],
  "cv": {"k": 2, "repeats": )"
      << repeats << R"(},
  "seed": 11
})";
  return path;
}

std::string small_synth_args(const fs::path& out_dir, int subjects = 1) {
  return "synth --out " + out_dir.string() + " --subjects " +
         std::to_string(subjects) +
         " --trials-per-class 12 --channels 6 --fs 128 --duration 2.25 --seed 11";
}

}  // namespace

TEST_CASE("usage errors exit with code 1") {
  CHECK(run_cli("").exit_code == 1);
  CHECK(run_cli("unknown-subcommand").exit_code == 1);
  CHECK(run_cli("synth").exit_code == 1);  // missing --out
  CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("synth writes a valid, byte-deterministic dataset") {
  const fs::path dir = scratch_dir("synth");
  const fs::path a = dir / "a";
  const fs::path b = dir / "b";
  REQUIRE(run_cli(small_synth_args(a, 2)).exit_code == 0);
  REQUIRE(run_cli(small_synth_args(b, 2)).exit_code == 0);

  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  CHECK(slurp(a / "s01_data.f32") == slurp(b / "s01_data.f32"));
  CHECK(slurp(a / "s02_labels.txt") == slurp(b / "s02_labels.txt"));

  const DatasetManifest manifest = read_manifest(a);
  CHECK(manifest.subjects.size() == 2);
  CHECK(manifest.subjects[0].trials == 24);
  const EpochSet epochs = load_subject(a, manifest.subjects[0]);
  CHECK(epochs.n_channels() == 6);

  // Covariance means of the two classes are far apart on the manifold.
  ExtractConfig extract;
  extract.window_s.reset();
  extract.estimators = {Estimator::Cov};
  const FeatureBundle bundle = extract_features(epochs, extract);
  std::vector<SpdMatrix> class0, class1;
  for (int t = 0; t < bundle.n_trials(); ++t)
    (epochs.labels[t] == 0 ? class0 : class1).push_back(bundle.at(Estimator::Cov)[t]);
  const double gap = dist_airm(mean_airm(class0), mean_airm(class1));
  CHECK(gap >= 0.5);
}

TEST_CASE("features then train then predict round-trips deterministically") {
  const fs::path dir = scratch_dir("flow");
  const fs::path data = dir / "data";
  REQUIRE(run_cli(small_synth_args(data)).exit_code == 0);
  const fs::path config = write_small_config(dir);

  const fs::path feats = dir / "features.json";
  const fs::path feats2 = dir / "features2.json";
  REQUIRE(run_cli("features --dataset " + data.string() + " --out " + feats.string() +
                  " --config " + config.string())
              .exit_code == 0);
  REQUIRE(run_cli("features --dataset " + data.string() + " --out " +
                  feats2.string() + " --config " + config.string())
              .exit_code == 0);
  CHECK(slurp(feats) == slurp(feats2));

  // Feature archive carries the three configured estimator groups.
  {
    std::ifstream in(feats);
    Json doc;
    in >> doc;
    CHECK(doc["subjects"].size() == 1);
    CHECK(doc["subjects"][0]["bundle"]["features"].size() == 3);
  }

  const fs::path model = dir / "model.json";
  const fs::path model2 = dir / "model2.json";
  REQUIRE(run_cli("train --features " + feats.string() + " --out " + model.string() +
                  " --config " + config.string())
              .exit_code == 0);
  REQUIRE(run_cli("train --features " + feats.string() + " --out " +
                  model2.string() + " --config " + config.string())
              .exit_code == 0);
  CHECK(slurp(model) == slurp(model2));

  const fs::path csv = dir / "pred.csv";
  const fs::path csv2 = dir / "pred2.csv";
  REQUIRE(run_cli("predict --model " + model.string() + " --features " +
                  feats.string() + " --out " + csv.string())
              .exit_code == 0);
  REQUIRE(run_cli("predict --model " + model.string() + " --features " +
                  feats.string() + " --out " + csv2.string())
              .exit_code == 0);
  CHECK(slurp(csv) == slurp(csv2));

  // Re-running onto an existing output overwrites it with identical bytes.
  REQUIRE(run_cli("predict --model " + model.string() + " --features " +
                  feats.string() + " --out " + csv.string())
              .exit_code == 0);
  CHECK(slurp(csv) == slurp(csv2));

  // CSV shape: header plus one row per trial; probabilities sum to one and
  // the label matches the argmax.
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "trial_index,label,prob_0,prob_1");
  int rows = 0, correct = 0;
  std::string line;
  const DatasetManifest manifest = read_manifest(data);
  const EpochSet epochs = load_subject(data, manifest.subjects[0]);
  while (std::getline(in, line)) {
    int idx, label;
    double p0, p1;
    REQUIRE(std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &idx, &label, &p0, &p1) == 4);
    CHECK(idx == rows);
    CHECK(std::abs(p0 + p1 - 1.0) <= 1e-5);
    CHECK(label == (p1 > p0 ? 1 : 0));
    if (label == epochs.labels[idx]) ++correct;
    ++rows;
  }
  CHECK(rows == 24);
  // Training-set predictions on separable synthetic data are near perfect.
  CHECK(correct >= 23);
}

TEST_CASE("model files reload to identical predictions") {
  const fs::path dir = scratch_dir("roundtrip");
  const fs::path data = dir / "data";
  REQUIRE(run_cli(small_synth_args(data)).exit_code == 0);
  const fs::path config = write_small_config(dir);
  const fs::path feats = dir / "features.json";
  REQUIRE(run_cli("features --dataset " + data.string() + " --out " + feats.string() +
                  " --config " + config.string())
              .exit_code == 0);
  const fs::path model_path = dir / "model.json";
  REQUIRE(run_cli("train --features " + feats.string() + " --out " +
                  model_path.string() + " --config " + config.string())
              .exit_code == 0);

  std::ifstream in(model_path);
  Json doc;
  in >> doc;
  const ModelFile loaded = model_file_from_json(doc);
  const Json doc2 = model_file_to_json(loaded);
  const ModelFile reloaded = model_file_from_json(doc2);

  // Random SPD inputs: both copies must agree bit for bit.
  Rng rng(777);
  FeatureBundle probe;
  probe.dim = 6;
  for (Estimator est : {Estimator::Cov, Estimator::Coh, Estimator::PLV}) {
    std::vector<SpdMatrix> mats;
    for (int i = 0; i < 100; ++i) mats.push_back(random_spd(rng, 6));
    probe.features.emplace(est, std::move(mats));
  }
  for (int i = 0; i < 100; ++i) {
    const Prediction a = ensemble_predict(loaded.model, probe, i);
    const Prediction b = ensemble_predict(reloaded.model, probe, i);
    CHECK(a.label == b.label);
    CHECK(a.probabilities == b.probabilities);
  }
}

TEST_CASE("corrupt data files are rejected before any output is written") {
  const fs::path dir = scratch_dir("corrupt");
  const fs::path data = dir / "data";
  REQUIRE(run_cli(small_synth_args(data)).exit_code == 0);

  // Truncate the raw data file.
  fs::resize_file(data / "s01_data.f32", 100);

  const fs::path config = write_small_config(dir);
  const fs::path feats = dir / "features.json";
  const RunResult r = run_cli("features --dataset " + data.string() + " --out " +
                              feats.string() + " --config " + config.string());
  CHECK(r.exit_code == 2);
  CHECK_FALSE(fs::exists(feats));
  CHECK_FALSE(fs::exists(feats.string() + ".tmp"));
}

TEST_CASE("unknown config keys are rejected with the offending name") {
  const fs::path dir = scratch_dir("badconfig");
  const fs::path data = dir / "data";
  REQUIRE(run_cli(small_synth_args(data)).exit_code == 0);

  const fs::path config = dir / "config.json";
  {
    std::ofstream out(config);
    out << R"({"wnidow": {"t0_s": 0.0}})";
  }
  const RunResult r = run_cli("features --dataset " + data.string() + " --out " +
                              (dir / "f.json").string() + " --config " +
                              config.string());
  CHECK(r.exit_code == 1);
  CHECK(r.stderr_text.find("wnidow") != std::string::npos);
}

TEST_CASE("config hash mismatches are refused unless overridden") {
  const fs::path dir = scratch_dir("hashes");
  const fs::path data = dir / "data";
  REQUIRE(run_cli(small_synth_args(data)).exit_code == 0);
  const fs::path config = write_small_config(dir);
  const fs::path feats = dir / "features.json";
  REQUIRE(run_cli("features --dataset " + data.string() + " --out " + feats.string() +
                  " --config " + config.string())
              .exit_code == 0);

  // A different band changes the config hash.
  const fs::path other = dir / "other.json";
  {
    std::ofstream out(other);
    out << R"({"window": {"t0_s": 0.25, "t1_s": 2.0}, "band": {"low_hz": 9.0, "high_hz": 30.0}})";
  }
  const fs::path model = dir / "model.json";
  CHECK(run_cli("train --features " + feats.string() + " --out " + model.string() +
                " --config " + other.string())
            .exit_code == 2);
  CHECK(run_cli("train --features " + feats.string() + " --out " + model.string() +
                " --config " + other.string() + " --allow-config-mismatch")
            .exit_code == 0);
}

TEST_CASE("numeric failures exit with code 3") {
  const fs::path dir = scratch_dir("numeric");
  const fs::path data = dir / "data";
  REQUIRE(run_cli(small_synth_args(data)).exit_code == 0);
  const fs::path config = write_small_config(dir);
  const fs::path feats = dir / "features.json";
  REQUIRE(run_cli("features --dataset " + data.string() + " --out " + feats.string() +
                  " --config " + config.string())
              .exit_code == 0);

  // Level-1 class probabilities sum to one, so unregularized stacking hits a
  // singular normal-equation system.
  const fs::path bad = dir / "alpha_zero.json";
  {
    std::ofstream out(bad);
    out << R"({"window": {"t0_s": 0.25, "t1_s": 2.0}, "classifier": {"ridge_alpha": 0.0}})";
  }
  const RunResult r =
      run_cli("train --features " + feats.string() + " --out " +
              (dir / "model.json").string() + " --config " + bad.string() +
              " --allow-config-mismatch");
  CHECK(r.exit_code == 3);
}

TEST_CASE("training on unlabeled trials is rejected as a data error") {
  const fs::path dir = scratch_dir("unlabeled");
  const fs::path data = dir / "data";
  REQUIRE(run_cli(small_synth_args(data)).exit_code == 0);

  // Mark one trial as unlabeled.
  std::string labels = slurp(data / "s01_labels.txt");
  labels.replace(0, 1, "-1");
  std::ofstream(data / "s01_labels.txt", std::ios::trunc) << labels;

  const fs::path config = write_small_config(dir);
  const fs::path feats = dir / "features.json";
  REQUIRE(run_cli("features --dataset " + data.string() + " --out " + feats.string() +
                  " --config " + config.string())
              .exit_code == 0);
  const RunResult r = run_cli("train --features " + feats.string() + " --out " +
                              (dir / "model.json").string() + " --config " +
                              config.string());
  CHECK(r.exit_code == 2);
}

TEST_CASE("evaluate emits five pipelines per subject with recomputable means") {
  const fs::path dir = scratch_dir("evaluate");
  const fs::path data = dir / "data";
  REQUIRE(run_cli(small_synth_args(data)).exit_code == 0);
  const fs::path config = write_small_config(dir);

  const fs::path report = dir / "report.json";
  const fs::path report2 = dir / "report2.json";
  REQUIRE(run_cli("evaluate --dataset " + data.string() + " --out " +
                  report.string() + " --config " + config.string())
              .exit_code == 0);
  REQUIRE(run_cli("evaluate --dataset " + data.string() + " --out " +
                  report2.string() + " --config " + config.string())
              .exit_code == 0);
  CHECK(slurp(report) == slurp(report2));

  std::ifstream in(report);
  Json doc;
  in >> doc;
  REQUIRE(doc["subjects"].size() == 1);
  const Json& pipelines = doc["subjects"][0]["pipelines"];
  REQUIRE(pipelines.size() == 5);
  std::set<std::string> ids;
  for (const auto& p : pipelines) {
    ids.insert(p["pipeline"].get<std::string>());
    double acc = 0.0;
    for (const auto& k : p["fold_kappa"]) acc += k.get<double>();
    CHECK(p["kappa_mean"].get<double>() ==
          doctest::Approx(acc / p["fold_kappa"].size()).epsilon(1e-12));
  }
  CHECK(ids == std::set<std::string>{"fgmdm_Cov", "fgmdm_Coh", "fgmdm_PLV",
                                     "csp_lda", "ensemble"});
  CHECK(doc["pipeline_averages"].size() == 5);
}

TEST_CASE("transfer reports grids, selections, and is deterministic") {
  const fs::path dir = scratch_dir("transfer");
  const fs::path data = dir / "data";
  REQUIRE(run_cli(small_synth_args(data, 2)).exit_code == 0);
  const fs::path config = write_small_config(dir);

  const fs::path report = dir / "report.json";
  const fs::path report2 = dir / "report2.json";
  REQUIRE(run_cli("transfer --dataset " + data.string() + " --out " +
                  report.string() + " --config " + config.string())
              .exit_code == 0);
  REQUIRE(run_cli("transfer --dataset " + data.string() + " --out " +
                  report2.string() + " --config " + config.string())
              .exit_code == 0);
  CHECK(slurp(report) == slurp(report2));

  std::ifstream in(report);
  Json doc;
  in >> doc;
  const Eigen::MatrixXd dist_grid = matrix_from_json(doc["distance_grid"]);
  CHECK((dist_grid - dist_grid.transpose()).norm() < 1e-8);
  CHECK(dist_grid(0, 0) == 0.0);
  CHECK(dist_grid(1, 1) == 0.0);

  // Each target's selected source is the distance-row argmin over others.
  REQUIRE(doc["targets"].size() == 2);
  CHECK(doc["targets"][0]["selected_source"] == "s02");
  CHECK(doc["targets"][1]["selected_source"] == "s01");
}
