#include "rigoletto/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rigoletto/errors.hpp"
#include "rigoletto/rng.hpp"

namespace rigoletto {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing", tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed", tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + ec.message(), path.string());
}

DatasetManifest read_manifest(const fs::path& dataset_dir) {
  const fs::path manifest_path = dataset_dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest", manifest_path.string());
  Json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("manifest parse failure: ") + e.what(),
                  manifest_path.string());
  }

  DatasetManifest manifest;
  manifest.format_version = doc.value("format_version", 0);
  if (manifest.format_version != 1)
    throw InvalidInput("manifest: unsupported format_version");
  if (!doc.contains("subjects") || !doc["subjects"].is_array() ||
      doc["subjects"].empty())
    throw InvalidInput("manifest: no subjects");

  for (const auto& s : doc["subjects"]) {
    SubjectMeta meta;
    meta.id = s.at("id").get<std::string>();
    meta.fs_hz = s.at("fs_hz").get<double>();
    for (const auto& c : s.at("channels")) meta.channel_names.push_back(c);
    meta.trials = s.at("trials").get<int>();
    meta.samples = s.at("samples").get<int>();
    meta.data_file = s.at("data_file").get<std::string>();
    meta.labels_file = s.at("labels_file").get<std::string>();
    if (meta.trials < 1 || meta.samples < 2 || meta.channel_names.empty() ||
        !(meta.fs_hz > 0.0))
      throw InvalidInput("manifest: bad subject metadata for " + meta.id);

    const fs::path data_path = dataset_dir / meta.data_file;
    std::error_code ec;
    const auto size = fs::file_size(data_path, ec);
    if (ec) throw IoError("cannot stat data file", data_path.string());
    const std::uintmax_t expected = static_cast<std::uintmax_t>(meta.trials) *
                                    meta.channel_names.size() * meta.samples * 4;
    if (size != expected)
      throw IoError("data file size mismatch (expected " +
                        std::to_string(expected) + " bytes, found " +
                        std::to_string(size) + ")",
                    data_path.string());
    if (!fs::exists(dataset_dir / meta.labels_file))
      throw IoError("labels file missing", (dataset_dir / meta.labels_file).string());
    manifest.subjects.push_back(std::move(meta));
  }
  return manifest;
}

EpochSet load_subject(const fs::path& dataset_dir, const SubjectMeta& meta) {
  EpochSet out;
  out.fs_hz = meta.fs_hz;
  out.channel_names = meta.channel_names;
  const int n_ch = static_cast<int>(meta.channel_names.size());

  const fs::path data_path = dataset_dir / meta.data_file;
  std::ifstream in(data_path, std::ios::binary);
  if (!in) throw IoError("cannot open data file", data_path.string());
  std::vector<float> buffer(static_cast<std::size_t>(n_ch) * meta.samples);
  for (int t = 0; t < meta.trials; ++t) {
    in.read(reinterpret_cast<char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(float)));
    if (!in) throw IoError("short read in data file", data_path.string());
    Eigen::MatrixXd trial(n_ch, meta.samples);
    for (int c = 0; c < n_ch; ++c)
      for (int k = 0; k < meta.samples; ++k)
        trial(c, k) = static_cast<double>(
            buffer[static_cast<std::size_t>(c) * meta.samples + k]);
    out.trials.push_back(std::move(trial));
  }

  const fs::path labels_path = dataset_dir / meta.labels_file;
  std::ifstream lin(labels_path);
  if (!lin) throw IoError("cannot open labels file", labels_path.string());
  int label;
  while (lin >> label) out.labels.push_back(label);
  if (static_cast<int>(out.labels.size()) != meta.trials)
    throw InvalidInput("labels file length does not match trial count for " +
                       meta.id);
  out.validate();
  return out;
}

void write_dataset(const fs::path& dataset_dir,
                   const std::vector<std::string>& subject_ids,
                   const std::vector<EpochSet>& subjects) {
  if (subject_ids.size() != subjects.size())
    throw InvalidInput("write_dataset: id/subject count mismatch");
  std::error_code ec;
  fs::create_directories(dataset_dir, ec);
  if (ec) throw IoError("cannot create dataset directory", dataset_dir.string());

  Json manifest;
  manifest["format_version"] = 1;
  Json subject_list = Json::array();

  for (std::size_t s = 0; s < subjects.size(); ++s) {
    const EpochSet& e = subjects[s];
    e.validate();
    const std::string data_file = subject_ids[s] + "_data.f32";
    const std::string labels_file = subject_ids[s] + "_labels.txt";

    std::string raw;
    raw.reserve(static_cast<std::size_t>(e.n_trials()) * e.n_channels() *
                e.n_samples() * 4);
    for (const auto& trial : e.trials)
      for (int c = 0; c < e.n_channels(); ++c)
        for (int k = 0; k < e.n_samples(); ++k) {
          const float v = static_cast<float>(trial(c, k));
          const char* bytes = reinterpret_cast<const char*>(&v);
          raw.append(bytes, 4);
        }
    write_file_atomic(dataset_dir / data_file, raw);

    std::string labels;
    for (int label : e.labels) labels += std::to_string(label) + "\n";
    write_file_atomic(dataset_dir / labels_file, labels);

    Json meta;
    meta["id"] = subject_ids[s];
    meta["fs_hz"] = e.fs_hz;
    meta["channels"] = e.channel_names;
    meta["trials"] = e.n_trials();
    meta["samples"] = e.n_samples();
    meta["data_file"] = data_file;
    meta["labels_file"] = labels_file;
    subject_list.push_back(std::move(meta));
  }
  manifest["subjects"] = std::move(subject_list);
  write_file_atomic(dataset_dir / "manifest.json", manifest.dump(2) + "\n");
}

namespace {

// Draw a well-conditioned mixing perturbation I + scale/sqrt(n) * G.
Eigen::MatrixXd mixing_perturbation(Rng& rng, int n, double scale) {
  for (int attempt = 0; attempt < 16; ++attempt) {
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = rng.gaussian();
    Eigen::MatrixXd w =
        Eigen::MatrixXd::Identity(n, n) + (scale / std::sqrt(n)) * g;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(w);
    if (svd.singularValues()(n - 1) > 0.2) return w;
  }
  throw NumericFailure("synth_subjects: could not draw an invertible mixing");
}

}  // namespace

std::vector<EpochSet> synth_subjects(const SynthParams& params) {
  if (params.subjects < 1 || params.trials_per_class < 1 || params.channels < 2 ||
      !(params.fs_hz > 0.0) || !(params.duration_s > 0.0))
    throw InvalidInput("synth_subjects: bad parameters");

  const int n = params.channels;
  const int n_samples = static_cast<int>(std::lround(params.fs_hz * params.duration_s));
  const Rng master(params.seed);

  // Oscillator groups: first half of the montage locks at 11 Hz, second
  // half at 19 Hz. Classes swap which group is strongly driven.
  const int group_a_end = std::min(4, n / 2 > 0 ? n / 2 : 1);
  const int group_b_end = std::min(8, n);
  const double freq_a = 11.0, freq_b = 19.0;
  const double amp_strong = 2.5, amp_weak = 0.5;

  // Fixed per-channel oscillator gains shared by every subject.
  Rng gain_rng = master.split(1);
  std::vector<double> gain(n);
  for (int c = 0; c < n; ++c) gain[c] = gain_rng.uniform(0.8, 1.2);

  // Pair-level base mixings, plus a small within-pair perturbation.
  const int n_pairs = (params.subjects + 1) / 2;
  std::vector<Eigen::MatrixXd> pair_mixing;
  Rng pair_rng = master.split(2);
  for (int p = 0; p < n_pairs; ++p)
    pair_mixing.push_back(mixing_perturbation(pair_rng, n, 0.35));

  std::vector<EpochSet> subjects;
  for (int s = 0; s < params.subjects; ++s) {
    Rng subj_rng = master.split(100 + static_cast<std::uint64_t>(s));
    const Eigen::MatrixXd mixing =
        pair_mixing[s / 2] * mixing_perturbation(subj_rng, n, 0.02);

    EpochSet e;
    e.fs_hz = params.fs_hz;
    for (int c = 0; c < n; ++c) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "ch%02d", c + 1);
      e.channel_names.push_back(buf);
    }

    const int total_trials = 2 * params.trials_per_class;
    for (int t = 0; t < total_trials; ++t) {
      const int label = t % 2;
      Rng trial_rng = subj_rng.split(1000 + static_cast<std::uint64_t>(t));
      const double phase_a = trial_rng.uniform(0.0, 2.0 * M_PI);
      const double phase_b = trial_rng.uniform(0.0, 2.0 * M_PI);
      const double amp_a = label == 0 ? amp_strong : amp_weak;
      const double amp_b = label == 0 ? amp_weak : amp_strong;

      Eigen::MatrixXd u(n, n_samples);
      for (int c = 0; c < n; ++c) {
        // Class-dependent broadband variance on the last four channels.
        double sigma = 1.0;
        if (n >= 12) {
          if (label == 0 && (c == n - 4 || c == n - 3)) sigma = 1.8;
          if (label == 1 && (c == n - 2 || c == n - 1)) sigma = 1.8;
        }
        const double jitter = trial_rng.uniform(-0.15, 0.15);
        const bool in_a = c < group_a_end;
        const bool in_b = !in_a && c < group_b_end;
        for (int k = 0; k < n_samples; ++k) {
          double v = sigma * trial_rng.gaussian();
          const double time = k / params.fs_hz;
          if (in_a)
            v += amp_a * gain[c] * std::sin(2.0 * M_PI * freq_a * time + phase_a + jitter);
          if (in_b)
            v += amp_b * gain[c] * std::sin(2.0 * M_PI * freq_b * time + phase_b + jitter);
          u(c, k) = v;
        }
      }
      e.trials.push_back(mixing * u);
      e.labels.push_back(label);
    }
    subjects.push_back(std::move(e));
  }
  return subjects;
}

}  // namespace rigoletto
