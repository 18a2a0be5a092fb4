#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rigoletto/config.hpp"
#include "rigoletto/connectivity.hpp"

namespace rigoletto {

struct SubjectMeta {
  std::string id;
  double fs_hz = 0.0;
  std::vector<std::string> channel_names;
  int trials = 0;
  int samples = 0;
  std::string data_file;
  std::string labels_file;
};

struct DatasetManifest {
  int format_version = 1;
  std::vector<SubjectMeta> subjects;
};

/// Reads and validates the manifest: version, field consistency,
/// and the exact expected byte size of every data file.
DatasetManifest read_manifest(const std::filesystem::path& dataset_dir);

/// Loads one subject's epochs (float32 storage widened to double).
EpochSet load_subject(const std::filesystem::path& dataset_dir,
                      const SubjectMeta& meta);

/// Writes manifest, raw data and label files for a complete dataset.
void write_dataset(const std::filesystem::path& dataset_dir,
                   const std::vector<std::string>& subject_ids,
                   const std::vector<EpochSet>& subjects);

struct SynthParams {
  int subjects = 2;
  int trials_per_class = 40;
  int channels = 12;
  double fs_hz = 512.0;
  double duration_s = 8.0;
  std::uint64_t seed = 0;
};

/// Two-class epochs whose classes differ in covariance structure and in
/// cross-channel phase coupling. Subjects come in pairs sharing a mixing
/// matrix up to a small congruence perturbation, so each subject has one
/// designated near-twin.
std::vector<EpochSet> synth_subjects(const SynthParams& params);

/// Atomic file write: content goes to a temp file that is renamed over the
/// destination only on success.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace rigoletto
