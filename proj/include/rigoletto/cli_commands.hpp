#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "rigoletto/config.hpp"
#include "rigoletto/dataset.hpp"

namespace rigoletto {

struct SynthArgs {
  std::filesystem::path out_dir;
  SynthParams params;
};

struct FeaturesArgs {
  std::filesystem::path dataset_dir;
  std::filesystem::path out_path;
  RunConfig config;
};

struct TrainArgs {
  std::filesystem::path features_path;
  std::filesystem::path out_model;
  std::optional<std::string> subject_id;  // defaults to the only subject
  RunConfig config;
  bool allow_config_mismatch = false;
};

struct PredictArgs {
  std::filesystem::path model_path;
  std::filesystem::path features_path;
  std::filesystem::path out_csv;
  std::optional<std::string> subject_id;
  bool allow_config_mismatch = false;
};

struct EvaluateArgs {
  std::filesystem::path dataset_dir;
  std::filesystem::path out_report;
  RunConfig config;
};

struct TransferArgs {
  std::filesystem::path dataset_dir;
  std::filesystem::path out_report;
  RunConfig config;
};

void cmd_synth(const SynthArgs& args);
void cmd_features(const FeaturesArgs& args);
void cmd_train(const TrainArgs& args);
void cmd_predict(const PredictArgs& args);
void cmd_evaluate(const EvaluateArgs& args);
void cmd_transfer(const TransferArgs& args);

}  // namespace rigoletto
