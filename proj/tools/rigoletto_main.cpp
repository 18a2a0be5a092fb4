#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "rigoletto/cli_commands.hpp"
#include "rigoletto/errors.hpp"
#include "rigoletto/manifold.hpp"

namespace {

using namespace rigoletto;

RunConfig resolve_config(const std::string& config_path, bool seed_set,
                         std::uint64_t seed) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
  if (seed_set) cfg.seed = seed;
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"Riemannian classification of covariance and functional-connectivity features"};
  app.require_subcommand(1);
  app.fallthrough();  // --config/--seed may follow the subcommand

  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  app.add_option("--config", config_path, "Path to a JSON run configuration")
      ->configurable(false);
  auto* seed_opt = app.add_option("--seed", seed, "Override the configured seed");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic two-class dataset");
  SynthArgs synth_args;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->add_option("--subjects", synth_args.params.subjects, "Subject count");
  synth->add_option("--trials-per-class", synth_args.params.trials_per_class,
                    "Trials per class");
  synth->add_option("--channels", synth_args.params.channels, "Channel count");
  synth->add_option("--fs", synth_args.params.fs_hz, "Sampling rate in Hz");
  synth->add_option("--duration", synth_args.params.duration_s,
                    "Trial duration in seconds");

  // features
  auto* features = app.add_subcommand("features", "Extract per-trial SPD features");
  FeaturesArgs features_args;
  std::string features_dataset, features_out;
  features->add_option("--dataset", features_dataset, "Dataset directory")->required();
  features->add_option("--out", features_out, "Output features file")->required();

  // train
  auto* train = app.add_subcommand("train", "Train the stacked ensemble on one subject");
  TrainArgs train_args;
  std::string train_features, train_out, train_subject;
  train->add_option("--features", train_features, "Features file")->required();
  train->add_option("--out", train_out, "Output model file")->required();
  train->add_option("--subject", train_subject, "Subject id (defaults to the only one)");
  train->add_flag("--allow-config-mismatch", train_args.allow_config_mismatch,
                  "Skip the config hash check");

  // predict
  auto* predict = app.add_subcommand("predict", "Predict labels for a subject's features");
  PredictArgs predict_args;
  std::string predict_model, predict_features, predict_out, predict_subject;
  predict->add_option("--model", predict_model, "Model file")->required();
  predict->add_option("--features", predict_features, "Features file")->required();
  predict->add_option("--out", predict_out, "Output predictions CSV")->required();
  predict->add_option("--subject", predict_subject, "Subject id");
  predict->add_flag("--allow-config-mismatch", predict_args.allow_config_mismatch,
                    "Skip the config hash check");

  // evaluate
  auto* evaluate = app.add_subcommand(
      "evaluate", "Cross-validated comparison of the classification pipelines");
  EvaluateArgs evaluate_args;
  std::string evaluate_dataset, evaluate_out;
  evaluate->add_option("--dataset", evaluate_dataset, "Dataset directory")->required();
  evaluate->add_option("--out", evaluate_out, "Output report file")->required();

  // transfer
  auto* transfer = app.add_subcommand(
      "transfer", "Leave-one-subject-out transfer with nearest-mean selection");
  TransferArgs transfer_args;
  std::string transfer_dataset, transfer_out;
  transfer->add_option("--dataset", transfer_dataset, "Dataset directory")->required();
  transfer->add_option("--out", transfer_out, "Output report file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  seed_set = seed_opt->count() > 0;

  try {
    if (synth->parsed()) {
      synth_args.out_dir = synth_out;
      const RunConfig cfg = resolve_config(config_path, seed_set, seed);
      synth_args.params.seed = cfg.seed;
      cmd_synth(synth_args);
    } else if (features->parsed()) {
      features_args.dataset_dir = features_dataset;
      features_args.out_path = features_out;
      features_args.config = resolve_config(config_path, seed_set, seed);
      cmd_features(features_args);
    } else if (train->parsed()) {
      train_args.features_path = train_features;
      train_args.out_model = train_out;
      if (!train_subject.empty()) train_args.subject_id = train_subject;
      train_args.config = resolve_config(config_path, seed_set, seed);
      cmd_train(train_args);
    } else if (predict->parsed()) {
      predict_args.model_path = predict_model;
      predict_args.features_path = predict_features;
      predict_args.out_csv = predict_out;
      if (!predict_subject.empty()) predict_args.subject_id = predict_subject;
      cmd_predict(predict_args);
    } else if (evaluate->parsed()) {
      evaluate_args.dataset_dir = evaluate_dataset;
      evaluate_args.out_report = evaluate_out;
      evaluate_args.config = resolve_config(config_path, seed_set, seed);
      cmd_evaluate(evaluate_args);
    } else if (transfer->parsed()) {
      transfer_args.dataset_dir = transfer_dataset;
      transfer_args.out_report = transfer_out;
      transfer_args.config = resolve_config(config_path, seed_set, seed);
      cmd_transfer(transfer_args);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const NumericOverflow& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const NumericFailure& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const ConvergenceFailure& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    // Remaining library errors concern the data itself.
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
