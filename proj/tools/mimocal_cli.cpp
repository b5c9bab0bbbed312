// Command-line front end. Exit codes: 0 success, 2 configuration/usage
// error, 3 runtime failure.
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mimocal/calinet.hpp"
#include "mimocal/channel_sim.hpp"
#include "mimocal/errors.hpp"
#include "mimocal/experiments.hpp"
#include "mimocal/serialize.hpp"

namespace {

using namespace mimocal;

struct SharedArgs {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> trials;
  std::optional<std::string> methods;
};

void add_shared_options(CLI::App* cmd, SharedArgs& args) {
  cmd->add_option("--config", args.config_path,
                  "Experiment config file (defaults apply when omitted)");
  cmd->add_option("--seed", args.seed, "Override master_seed");
  cmd->add_option("--out", args.out, "Override output_path");
  cmd->add_option("--trials", args.trials, "Override trials");
  cmd->add_option("--methods", args.methods,
                  "Override methods (comma-separated tokens)");
}

ExperimentConfig resolve_config(const SharedArgs& args) {
  ExperimentConfig config =
      args.config_path ? load_config(*args.config_path) : default_config();
  if (args.seed) config.master_seed = *args.seed;
  if (args.out) config.output_path = *args.out;
  if (args.trials) config.trials = *args.trials;
  if (args.methods) {
    config.methods.clear();
    std::string token;
    std::stringstream stream(*args.methods);
    while (std::getline(stream, token, ',')) {
      config.methods.push_back(method_from_token(token));
    }
  }
  validate_config(config);
  return config;
}

Snr parse_snr_token(const std::string& token) {
  if (token == "inf" || token == "noiseless") return Snr::noiseless();
  errno = 0;
  char* end = nullptr;
  double parsed = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size() || errno != 0) {
    throw ConfigError("snr: expected a dB value or 'inf', got '" + token + "'");
  }
  return Snr::db(parsed);
}

TrainConfig cli_train_config(const ExperimentConfig& config, std::size_t M,
                             std::size_t N) {
  TrainConfig tc;
  tc.learning_rate = config.learning_rate;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.validation_fraction = config.validation_fraction;
  tc.seed = config.master_seed;
  tc.layer_dims = config.layer_dims;
  tc.mode = config.network_mode;
  tc.output_activation = config.output_activation;
  tc.target_scale = config.target_scale;
  if (!tc.layer_dims.empty()) {
    std::vector<std::size_t> expected = default_layer_dims(tc.mode, M, N);
    if (tc.layer_dims.front() != expected.front() ||
        tc.layer_dims.back() != expected.back()) {
      throw ConfigError("layer_dims does not match the dataset's channel shape");
    }
  }
  return tc;
}

ScenarioSpec cli_draw_scenario(const ExperimentConfig& config, const Rng& base) {
  TddHardwareOptions hw;
  hw.crosstalk_level = config.crosstalk_level;
  hw.unit_ue_responses = config.unit_ue_responses;
  ScenarioSpec scenario = draw_scenario(base.child("scenario"), config.scenario,
                                        config.M, config.N, hw);
  if (config.scenario == ScenarioKind::kTanhType) {
    scenario.complex_tanh = config.complex_tanh;
  }
  return scenario;
}

void report_written(const std::string& path, std::size_t rows) {
  std::cout << "wrote " << path << " (" << rows << " rows)\n";
}

int run(int argc, char** argv) {
  CLI::App app{"UL/DL massive MIMO calibration simulator and benchmarks"};
  app.require_subcommand(1);

  SharedArgs sweep_args, converge_args, scenarios_args, trace_args, gen_args,
      train_args, predict_args;

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Monte Carlo SNR sweep of all requested methods");
  add_shared_options(sweep, sweep_args);
  bool mixed_flag = false;
  sweep->add_flag("--train-once-mixed-snr", mixed_flag,
                  "Train one network per trial on mixed-SNR pairs");

  CLI::App* converge = app.add_subcommand(
      "converge", "Per-epoch training/validation MSE at each grid SNR");
  add_shared_options(converge, converge_args);

  CLI::App* scenarios = app.add_subcommand(
      "scenarios", "Network accuracy across the synthetic scenarios");
  add_shared_options(scenarios, scenarios_args);

  CLI::App* trace = app.add_subcommand(
      "trace", "Actual vs predicted squared modulus of one coefficient");
  add_shared_options(trace, trace_args);
  std::size_t trace_antenna = 2;
  std::size_t trace_user = 3;
  std::size_t trace_samples = 100;
  std::optional<double> trace_snr;
  trace->add_option("--antenna", trace_antenna, "BS antenna index (1-based)");
  trace->add_option("--user", trace_user, "User index (1-based)");
  trace->add_option("--samples", trace_samples, "Held-out samples to emit");
  trace->add_option("--snr", trace_snr, "Estimation SNR in dB (default 20)");

  CLI::App* gen = app.add_subcommand(
      "gen-dataset", "Synthesize a channel-pair dataset file");
  add_shared_options(gen, gen_args);
  std::string gen_snr = "20";
  gen->add_option("--snr", gen_snr, "Estimation SNR in dB, or 'inf'");

  CLI::App* train_cmd = app.add_subcommand(
      "train", "Train a network on a dataset file and save the model");
  add_shared_options(train_cmd, train_args);
  std::string train_dataset_path;
  train_cmd->add_option("dataset", train_dataset_path, "Dataset file")
      ->required();

  CLI::App* predict_cmd = app.add_subcommand(
      "predict", "Predict downlink channels for a dataset with a saved model");
  add_shared_options(predict_cmd, predict_args);
  std::string predict_model_path;
  std::string predict_dataset_path;
  predict_cmd->add_option("--model", predict_model_path, "Model file")
      ->required();
  predict_cmd->add_option("dataset", predict_dataset_path, "Dataset file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      return app.exit(e);
    }
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  if (sweep->parsed()) {
    ExperimentConfig config = resolve_config(sweep_args);
    if (mixed_flag) config.train_once_mixed_snr = true;
    MseReport report = run_snr_sweep(config);
    write_report_csv(config.output_path, report);
    report_written(config.output_path, report.rows.size());
  } else if (converge->parsed()) {
    ExperimentConfig config = resolve_config(converge_args);
    ConvergenceReport report = run_training_convergence(config);
    write_convergence_csv(config.output_path, report);
    report_written(config.output_path, report.rows.size());
  } else if (scenarios->parsed()) {
    ExperimentConfig config = resolve_config(scenarios_args);
    MseReport report = run_nonlinear_suite(config);
    write_report_csv(config.output_path, report);
    report_written(config.output_path, report.rows.size());
  } else if (trace->parsed()) {
    ExperimentConfig config = resolve_config(trace_args);
    if (trace_snr) config.operating_snr_db = *trace_snr;
    TraceReport report =
        run_coefficient_trace(config, trace_antenna, trace_user, trace_samples);
    write_trace_csv(config.output_path, report);
    report_written(config.output_path, report.rows.size());
  } else if (gen->parsed()) {
    ExperimentConfig config = resolve_config(gen_args);
    if (!gen_args.out) config.output_path = "dataset.txt";
    Snr snr = parse_snr_token(gen_snr);
    Rng base = Rng(config.master_seed).child("gen-dataset");
    ScenarioSpec scenario = cli_draw_scenario(config, base);
    CalibrationDataset dataset =
        build_dataset(base.child("data"), scenario, config.P, snr);
    save_dataset(config.output_path, dataset);
    report_written(config.output_path, dataset.pairs.size());
  } else if (train_cmd->parsed()) {
    ExperimentConfig config = resolve_config(train_args);
    if (!train_args.out) config.output_path = "model.txt";
    CalibrationDataset dataset = load_dataset(train_dataset_path);
    TrainConfig tc = cli_train_config(config, dataset.M, dataset.N);
    TrainResult result = train(dataset, tc);
    save_model(config.output_path, result.model);
    std::cout << "trained on " << dataset.pairs.size() << " pairs; final val mse "
              << format_g17(result.history.epochs.back().val_mse) << "\n";
    std::cout << "wrote " << config.output_path << "\n";
  } else if (predict_cmd->parsed()) {
    ExperimentConfig config = resolve_config(predict_args);
    if (!predict_args.out) config.output_path = "predictions.txt";
    CalibrationModel model = load_model(predict_model_path);
    CalibrationDataset dataset = load_dataset(predict_dataset_path);
    CalibrationDataset out = dataset;
    for (ChannelPair& pair : out.pairs) {
      pair.h_dl = predict(model, pair.h_ul);
    }
    save_dataset(config.output_path, out);
    report_written(config.output_path, out.pairs.size());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mimocal::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
