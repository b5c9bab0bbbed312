// Experiment harness: configuration file handling, Monte Carlo SNR sweeps,
// training-convergence traces, the nonlinear scenario suite, and the
// coefficient trace. All runners are deterministic in (config, master_seed):
// per-trial streams derive from (master_seed, trial index, role) and trial
// results are reduced in trial-index order regardless of execution order.
#ifndef MIMOCAL_EXPERIMENTS_HPP
#define MIMOCAL_EXPERIMENTS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mimocal/calinet.hpp"
#include "mimocal/channel_sim.hpp"

namespace mimocal {

enum class Method { kDnn, kArgos, kLsDiag, kLsFull, kCrb };

// Machine token used by --methods and config files.
std::string method_token(Method method);
// Curve label used in report rows.
std::string method_label(Method method);
Method method_from_token(const std::string& token);

struct ExperimentConfig {
  std::size_t M = 32;
  std::size_t N = 4;
  std::size_t P = 10240;
  ScenarioKind scenario = ScenarioKind::kLinearTdd;
  double crosstalk_level = 1.0;
  bool unit_ue_responses = false;
  bool complex_tanh = false;
  std::vector<double> snr_grid_db = {0, 5, 10, 15, 20, 25, 30, 35, 40};
  // Estimation SNR used for prediction-time inputs; unset means "same as
  // the training cell".
  std::optional<double> operating_snr_db;
  std::size_t trials = 100;
  std::vector<Method> methods = {Method::kDnn, Method::kArgos, Method::kLsDiag,
                                 Method::kLsFull, Method::kCrb};
  std::uint64_t master_seed = 1;
  std::string output_path = "report.csv";
  // Network training settings (one network configuration per run).
  double learning_rate = 0.01;
  std::size_t epochs = 256;
  std::size_t batch_size = 4;
  double validation_fraction = 0.4;
  std::vector<std::size_t> layer_dims;  // empty = auto
  NetworkMode network_mode = NetworkMode::kPerUser;
  Activation output_activation = Activation::kLinear;
  double target_scale = 1.0 / 3.0;
  bool train_once_mixed_snr = false;

  friend bool operator==(const ExperimentConfig&,
                         const ExperimentConfig&) = default;
};

// Table defaults; equals ExperimentConfig{}.
ExperimentConfig default_config();

// Line-oriented "key = value" files; '#' starts a comment, lists are
// comma-separated. write_config emits every recognized key, so a saved
// file doubles as the key reference. An empty file yields the defaults.
// Unknown keys, malformed lines, invalid values, and duplicate keys raise
// ConfigError naming the key (and line where known).
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
void write_config(std::ostream& out, const ExperimentConfig& config);
void save_config(const std::string& path, const ExperimentConfig& config);

// Field-level checks shared by parse and the runners (ConfigError).
void validate_config(const ExperimentConfig& config);

struct MseReport {
  struct Row {
    std::string scenario;
    std::string method;
    double snr_db;
    double mse;
    std::size_t trials;
    std::uint64_t seed;
  };
  std::vector<Row> rows;
};

struct ConvergenceReport {
  struct Row {
    double snr_db;
    std::size_t epoch;
    double train_mse;
    double val_mse;
  };
  std::vector<Row> rows;
};

struct TraceReport {
  struct Row {
    std::size_t sample;  // 1-based
    double actual_sq_modulus;
    double predicted_sq_modulus;
  };
  std::vector<Row> rows;
};

void write_report_csv(std::ostream& out, const MseReport& report);
void write_report_csv(const std::string& path, const MseReport& report);
void write_convergence_csv(std::ostream& out, const ConvergenceReport& report);
void write_convergence_csv(const std::string& path,
                           const ConvergenceReport& report);
void write_trace_csv(std::ostream& out, const TraceReport& report);
void write_trace_csv(const std::string& path, const TraceReport& report);

// Monte Carlo sweep over config.snr_grid_db: per trial and SNR, fits every
// requested method on the training split and evaluates prediction MSE
// (per-entry mean) on the held-out split against the noiseless downlink
// truth. Averages over trials; CRB rows come from the closed form.
MseReport run_snr_sweep(const ExperimentConfig& config);

// Same sweep with trials executed in the given order (a permutation of
// 0..trials-1); results are identical to run_snr_sweep by construction.
MseReport run_snr_sweep_ordered(const ExperimentConfig& config,
                                const std::vector<std::size_t>& trial_order);

// One training run per SNR with identical architecture and seed; per-epoch
// train/validation MSE. Uses config.snr_grid_db when snr_list is empty.
ConvergenceReport run_training_convergence(
    const ExperimentConfig& config, const std::vector<double>& snr_list = {});

// Network-only sweep over the three synthetic scenarios.
MseReport run_nonlinear_suite(const ExperimentConfig& config);

// Trains on the split-tanh scenario at the trace SNR (operating_snr_db,
// else 20 dB) and emits actual vs predicted squared modulus of one downlink
// coefficient over held-out samples. Indices are 1-based.
TraceReport run_coefficient_trace(const ExperimentConfig& config,
                                  std::size_t bs_antenna = 2,
                                  std::size_t user = 3,
                                  std::size_t num_samples = 100);

}  // namespace mimocal

#endif  // MIMOCAL_EXPERIMENTS_HPP
