#include "mimocal/experiments.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "mimocal/baselines.hpp"
#include "mimocal/errors.hpp"
#include "mimocal/serialize.hpp"

namespace mimocal {

namespace {

// Canonical row order; config.methods may list a subset in any order.
constexpr Method kAllMethods[] = {Method::kDnn, Method::kArgos,
                                  Method::kLsDiag, Method::kLsFull,
                                  Method::kCrb};

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  std::size_t begin = s.find_first_not_of(ws);
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(ws);
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void fail(int line_no, const std::string& message) {
  if (line_no > 0) {
    throw ConfigError("line " + std::to_string(line_no) + ": " + message,
                      line_no);
  }
  throw ConfigError(message);
}

std::uint64_t parse_u64_value(const std::string& key, const std::string& value,
                              int line_no) {
  errno = 0;
  char* end = nullptr;
  unsigned long long parsed = std::strtoull(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size() || errno != 0 ||
      value[0] == '-') {
    fail(line_no, key + ": expected an unsigned integer, got '" + value + "'");
  }
  return parsed;
}

double parse_double_value(const std::string& key, const std::string& value,
                          int line_no) {
  errno = 0;
  char* end = nullptr;
  double parsed = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size() || errno != 0) {
    fail(line_no, key + ": expected a number, got '" + value + "'");
  }
  return parsed;
}

bool parse_bool_value(const std::string& key, const std::string& value,
                      int line_no) {
  if (value == "true") return true;
  if (value == "false") return false;
  fail(line_no, key + ": expected true or false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::string current;
  std::stringstream stream(value);
  while (std::getline(stream, current, ',')) items.push_back(trim(current));
  if (!value.empty() && value.back() == ',') items.push_back("");
  return items;
}

std::vector<double> parse_double_list(const std::string& key,
                                      const std::string& value, int line_no) {
  std::vector<double> out;
  for (const std::string& item : split_list(value)) {
    out.push_back(parse_double_value(key, item, line_no));
  }
  if (out.empty()) fail(line_no, key + ": expected a comma-separated list");
  return out;
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    out += format_g17(values[i]);
  }
  return out;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

bool wants(const std::vector<Method>& methods, Method m) {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

// Requested methods in canonical order.
std::vector<Method> ordered_methods(const std::vector<Method>& methods) {
  std::vector<Method> out;
  for (Method m : kAllMethods) {
    if (wants(methods, m)) out.push_back(m);
  }
  return out;
}

TrainConfig train_config_from(const ExperimentConfig& config) {
  TrainConfig tc;
  tc.learning_rate = config.learning_rate;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.validation_fraction = config.validation_fraction;
  tc.layer_dims = config.layer_dims;
  tc.mode = config.network_mode;
  tc.output_activation = config.output_activation;
  tc.target_scale = config.target_scale;
  return tc;
}

CalibrationDataset subset_pairs(const CalibrationDataset& dataset,
                                const std::vector<std::size_t>& indices) {
  CalibrationDataset out;
  out.M = dataset.M;
  out.N = dataset.N;
  out.scenario = dataset.scenario;
  out.pairs.reserve(indices.size());
  for (std::size_t idx : indices) out.pairs.push_back(dataset.pairs[idx]);
  return out;
}

double eval_model(const CalibrationModel& model, const CalibrationDataset& est,
                  const CalibrationDataset& truth,
                  const std::vector<std::size_t>& indices) {
  double sum = 0.0;
  for (std::size_t idx : indices) {
    ComplexMatrix pred = predict(model, est.pairs[idx].h_ul);
    sum += mse_between(pred, truth.pairs[idx].h_dl, MseNorm::kMean);
  }
  return sum / static_cast<double>(indices.size());
}

double eval_calibration(const LinearCalibration& fit,
                        const CalibrationDataset& est,
                        const CalibrationDataset& truth,
                        const std::vector<std::size_t>& indices) {
  double sum = 0.0;
  for (std::size_t idx : indices) {
    ComplexMatrix pred = apply_linear_calibration(fit, est.pairs[idx].h_ul);
    sum += mse_between(pred, truth.pairs[idx].h_dl, MseNorm::kMean);
  }
  return sum / static_cast<double>(indices.size());
}

// Per-trial Monte Carlo work: one scenario draw, one pair split, one dataset
// per grid SNR (noise streams shared across SNRs so curves differ only by
// the noise scale). Returns mse[method][snr] for the given methods, which
// must exclude the closed-form bound.
std::vector<std::vector<double>> evaluate_trial(
    const ExperimentConfig& config, ScenarioKind kind, const Rng& trial_rng,
    const std::vector<Method>& methods) {
  const std::vector<double>& grid = config.snr_grid_db;
  std::vector<std::vector<double>> mse(
      methods.size(), std::vector<double>(grid.size(), 0.0));

  TddHardwareOptions hw;
  hw.crosstalk_level = config.crosstalk_level;
  hw.unit_ue_responses = config.unit_ue_responses;
  ScenarioSpec scenario = draw_scenario(trial_rng.child("scenario"), kind,
                                        config.M, config.N, hw);
  if (kind == ScenarioKind::kTanhType) scenario.complex_tanh = config.complex_tanh;

  PairSplit split = split_pairs(config.P, config.validation_fraction,
                                trial_rng.child("split"));
  Rng data_base = trial_rng.child("data");

  bool needs_fit = wants(methods, Method::kArgos) ||
                   wants(methods, Method::kLsDiag) ||
                   wants(methods, Method::kLsFull);

  TrainConfig tc = train_config_from(config);

  // Mixed-SNR mode trains the network once per trial on pairs whose SNR is
  // drawn uniformly in dB across the grid span; evaluation below still walks
  // the grid.
  CalibrationModel mixed_model;
  bool use_mixed = config.train_once_mixed_snr && wants(methods, Method::kDnn);
  if (use_mixed) {
    Rng mix_rng = trial_rng.child("mixed_snr");
    double lo = grid.front();
    double hi = grid.back();
    std::vector<Snr> pair_snr;
    pair_snr.reserve(config.P);
    for (std::size_t p = 0; p < config.P; ++p) {
      pair_snr.push_back(Snr::db(lo + (hi - lo) * mix_rng.uniform01()));
    }
    GeneratedData mixed = build_dataset_with_truth(data_base, scenario, pair_snr);
    tc.seed = trial_rng.child("train").key();
    mixed_model = train_with_split(mixed.estimates, tc, split).model;
  }

  for (std::size_t s = 0; s < grid.size(); ++s) {
    Snr snr = Snr::db(grid[s]);
    GeneratedData gen = build_dataset_with_truth(data_base, scenario, config.P, snr);

    // Prediction-time inputs may come from a different estimation SNR than
    // the fit; channels and unit noise are shared, only the scale moves.
    const CalibrationDataset* eval_est = &gen.estimates;
    GeneratedData gen_op;
    if (config.operating_snr_db && *config.operating_snr_db != grid[s]) {
      gen_op = build_dataset_with_truth(data_base, scenario, config.P,
                                        Snr::db(*config.operating_snr_db));
      eval_est = &gen_op.estimates;
    }

    CalibrationDataset train_set;
    if (needs_fit) train_set = subset_pairs(gen.estimates, split.train);

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      switch (methods[mi]) {
        case Method::kDnn: {
          CalibrationModel model;
          if (use_mixed) {
            model = mixed_model;
          } else {
            // SNR-independent seed: identical initialization and shuffle
            // sequence in every cell, so curves move only with the data.
            tc.seed = trial_rng.child("train").key();
            model = train_with_split(gen.estimates, tc, split).model;
          }
          mse[mi][s] = eval_model(model, *eval_est, gen.truth, split.val);
          break;
        }
        case Method::kArgos: {
          LinearCalibration fit = argos_calibrate(train_set);
          mse[mi][s] = eval_calibration(fit, *eval_est, gen.truth, split.val);
          break;
        }
        case Method::kLsDiag: {
          LinearCalibration fit = ls_diagonal_calibrate(train_set);
          mse[mi][s] = eval_calibration(fit, *eval_est, gen.truth, split.val);
          break;
        }
        case Method::kLsFull: {
          LinearCalibration fit = ls_full_calibrate(train_set);
          mse[mi][s] = eval_calibration(fit, *eval_est, gen.truth, split.val);
          break;
        }
        case Method::kCrb:
          throw StateError("evaluate_trial: closed-form bound is not a "
                           "Monte Carlo method");
      }
    }
  }
  return mse;
}

std::size_t train_split_size(const ExperimentConfig& config) {
  // Split sizes depend only on the pair count and fraction.
  return split_pairs(config.P, config.validation_fraction, Rng(0)).train.size();
}

}  // namespace

std::string method_token(Method method) {
  switch (method) {
    case Method::kDnn: return "dnn";
    case Method::kArgos: return "argos";
    case Method::kLsDiag: return "ls_diag";
    case Method::kLsFull: return "ls_full";
    case Method::kCrb: return "crb";
  }
  throw StateError("method_token: unknown method");
}

std::string method_label(Method method) {
  switch (method) {
    case Method::kDnn: return "DNN";
    case Method::kArgos: return "Argos";
    case Method::kLsDiag: return "LS-diag (NPC-class)";
    case Method::kLsFull: return "LS-full";
    case Method::kCrb: return "CRB";
  }
  throw StateError("method_label: unknown method");
}

Method method_from_token(const std::string& token) {
  for (Method m : kAllMethods) {
    if (method_token(m) == token) return m;
  }
  throw ConfigError("unknown method '" + token +
                    "' (expected dnn, argos, ls_diag, ls_full, or crb)");
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

namespace {

void apply_key(ExperimentConfig& config, const std::string& key,
               const std::string& value, int line_no) {
  if (key == "M") {
    config.M = parse_u64_value(key, value, line_no);
  } else if (key == "N") {
    config.N = parse_u64_value(key, value, line_no);
  } else if (key == "P") {
    config.P = parse_u64_value(key, value, line_no);
  } else if (key == "scenario") {
    try {
      config.scenario = scenario_kind_from_string(value);
    } catch (const std::invalid_argument& e) {
      fail(line_no, std::string("scenario: ") + e.what());
    }
  } else if (key == "crosstalk_level") {
    config.crosstalk_level = parse_double_value(key, value, line_no);
  } else if (key == "ue_response_mode") {
    if (value == "random") {
      config.unit_ue_responses = false;
    } else if (value == "unity") {
      config.unit_ue_responses = true;
    } else {
      fail(line_no, "ue_response_mode: expected random or unity, got '" +
                        value + "'");
    }
  } else if (key == "complex_tanh") {
    config.complex_tanh = parse_bool_value(key, value, line_no);
  } else if (key == "snr_grid_db") {
    config.snr_grid_db = parse_double_list(key, value, line_no);
  } else if (key == "operating_snr_db") {
    if (value == "same") {
      config.operating_snr_db.reset();
    } else {
      config.operating_snr_db = parse_double_value(key, value, line_no);
    }
  } else if (key == "trials") {
    config.trials = parse_u64_value(key, value, line_no);
  } else if (key == "methods") {
    config.methods.clear();
    for (const std::string& item : split_list(value)) {
      try {
        config.methods.push_back(method_from_token(item));
      } catch (const ConfigError& e) {
        fail(line_no, e.what());
      }
    }
  } else if (key == "master_seed") {
    config.master_seed = parse_u64_value(key, value, line_no);
  } else if (key == "output_path") {
    if (value.empty()) fail(line_no, "output_path: expected a path");
    config.output_path = value;
  } else if (key == "learning_rate") {
    config.learning_rate = parse_double_value(key, value, line_no);
  } else if (key == "epochs") {
    config.epochs = parse_u64_value(key, value, line_no);
  } else if (key == "batch_size") {
    config.batch_size = parse_u64_value(key, value, line_no);
  } else if (key == "validation_fraction") {
    config.validation_fraction = parse_double_value(key, value, line_no);
  } else if (key == "layer_dims") {
    config.layer_dims.clear();
    if (value != "auto") {
      for (const std::string& item : split_list(value)) {
        config.layer_dims.push_back(parse_u64_value(key, item, line_no));
      }
    }
  } else if (key == "network_mode") {
    if (value == "per_user") {
      config.network_mode = NetworkMode::kPerUser;
    } else if (value == "joint") {
      config.network_mode = NetworkMode::kJoint;
    } else {
      fail(line_no,
           "network_mode: expected per_user or joint, got '" + value + "'");
    }
  } else if (key == "output_activation") {
    if (value == "linear") {
      config.output_activation = Activation::kLinear;
    } else if (value == "tanh") {
      config.output_activation = Activation::kTanh;
    } else {
      fail(line_no,
           "output_activation: expected linear or tanh, got '" + value + "'");
    }
  } else if (key == "target_scale") {
    config.target_scale = parse_double_value(key, value, line_no);
  } else if (key == "train_once_mixed_snr") {
    config.train_once_mixed_snr = parse_bool_value(key, value, line_no);
  } else {
    fail(line_no, "unknown key '" + key + "'");
  }
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::set<std::string> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::string line = trim(raw);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(line_no, "expected 'key = value', got '" + line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "missing key before '='");
    if (!seen.insert(key).second) fail(line_no, "duplicate key '" + key + "'");
    apply_key(config, key, value, line_no);
  }
  validate_config(config);
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& config) {
  out << "# experiment configuration\n";
  out << "M = " << config.M << "\n";
  out << "N = " << config.N << "\n";
  out << "P = " << config.P << "\n";
  out << "scenario = " << to_string(config.scenario) << "\n";
  out << "crosstalk_level = " << format_g17(config.crosstalk_level) << "\n";
  out << "ue_response_mode = " << (config.unit_ue_responses ? "unity" : "random")
      << "\n";
  out << "complex_tanh = " << (config.complex_tanh ? "true" : "false") << "\n";
  out << "snr_grid_db = " << join_doubles(config.snr_grid_db) << "\n";
  out << "operating_snr_db = "
      << (config.operating_snr_db ? format_g17(*config.operating_snr_db)
                                  : std::string("same"))
      << "\n";
  out << "trials = " << config.trials << "\n";
  std::string methods;
  for (std::size_t i = 0; i < config.methods.size(); ++i) {
    if (i > 0) methods += ",";
    methods += method_token(config.methods[i]);
  }
  out << "methods = " << methods << "\n";
  out << "master_seed = " << config.master_seed << "\n";
  out << "output_path = " << config.output_path << "\n";
  out << "learning_rate = " << format_g17(config.learning_rate) << "\n";
  out << "epochs = " << config.epochs << "\n";
  out << "batch_size = " << config.batch_size << "\n";
  out << "validation_fraction = " << format_g17(config.validation_fraction)
      << "\n";
  if (config.layer_dims.empty()) {
    out << "layer_dims = auto\n";
  } else {
    out << "layer_dims = ";
    for (std::size_t i = 0; i < config.layer_dims.size(); ++i) {
      if (i > 0) out << ",";
      out << config.layer_dims[i];
    }
    out << "\n";
  }
  out << "network_mode = "
      << (config.network_mode == NetworkMode::kPerUser ? "per_user" : "joint")
      << "\n";
  out << "output_activation = "
      << (config.output_activation == Activation::kLinear ? "linear" : "tanh")
      << "\n";
  out << "target_scale = " << format_g17(config.target_scale) << "\n";
  out << "train_once_mixed_snr = "
      << (config.train_once_mixed_snr ? "true" : "false") << "\n";
}

void save_config(const std::string& path, const ExperimentConfig& config) {
  std::ofstream out = open_output(path);
  write_config(out, config);
  finish_output(out, path);
}

void validate_config(const ExperimentConfig& config) {
  if (config.M == 0) throw ConfigError("M must be at least 1");
  if (config.N == 0) throw ConfigError("N must be at least 1");
  if (config.P < 2) {
    throw ConfigError("P must be at least 2 (one training and one held-out pair)");
  }
  if (config.trials == 0) throw ConfigError("trials must be at least 1");
  if (config.epochs == 0) throw ConfigError("epochs must be at least 1");
  if (config.batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (!(config.crosstalk_level >= 0.0) ||
      !std::isfinite(config.crosstalk_level)) {
    throw ConfigError("crosstalk_level must be finite and non-negative");
  }
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw ConfigError("learning_rate must be finite and positive");
  }
  if (!(config.validation_fraction > 0.0 && config.validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie strictly between 0 and 1");
  }
  if (!(config.target_scale > 0.0) || !std::isfinite(config.target_scale)) {
    throw ConfigError("target_scale must be finite and positive");
  }
  if (config.snr_grid_db.empty()) {
    throw ConfigError("snr_grid_db must not be empty");
  }
  for (double v : config.snr_grid_db) {
    if (!std::isfinite(v)) throw ConfigError("snr_grid_db values must be finite");
  }
  for (std::size_t i = 1; i < config.snr_grid_db.size(); ++i) {
    if (!(config.snr_grid_db[i] > config.snr_grid_db[i - 1])) {
      throw ConfigError("snr_grid_db must be strictly increasing");
    }
  }
  if (config.operating_snr_db && !std::isfinite(*config.operating_snr_db)) {
    throw ConfigError("operating_snr_db must be finite");
  }
  if (config.methods.empty()) throw ConfigError("methods must not be empty");
  for (std::size_t i = 0; i < config.methods.size(); ++i) {
    for (std::size_t j = i + 1; j < config.methods.size(); ++j) {
      if (config.methods[i] == config.methods[j]) {
        throw ConfigError("methods lists '" + method_token(config.methods[i]) +
                          "' twice");
      }
    }
  }
  if (!config.layer_dims.empty()) {
    std::vector<std::size_t> expected = default_layer_dims(
        config.network_mode, config.M, config.N);
    if (config.layer_dims.size() < 2) {
      throw ConfigError("layer_dims needs at least an input and output size");
    }
    for (std::size_t d : config.layer_dims) {
      if (d == 0) throw ConfigError("layer_dims entries must be at least 1");
    }
    if (config.layer_dims.front() != expected.front() ||
        config.layer_dims.back() != expected.back()) {
      throw ConfigError(
          "layer_dims must start with " + std::to_string(expected.front()) +
          " and end with " + std::to_string(expected.back()) +
          " for this network_mode and channel shape");
    }
  }
}

void write_report_csv(std::ostream& out, const MseReport& report) {
  out << "scenario,method,snr_db,mse,trials,seed\n";
  for (const MseReport::Row& row : report.rows) {
    out << row.scenario << "," << row.method << "," << format_g17(row.snr_db)
        << "," << format_g17(row.mse) << "," << row.trials << "," << row.seed
        << "\n";
  }
}

void write_report_csv(const std::string& path, const MseReport& report) {
  std::ofstream out = open_output(path);
  write_report_csv(out, report);
  finish_output(out, path);
}

void write_convergence_csv(std::ostream& out, const ConvergenceReport& report) {
  out << "snr_db,epoch,train_mse,val_mse\n";
  for (const ConvergenceReport::Row& row : report.rows) {
    out << format_g17(row.snr_db) << "," << row.epoch << ","
        << format_g17(row.train_mse) << "," << format_g17(row.val_mse) << "\n";
  }
}

void write_convergence_csv(const std::string& path,
                           const ConvergenceReport& report) {
  std::ofstream out = open_output(path);
  write_convergence_csv(out, report);
  finish_output(out, path);
}

void write_trace_csv(std::ostream& out, const TraceReport& report) {
  out << "sample,actual_sq_modulus,predicted_sq_modulus\n";
  for (const TraceReport::Row& row : report.rows) {
    out << row.sample << "," << format_g17(row.actual_sq_modulus) << ","
        << format_g17(row.predicted_sq_modulus) << "\n";
  }
}

void write_trace_csv(const std::string& path, const TraceReport& report) {
  std::ofstream out = open_output(path);
  write_trace_csv(out, report);
  finish_output(out, path);
}

MseReport run_snr_sweep(const ExperimentConfig& config) {
  std::vector<std::size_t> order(config.trials);
  for (std::size_t t = 0; t < config.trials; ++t) order[t] = t;
  return run_snr_sweep_ordered(config, order);
}

MseReport run_snr_sweep_ordered(const ExperimentConfig& config,
                                const std::vector<std::size_t>& trial_order) {
  validate_config(config);
  std::vector<Method> methods = ordered_methods(config.methods);
  if (config.scenario != ScenarioKind::kLinearTdd) {
    for (Method m : methods) {
      if (m != Method::kDnn) {
        throw ConfigError("method '" + method_token(m) +
                          "' requires scenario linear_tdd");
      }
    }
  }

  if (trial_order.size() != config.trials) {
    throw std::invalid_argument("trial order must list every trial exactly once");
  }
  std::vector<bool> seen(config.trials, false);
  for (std::size_t t : trial_order) {
    if (t >= config.trials || seen[t]) {
      throw std::invalid_argument(
          "trial order must be a permutation of 0..trials-1");
    }
    seen[t] = true;
  }

  std::vector<Method> mc_methods;
  for (Method m : methods) {
    if (m != Method::kCrb) mc_methods.push_back(m);
  }

  const std::vector<double>& grid = config.snr_grid_db;
  Rng root(config.master_seed);

  // results[trial][method][snr]; reduced in trial-index order below so the
  // report is invariant to the execution order.
  std::vector<std::vector<std::vector<double>>> results(config.trials);
  if (!mc_methods.empty()) {
    for (std::size_t t : trial_order) {
      results[t] = evaluate_trial(config, config.scenario,
                                  root.child("trial", t), mc_methods);
    }
  }

  std::vector<std::vector<double>> mean(
      mc_methods.size(), std::vector<double>(grid.size(), 0.0));
  for (std::size_t t = 0; t < config.trials; ++t) {
    for (std::size_t mi = 0; mi < mc_methods.size(); ++mi) {
      for (std::size_t s = 0; s < grid.size(); ++s) {
        mean[mi][s] += results[t][mi][s];
      }
    }
  }
  for (auto& per_method : mean) {
    for (double& v : per_method) v /= static_cast<double>(config.trials);
  }

  MseReport report;
  std::string scenario_name = to_string(config.scenario);
  std::size_t mc_index = 0;
  for (Method m : methods) {
    if (m == Method::kCrb) {
      std::size_t train_count = train_split_size(config);
      for (std::size_t s = 0; s < grid.size(); ++s) {
        CrbSpec spec{config.M, train_count, Snr::db(grid[s]), config.N};
        report.rows.push_back({scenario_name, method_label(m), grid[s],
                               crb_mse(spec), 0, config.master_seed});
      }
      continue;
    }
    for (std::size_t s = 0; s < grid.size(); ++s) {
      report.rows.push_back({scenario_name, method_label(m), grid[s],
                             mean[mc_index][s], config.trials,
                             config.master_seed});
    }
    ++mc_index;
  }
  return report;
}

ConvergenceReport run_training_convergence(const ExperimentConfig& config,
                                           const std::vector<double>& snr_list) {
  validate_config(config);
  std::vector<double> snrs = snr_list.empty() ? config.snr_grid_db : snr_list;
  for (double v : snrs) {
    if (!std::isfinite(v)) throw ConfigError("convergence SNR values must be finite");
  }

  TddHardwareOptions hw;
  hw.crosstalk_level = config.crosstalk_level;
  hw.unit_ue_responses = config.unit_ue_responses;

  Rng trial_rng = Rng(config.master_seed).child("trial", 0);
  ScenarioSpec scenario = draw_scenario(trial_rng.child("scenario"),
                                        config.scenario, config.M, config.N, hw);
  if (config.scenario == ScenarioKind::kTanhType) {
    scenario.complex_tanh = config.complex_tanh;
  }
  PairSplit split = split_pairs(config.P, config.validation_fraction,
                                trial_rng.child("split"));
  Rng data_base = trial_rng.child("data");

  // Identical seed across SNRs: same initialization and shuffle sequence,
  // so curves differ only through the data's noise level.
  TrainConfig tc = train_config_from(config);
  tc.seed = trial_rng.child("train").key();

  ConvergenceReport report;
  for (double snr_db : snrs) {
    GeneratedData gen = build_dataset_with_truth(data_base, scenario, config.P,
                                                 Snr::db(snr_db));
    TrainResult result = train_with_split(gen.estimates, tc, split);
    for (const TrainHistory::Epoch& e : result.history.epochs) {
      report.rows.push_back({snr_db, e.epoch, e.train_mse, e.val_mse});
    }
  }
  return report;
}

MseReport run_nonlinear_suite(const ExperimentConfig& config) {
  validate_config(config);
  const ScenarioKind kinds[] = {ScenarioKind::kLinearSynthetic,
                                ScenarioKind::kTanhType,
                                ScenarioKind::kPowerType};
  const std::vector<double>& grid = config.snr_grid_db;
  std::vector<Method> dnn_only = {Method::kDnn};

  MseReport report;
  Rng root(config.master_seed);
  for (ScenarioKind kind : kinds) {
    Rng kind_root = root.child(to_string(kind));
    std::vector<double> mean(grid.size(), 0.0);
    for (std::size_t t = 0; t < config.trials; ++t) {
      std::vector<std::vector<double>> mse =
          evaluate_trial(config, kind, kind_root.child("trial", t), dnn_only);
      for (std::size_t s = 0; s < grid.size(); ++s) mean[s] += mse[0][s];
    }
    for (std::size_t s = 0; s < grid.size(); ++s) {
      report.rows.push_back({to_string(kind), method_label(Method::kDnn),
                             grid[s], mean[s] / static_cast<double>(config.trials),
                             config.trials, config.master_seed});
    }
  }
  return report;
}

TraceReport run_coefficient_trace(const ExperimentConfig& config,
                                  std::size_t bs_antenna, std::size_t user,
                                  std::size_t num_samples) {
  validate_config(config);
  if (bs_antenna < 1 || bs_antenna > config.M) {
    throw ConfigError("bs_antenna must lie in 1.." + std::to_string(config.M));
  }
  if (user < 1 || user > config.N) {
    throw ConfigError("user must lie in 1.." + std::to_string(config.N));
  }
  if (num_samples == 0) throw ConfigError("num_samples must be at least 1");

  double snr_db = config.operating_snr_db.value_or(20.0);
  Rng trial_rng = Rng(config.master_seed).child("trial", 0);
  ScenarioSpec scenario =
      draw_scenario(trial_rng.child("scenario"), ScenarioKind::kTanhType,
                    config.M, config.N);
  scenario.complex_tanh = config.complex_tanh;

  PairSplit split = split_pairs(config.P, config.validation_fraction,
                                trial_rng.child("split"));
  if (split.val.size() < num_samples) {
    throw ConfigError("num_samples (" + std::to_string(num_samples) +
                      ") exceeds the held-out pair count (" +
                      std::to_string(split.val.size()) + ")");
  }

  GeneratedData gen = build_dataset_with_truth(
      trial_rng.child("data"), scenario, config.P, Snr::db(snr_db));
  TrainConfig tc = train_config_from(config);
  tc.seed = trial_rng.child("train").key();
  CalibrationModel model = train_with_split(gen.estimates, tc, split).model;

  TraceReport report;
  for (std::size_t k = 0; k < num_samples; ++k) {
    std::size_t idx = split.val[k];
    ComplexMatrix pred = predict(model, gen.estimates.pairs[idx].h_ul);
    cxd actual = gen.truth.pairs[idx].h_dl(user - 1, bs_antenna - 1);
    cxd predicted = pred(user - 1, bs_antenna - 1);
    report.rows.push_back({k + 1, std::norm(actual), std::norm(predicted)});
  }
  return report;
}

}  // namespace mimocal
