// Python bindings for the calibration core. Channel matrices cross the
// boundary as 2-D (or stacked 3-D) complex128 numpy arrays; scenario
// descriptors, trained models, and linear calibrations stay opaque.
#include <cstring>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include "mimocal/baselines.hpp"
#include "mimocal/calinet.hpp"
#include "mimocal/channel_sim.hpp"
#include "mimocal/complex_matrix.hpp"
#include "mimocal/errors.hpp"
#include "mimocal/experiments.hpp"
#include "mimocal/rng.hpp"
#include "mimocal/serialize.hpp"

namespace py = pybind11;
using namespace mimocal;

namespace {

using ComplexArray = py::array_t<cxd, py::array::c_style | py::array::forcecast>;

ComplexMatrix matrix_from_array(const ComplexArray& arr) {
  if (arr.ndim() != 2) throw ShapeError("expected a 2-D complex array");
  ComplexMatrix m(static_cast<std::size_t>(arr.shape(0)),
                  static_cast<std::size_t>(arr.shape(1)));
  std::memcpy(m.data().data(), arr.data(), sizeof(cxd) * m.size());
  return m;
}

py::array_t<cxd> array_from_matrix(const ComplexMatrix& m) {
  py::array_t<cxd> arr({m.rows(), m.cols()});
  std::memcpy(arr.mutable_data(), m.data().data(), sizeof(cxd) * m.size());
  return arr;
}

// (P, rows, cols) stack of channel matrices.
py::array_t<cxd> stack_from_pairs(const std::vector<ChannelPair>& pairs,
                                  bool uplink) {
  std::size_t P = pairs.size();
  if (P == 0) return py::array_t<cxd>({P, P, P});
  std::size_t rows = uplink ? pairs[0].h_ul.rows() : pairs[0].h_dl.rows();
  std::size_t cols = uplink ? pairs[0].h_ul.cols() : pairs[0].h_dl.cols();
  py::array_t<cxd> arr({P, rows, cols});
  cxd* out = arr.mutable_data();
  for (std::size_t p = 0; p < P; ++p) {
    const ComplexMatrix& m = uplink ? pairs[p].h_ul : pairs[p].h_dl;
    std::memcpy(out + p * rows * cols, m.data().data(), sizeof(cxd) * m.size());
  }
  return arr;
}

CalibrationDataset dataset_from_stacks(const ComplexArray& ul,
                                       const ComplexArray& dl,
                                       std::optional<double> snr_db,
                                       const std::string& scenario) {
  if (ul.ndim() != 3 || dl.ndim() != 3) {
    throw ShapeError("expected (P, rows, cols) complex arrays");
  }
  if (ul.shape(0) != dl.shape(0)) {
    throw ShapeError("uplink and downlink stacks disagree on pair count");
  }
  std::size_t P = static_cast<std::size_t>(ul.shape(0));
  std::size_t M = static_cast<std::size_t>(ul.shape(1));
  std::size_t N = static_cast<std::size_t>(ul.shape(2));
  if (static_cast<std::size_t>(dl.shape(1)) != N ||
      static_cast<std::size_t>(dl.shape(2)) != M) {
    throw ShapeError("downlink stack must be (P, N, M) for a (P, M, N) uplink");
  }
  CalibrationDataset dataset;
  dataset.M = M;
  dataset.N = N;
  dataset.scenario.kind = scenario_kind_from_string(scenario);
  dataset.scenario.M = M;
  dataset.scenario.N = N;
  Snr snr = snr_db ? Snr::db(*snr_db) : Snr::noiseless();
  dataset.pairs.resize(P);
  const cxd* ul_data = ul.data();
  const cxd* dl_data = dl.data();
  for (std::size_t p = 0; p < P; ++p) {
    ChannelPair& pair = dataset.pairs[p];
    pair.h_ul = ComplexMatrix(M, N);
    pair.h_dl = ComplexMatrix(N, M);
    std::memcpy(pair.h_ul.data().data(), ul_data + p * M * N,
                sizeof(cxd) * M * N);
    std::memcpy(pair.h_dl.data().data(), dl_data + p * M * N,
                sizeof(cxd) * M * N);
    pair.snr = snr;
  }
  return dataset;
}

Snr snr_from_optional(std::optional<double> snr_db) {
  return snr_db ? Snr::db(*snr_db) : Snr::noiseless();
}

TrainConfig train_config_from_kwargs(double learning_rate, std::size_t epochs,
                                     std::size_t batch_size,
                                     double validation_fraction,
                                     std::uint64_t seed,
                                     const std::vector<std::size_t>& layer_dims,
                                     const std::string& mode,
                                     const std::string& output_activation,
                                     double target_scale) {
  TrainConfig tc;
  tc.learning_rate = learning_rate;
  tc.epochs = epochs;
  tc.batch_size = batch_size;
  tc.validation_fraction = validation_fraction;
  tc.seed = seed;
  tc.layer_dims = layer_dims;
  if (mode == "per_user") {
    tc.mode = NetworkMode::kPerUser;
  } else if (mode == "joint") {
    tc.mode = NetworkMode::kJoint;
  } else {
    throw ConfigError("mode: expected per_user or joint, got '" + mode + "'");
  }
  if (output_activation == "linear") {
    tc.output_activation = Activation::kLinear;
  } else if (output_activation == "tanh") {
    tc.output_activation = Activation::kTanh;
  } else {
    throw ConfigError("output_activation: expected linear or tanh, got '" +
                      output_activation + "'");
  }
  tc.target_scale = target_scale;
  return tc;
}

py::dict history_to_dict(const TrainHistory& history) {
  std::vector<std::size_t> epoch;
  std::vector<double> train_mse, val_mse;
  for (const TrainHistory::Epoch& e : history.epochs) {
    epoch.push_back(e.epoch);
    train_mse.push_back(e.train_mse);
    val_mse.push_back(e.val_mse);
  }
  py::dict d;
  d["epoch"] = epoch;
  d["train_mse"] = train_mse;
  d["val_mse"] = val_mse;
  return d;
}

py::list report_to_rows(const MseReport& report) {
  py::list rows;
  for (const MseReport::Row& row : report.rows) {
    rows.append(py::make_tuple(row.scenario, row.method, row.snr_db, row.mse,
                               row.trials, row.seed));
  }
  return rows;
}

std::vector<std::string> methods_to_tokens(const std::vector<Method>& methods) {
  std::vector<std::string> out;
  for (Method m : methods) out.push_back(method_token(m));
  return out;
}

std::vector<Method> methods_from_tokens(const std::vector<std::string>& tokens) {
  std::vector<Method> out;
  for (const std::string& t : tokens) out.push_back(method_from_token(t));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "UL/DL massive MIMO calibration: channel synthesis, network "
            "training, classical baselines, and Monte Carlo sweeps";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("next_u64", &Rng::next_u64)
      .def("uniform01", &Rng::uniform01)
      .def("child",
           [](const Rng& rng, const std::string& label) { return rng.child(label); },
           py::arg("label"))
      .def("child",
           [](const Rng& rng, const std::string& label, std::uint64_t index) {
             return rng.child(label, index);
           },
           py::arg("label"), py::arg("index"));

  py::class_<ScenarioSpec>(m, "ScenarioSpec")
      .def_property_readonly("kind",
                             [](const ScenarioSpec& s) { return to_string(s.kind); })
      .def_readonly("M", &ScenarioSpec::M)
      .def_readonly("N", &ScenarioSpec::N);

  m.def(
      "draw_scenario",
      [](std::uint64_t seed, const std::string& kind, std::size_t M,
         std::size_t N, double crosstalk_level, bool unit_ue_responses,
         bool complex_tanh) {
        TddHardwareOptions hw;
        hw.crosstalk_level = crosstalk_level;
        hw.unit_ue_responses = unit_ue_responses;
        ScenarioSpec spec = draw_scenario(Rng(seed), scenario_kind_from_string(kind),
                                          M, N, hw);
        spec.complex_tanh = complex_tanh;
        return spec;
      },
      py::arg("seed"), py::arg("kind"), py::arg("M"), py::arg("N"),
      py::arg("crosstalk_level") = 1.0, py::arg("unit_ue_responses") = false,
      py::arg("complex_tanh") = false,
      "Draw a calibration world (hardware or synthetic parameters)");

  m.def(
      "apply_scenario",
      [](const ScenarioSpec& spec, const ComplexArray& h_ul) {
        return array_from_matrix(apply_scenario(spec, matrix_from_array(h_ul)));
      },
      py::arg("scenario"), py::arg("h_ul"),
      "Map an (M, N) uplink channel to the scenario's (N, M) downlink");

  m.def(
      "build_dataset",
      [](std::uint64_t seed, const ScenarioSpec& spec, std::size_t P,
         std::optional<double> snr_db) {
        GeneratedData gen =
            build_dataset_with_truth(Rng(seed), spec, P, snr_from_optional(snr_db));
        py::dict out;
        out["h_ul"] = stack_from_pairs(gen.estimates.pairs, true);
        out["h_dl"] = stack_from_pairs(gen.estimates.pairs, false);
        out["h_ul_true"] = stack_from_pairs(gen.truth.pairs, true);
        out["h_dl_true"] = stack_from_pairs(gen.truth.pairs, false);
        return out;
      },
      py::arg("seed"), py::arg("scenario"), py::arg("P"),
      py::arg("snr_db") = std::nullopt,
      "Pilot-estimated channel pairs plus their noiseless truths, as "
      "(P, M, N)/(P, N, M) complex stacks");

  m.def(
      "estimate_channel_ls",
      [](const ComplexArray& y, const ComplexArray& x) {
        return array_from_matrix(
            estimate_channel_ls(matrix_from_array(y), matrix_from_array(x)));
      },
      py::arg("y"), py::arg("x"), "LS channel estimate y x^H / K");

  m.def(
      "gen_pilots",
      [](std::uint64_t seed, std::size_t dim, std::size_t K) {
        Rng rng(seed);
        return array_from_matrix(gen_pilots(rng, dim, K));
      },
      py::arg("seed"), py::arg("dim"), py::arg("K"),
      "Unit-modulus orthogonal pilot matrix (dim x K)");

  py::class_<CalibrationModel>(m, "CalibrationModel")
      .def_property_readonly("mode",
                             [](const CalibrationModel& model) {
                               return model.mode == NetworkMode::kPerUser
                                          ? "per_user"
                                          : "joint";
                             })
      .def_readonly("M", &CalibrationModel::M)
      .def_readonly("N", &CalibrationModel::N);

  m.def(
      "train_model",
      [](const ComplexArray& h_ul, const ComplexArray& h_dl,
         double learning_rate, std::size_t epochs, std::size_t batch_size,
         double validation_fraction, std::uint64_t seed,
         const std::vector<std::size_t>& layer_dims, const std::string& mode,
         const std::string& output_activation, double target_scale) {
        CalibrationDataset dataset =
            dataset_from_stacks(h_ul, h_dl, std::nullopt, "linear_tdd");
        TrainConfig tc = train_config_from_kwargs(
            learning_rate, epochs, batch_size, validation_fraction, seed,
            layer_dims, mode, output_activation, target_scale);
        TrainResult result = train(dataset, tc);
        return py::make_tuple(result.model, history_to_dict(result.history));
      },
      py::arg("h_ul"), py::arg("h_dl"), py::arg("learning_rate") = 0.01,
      py::arg("epochs") = 256, py::arg("batch_size") = 4,
      py::arg("validation_fraction") = 0.4, py::arg("seed") = 1,
      py::arg("layer_dims") = std::vector<std::size_t>{},
      py::arg("mode") = "per_user", py::arg("output_activation") = "linear",
      py::arg("target_scale") = 1.0 / 3.0,
      "Train a network on (P, M, N) uplink and (P, N, M) downlink stacks; "
      "returns (model, history)");

  m.def(
      "predict",
      [](const CalibrationModel& model, const ComplexArray& h_ul) {
        return array_from_matrix(predict(model, matrix_from_array(h_ul)));
      },
      py::arg("model"), py::arg("h_ul"),
      "Predicted (N, M) downlink channel for one uplink estimate");

  m.def("save_model", [](const std::string& path, const CalibrationModel& model) {
    save_model(path, model);
  }, py::arg("path"), py::arg("model"));
  m.def("load_model", [](const std::string& path) { return load_model(path); },
        py::arg("path"));

  py::class_<LinearCalibration>(m, "LinearCalibration")
      .def_property_readonly("kind", [](const LinearCalibration& c) {
        return c.kind == LinearCalibrationKind::kDiagonal ? "diagonal" : "full";
      });

  m.def(
      "ls_diagonal_fit",
      [](const ComplexArray& h_ul, const ComplexArray& h_dl) {
        return ls_diagonal_calibrate(
            dataset_from_stacks(h_ul, h_dl, std::nullopt, "linear_tdd"));
      },
      py::arg("h_ul"), py::arg("h_dl"),
      "Diagonal LS calibration fit on estimate stacks");

  m.def(
      "argos_fit",
      [](const ComplexArray& h_ul, const ComplexArray& h_dl,
         std::size_t reference_antenna) {
        return argos_calibrate(
            dataset_from_stacks(h_ul, h_dl, std::nullopt, "linear_tdd"),
            reference_antenna);
      },
      py::arg("h_ul"), py::arg("h_dl"), py::arg("reference_antenna") = 1,
      "Reference-antenna ratio calibration fit (1-based reference index)");

  m.def(
      "ls_full_fit",
      [](const ComplexArray& h_ul, const ComplexArray& h_dl) {
        return ls_full_calibrate(
            dataset_from_stacks(h_ul, h_dl, std::nullopt, "linear_tdd"));
      },
      py::arg("h_ul"), py::arg("h_dl"),
      "Full-matrix LS calibration fit via the normal equations");

  m.def(
      "apply_calibration",
      [](const LinearCalibration& fit, const ComplexArray& h_ul) {
        return array_from_matrix(
            apply_linear_calibration(fit, matrix_from_array(h_ul)));
      },
      py::arg("calibration"), py::arg("h_ul"),
      "Predicted (N, M) downlink channel under a linear calibration");

  m.def(
      "crb_mse",
      [](std::size_t M, std::size_t P, std::optional<double> snr_db,
         std::size_t pilot_length) {
        return crb_mse(CrbSpec{M, P, snr_from_optional(snr_db), pilot_length});
      },
      py::arg("M"), py::arg("P"), py::arg("snr_db"), py::arg("pilot_length"),
      "Closed-form per-entry MSE lower bound");

  m.def(
      "save_dataset",
      [](const std::string& path, const ComplexArray& h_ul,
         const ComplexArray& h_dl, std::optional<double> snr_db,
         const std::string& scenario) {
        save_dataset(path, dataset_from_stacks(h_ul, h_dl, snr_db, scenario));
      },
      py::arg("path"), py::arg("h_ul"), py::arg("h_dl"),
      py::arg("snr_db") = std::nullopt, py::arg("scenario") = "linear_tdd");

  m.def(
      "load_dataset",
      [](const std::string& path) {
        CalibrationDataset dataset = load_dataset(path);
        py::dict out;
        out["h_ul"] = stack_from_pairs(dataset.pairs, true);
        out["h_dl"] = stack_from_pairs(dataset.pairs, false);
        out["scenario"] = to_string(dataset.scenario.kind);
        if (dataset.pairs.empty() || dataset.pairs[0].snr.is_noiseless()) {
          out["snr_db"] = py::none();
        } else {
          out["snr_db"] = dataset.pairs[0].snr.value_db();
        }
        return out;
      },
      py::arg("path"));

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("M", &ExperimentConfig::M)
      .def_readwrite("N", &ExperimentConfig::N)
      .def_readwrite("P", &ExperimentConfig::P)
      .def_property(
          "scenario",
          [](const ExperimentConfig& c) { return to_string(c.scenario); },
          [](ExperimentConfig& c, const std::string& kind) {
            c.scenario = scenario_kind_from_string(kind);
          })
      .def_readwrite("crosstalk_level", &ExperimentConfig::crosstalk_level)
      .def_readwrite("unit_ue_responses", &ExperimentConfig::unit_ue_responses)
      .def_readwrite("complex_tanh", &ExperimentConfig::complex_tanh)
      .def_readwrite("snr_grid_db", &ExperimentConfig::snr_grid_db)
      .def_readwrite("operating_snr_db", &ExperimentConfig::operating_snr_db)
      .def_readwrite("trials", &ExperimentConfig::trials)
      .def_property(
          "methods",
          [](const ExperimentConfig& c) { return methods_to_tokens(c.methods); },
          [](ExperimentConfig& c, const std::vector<std::string>& tokens) {
            c.methods = methods_from_tokens(tokens);
          })
      .def_readwrite("master_seed", &ExperimentConfig::master_seed)
      .def_readwrite("output_path", &ExperimentConfig::output_path)
      .def_readwrite("learning_rate", &ExperimentConfig::learning_rate)
      .def_readwrite("epochs", &ExperimentConfig::epochs)
      .def_readwrite("batch_size", &ExperimentConfig::batch_size)
      .def_readwrite("validation_fraction",
                     &ExperimentConfig::validation_fraction)
      .def_readwrite("layer_dims", &ExperimentConfig::layer_dims)
      .def_property(
          "network_mode",
          [](const ExperimentConfig& c) {
            return c.network_mode == NetworkMode::kPerUser ? "per_user" : "joint";
          },
          [](ExperimentConfig& c, const std::string& mode) {
            if (mode == "per_user") {
              c.network_mode = NetworkMode::kPerUser;
            } else if (mode == "joint") {
              c.network_mode = NetworkMode::kJoint;
            } else {
              throw ConfigError("network_mode: expected per_user or joint");
            }
          })
      .def_property(
          "output_activation",
          [](const ExperimentConfig& c) {
            return c.output_activation == Activation::kLinear ? "linear" : "tanh";
          },
          [](ExperimentConfig& c, const std::string& act) {
            if (act == "linear") {
              c.output_activation = Activation::kLinear;
            } else if (act == "tanh") {
              c.output_activation = Activation::kTanh;
            } else {
              throw ConfigError("output_activation: expected linear or tanh");
            }
          })
      .def_readwrite("target_scale", &ExperimentConfig::target_scale)
      .def_readwrite("train_once_mixed_snr",
                     &ExperimentConfig::train_once_mixed_snr)
      .def("__eq__", [](const ExperimentConfig& a, const ExperimentConfig& b) {
        return a == b;
      });

  m.def("default_config", &default_config);
  m.def("load_config", [](const std::string& path) { return load_config(path); },
        py::arg("path"));
  m.def("save_config",
        [](const std::string& path, const ExperimentConfig& config) {
          save_config(path, config);
        },
        py::arg("path"), py::arg("config"));
  m.def("validate_config", &validate_config, py::arg("config"));

  m.def("run_snr_sweep",
        [](const ExperimentConfig& config) {
          return report_to_rows(run_snr_sweep(config));
        },
        py::arg("config"),
        "Rows of (scenario, method, snr_db, mse, trials, seed)");
  m.def("run_nonlinear_suite",
        [](const ExperimentConfig& config) {
          return report_to_rows(run_nonlinear_suite(config));
        },
        py::arg("config"));
  m.def("run_training_convergence",
        [](const ExperimentConfig& config, const std::vector<double>& snrs) {
          ConvergenceReport report = run_training_convergence(config, snrs);
          py::list rows;
          for (const ConvergenceReport::Row& row : report.rows) {
            rows.append(py::make_tuple(row.snr_db, row.epoch, row.train_mse,
                                       row.val_mse));
          }
          return rows;
        },
        py::arg("config"), py::arg("snrs") = std::vector<double>{},
        "Rows of (snr_db, epoch, train_mse, val_mse)");
  m.def("run_coefficient_trace",
        [](const ExperimentConfig& config, std::size_t bs_antenna,
           std::size_t user, std::size_t num_samples) {
          TraceReport report =
              run_coefficient_trace(config, bs_antenna, user, num_samples);
          py::list rows;
          for (const TraceReport::Row& row : report.rows) {
            rows.append(py::make_tuple(row.sample, row.actual_sq_modulus,
                                       row.predicted_sq_modulus));
          }
          return rows;
        },
        py::arg("config"), py::arg("bs_antenna") = 2, py::arg("user") = 3,
        py::arg("num_samples") = 100,
        "Rows of (sample, actual_sq_modulus, predicted_sq_modulus)");

  m.attr("__version__") = "0.1.0";
}
