#include "mimocal/baselines.hpp"

#include <cmath>
#include <string>

#include "mimocal/errors.hpp"

namespace mimocal {
namespace {

constexpr double kRatioFloor = 1e-9;

void check_dataset(const CalibrationDataset& dataset, const char* who) {
  if (dataset.pairs.empty() || dataset.M == 0 || dataset.N == 0) {
    throw std::invalid_argument(std::string(who) + ": dataset is empty");
  }
  for (const ChannelPair& pair : dataset.pairs) {
    if (pair.h_ul.rows() != dataset.M || pair.h_ul.cols() != dataset.N ||
        pair.h_dl.rows() != dataset.N || pair.h_dl.cols() != dataset.M) {
      throw ShapeError(std::string(who) +
                       ": pair shapes disagree with the dataset M/N");
    }
  }
}

// One complex scale minimizing sum |v - s * u|^2 over the given samples.
cxd fit_scale(const std::vector<cxd>& u, const std::vector<cxd>& v,
              const char* who) {
  cxd num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    num += std::conj(u[i]) * v[i];
    den += std::norm(u[i]);
  }
  if (den == 0.0) {
    throw DegenerateDataError(std::string(who) +
                              ": zero energy in the scale fit");
  }
  return num / den;
}

}  // namespace

LinearCalibration ls_diagonal_calibrate(const CalibrationDataset& dataset) {
  check_dataset(dataset, "ls_diagonal_calibrate");
  const std::size_t M = dataset.M;
  const std::size_t N = dataset.N;
  LinearCalibration cal;
  cal.kind = LinearCalibrationKind::kDiagonal;
  cal.d.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    cxd num = 0.0;
    double den = 0.0;
    for (const ChannelPair& pair : dataset.pairs) {
      for (std::size_t n = 0; n < N; ++n) {
        num += std::conj(pair.h_ul(m, n)) * pair.h_dl(n, m);
        den += std::norm(pair.h_ul(m, n));
      }
    }
    if (den == 0.0) {
      throw DegenerateDataError(
          "ls_diagonal_calibrate: antenna " + std::to_string(m) +
          " has zero uplink energy");
    }
    cal.d[m] = num / den;
  }
  cal.a.assign(N, cxd(1.0, 0.0));
  if (N > 1) {
    // Second stage: per-user complex scale against the fitted diagonal.
    for (std::size_t n = 0; n < N; ++n) {
      cxd num = 0.0;
      double den = 0.0;
      for (const ChannelPair& pair : dataset.pairs) {
        for (std::size_t m = 0; m < M; ++m) {
          const cxd pred = cal.d[m] * pair.h_ul(m, n);
          num += std::conj(pred) * pair.h_dl(n, m);
          den += std::norm(pred);
        }
      }
      if (den == 0.0) {
        throw DegenerateDataError(
            "ls_diagonal_calibrate: user " + std::to_string(n) +
            " has zero uplink energy");
      }
      cal.a[n] = num / den;
    }
  }
  return cal;
}

LinearCalibration argos_calibrate(const CalibrationDataset& dataset,
                                  std::size_t reference_antenna) {
  check_dataset(dataset, "argos_calibrate");
  const std::size_t M = dataset.M;
  const std::size_t N = dataset.N;
  if (reference_antenna < 1 || reference_antenna > M) {
    throw std::invalid_argument(
        "argos_calibrate: reference antenna " +
        std::to_string(reference_antenna) + " outside 1.." + std::to_string(M));
  }
  const std::size_t ref = reference_antenna - 1;
  LinearCalibration cal;
  cal.kind = LinearCalibrationKind::kDiagonal;
  cal.d.assign(M, cxd(0.0, 0.0));
  std::vector<std::size_t> counts(M, 0);
  for (const ChannelPair& pair : dataset.pairs) {
    for (std::size_t n = 0; n < N; ++n) {
      const cxd u_ref = pair.h_ul(ref, n);
      if (std::abs(u_ref) < kRatioFloor) continue;
      const cxd ratio_ref = pair.h_dl(n, ref) / u_ref;
      if (std::abs(ratio_ref) < kRatioFloor) continue;
      for (std::size_t m = 0; m < M; ++m) {
        const cxd u = pair.h_ul(m, n);
        if (std::abs(u) < kRatioFloor) continue;
        cal.d[m] += (pair.h_dl(n, m) / u) / ratio_ref;
        ++counts[m];
      }
    }
  }
  for (std::size_t m = 0; m < M; ++m) {
    if (counts[m] == 0) {
      throw DegenerateDataError(
          "argos_calibrate: every ratio sample excluded for antenna " +
          std::to_string(m));
    }
    cal.d[m] /= static_cast<double>(counts[m]);
  }
  // Absolute scale: one complex coefficient fitted to all samples.
  std::vector<cxd> pred, actual;
  pred.reserve(dataset.pairs.size() * M * N);
  actual.reserve(dataset.pairs.size() * M * N);
  for (const ChannelPair& pair : dataset.pairs) {
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t m = 0; m < M; ++m) {
        pred.push_back(cal.d[m] * pair.h_ul(m, n));
        actual.push_back(pair.h_dl(n, m));
      }
    }
  }
  const cxd alpha = fit_scale(pred, actual, "argos_calibrate");
  cal.a.assign(N, alpha);
  return cal;
}

LinearCalibration ls_full_calibrate(const CalibrationDataset& dataset) {
  check_dataset(dataset, "ls_full_calibrate");
  const std::size_t M = dataset.M;
  const std::size_t N = dataset.N;
  const std::size_t rows = dataset.pairs.size() * N;
  if (rows < M) {
    throw IllConditionedError(
        "ls_full_calibrate: P*N=" + std::to_string(rows) +
        " observation rows cannot identify M=" + std::to_string(M) +
        " unknowns per column");
  }
  // Stacked rows U(row p*N+n) = (col n of H_UL)^T, V likewise from H_DL.
  ComplexMatrix u(rows, M), v(rows, M);
  std::size_t r = 0;
  for (const ChannelPair& pair : dataset.pairs) {
    for (std::size_t n = 0; n < N; ++n, ++r) {
      for (std::size_t m = 0; m < M; ++m) {
        u(r, m) = pair.h_ul(m, n);
        v(r, m) = pair.h_dl(n, m);
      }
    }
  }
  const ComplexMatrix uh = u.conj_transpose();
  LinearCalibration cal;
  cal.kind = LinearCalibrationKind::kFull;
  cal.B = solve_linear(matmul(uh, u), matmul(uh, v));
  cal.a.assign(N, cxd(1.0, 0.0));
  return cal;
}

ComplexMatrix apply_linear_calibration(const LinearCalibration& calibration,
                                       const ComplexMatrix& h_ul) {
  const std::size_t M = h_ul.rows();
  const std::size_t N = h_ul.cols();
  if (calibration.a.size() != N) {
    throw ShapeError("apply_linear_calibration: calibration has " +
                     std::to_string(calibration.a.size()) +
                     " user scales but h_ul has " + std::to_string(N) +
                     " users");
  }
  ComplexMatrix h_dl(N, M);
  if (calibration.kind == LinearCalibrationKind::kDiagonal) {
    if (calibration.d.size() != M) {
      throw ShapeError("apply_linear_calibration: diagonal has " +
                       std::to_string(calibration.d.size()) +
                       " entries but h_ul has " + std::to_string(M) +
                       " antennas");
    }
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t m = 0; m < M; ++m) {
        h_dl(n, m) = calibration.a[n] * h_ul(m, n) * calibration.d[m];
      }
    }
    return h_dl;
  }
  if (calibration.B.rows() != M || calibration.B.cols() != M) {
    throw ShapeError("apply_linear_calibration: coupling is " +
                     std::to_string(calibration.B.rows()) + "x" +
                     std::to_string(calibration.B.cols()) + " but h_ul has " +
                     std::to_string(M) + " antennas");
  }
  for (std::size_t n = 0; n < N; ++n) {
    const ComplexMatrix row =
        matmul(h_ul.col(n).transpose(), calibration.B);  // 1 x M
    h_dl.set_row(n, scale(row, calibration.a[n]));
  }
  return h_dl;
}

double crb_mse(const CrbSpec& spec) {
  if (spec.M == 0 || spec.P == 0 || spec.pilot_length == 0) {
    throw std::invalid_argument("crb_mse: M, P, pilot_length must be >= 1");
  }
  if (spec.snr.is_noiseless()) return 0.0;
  const double nv = spec.snr.noise_variance();
  // Per-entry LS estimation noise on each side; see docs/crb_bound.md.
  const double eps_ul = nv / static_cast<double>(spec.pilot_length);
  const double eps_dl = nv / static_cast<double>(spec.M);
  const double p = static_cast<double>(spec.P);
  return eps_ul / (1.0 + eps_ul) + (eps_ul + eps_dl) / p;
}

}  // namespace mimocal
