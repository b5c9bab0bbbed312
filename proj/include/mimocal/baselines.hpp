// Classical linear calibration estimators and the closed-form lower bound
// the experiment reports plot alongside them. All fits operate on channel
// estimate pairs; predictions map an uplink estimate to a downlink response.
#ifndef MIMOCAL_BASELINES_HPP
#define MIMOCAL_BASELINES_HPP

#include <cstddef>
#include <vector>

#include "mimocal/channel_sim.hpp"
#include "mimocal/complex_matrix.hpp"

namespace mimocal {

enum class LinearCalibrationKind { kDiagonal, kFull };

// Fitted linear map. Prediction for user n:
//   diagonal: row n of H_DL_hat = a[n] * (col n of H_UL)^T * diag(d)
//   full:     row n of H_DL_hat = a[n] * (col n of H_UL)^T * B
struct LinearCalibration {
  LinearCalibrationKind kind = LinearCalibrationKind::kDiagonal;
  std::vector<cxd> a;  // per-user scales, length N
  std::vector<cxd> d;  // diagonal coefficients, length M (diagonal kind)
  ComplexMatrix B;     // M x M coupling (full kind)
};

// Global least squares under the diagonal model: per antenna m,
//   d_m = sum_{p,n} conj(u_mn) v_nm / sum_{p,n} |u_mn|^2,
// then (when N > 1) one complex scale per user by 1-D least squares.
// An antenna with zero uplink energy is degenerate.
LinearCalibration ls_diagonal_calibrate(const CalibrationDataset& dataset);

// Mean of per-antenna DL/UL ratios normalized to a reference antenna
// (1-based index in 1..M), followed by a single complex scale fit by least
// squares. Ratio samples with a near-zero denominator (modulus < 1e-9) are
// excluded; an antenna with every sample excluded is degenerate. Assumes
// diagonal hardware.
LinearCalibration argos_calibrate(const CalibrationDataset& dataset,
                                  std::size_t reference_antenna = 1);

// Unconstrained M x M map fitted over all users via the normal equations
// (U^H U) B = U^H V. Requires P*N >= M; rejects ill-conditioned systems.
LinearCalibration ls_full_calibrate(const CalibrationDataset& dataset);

// Applies a fitted calibration to one uplink estimate; returns N x M.
ComplexMatrix apply_linear_calibration(const LinearCalibration& calibration,
                                       const ComplexMatrix& h_ul);

// Inputs of the prediction-error lower bound. pilot_length is the uplink
// pilot length used at prediction time; M doubles as the downlink pilot
// length used when fitting; P is the number of fitted pairs.
struct CrbSpec {
  std::size_t M = 0;
  std::size_t P = 0;
  Snr snr = Snr::noiseless();
  std::size_t pilot_length = 0;
};

// Closed-form per-entry MSE lower bound; see docs/crb_bound.md for the
// derivation. Zero when noiseless; strictly decreasing in SNR and in P.
double crb_mse(const CrbSpec& spec);

}  // namespace mimocal

#endif  // MIMOCAL_BASELINES_HPP
