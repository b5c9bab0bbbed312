// Baseband channel synthesis: hardware profiles, OTA propagation, the TDD
// composition, the three synthetic nonlinear scenarios, pilot observation,
// and LS channel estimation. Conventions used throughout:
//   H_UL is M x N (BS antennas x users), H_DL is N x M.
//   Propagation is returned as an N x M matrix whose row n is the OTA
//   channel of user n.
#ifndef MIMOCAL_CHANNEL_SIM_HPP
#define MIMOCAL_CHANNEL_SIM_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mimocal/complex_matrix.hpp"
#include "mimocal/rng.hpp"

namespace mimocal {

// Signal-to-noise ratio in dB with a distinguished noiseless marker; the
// noiseless case never becomes a floating-point infinity in arithmetic.
struct Snr {
  static Snr db(double value);
  static Snr noiseless();

  bool is_noiseless() const { return noiseless_; }
  double value_db() const;       // errors on the noiseless marker
  double noise_variance() const; // 1/snr_linear, 0 when noiseless

  friend bool operator==(const Snr& a, const Snr& b);

 private:
  Snr(double db_value, bool marker) : db_(db_value), noiseless_(marker) {}
  double db_;
  bool noiseless_;
};

// Transceiver frequency responses of one BS/UE population draw.
// Invertibility invariant: |diag(R_UL)| and |t_UL| stay above 1e-9.
struct HardwareProfile {
  std::size_t M = 0;
  std::size_t N = 0;
  ComplexMatrix T_DL;       // M x M downlink transmit response
  ComplexMatrix R_UL;       // M x M uplink receive response
  std::vector<cxd> r_DL;    // per-user downlink receive scalars, length N
  std::vector<cxd> t_UL;    // per-user uplink transmit scalars, length N
  double crosstalk_level = 1.0;
};

enum class ScenarioKind { kLinearTdd, kLinearSynthetic, kTanhType, kPowerType };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& token);

// Generative description of one calibration world. Only the fields the kind
// demands are populated: LinearTdd carries `profile` (plus the cached
// per-user scales / coupling matrix derived from it); the synthetic kinds
// carry `c` and the unitary `D`.
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kLinearTdd;
  std::size_t M = 0;
  std::size_t N = 0;
  std::vector<cxd> c;                    // per-user scales, synthetic kinds
  ComplexMatrix D;                       // M x M unitary, synthetic kinds
  std::optional<HardwareProfile> profile;  // LinearTdd
  std::vector<cxd> tdd_a;                // cached r_DL/t_UL, LinearTdd
  ComplexMatrix tdd_B;                   // cached R_UL^{-T} T_DL, LinearTdd
  bool complex_tanh = false;             // TanhType: true complex tanh
};

// One UL/DL observation pair. snr records the level the estimates were
// formed under; the noiseless marker doubles as the ground-truth tag.
struct ChannelPair {
  ComplexMatrix h_ul;  // M x N
  ComplexMatrix h_dl;  // N x M
  Snr snr = Snr::noiseless();
};

struct CalibrationDataset {
  std::vector<ChannelPair> pairs;
  std::size_t M = 0;
  std::size_t N = 0;
  ScenarioSpec scenario;
};

// Estimates plus the noiseless truths they were formed from, index-aligned.
struct GeneratedData {
  CalibrationDataset estimates;
  CalibrationDataset truth;
};

struct TddHardwareOptions {
  double crosstalk_level = 1.0;
  bool unit_ue_responses = false;  // force t_UL = r_DL = 1 for all users
};

// Draws a hardware population: diagonal entries CN(0,1), off-diagonal
// entries CN(0, crosstalk^2) (exactly diagonal at crosstalk 0), UE scalars
// CN(0,1). Entries violating the invertibility invariant are redrawn.
HardwareProfile gen_hardware_profile(const Rng& rng, std::size_t M,
                                     std::size_t N,
                                     const TddHardwareOptions& options = {});

// N x M matrix of i.i.d. CN(0,1) OTA coefficients; row n is user n.
ComplexMatrix gen_propagation(const Rng& rng, std::size_t M, std::size_t N);

// Physical TDD composition:
//   row n of H_DL = r_DL[n] * c_n * T_DL,   col n of H_UL = R_UL * c_n^T * t_UL[n].
ChannelPair compose_baseband_tdd(const HardwareProfile& profile,
                                 const ComplexMatrix& c);

// Per-user reciprocity coefficients of a profile: a[n] = r_DL[n]/t_UL[n]
// and the coupling matrix B = R_UL^{-T} T_DL. Every LinearTdd pair obeys
// row n of H_DL = a[n] * (col n of H_UL)^T * B.
std::vector<cxd> tdd_user_scales(const HardwareProfile& profile);
ComplexMatrix tdd_coupling_matrix(const HardwareProfile& profile);

// Draws a full scenario description (hardware or synthetic parameters).
ScenarioSpec draw_scenario(const Rng& rng, ScenarioKind kind, std::size_t M,
                           std::size_t N, const TddHardwareOptions& options = {});

// Maps an M x N uplink channel to the N x M downlink response of the
// scenario's world. Rows are built per user from the matching UL column.
ComplexMatrix apply_scenario(const ScenarioSpec& scenario,
                             const ComplexMatrix& h_ul);

// dim x K pilot matrix: unit-modulus DFT rows with a random phase offset
// per row, X X^H = K I. Requires K >= dim.
ComplexMatrix gen_pilots(Rng& rng, std::size_t dim, std::size_t K);

// y = H x + W with W ~ CN(0, 1/snr_linear) per entry (no noise draw when
// noiseless). Pilot rows must be orthogonal: x x^H = K I.
ComplexMatrix observe_ul(const ComplexMatrix& h_ul, const ComplexMatrix& x_ul,
                         const Snr& snr, Rng& rng);
ComplexMatrix observe_dl(const ComplexMatrix& h_dl, const ComplexMatrix& x_dl,
                         const Snr& snr, Rng& rng);

// LS estimate y x^H / K; exact inversion under orthogonal pilots.
ComplexMatrix estimate_channel_ls(const ComplexMatrix& y,
                                  const ComplexMatrix& x);

// P independent pairs: fresh CN(0,1) H_UL, scenario-mapped H_DL, both sides
// passed through pilot observation and LS estimation at `snr`. Pilots use
// the default lengths (K = N uplink, K = M downlink). Noise streams are
// derived per pair from `base`, so two calls with the same base and
// different SNR share channels and unit noise (the scaling is exact).
GeneratedData build_dataset_with_truth(const Rng& base,
                                       const ScenarioSpec& scenario,
                                       std::size_t P, const Snr& snr);
CalibrationDataset build_dataset(const Rng& base, const ScenarioSpec& scenario,
                                 std::size_t P, const Snr& snr);

// Same generator with one SNR per pair (mixed-SNR training sets).
GeneratedData build_dataset_with_truth(const Rng& base,
                                       const ScenarioSpec& scenario,
                                       const std::vector<Snr>& pair_snr);

}  // namespace mimocal

#endif  // MIMOCAL_CHANNEL_SIM_HPP
