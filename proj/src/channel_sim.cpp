#include "mimocal/channel_sim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mimocal/errors.hpp"

namespace mimocal {
namespace {

constexpr double kInvertibilityFloor = 1e-9;

std::string shape_str(const ComplexMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Rejects pilot matrices whose rows are not orthogonal with squared norm K.
void require_orthogonal_pilots(const ComplexMatrix& x, const char* who) {
  const double k = static_cast<double>(x.cols());
  const ComplexMatrix gram = matmul(x, x.conj_transpose());
  for (std::size_t r = 0; r < gram.rows(); ++r) {
    for (std::size_t c = 0; c < gram.cols(); ++c) {
      const cxd want = r == c ? cxd(k, 0.0) : cxd(0.0, 0.0);
      if (std::abs(gram(r, c) - want) > 1e-8 * std::max(1.0, k)) {
        throw PilotError(std::string(who) +
                         ": pilot rows are not orthogonal (x x^H != K I)");
      }
    }
  }
}

cxd redraw_above_floor(Rng& rng) {
  cxd z = rng.complex_gaussian_unit();
  while (std::abs(z) <= kInvertibilityFloor) z = rng.complex_gaussian_unit();
  return z;
}

}  // namespace

Snr Snr::db(double value) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument("Snr::db: value must be finite (use "
                                "Snr::noiseless() for the noiseless marker)");
  }
  return Snr(value, false);
}

Snr Snr::noiseless() { return Snr(0.0, true); }

double Snr::value_db() const {
  if (noiseless_) throw StateError("Snr: noiseless marker has no dB value");
  return db_;
}

double Snr::noise_variance() const {
  if (noiseless_) return 0.0;
  return std::pow(10.0, -db_ / 10.0);
}

bool operator==(const Snr& a, const Snr& b) {
  if (a.noiseless_ != b.noiseless_) return false;
  return a.noiseless_ || a.db_ == b.db_;
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kLinearTdd: return "linear_tdd";
    case ScenarioKind::kLinearSynthetic: return "linear_synthetic";
    case ScenarioKind::kTanhType: return "tanh_type";
    case ScenarioKind::kPowerType: return "power_type";
  }
  throw std::invalid_argument("to_string: unknown ScenarioKind");
}

ScenarioKind scenario_kind_from_string(const std::string& token) {
  if (token == "linear_tdd") return ScenarioKind::kLinearTdd;
  if (token == "linear_synthetic") return ScenarioKind::kLinearSynthetic;
  if (token == "tanh_type") return ScenarioKind::kTanhType;
  if (token == "power_type") return ScenarioKind::kPowerType;
  throw ScenarioError("unknown scenario kind '" + token + "'");
}

HardwareProfile gen_hardware_profile(const Rng& rng, std::size_t M,
                                     std::size_t N,
                                     const TddHardwareOptions& options) {
  if (M == 0 || N == 0) {
    throw std::invalid_argument("gen_hardware_profile: M and N must be >= 1");
  }
  if (options.crosstalk_level < 0.0 || options.crosstalk_level > 1.0 ||
      !std::isfinite(options.crosstalk_level)) {
    throw std::invalid_argument(
        "gen_hardware_profile: crosstalk_level must lie in [0, 1]");
  }
  HardwareProfile profile;
  profile.M = M;
  profile.N = N;
  profile.crosstalk_level = options.crosstalk_level;

  Rng t_stream = rng.child("T_DL");
  profile.T_DL = sample_complex_gaussian(t_stream, M, M, 1.0);
  Rng r_stream = rng.child("R_UL");
  profile.R_UL = sample_complex_gaussian(r_stream, M, M, 1.0);
  // Off-diagonal responses scale with the crosstalk level; 0 is exactly
  // diagonal. Scaling (not conditional sampling) keeps streams aligned
  // across crosstalk settings.
  for (std::size_t r = 0; r < M; ++r) {
    for (std::size_t c = 0; c < M; ++c) {
      if (r != c) {
        profile.T_DL(r, c) *= options.crosstalk_level;
        profile.R_UL(r, c) *= options.crosstalk_level;
      }
    }
  }
  // Invertibility invariant: uplink receive diagonal stays off zero.
  for (std::size_t m = 0; m < M; ++m) {
    while (std::abs(profile.R_UL(m, m)) <= kInvertibilityFloor) {
      profile.R_UL(m, m) = r_stream.complex_gaussian_unit();
    }
  }

  if (options.unit_ue_responses) {
    profile.r_DL.assign(N, cxd(1.0, 0.0));
    profile.t_UL.assign(N, cxd(1.0, 0.0));
  } else {
    Rng rdl_stream = rng.child("r_DL");
    Rng tul_stream = rng.child("t_UL");
    profile.r_DL.resize(N);
    profile.t_UL.resize(N);
    for (std::size_t n = 0; n < N; ++n) {
      profile.r_DL[n] = rdl_stream.complex_gaussian_unit();
      profile.t_UL[n] = redraw_above_floor(tul_stream);
    }
  }
  return profile;
}

ComplexMatrix gen_propagation(const Rng& rng, std::size_t M, std::size_t N) {
  if (M == 0 || N == 0) {
    throw std::invalid_argument("gen_propagation: M and N must be >= 1");
  }
  Rng stream = rng.child("propagation");
  return sample_complex_gaussian(stream, N, M, 1.0);
}

ChannelPair compose_baseband_tdd(const HardwareProfile& profile,
                                 const ComplexMatrix& c) {
  if (c.rows() != profile.N || c.cols() != profile.M) {
    throw ShapeError("compose_baseband_tdd: propagation is " + shape_str(c) +
                     " but profile expects " + std::to_string(profile.N) +
                     "x" + std::to_string(profile.M));
  }
  if (profile.r_DL.size() != profile.N || profile.t_UL.size() != profile.N) {
    throw StateError("compose_baseband_tdd: profile UE responses do not "
                     "match N");
  }
  ChannelPair pair;
  pair.h_dl = ComplexMatrix(profile.N, profile.M);
  pair.h_ul = ComplexMatrix(profile.M, profile.N);
  pair.snr = Snr::noiseless();
  for (std::size_t n = 0; n < profile.N; ++n) {
    const ComplexMatrix cn = c.row(n);                       // 1 x M
    const ComplexMatrix dl = matmul(cn, profile.T_DL);       // 1 x M
    pair.h_dl.set_row(n, scale(dl, profile.r_DL[n]));
    const ComplexMatrix ul = matmul(profile.R_UL, cn.transpose());  // M x 1
    pair.h_ul.set_col(n, scale(ul, profile.t_UL[n]));
  }
  return pair;
}

std::vector<cxd> tdd_user_scales(const HardwareProfile& profile) {
  std::vector<cxd> a(profile.N);
  for (std::size_t n = 0; n < profile.N; ++n) {
    if (std::abs(profile.t_UL[n]) <= kInvertibilityFloor) {
      throw DegenerateDataError("tdd_user_scales: t_UL[" + std::to_string(n) +
                                "] below the invertibility floor");
    }
    a[n] = profile.r_DL[n] / profile.t_UL[n];
  }
  return a;
}

ComplexMatrix tdd_coupling_matrix(const HardwareProfile& profile) {
  // B = R_UL^{-T} T_DL, i.e. the solution of R_UL^T B = T_DL.
  return solve_linear(profile.R_UL.transpose(), profile.T_DL);
}

ScenarioSpec draw_scenario(const Rng& rng, ScenarioKind kind, std::size_t M,
                           std::size_t N, const TddHardwareOptions& options) {
  if (M == 0 || N == 0) {
    throw std::invalid_argument("draw_scenario: M and N must be >= 1");
  }
  ScenarioSpec spec;
  spec.kind = kind;
  spec.M = M;
  spec.N = N;
  if (kind == ScenarioKind::kLinearTdd) {
    spec.profile = gen_hardware_profile(rng.child("hardware"), M, N, options);
    spec.tdd_a = tdd_user_scales(*spec.profile);
    spec.tdd_B = tdd_coupling_matrix(*spec.profile);
  } else {
    Rng c_stream = rng.child("c");
    spec.c.resize(N);
    for (std::size_t n = 0; n < N; ++n) {
      spec.c[n] = c_stream.complex_gaussian_unit();
    }
    Rng d_stream = rng.child("D");
    spec.D = random_unitary(d_stream, M);
  }
  return spec;
}

ComplexMatrix apply_scenario(const ScenarioSpec& scenario,
                             const ComplexMatrix& h_ul) {
  const std::size_t M = scenario.M;
  const std::size_t N = scenario.N;
  if (h_ul.rows() != M || h_ul.cols() != N) {
    throw ShapeError("apply_scenario: h_ul is " + shape_str(h_ul) +
                     " but scenario expects " + std::to_string(M) + "x" +
                     std::to_string(N));
  }

  std::vector<cxd> user_scale;
  const ComplexMatrix* coupling = nullptr;
  ComplexMatrix computed_b;
  if (scenario.kind == ScenarioKind::kLinearTdd) {
    if (!scenario.tdd_a.empty() && scenario.tdd_B.rows() == M &&
        scenario.tdd_B.cols() == M) {
      user_scale = scenario.tdd_a;
      coupling = &scenario.tdd_B;
    } else if (scenario.profile.has_value()) {
      user_scale = tdd_user_scales(*scenario.profile);
      computed_b = tdd_coupling_matrix(*scenario.profile);
      coupling = &computed_b;
    } else {
      throw ScenarioError("apply_scenario: LinearTdd scenario carries no "
                          "hardware profile");
    }
  } else {
    if (scenario.c.size() != N) {
      throw ScenarioError("apply_scenario: scenario c has " +
                          std::to_string(scenario.c.size()) +
                          " entries, expected N=" + std::to_string(N));
    }
    if (scenario.D.rows() != M || scenario.D.cols() != M) {
      throw ScenarioError("apply_scenario: scenario D is " +
                          shape_str(scenario.D) + ", expected " +
                          std::to_string(M) + "x" + std::to_string(M));
    }
    user_scale = scenario.c;
    coupling = &scenario.D;
  }
  if (user_scale.size() != N) {
    throw ScenarioError("apply_scenario: per-user scales have " +
                        std::to_string(user_scale.size()) +
                        " entries, expected N=" + std::to_string(N));
  }

  ComplexMatrix h_dl(N, M);
  ComplexMatrix u(1, M);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t m = 0; m < M; ++m) {
      cxd z = h_ul(m, n);
      switch (scenario.kind) {
        case ScenarioKind::kLinearTdd:
        case ScenarioKind::kLinearSynthetic:
          break;
        case ScenarioKind::kTanhType:
          // Split-complex by default: tanh acts on the real and imaginary
          // parts independently.
          z = scenario.complex_tanh
                  ? std::tanh(z)
                  : cxd(std::tanh(z.real()), std::tanh(z.imag()));
          break;
        case ScenarioKind::kPowerType:
          z = z * z;
          break;
      }
      u(0, m) = z;
    }
    h_dl.set_row(n, scale(matmul(u, *coupling), user_scale[n]));
  }
  return h_dl;
}

ComplexMatrix gen_pilots(Rng& rng, std::size_t dim, std::size_t K) {
  if (dim == 0) throw std::invalid_argument("gen_pilots: dim must be >= 1");
  if (K < dim) {
    throw PilotError("gen_pilots: pilot length K=" + std::to_string(K) +
                     " below dimension " + std::to_string(dim));
  }
  // DFT rows with one random phase offset each: unit-modulus entries,
  // exactly orthogonal rows (distinct DFT frequencies), x x^H = K I.
  ComplexMatrix x(dim, K);
  for (std::size_t d = 0; d < dim; ++d) {
    const double offset =
        2.0 * std::numbers::pi * rng.uniform01() - std::numbers::pi;
    for (std::size_t k = 0; k < K; ++k) {
      const double angle = 2.0 * std::numbers::pi *
                               static_cast<double>(d * k % K) /
                               static_cast<double>(K) +
                           offset;
      x(d, k) = std::polar(1.0, angle);
    }
  }
  return x;
}

ComplexMatrix observe_ul(const ComplexMatrix& h_ul, const ComplexMatrix& x_ul,
                         const Snr& snr, Rng& rng) {
  if (h_ul.cols() != x_ul.rows()) {
    throw ShapeError("observe_ul: h_ul is " + shape_str(h_ul) +
                     " but pilots are " + shape_str(x_ul));
  }
  if (x_ul.cols() < x_ul.rows()) {
    throw PilotError("observe_ul: pilot length K=" +
                     std::to_string(x_ul.cols()) + " below user count " +
                     std::to_string(x_ul.rows()));
  }
  require_orthogonal_pilots(x_ul, "observe_ul");
  ComplexMatrix y = matmul(h_ul, x_ul);
  if (!snr.is_noiseless()) {
    const ComplexMatrix w = sample_complex_gaussian(
        rng, y.rows(), y.cols(), snr.noise_variance());
    y = add(y, w);
  }
  return y;
}

ComplexMatrix observe_dl(const ComplexMatrix& h_dl, const ComplexMatrix& x_dl,
                         const Snr& snr, Rng& rng) {
  if (h_dl.cols() != x_dl.rows()) {
    throw ShapeError("observe_dl: h_dl is " + shape_str(h_dl) +
                     " but pilots are " + shape_str(x_dl));
  }
  if (x_dl.cols() < x_dl.rows()) {
    throw PilotError("observe_dl: pilot length K=" +
                     std::to_string(x_dl.cols()) + " below antenna count " +
                     std::to_string(x_dl.rows()));
  }
  require_orthogonal_pilots(x_dl, "observe_dl");
  ComplexMatrix y = matmul(h_dl, x_dl);
  if (!snr.is_noiseless()) {
    const ComplexMatrix w = sample_complex_gaussian(
        rng, y.rows(), y.cols(), snr.noise_variance());
    y = add(y, w);
  }
  return y;
}

ComplexMatrix estimate_channel_ls(const ComplexMatrix& y,
                                  const ComplexMatrix& x) {
  if (y.cols() != x.cols()) {
    throw ShapeError("estimate_channel_ls: y is " + shape_str(y) +
                     " but pilots are " + shape_str(x));
  }
  require_orthogonal_pilots(x, "estimate_channel_ls");
  const double k = static_cast<double>(x.cols());
  return scale(matmul(y, x.conj_transpose()), cxd(1.0 / k, 0.0));
}

GeneratedData build_dataset_with_truth(const Rng& base,
                                       const ScenarioSpec& scenario,
                                       const std::vector<Snr>& pair_snr) {
  if (pair_snr.empty()) {
    throw std::invalid_argument("build_dataset: P must be >= 1");
  }
  const std::size_t M = scenario.M;
  const std::size_t N = scenario.N;
  if (M == 0 || N == 0) {
    throw ScenarioError("build_dataset: scenario has M=" + std::to_string(M) +
                        ", N=" + std::to_string(N));
  }
  Rng pilot_ul_stream = base.child("pilots_ul");
  Rng pilot_dl_stream = base.child("pilots_dl");
  const ComplexMatrix x_ul = gen_pilots(pilot_ul_stream, N, N);
  const ComplexMatrix x_dl = gen_pilots(pilot_dl_stream, M, M);

  GeneratedData data;
  data.estimates.M = data.truth.M = M;
  data.estimates.N = data.truth.N = N;
  data.estimates.scenario = data.truth.scenario = scenario;
  data.estimates.pairs.reserve(pair_snr.size());
  data.truth.pairs.reserve(pair_snr.size());

  for (std::size_t p = 0; p < pair_snr.size(); ++p) {
    Rng channel_stream = base.child("channel", p);
    ChannelPair truth;
    truth.h_ul = sample_complex_gaussian(channel_stream, M, N, 1.0);
    truth.h_dl = apply_scenario(scenario, truth.h_ul);
    truth.snr = Snr::noiseless();

    Rng noise_ul = base.child("noise_ul", p);
    Rng noise_dl = base.child("noise_dl", p);
    ChannelPair est;
    est.snr = pair_snr[p];
    est.h_ul = estimate_channel_ls(
        observe_ul(truth.h_ul, x_ul, pair_snr[p], noise_ul), x_ul);
    est.h_dl = estimate_channel_ls(
        observe_dl(truth.h_dl, x_dl, pair_snr[p], noise_dl), x_dl);

    data.truth.pairs.push_back(std::move(truth));
    data.estimates.pairs.push_back(std::move(est));
  }
  return data;
}

GeneratedData build_dataset_with_truth(const Rng& base,
                                       const ScenarioSpec& scenario,
                                       std::size_t P, const Snr& snr) {
  return build_dataset_with_truth(base, scenario,
                                  std::vector<Snr>(P, snr));
}

CalibrationDataset build_dataset(const Rng& base, const ScenarioSpec& scenario,
                                 std::size_t P, const Snr& snr) {
  return build_dataset_with_truth(base, scenario, P, snr).estimates;
}

}  // namespace mimocal
