#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "mimocal/channel_sim.hpp"
#include "mimocal/complex_matrix.hpp"
#include "mimocal/errors.hpp"

using namespace mimocal;

namespace {

// Test-local Gauss-Jordan inverse, independent of solve_linear.
ComplexMatrix naive_inverse(const ComplexMatrix& a) {
  REQUIRE(a.rows() == a.cols());
  const std::size_t n = a.rows();
  ComplexMatrix work = a;
  ComplexMatrix inv = ComplexMatrix::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(work(r, col)) > std::abs(work(pivot, col))) pivot = r;
    }
    REQUIRE(std::abs(work(pivot, col)) > 0.0);
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) {
        std::swap(work(pivot, c), work(col, c));
        std::swap(inv(pivot, c), inv(col, c));
      }
    }
    const cxd d = work(col, col);
    for (std::size_t c = 0; c < n; ++c) {
      work(col, c) /= d;
      inv(col, c) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const cxd f = work(r, col);
      if (f == cxd(0.0, 0.0)) continue;
      for (std::size_t c = 0; c < n; ++c) {
        work(r, c) -= f * work(col, c);
        inv(r, c) -= f * inv(col, c);
      }
    }
  }
  return inv;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  REQUIRE(a.same_shape(b));
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("snr values and the noiseless marker") {
  CHECK(Snr::db(10.0).noise_variance() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(Snr::db(0.0).noise_variance() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(Snr::noiseless().noise_variance() == 0.0);
  CHECK(Snr::noiseless().is_noiseless());
  CHECK(!Snr::db(40.0).is_noiseless());
  CHECK_THROWS_AS(Snr::noiseless().value_db(), StateError);
  CHECK(Snr::db(5.0) == Snr::db(5.0));
  CHECK(!(Snr::db(5.0) == Snr::noiseless()));
}

TEST_CASE("hardware profile shapes and crosstalk scaling") {
  Rng rng(201);
  TddHardwareOptions diag_opts;
  diag_opts.crosstalk_level = 0.0;
  HardwareProfile p = gen_hardware_profile(rng, 4, 2, diag_opts);
  REQUIRE(p.T_DL.rows() == 4);
  REQUIRE(p.R_UL.cols() == 4);
  REQUIRE(p.r_DL.size() == 2);
  REQUIRE(p.t_UL.size() == 2);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      if (r != c) {
        CHECK(p.T_DL(r, c) == cxd(0.0, 0.0));
        CHECK(p.R_UL(r, c) == cxd(0.0, 0.0));
      }
    }
  }
  for (std::size_t m = 0; m < 4; ++m) {
    CHECK(std::abs(p.R_UL(m, m)) > 1e-9);
  }
  for (std::size_t n = 0; n < 2; ++n) {
    CHECK(std::abs(p.t_UL[n]) > 1e-9);
  }

  TddHardwareOptions bad;
  bad.crosstalk_level = 1.5;
  CHECK_THROWS_AS(gen_hardware_profile(rng, 4, 2, bad),
                  std::invalid_argument);
}

TEST_CASE("crosstalk level sets the off-diagonal variance") {
  TddHardwareOptions opts;
  opts.crosstalk_level = 0.5;
  double sum = 0.0;
  std::size_t count = 0;
  for (int round = 0; round < 200; ++round) {
    HardwareProfile p =
        gen_hardware_profile(Rng(3000 + round), 8, 1, opts);
    for (std::size_t r = 0; r < 8; ++r) {
      for (std::size_t c = 0; c < 8; ++c) {
        if (r == c) continue;
        sum += std::norm(p.T_DL(r, c)) + std::norm(p.R_UL(r, c));
        count += 2;
      }
    }
  }
  // Per-entry variance should be crosstalk^2 = 0.25.
  CHECK(sum / count == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("unit UE responses force t_UL = r_DL = 1") {
  TddHardwareOptions opts;
  opts.unit_ue_responses = true;
  HardwareProfile p = gen_hardware_profile(Rng(202), 3, 2, opts);
  for (std::size_t n = 0; n < 2; ++n) {
    CHECK(p.r_DL[n] == cxd(1.0, 0.0));
    CHECK(p.t_UL[n] == cxd(1.0, 0.0));
  }
}

TEST_CASE("propagation entries are unit-variance complex Gaussians") {
  ComplexMatrix c = gen_propagation(Rng(203), 320, 313);
  REQUIRE(c.rows() == 313);
  REQUIRE(c.cols() == 320);
  double power = 0.0;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t j = 0; j < c.cols(); ++j) power += std::norm(c(i, j));
  }
  power /= static_cast<double>(c.size());
  CHECK(std::abs(power - 1.0) < 0.02);
}

TEST_CASE("scalar baseband composition hand values") {
  HardwareProfile p;
  p.M = 1;
  p.N = 1;
  p.T_DL = ComplexMatrix(1, 1);
  p.T_DL(0, 0) = cxd(2.0, 0.0);
  p.R_UL = ComplexMatrix(1, 1);
  p.R_UL(0, 0) = cxd(5.0, 0.0);
  p.r_DL = {cxd(3.0, 0.0)};
  p.t_UL = {cxd(7.0, 0.0)};
  ComplexMatrix c(1, 1);
  c(0, 0) = cxd(1.0, 0.0);
  ChannelPair pair = compose_baseband_tdd(p, c);
  CHECK(pair.h_dl(0, 0) == cxd(6.0, 0.0));
  CHECK(pair.h_ul(0, 0) == cxd(35.0, 0.0));
  CHECK(pair.snr.is_noiseless());
}

TEST_CASE("identity hardware reproduces the propagation channel") {
  HardwareProfile p;
  p.M = 3;
  p.N = 2;
  p.T_DL = ComplexMatrix::identity(3);
  p.R_UL = ComplexMatrix::identity(3);
  p.r_DL.assign(2, cxd(1.0, 0.0));
  p.t_UL.assign(2, cxd(1.0, 0.0));
  ComplexMatrix c = gen_propagation(Rng(204), 3, 2);
  ChannelPair pair = compose_baseband_tdd(p, c);
  // Row n of H_DL equals the propagation row; column n of H_UL equals its
  // transpose.
  CHECK(max_abs_diff(pair.h_dl, c) < 1e-15);
  CHECK(max_abs_diff(pair.h_ul, c.transpose()) < 1e-15);
}

TEST_CASE("reciprocity identity holds with independently inverted hardware") {
  // h_DL row n == a_n * (h_UL col n)^T * B with a, B rebuilt from scratch
  // via a test-local matrix inverse.
  for (int round = 0; round < 50; ++round) {
    Rng rng(4000 + round);
    HardwareProfile p = gen_hardware_profile(rng.child("hw"), 8, 3, {});
    ComplexMatrix c = gen_propagation(rng.child("prop"), 8, 3);
    ChannelPair pair = compose_baseband_tdd(p, c);

    ComplexMatrix b_oracle =
        matmul(naive_inverse(p.R_UL.transpose()), p.T_DL);
    for (std::size_t n = 0; n < 3; ++n) {
      const cxd a_n = p.r_DL[n] / p.t_UL[n];
      ComplexMatrix row = matmul(pair.h_ul.col(n).transpose(), b_oracle);
      row = scale(row, a_n);
      CHECK(max_abs_diff(row, pair.h_dl.row(n)) < 1e-9);
    }
  }
}

TEST_CASE("coupling matrix matches the naive inverse") {
  Rng rng(205);
  HardwareProfile p = gen_hardware_profile(rng, 6, 2, {});
  ComplexMatrix expected = matmul(naive_inverse(p.R_UL.transpose()), p.T_DL);
  CHECK(max_abs_diff(tdd_coupling_matrix(p), expected) < 1e-9);
}

TEST_CASE("linear TDD scenario application matches composition") {
  Rng rng(206);
  ScenarioSpec spec = draw_scenario(rng, ScenarioKind::kLinearTdd, 6, 2, {});
  REQUIRE(spec.profile.has_value());
  ComplexMatrix c = gen_propagation(rng.child("prop"), 6, 2);
  ChannelPair pair = compose_baseband_tdd(*spec.profile, c);
  ComplexMatrix h_dl = apply_scenario(spec, pair.h_ul);
  CHECK(max_abs_diff(h_dl, pair.h_dl) < 1e-9);
}

TEST_CASE("synthetic scenario hand examples") {
  // LinearSynthetic: M=2, c=2, D=I, h_UL = (1, j)^T -> h_DL = (2, 2j).
  ScenarioSpec lin;
  lin.kind = ScenarioKind::kLinearSynthetic;
  lin.M = 2;
  lin.N = 1;
  lin.c = {cxd(2.0, 0.0)};
  lin.D = ComplexMatrix::identity(2);
  ComplexMatrix h(2, 1);
  h(0, 0) = cxd(1.0, 0.0);
  h(1, 0) = cxd(0.0, 1.0);
  ComplexMatrix dl = apply_scenario(lin, h);
  CHECK(dl(0, 0) == cxd(2.0, 0.0));
  CHECK(dl(0, 1) == cxd(0.0, 2.0));

  // PowerType: c=1, D=[1], h_UL = 1+j -> (1+j)^2 = 2j.
  ScenarioSpec pow;
  pow.kind = ScenarioKind::kPowerType;
  pow.M = 1;
  pow.N = 1;
  pow.c = {cxd(1.0, 0.0)};
  pow.D = ComplexMatrix::identity(1);
  ComplexMatrix one(1, 1);
  one(0, 0) = cxd(1.0, 1.0);
  CHECK(apply_scenario(pow, one)(0, 0) == cxd(0.0, 2.0));

  // TanhType maps zero to zero.
  ScenarioSpec th = pow;
  th.kind = ScenarioKind::kTanhType;
  ComplexMatrix zero(1, 1);
  CHECK(apply_scenario(th, zero)(0, 0) == cxd(0.0, 0.0));
}

TEST_CASE("tanh scenario applies split or true complex tanh per flag") {
  Rng rng(207);
  ScenarioSpec spec = draw_scenario(rng, ScenarioKind::kTanhType, 3, 2, {});
  ComplexMatrix h = sample_complex_gaussian(rng, 3, 2, 1.0);

  // Oracle: per user, tanh entries, then row * D scaled by c.
  for (bool complex_mode : {false, true}) {
    spec.complex_tanh = complex_mode;
    ComplexMatrix got = apply_scenario(spec, h);
    for (std::size_t n = 0; n < 2; ++n) {
      ComplexMatrix row(1, 3);
      for (std::size_t m = 0; m < 3; ++m) {
        cxd z = h(m, n);
        row(0, m) = complex_mode
                        ? std::tanh(z)
                        : cxd(std::tanh(z.real()), std::tanh(z.imag()));
      }
      ComplexMatrix expected = scale(matmul(row, spec.D), spec.c[n]);
      CHECK(max_abs_diff(expected, got.row(n)) < 1e-13);
    }
  }
}

TEST_CASE("linear synthetic scenario is additive, nonlinear kinds are not") {
  Rng rng(208);
  ScenarioSpec spec = draw_scenario(rng, ScenarioKind::kLinearSynthetic, 4, 2, {});
  ComplexMatrix h1 = sample_complex_gaussian(rng, 4, 2, 1.0);
  ComplexMatrix h2 = sample_complex_gaussian(rng, 4, 2, 1.0);
  ComplexMatrix lhs = apply_scenario(spec, add(h1, h2));
  ComplexMatrix rhs = add(apply_scenario(spec, h1), apply_scenario(spec, h2));
  CHECK(max_abs_diff(lhs, rhs) < 1e-10);

  for (ScenarioKind kind : {ScenarioKind::kTanhType, ScenarioKind::kPowerType}) {
    ScenarioSpec nl = spec;
    nl.kind = kind;
    ComplexMatrix nlhs = apply_scenario(nl, add(h1, h2));
    ComplexMatrix nrhs = add(apply_scenario(nl, h1), apply_scenario(nl, h2));
    CHECK(max_abs_diff(nlhs, nrhs) > 1e-3);
  }
}

TEST_CASE("unitary D preserves row norms in the linear synthetic scenario") {
  Rng rng(209);
  ScenarioSpec spec = draw_scenario(rng, ScenarioKind::kLinearSynthetic, 8, 3, {});
  ComplexMatrix h = sample_complex_gaussian(rng, 8, 3, 1.0);
  ComplexMatrix dl = apply_scenario(spec, h);
  for (std::size_t n = 0; n < 3; ++n) {
    double in_norm = 0.0, out_norm = 0.0;
    for (std::size_t m = 0; m < 8; ++m) {
      in_norm += std::norm(h(m, n));
      out_norm += std::norm(dl(n, m));
    }
    CHECK(std::sqrt(out_norm) ==
          doctest::Approx(std::abs(spec.c[n]) * std::sqrt(in_norm))
              .epsilon(1e-9));
  }
}

TEST_CASE("scenario validation rejects missing fields") {
  ScenarioSpec bad;
  bad.kind = ScenarioKind::kLinearTdd;
  bad.M = 2;
  bad.N = 1;
  ComplexMatrix h(2, 1);
  CHECK_THROWS_AS(apply_scenario(bad, h), ScenarioError);

  ScenarioSpec bad2;
  bad2.kind = ScenarioKind::kLinearSynthetic;
  bad2.M = 2;
  bad2.N = 1;  // c and D missing
  CHECK_THROWS_AS(apply_scenario(bad2, h), ScenarioError);
}

TEST_CASE("scenario kind tokens round trip") {
  for (ScenarioKind kind :
       {ScenarioKind::kLinearTdd, ScenarioKind::kLinearSynthetic,
        ScenarioKind::kTanhType, ScenarioKind::kPowerType}) {
    CHECK(scenario_kind_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(scenario_kind_from_string("bogus"), std::invalid_argument);
}

TEST_CASE("pilots are unit-modulus with orthogonal rows") {
  Rng rng(210);
  for (auto [dim, k] : {std::pair<std::size_t, std::size_t>{1, 1},
                        {4, 4},
                        {4, 8},
                        {32, 32}}) {
    ComplexMatrix x = gen_pilots(rng, dim, k);
    REQUIRE(x.rows() == dim);
    REQUIRE(x.cols() == k);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) {
        CHECK(std::abs(std::abs(x(i, j)) - 1.0) < 1e-12);
      }
    }
    ComplexMatrix gram = matmul(x, x.conj_transpose());
    ComplexMatrix expected = scale(ComplexMatrix::identity(dim),
                                   cxd(static_cast<double>(k), 0.0));
    CHECK(max_abs_diff(gram, expected) < 1e-10 * static_cast<double>(k));
  }
  CHECK_THROWS_AS(gen_pilots(rng, 4, 3), PilotError);
}

TEST_CASE("noiseless estimation recovers the channel exactly") {
  Rng rng(211);
  ComplexMatrix h = sample_complex_gaussian(rng, 5, 3, 1.0);
  ComplexMatrix x = gen_pilots(rng, 3, 3);
  Rng noise = rng.child("noise");
  ComplexMatrix y = observe_ul(h, x, Snr::noiseless(), noise);
  CHECK(max_abs_diff(estimate_channel_ls(y, x), h) < 1e-12);
}

TEST_CASE("observation noise power matches the configured snr") {
  Rng rng(212);
  ComplexMatrix h = sample_complex_gaussian(rng, 1, 1, 1.0);
  ComplexMatrix x = gen_pilots(rng, 1, 1);
  double resid = 0.0;
  const int n = 20000;
  Rng noise = rng.child("noise");
  for (int i = 0; i < n; ++i) {
    ComplexMatrix y = observe_ul(h, x, Snr::db(0.0), noise);
    resid += std::norm(y(0, 0) - h(0, 0) * x(0, 0));
  }
  CHECK(resid / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("estimation error variance is 1/(K snr)") {
  Rng rng(213);
  const std::size_t M = 8, N = 4;
  ComplexMatrix x = gen_pilots(rng, N, N);
  const Snr snr = Snr::db(10.0);
  double err = 0.0;
  std::size_t count = 0;
  Rng noise = rng.child("noise");
  for (int i = 0; i < 500; ++i) {
    ComplexMatrix h = sample_complex_gaussian(rng, M, N, 1.0);
    ComplexMatrix est = estimate_channel_ls(observe_ul(h, x, snr, noise), x);
    for (std::size_t r = 0; r < M; ++r) {
      for (std::size_t c = 0; c < N; ++c) {
        err += std::norm(est(r, c) - h(r, c));
        ++count;
      }
    }
  }
  // Expected per-entry error variance: noise 0.1 spread over K = 4 pilots.
  CHECK(err / count == doctest::Approx(0.1 / 4.0).epsilon(0.05));
}

TEST_CASE("non-orthogonal pilots are rejected") {
  ComplexMatrix x(2, 2);
  x(0, 0) = x(0, 1) = x(1, 0) = x(1, 1) = cxd(1.0, 0.0);
  ComplexMatrix h(3, 2);
  Rng rng(214);
  CHECK_THROWS_AS(observe_ul(h, x, Snr::db(10.0), rng), PilotError);
  ComplexMatrix y(3, 2);
  CHECK_THROWS_AS(estimate_channel_ls(y, x), PilotError);
}

TEST_CASE("datasets share channels across SNR levels") {
  Rng base(215);
  ScenarioSpec spec =
      draw_scenario(base.child("scenario"), ScenarioKind::kLinearTdd, 4, 2, {});
  GeneratedData lo = build_dataset_with_truth(base.child("data"), spec, 6,
                                              Snr::db(0.0));
  GeneratedData hi = build_dataset_with_truth(base.child("data"), spec, 6,
                                              Snr::db(20.0));
  REQUIRE(lo.estimates.pairs.size() == 6);
  for (std::size_t p = 0; p < 6; ++p) {
    // Identical truths, bit for bit.
    CHECK(lo.truth.pairs[p].h_ul == hi.truth.pairs[p].h_ul);
    CHECK(lo.truth.pairs[p].h_dl == hi.truth.pairs[p].h_dl);
    CHECK(lo.truth.pairs[p].snr.is_noiseless());
    CHECK(lo.estimates.pairs[p].snr == Snr::db(0.0));
    // Estimation errors scale exactly with sqrt of the variance ratio:
    // sqrt(1.0 / 0.01) = 10.
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 2; ++c) {
        cxd err_lo =
            lo.estimates.pairs[p].h_ul(r, c) - lo.truth.pairs[p].h_ul(r, c);
        cxd err_hi =
            hi.estimates.pairs[p].h_ul(r, c) - hi.truth.pairs[p].h_ul(r, c);
        if (std::abs(err_hi) > 1e-12) {
          CHECK(std::abs(err_lo / err_hi - 10.0) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("noiseless identity-hardware dataset pairs are transposes") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::kLinearTdd;
  spec.M = 3;
  spec.N = 2;
  HardwareProfile p;
  p.M = 3;
  p.N = 2;
  p.T_DL = ComplexMatrix::identity(3);
  p.R_UL = ComplexMatrix::identity(3);
  p.r_DL.assign(2, cxd(1.0, 0.0));
  p.t_UL.assign(2, cxd(1.0, 0.0));
  spec.profile = p;
  CalibrationDataset ds =
      build_dataset(Rng(216), spec, 1, Snr::noiseless());
  REQUIRE(ds.pairs.size() == 1);
  CHECK(max_abs_diff(ds.pairs[0].h_dl, ds.pairs[0].h_ul.transpose()) < 1e-9);
}

TEST_CASE("mixed-snr datasets keep per-pair levels and shared channels") {
  Rng base(217);
  ScenarioSpec spec =
      draw_scenario(base.child("scenario"), ScenarioKind::kLinearTdd, 3, 2, {});
  std::vector<Snr> levels = {Snr::db(0.0), Snr::db(10.0), Snr::noiseless()};
  GeneratedData mixed =
      build_dataset_with_truth(base.child("data"), spec, levels);
  GeneratedData uniform = build_dataset_with_truth(base.child("data"), spec, 3,
                                                   Snr::db(0.0));
  REQUIRE(mixed.estimates.pairs.size() == 3);
  for (std::size_t p = 0; p < 3; ++p) {
    CHECK(mixed.estimates.pairs[p].snr == levels[p]);
    CHECK(mixed.truth.pairs[p].h_ul == uniform.truth.pairs[p].h_ul);
  }
  // The noiseless pair's estimate equals its truth to solver precision.
  CHECK(max_abs_diff(mixed.estimates.pairs[2].h_ul,
                     mixed.truth.pairs[2].h_ul) < 1e-12);
}

TEST_CASE("dataset generation is deterministic") {
  ScenarioSpec spec =
      draw_scenario(Rng(218), ScenarioKind::kLinearTdd, 4, 2, {});
  CalibrationDataset a = build_dataset(Rng(219), spec, 5, Snr::db(15.0));
  CalibrationDataset b = build_dataset(Rng(219), spec, 5, Snr::db(15.0));
  REQUIRE(a.pairs.size() == b.pairs.size());
  for (std::size_t p = 0; p < a.pairs.size(); ++p) {
    CHECK(a.pairs[p].h_ul == b.pairs[p].h_ul);
    CHECK(a.pairs[p].h_dl == b.pairs[p].h_dl);
  }
}
