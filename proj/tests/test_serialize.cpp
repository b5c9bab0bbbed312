#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "mimocal/calinet.hpp"
#include "mimocal/channel_sim.hpp"
#include "mimocal/errors.hpp"
#include "mimocal/serialize.hpp"

using namespace mimocal;

namespace {

CalibrationDataset sample_dataset(std::uint64_t seed, std::size_t M,
                                  std::size_t N, std::size_t P,
                                  const Snr& snr) {
  Rng rng(seed);
  ScenarioSpec spec =
      draw_scenario(rng.child("scenario"), ScenarioKind::kTanhType, M, N, {});
  return build_dataset(rng.child("data"), spec, P, snr);
}

CalibrationModel sample_model(std::uint64_t seed) {
  Rng rng(seed);
  ScenarioSpec spec =
      draw_scenario(rng.child("scenario"), ScenarioKind::kLinearSynthetic, 2, 2, {});
  CalibrationDataset ds = build_dataset(rng.child("data"), spec, 12, Snr::db(20.0));
  TrainConfig config;
  config.epochs = 3;
  config.seed = seed;
  config.layer_dims = {4, 6, 4};
  return train(ds, config).model;
}

bool datasets_identical(const CalibrationDataset& a,
                        const CalibrationDataset& b) {
  if (a.M != b.M || a.N != b.N || a.pairs.size() != b.pairs.size()) {
    return false;
  }
  for (std::size_t p = 0; p < a.pairs.size(); ++p) {
    if (!(a.pairs[p].h_ul == b.pairs[p].h_ul)) return false;
    if (!(a.pairs[p].h_dl == b.pairs[p].h_dl)) return false;
    if (!(a.pairs[p].snr == b.pairs[p].snr)) return false;
  }
  return true;
}

bool networks_identical(const NetworkParams& a, const NetworkParams& b) {
  if (a.input_dim != b.input_dim || a.output_dim != b.output_dim ||
      a.layers.size() != b.layers.size()) {
    return false;
  }
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (a.layers[l].activation != b.layers[l].activation) return false;
    if (a.layers[l].W.data != b.layers[l].W.data) return false;
    if (a.layers[l].b != b.layers[l].b) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("g17 formatting survives strtod for awkward values") {
  const double values[] = {0.1,    1.0 / 3.0, 1e-300, -0.0,
                           5e-324, 1e308,     -123.456789012345678};
  for (double v : values) {
    const std::string text = format_g17(v);
    char* end = nullptr;
    const double back = std::strtod(text.c_str(), &end);
    CHECK(*end == '\0');
    // Bit-level identity, including the sign of zero.
    CHECK(std::signbit(back) == std::signbit(v));
    CHECK((back == v || (v != v && back != back)));
  }
  CHECK(format_g17(-0.0)[0] == '-');
}

TEST_CASE("dataset round trips are bit exact") {
  for (std::uint64_t seed : {400ull, 401ull, 402ull}) {
    CalibrationDataset ds = sample_dataset(seed, 3, 2, 4, Snr::db(17.25));
    std::stringstream buffer;
    save_dataset(buffer, ds);
    CalibrationDataset back = load_dataset(buffer);
    CHECK(datasets_identical(ds, back));
    CHECK(to_string(back.scenario.kind) == to_string(ds.scenario.kind));

    // Save -> load -> save is byte identical.
    std::stringstream second;
    save_dataset(second, back);
    CHECK(second.str() == buffer.str());
  }
}

TEST_CASE("noiseless datasets use the inf token") {
  CalibrationDataset ds = sample_dataset(403, 2, 1, 2, Snr::noiseless());
  std::stringstream buffer;
  save_dataset(buffer, ds);
  CHECK(buffer.str().find("snr_db=inf") != std::string::npos);
  CalibrationDataset back = load_dataset(buffer);
  CHECK(back.pairs[0].snr.is_noiseless());
  CHECK(datasets_identical(ds, back));
}

TEST_CASE("mixed-SNR datasets cannot be saved") {
  CalibrationDataset ds = sample_dataset(404, 2, 1, 2, Snr::db(10.0));
  ds.pairs[1].snr = Snr::db(20.0);
  std::stringstream buffer;
  CHECK_THROWS_AS(save_dataset(buffer, ds), IoError);
}

TEST_CASE("malformed dataset files are rejected with line numbers") {
  CalibrationDataset ds = sample_dataset(405, 2, 1, 2, Snr::db(10.0));
  std::stringstream buffer;
  save_dataset(buffer, ds);
  const std::string text = buffer.str();

  SUBCASE("truncated body") {
    std::stringstream in(text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(load_dataset(in), IoError);
  }
  SUBCASE("trailing content") {
    std::stringstream in(text + "0.5 0.5\n");
    CHECK_THROWS_AS(load_dataset(in), IoError);
  }
  SUBCASE("wrong magic") {
    std::stringstream in("# calib-data M=2 N=1 P=2 scenario=tanh_type snr_db=10\n");
    CHECK_THROWS_AS(load_dataset(in), IoError);
  }
  SUBCASE("non-numeric entry") {
    std::string broken = text;
    const std::size_t pos = broken.find('\n') + 1;
    broken.replace(pos, broken.find('\n', pos) - pos, "zero 0.0");
    std::stringstream in(broken);
    try {
      load_dataset(in);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      // The complaint names the offending 1-based line.
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("empty stream") {
    std::stringstream in("");
    CHECK_THROWS_AS(load_dataset(in), IoError);
  }
}

TEST_CASE("network round trips are bit exact") {
  Rng rng(406);
  TrainConfig config;
  config.output_activation = Activation::kTanh;
  NetworkParams params;
  AdagradState state;
  init_network(config, {3, 5, 2}, rng, params, state);

  std::stringstream buffer;
  save_network(buffer, params);
  NetworkParams back = load_network(buffer);
  CHECK(networks_identical(params, back));

  std::stringstream second;
  save_network(second, back);
  CHECK(second.str() == buffer.str());
}

TEST_CASE("model round trips preserve every network and the scale") {
  CalibrationModel model = sample_model(407);
  std::stringstream buffer;
  save_model(buffer, model);
  CalibrationModel back = load_model(buffer);
  CHECK(back.mode == model.mode);
  CHECK(back.M == model.M);
  CHECK(back.N == model.N);
  CHECK(back.target_scale == model.target_scale);
  REQUIRE(back.nets.size() == model.nets.size());
  for (std::size_t i = 0; i < model.nets.size(); ++i) {
    CHECK(networks_identical(model.nets[i], back.nets[i]));
  }

  // Round-tripped models predict identically, bit for bit.
  Rng rng(408);
  ComplexMatrix probe = sample_complex_gaussian(rng, model.M, model.N, 1.0);
  CHECK(predict(model, probe) == predict(back, probe));
}

TEST_CASE("malformed model files are rejected") {
  CalibrationModel model = sample_model(409);
  std::stringstream buffer;
  save_model(buffer, model);
  const std::string text = buffer.str();

  SUBCASE("wrong magic") {
    std::stringstream in("# calinet-mode mode=per_user M=2 N=2 nets=2 target_scale=1\n");
    CHECK_THROWS_AS(load_model(in), IoError);
  }
  SUBCASE("missing networks") {
    std::stringstream in(text.substr(0, text.find("# calinet ", 10)));
    CHECK_THROWS_AS(load_model(in), IoError);
  }
  SUBCASE("non-finite weight") {
    std::string broken = text;
    const std::size_t pos = broken.find("\n", broken.find("# calinet ")) + 1;
    broken.replace(pos, broken.find('\n', pos) - pos, "nan 0.0 0.0 0.0");
    std::stringstream in(broken);
    CHECK_THROWS_AS(load_model(in), IoError);
  }
}

TEST_CASE("file-path save and load round trip") {
  const std::string path = "serialize_roundtrip_tmp.txt";
  CalibrationDataset ds = sample_dataset(410, 2, 2, 3, Snr::db(5.0));
  save_dataset(path, ds);
  CalibrationDataset back = load_dataset(path);
  CHECK(datasets_identical(ds, back));
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_dataset("no_such_directory/missing.txt"), IoError);
  CHECK_THROWS_AS(save_dataset("no_such_directory/missing.txt", ds), IoError);
}
