"""End-to-end smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import mimocal


def test_version():
    assert mimocal.__version__ == "0.1.0"


def test_rng_determinism():
    a = mimocal.Rng(42)
    b = mimocal.Rng(42)
    assert [a.next_u64() for _ in range(4)] == [b.next_u64() for _ in range(4)]
    child = mimocal.Rng(42).child("data", 3)
    assert 0.0 <= child.uniform01() < 1.0


def test_scenario_and_dataset_shapes():
    spec = mimocal.draw_scenario(7, "linear_tdd", M=4, N=2)
    assert spec.kind == "linear_tdd"
    assert (spec.M, spec.N) == (4, 2)

    data = mimocal.build_dataset(11, spec, P=6, snr_db=20.0)
    assert data["h_ul"].shape == (6, 4, 2)
    assert data["h_dl"].shape == (6, 2, 4)
    assert data["h_ul_true"].shape == (6, 4, 2)
    assert data["h_dl_true"].shape == (6, 2, 4)
    assert data["h_ul"].dtype == np.complex128

    # Noiseless estimates coincide with the truth.
    clean = mimocal.build_dataset(11, spec, P=3, snr_db=None)
    assert np.allclose(clean["h_ul"], clean["h_ul_true"], atol=1e-12)


def test_apply_scenario_reciprocity():
    spec = mimocal.draw_scenario(13, "linear_tdd", M=3, N=2)
    data = mimocal.build_dataset(17, spec, P=2, snr_db=None)
    mapped = mimocal.apply_scenario(spec, data["h_ul_true"][0])
    assert np.allclose(mapped, data["h_dl_true"][0], atol=1e-9)


def test_pilots_and_estimation():
    x = mimocal.gen_pilots(5, dim=3, K=4)
    gram = x @ x.conj().T
    assert np.allclose(gram, 4.0 * np.eye(3), atol=1e-10)
    assert np.allclose(np.abs(x), 1.0, atol=1e-12)

    h = np.arange(6, dtype=np.complex128).reshape(2, 3) + 0.5j
    y = h @ x
    est = mimocal.estimate_channel_ls(y, x)
    assert np.allclose(est, h, atol=1e-12)


def test_train_and_predict():
    spec = mimocal.draw_scenario(19, "linear_synthetic", M=2, N=2)
    data = mimocal.build_dataset(23, spec, P=24, snr_db=20.0)
    model, history = mimocal.train_model(
        data["h_ul"],
        data["h_dl"],
        epochs=5,
        layer_dims=[4, 8, 4],
        seed=3,
    )
    assert model.mode == "per_user"
    assert (model.M, model.N) == (2, 2)
    assert len(history["epoch"]) == 5
    assert history["epoch"][0] == 1
    assert all(math.isfinite(v) for v in history["val_mse"])

    pred = mimocal.predict(model, data["h_ul"][0])
    assert pred.shape == (2, 2)
    assert np.all(np.isfinite(pred.view(np.float64)))


def test_model_round_trip(tmp_path):
    spec = mimocal.draw_scenario(29, "linear_synthetic", M=2, N=1)
    data = mimocal.build_dataset(31, spec, P=12, snr_db=None)
    model, _ = mimocal.train_model(
        data["h_ul"], data["h_dl"], epochs=2, layer_dims=[4, 6, 4], seed=5
    )
    path = str(tmp_path / "model.txt")
    mimocal.save_model(path, model)
    back = mimocal.load_model(path)
    probe = data["h_ul"][0]
    assert np.array_equal(mimocal.predict(model, probe),
                          mimocal.predict(back, probe))


def test_baseline_fits():
    spec = mimocal.draw_scenario(37, "linear_tdd", M=3, N=2,
                                 crosstalk_level=0.0, unit_ue_responses=True)
    data = mimocal.build_dataset(41, spec, P=16, snr_db=None)
    diag = mimocal.ls_diagonal_fit(data["h_ul"], data["h_dl"])
    assert diag.kind == "diagonal"
    pred = mimocal.apply_calibration(diag, data["h_ul"][0])
    assert np.allclose(pred, data["h_dl"][0], atol=1e-6)

    argos = mimocal.argos_fit(data["h_ul"], data["h_dl"], reference_antenna=1)
    assert argos.kind == "diagonal"
    assert np.allclose(mimocal.apply_calibration(argos, data["h_ul"][0]),
                       data["h_dl"][0], atol=1e-6)

    full = mimocal.ls_full_fit(data["h_ul"], data["h_dl"])
    assert full.kind == "full"
    assert np.allclose(mimocal.apply_calibration(full, data["h_ul"][0]),
                       data["h_dl"][0], atol=1e-6)

    with pytest.raises(ValueError):
        mimocal.argos_fit(data["h_ul"], data["h_dl"], reference_antenna=9)


def test_crb_values():
    assert mimocal.crb_mse(M=4, P=10, snr_db=None, pilot_length=2) == 0.0
    val = mimocal.crb_mse(M=4, P=10, snr_db=0.0, pilot_length=2)
    assert val == pytest.approx(1.0 / 3.0 + 0.075, rel=1e-12)
    assert mimocal.crb_mse(M=4, P=10, snr_db=10.0, pilot_length=2) < val


def test_dataset_round_trip(tmp_path):
    spec = mimocal.draw_scenario(43, "tanh_type", M=2, N=2)
    data = mimocal.build_dataset(47, spec, P=4, snr_db=15.0)
    path = str(tmp_path / "dataset.txt")
    mimocal.save_dataset(path, data["h_ul"], data["h_dl"], snr_db=15.0,
                         scenario="tanh_type")
    back = mimocal.load_dataset(path)
    assert np.array_equal(back["h_ul"], data["h_ul"])
    assert np.array_equal(back["h_dl"], data["h_dl"])
    assert back["scenario"] == "tanh_type"
    assert back["snr_db"] == 15.0

    with pytest.raises(IOError):
        mimocal.load_dataset(str(tmp_path / "missing.txt"))


def test_config_round_trip(tmp_path):
    config = mimocal.default_config()
    config.M = 2
    config.N = 2
    config.P = 12
    config.trials = 1
    config.epochs = 2
    config.snr_grid_db = [0.0, 20.0]
    config.layer_dims = [4, 6, 4]
    config.methods = ["dnn", "crb"]
    config.operating_snr_db = 20.0
    path = str(tmp_path / "config.txt")
    mimocal.save_config(path, config)
    back = mimocal.load_config(path)
    assert back == config
    assert back.methods == ["dnn", "crb"]
    assert back.scenario == "linear_tdd"

    config.validation_fraction = 1.5
    with pytest.raises(ValueError):
        mimocal.validate_config(config)


def test_tiny_sweep_and_runners():
    config = mimocal.default_config()
    config.M = 2
    config.N = 2
    config.P = 12
    config.trials = 1
    config.epochs = 2
    config.learning_rate = 0.05
    config.snr_grid_db = [0.0, 20.0]
    config.layer_dims = [4, 6, 4]
    config.methods = ["dnn", "ls_diag", "crb"]

    rows = mimocal.run_snr_sweep(config)
    assert len(rows) == 6
    assert [r[1] for r in rows] == ["DNN", "DNN", "LS-diag (NPC-class)",
                                    "LS-diag (NPC-class)", "CRB", "CRB"]
    assert all(math.isfinite(r[3]) for r in rows)
    assert rows == mimocal.run_snr_sweep(config)

    conv = mimocal.run_training_convergence(config, [10.0])
    assert len(conv) == config.epochs
    assert conv[0][1] == 1

    trace = mimocal.run_coefficient_trace(config, bs_antenna=1, user=1,
                                          num_samples=3)
    assert len(trace) == 3
    assert trace[0][0] == 1
