"""Truth generators, replication harness, and deterministic serialization."""

import numpy as np
import pytest

from bandchol.errors import ExperimentFailed
from bandchol.linalg import eig_extremes, norm_fro, norm_linf, norm_spectral
from bandchol.simulate import (
    ExperimentConfig,
    TrueModelSpec,
    ar1_precision,
    evaluate_losses,
    make_ar1_cov,
    make_ar4_precision,
    make_fgn_cov,
    records_csv_text,
    run_experiment,
    sample_gaussian,
    summary_payload,
)


# ---------------------------------------------------------------------------
# truth generators
# ---------------------------------------------------------------------------

def test_ar1_cov_values():
    np.testing.assert_allclose(
        make_ar1_cov(0.3, 3),
        [[1.0, 0.3, 0.09], [0.3, 1.0, 0.3], [0.09, 0.3, 1.0]],
    )


def test_ar1_precision_inverts_cov():
    omega = ar1_precision(0.3, 10)
    np.testing.assert_allclose(omega, np.linalg.inv(make_ar1_cov(0.3, 10)),
                               atol=1e-10)
    # tridiagonal by construction
    from bandchol.linalg import band_matrix

    np.testing.assert_array_equal(band_matrix(omega, 1), omega)


def test_ar4_precision_values():
    omega = make_ar4_precision(8)
    np.testing.assert_allclose(omega[0, :6], [1.0, 0.4, 0.2, 0.2, 0.1, 0.0])
    np.testing.assert_array_equal(omega, omega.T)
    for p in (10, 100, 500):
        lmin, _ = eig_extremes(make_ar4_precision(p))
        assert lmin > 0.0


def test_fgn_cov_values():
    np.testing.assert_array_equal(make_fgn_cov(0.5, 6), np.eye(6))
    sigma = make_fgn_cov(0.7, 40)
    assert sigma[0, 1] == pytest.approx(0.3195079107728942, abs=1e-15)
    # stationary: constant along diagonals
    assert sigma[10, 11] == sigma[0, 1] and sigma[3, 7] == sigma[0, 4]
    lmin, _ = eig_extremes(sigma)
    assert lmin > 0.0


def test_true_model_spec_build_and_validate():
    for spec in (TrueModelSpec("ar1", 12, rho=0.3),
                 TrueModelSpec("ar4", 12),
                 TrueModelSpec("fgn", 12, hurst=0.7)):
        sigma, omega = spec.build()
        np.testing.assert_allclose(sigma @ omega, np.eye(12), atol=1e-8)
    with pytest.raises(ValueError):
        TrueModelSpec("ar2", 10)
    with pytest.raises(ValueError):
        TrueModelSpec("ar1", 10, rho=1.0)
    with pytest.raises(ValueError):
        TrueModelSpec("ar4", 4)
    with pytest.raises(ValueError):
        TrueModelSpec("ar4", 10, coeffs=(0.4, 0.2))
    with pytest.raises(ValueError):
        TrueModelSpec("fgn", 10, hurst=0.0)


def test_model_dict_round_trip():
    spec = TrueModelSpec("ar4", 20, coeffs=(0.5, 0.1, 0.1, 0.05))
    again = TrueModelSpec.from_dict(spec.to_dict(), 20)
    assert again == spec
    with pytest.raises(ValueError):
        TrueModelSpec.from_dict({"variant": "ar1", "shape": 3}, 10)
    with pytest.raises(ValueError):
        TrueModelSpec.from_dict({"rho": 0.3}, 10)


# ---------------------------------------------------------------------------
# sampling and losses
# ---------------------------------------------------------------------------

def test_sample_gaussian_deterministic():
    sigma = make_ar1_cov(0.3, 5)
    a = sample_gaussian(sigma, 7, np.random.default_rng(3))
    b = sample_gaussian(sigma, 7, np.random.default_rng(3))
    np.testing.assert_array_equal(a, b)
    assert a.shape == (7, 5)


def test_sample_gaussian_moments():
    sigma = make_ar1_cov(0.5, 3)
    x = sample_gaussian(sigma, 200_000, np.random.default_rng(4))
    np.testing.assert_allclose(x.mean(axis=0), 0.0, atol=0.02)
    np.testing.assert_allclose(x.T @ x / x.shape[0], sigma, atol=0.02)


def test_evaluate_losses_matches_norms():
    rng = np.random.default_rng(5)
    est = rng.standard_normal((6, 6))
    est = (est + est.T) / 2.0
    truth = np.eye(6)
    out = evaluate_losses(est, truth)
    diff = est - truth
    assert out["spectral"] == pytest.approx(norm_spectral(diff))
    assert out["linf"] == pytest.approx(norm_linf(diff))
    assert out["fro"] == pytest.approx(norm_fro(diff))
    only = evaluate_losses(est, truth, losses=("fro",))
    assert set(only) == {"fro"}


# ---------------------------------------------------------------------------
# experiment harness
# ---------------------------------------------------------------------------

def small_config(**overrides):
    base = dict(
        model=TrueModelSpec("ar1", 10, rho=0.3),
        n=40,
        reps=3,
        seed=0,
        estimators=("LL", "BL1", "BL2", "MLE"),
        losses=("spectral", "fro"),
        kmax=3,
        splits=4,
        ref_bandwidth=3,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(reps=0)
    with pytest.raises(ValueError):
        small_config(estimators=("LL", "XX"))
    with pytest.raises(ValueError):
        small_config(losses=())
    with pytest.raises(ValueError):
        small_config(n=0)


def test_config_dict_round_trip():
    config = small_config()
    again = ExperimentConfig.from_dict(config.to_dict())
    assert again == config
    with pytest.raises(ValueError) as info:
        ExperimentConfig.from_dict({"n": 10})
    assert "model" in str(info.value)
    bad = config.to_dict()
    bad["selection"]["splits"] = "many"
    with pytest.raises(ValueError) as info:
        ExperimentConfig.from_dict(bad)
    assert "splits" in str(info.value)


def test_run_experiment_deterministic():
    config = small_config()
    first = run_experiment(config)
    second = run_experiment(config)
    assert records_csv_text(first) == records_csv_text(second)
    assert summary_payload(first) == summary_payload(second)
    assert first.n_failed == 0
    for rec in first.records:
        assert rec.k_mode in (1, 2, 3) and rec.k_bl in (1, 2, 3)
        assert set(rec.losses) == {"LL", "BL1", "BL2", "MLE"}


def test_run_experiment_worker_count_invariant():
    config = small_config(reps=4)
    serial = run_experiment(config, workers=1)
    parallel = run_experiment(config, workers=2)
    assert records_csv_text(serial) == records_csv_text(parallel)
    assert summary_payload(serial) == summary_payload(parallel)


def test_run_experiment_single_rep_sd_zero():
    result = run_experiment(small_config(reps=1, estimators=("LL",)))
    for loss_stats in result.summary["LL"].values():
        assert loss_stats["sd"] == 0.0


def test_run_experiment_failure_threshold():
    # a cap far below every innovation variance kills each replication
    config = small_config(estimators=("LL",), cap=1e-12)
    with pytest.raises(ExperimentFailed):
        run_experiment(config)


def test_records_csv_shape():
    config = small_config(reps=2, estimators=("LL", "BL1"), losses=("fro",))
    result = run_experiment(config)
    text = records_csv_text(result)
    lines = text.splitlines()
    assert lines[0] == "rep,k_mode,k_bl,LL_fro,BL1_fro,error"
    assert len(lines) == 3 and text.endswith("\n")
    for line in lines[1:]:
        assert line.endswith(",")  # empty error field


def test_summary_payload_shape():
    config = small_config(reps=2, estimators=("LL",), losses=("spectral",))
    payload = summary_payload(run_experiment(config))
    assert payload["replications"] == 2 and payload["failed"] == 0
    assert payload["config"]["model"] == {"variant": "ar1", "rho": 0.3}
    assert set(payload["summary"]["LL"]["spectral"]) == {"mean", "sd"}
