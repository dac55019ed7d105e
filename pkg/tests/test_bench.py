import numpy as np
import pytest

from sparse_glarma import (
    ExperimentConfig,
    fourier_covariates,
    run_experiment,
    run_gamma_study,
    sparse_beta,
    tpr_fpr,
)
from sparse_glarma.bench import aggregate_records
from sparse_glarma.errors import ConfigError


def test_fourier_covariates_exact_values():
    # n=4, p=2, f=0.5: cosine block is i=1, sine block is i=2, t=1..4
    x = fourier_covariates(4, 2, 0.5)
    t = np.arange(1, 5)
    np.testing.assert_array_equal(x[:, 0], 1.0)
    np.testing.assert_allclose(x[:, 1], np.cos(np.pi * t / 4.0), atol=1e-15)
    np.testing.assert_allclose(x[:, 2], np.sin(np.pi * t / 2.0), atol=1e-15)
    np.testing.assert_allclose(
        x[:, 1], [np.sqrt(2) / 2, 0.0, -np.sqrt(2) / 2, -1.0], atol=1e-15
    )


def test_fourier_covariates_structure():
    n, p = 200, 11
    x = fourier_covariates(n, p, 0.7)
    assert x.shape == (n, p + 1)
    assert np.all(x[:, 0] == 1.0)
    assert np.all(np.abs(x) <= 1.0 + 1e-15)
    # cosine block up to floor(p/2), sine block after
    t = np.arange(1, n + 1)
    np.testing.assert_allclose(x[:, 5], np.cos(2 * np.pi * 5 * t * 0.7 / n))
    np.testing.assert_allclose(x[:, 6], np.sin(2 * np.pi * 6 * t * 0.7 / n))


def test_sparse_beta_named_levels():
    five = sparse_beta(100, "five_pct")
    assert np.count_nonzero(five[1:]) == 5
    assert five[1] == 1.73 and five[3] == 0.38 and five[17] == 0.29
    assert five[33] == -0.64 and five[44] == -0.13
    assert five[0] == 0.0

    ten = sparse_beta(100, "ten_pct", intercept=2.5)
    assert np.count_nonzero(ten[1:]) == 10
    assert ten[0] == 2.5
    assert ten[3] == 1.2 and ten[38] == -0.1 and ten[44] == -0.07

    with pytest.raises(ConfigError):
        sparse_beta(43, "five_pct")
    with pytest.raises(ConfigError):
        sparse_beta(100, "three_pct")


def test_sparse_beta_custom_vector():
    custom = np.array([1.0, 0.0, -2.0])
    np.testing.assert_array_equal(sparse_beta(2, custom), custom)
    with pytest.raises(ConfigError):
        sparse_beta(5, custom)


def test_tpr_fpr_counting():
    assert tpr_fpr({1, 3}, {1, 3}, 10) == (1.0, 0.0)
    truth = {1, 3, 17, 33, 44}
    assert tpr_fpr({1, 3, 17, 33}, truth, 100) == (0.8, 0.0)
    assert tpr_fpr(set(range(1, 101)), truth, 100) == (1.0, 1.0)
    assert tpr_fpr(set(), truth, 100) == (0.0, 0.0)
    # conventions: no true positives defined, saturated truth
    assert tpr_fpr({2}, set(), 10) == (1.0, 0.1)
    assert tpr_fpr({1, 2}, {1, 2}, 2) == (1.0, 0.0)


def _tiny_cfg(**kw):
    defaults = dict(
        n=150,
        p=44,
        q=1,
        sparsity="five_pct",
        gamma_true=(0.5,),
        beta0_intercept=2.0,
        replicates=2,
        methods=("ss_min", "lasso_cv"),
        thresholds={"ss_min": 0.6},
        seed=3,
        n_subsamples=40,
        grid_count=30,
        max_outer_iters=3,
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


def test_run_experiment_rows_and_records():
    cfg = _tiny_cfg()
    rows, records = run_experiment(cfg)
    assert [r.method for r in rows] == list(cfg.methods)
    for row in rows:
        assert 0.0 <= row.tpr_mean <= 1.0
        assert 0.0 <= row.fpr_mean <= 1.0
        assert row.tpr_sd >= 0.0 and row.fpr_sd >= 0.0
        assert row.n == 150 and row.q == 1 and row.sparsity == "five_pct"
        assert row.replicates_effective == 2
    assert len(records) == len(cfg.methods) * cfg.replicates
    for rec in records:
        assert rec["error"] == ""
        assert rec["runtime_s"] > 0


def test_run_experiment_deterministic():
    cfg = _tiny_cfg()
    rows_a, rec_a = run_experiment(cfg)
    rows_b, rec_b = run_experiment(cfg)
    for a, b in zip(rows_a, rows_b):
        # everything except measured wall time must match exactly
        assert (a.method, a.tpr_mean, a.tpr_sd, a.fpr_mean, a.fpr_sd,
                a.replicates_effective) == (
            b.method, b.tpr_mean, b.tpr_sd, b.fpr_mean, b.fpr_sd,
            b.replicates_effective)
    for a, b in zip(rec_a, rec_b):
        assert a["tpr"] == b["tpr"] and a["fpr"] == b["fpr"]
        assert a["support"] == b["support"]


def test_single_replicate_has_zero_sd():
    cfg = _tiny_cfg(replicates=1, methods=("lasso_cv",))
    rows, _ = run_experiment(cfg)
    assert rows[0].tpr_sd == 0.0 and rows[0].fpr_sd == 0.0


def test_parallel_replicates_match_serial():
    serial = _tiny_cfg(replicates=2, methods=("lasso_cv",))
    parallel = _tiny_cfg(replicates=2, methods=("lasso_cv",), n_jobs=2)
    rows_s, rec_s = run_experiment(serial)
    rows_p, rec_p = run_experiment(parallel)
    assert rows_s[0].tpr_mean == rows_p[0].tpr_mean
    assert rows_s[0].fpr_mean == rows_p[0].fpr_mean
    assert [r["support"] for r in rec_s] == [r["support"] for r in rec_p]


def test_aggregation_matches_raw_records():
    cfg = _tiny_cfg(replicates=3, methods=("lasso_cv",))
    rows, records = run_experiment(cfg)
    recomputed = aggregate_records(cfg, records)
    for a, b in zip(rows, recomputed):
        assert abs(a.tpr_mean - b.tpr_mean) < 1e-12
        assert abs(a.fpr_mean - b.fpr_mean) < 1e-12
        assert abs(a.tpr_sd - b.tpr_sd) < 1e-12
        assert abs(a.fpr_sd - b.fpr_sd) < 1e-12
    # permuting replicate order leaves the aggregate unchanged
    shuffled = aggregate_records(cfg, records[::-1])
    for a, b in zip(rows, shuffled):
        assert abs(a.tpr_mean - b.tpr_mean) < 1e-12
        assert abs(a.tpr_sd - b.tpr_sd) < 1e-12


def test_glm_direct_modes_run():
    cfg = _tiny_cfg(methods=("lasso_cv_glm", "lasso_best_glm"), replicates=1,
                    grid_count=20)
    rows, records = run_experiment(cfg)
    assert all(rec["error"] == "" for rec in records)
    by = {r.method: r for r in rows}
    # the oracle-tuned variant can only do better on the tpr-fpr score
    assert (by["lasso_best_glm"].tpr_mean - by["lasso_best_glm"].fpr_mean
            >= by["lasso_cv_glm"].tpr_mean - by["lasso_cv_glm"].fpr_mean - 1e-12)


def test_empty_methods_rejected():
    with pytest.raises(ConfigError):
        run_experiment(_tiny_cfg(methods=()))
    with pytest.raises(ConfigError):
        _tiny_cfg(methods=("nope",))
    with pytest.raises(ConfigError):
        _tiny_cfg(gamma_true=(0.5, 0.1))


def test_run_gamma_study_shapes_and_determinism():
    out = run_gamma_study(ns=(60,), qs=(1, 2), replicates=3, seed=5)
    assert set(out) == {(60, 1), (60, 2)}
    assert out[(60, 1)].shape == (3, 2)
    assert out[(60, 2)].shape == (3, 3)
    again = run_gamma_study(ns=(60,), qs=(1, 2), replicates=3, seed=5)
    for key in out:
        np.testing.assert_array_equal(
            np.nan_to_num(out[key]), np.nan_to_num(again[key])
        )


def test_gamma_study_accuracy_improves_with_n():
    out = run_gamma_study(ns=(50, 500), qs=(1,), replicates=30, seed=7)
    err_small = np.nanmedian(np.abs(out[(50, 1)][:, 1] - 0.5))
    err_large = np.nanmedian(np.abs(out[(500, 1)][:, 1] - 0.5))
    assert err_large < err_small
