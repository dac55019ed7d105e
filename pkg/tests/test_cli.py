import json

import numpy as np

from sparse_glarma.cli import main


def _read(path):
    return path.read_bytes()


def test_simulate_writes_series_and_manifest(tmp_path):
    out = tmp_path / "s.csv"
    code = main([
        "simulate", "--n", "100", "--beta", "3", "--gamma", "0.5",
        "--seed", "1", "--out", str(out),
    ])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,y"
    assert len(lines) == 101
    first = lines[1].split(",")
    assert first[0] == "1" and int(first[1]) >= 0

    manifest = json.loads((tmp_path / "s.manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert manifest["seed"] == 1
    assert len(manifest["config_hash"]) == 64
    assert manifest["library_version"]
    assert manifest["wall_time_s"] >= 0


def test_simulate_deterministic_outputs(tmp_path):
    args = ["simulate", "--n", "80", "--beta", "2.5", "--gamma", "0.4",
            "--seed", "7"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert _read(a) == _read(b)


def test_simulate_fourier_covariate_file(tmp_path):
    out = tmp_path / "s.csv"
    beta = ",".join(["0.5"] + ["0"] * 100)
    code = main([
        "simulate", "--n", "50", "--beta", beta,
        "--covariates", "fourier:100,0.7", "--seed", "2", "--out", str(out),
    ])
    assert code == 0
    cov = (tmp_path / "s_covariates.csv").read_text().splitlines()
    header = cov[0].split(",")
    assert len(header) == 101
    assert header[0] == "intercept"
    body = np.loadtxt(cov[1:], delimiter=",", ndmin=2)
    assert body.shape == (50, 101)
    assert np.all(body[:, 0] == 1.0)


def test_simulate_beta_from_file(tmp_path):
    beta_file = tmp_path / "beta.csv"
    beta_file.write_text("2.0\n0.5\n-0.3\n")
    rng_cov = tmp_path / "cov.csv"
    rng_cov.write_text(
        "intercept,x1,x2\n" + "\n".join("1.0,0.2,-0.1" for _ in range(30)) + "\n"
    )
    out = tmp_path / "s.csv"
    code = main([
        "simulate", "--n", "30", "--beta", str(beta_file),
        "--covariates", str(rng_cov), "--seed", "3", "--out", str(out),
    ])
    assert code == 0
    manifest = json.loads((tmp_path / "s.manifest.json").read_text())
    assert manifest["args"]["beta"] == [2.0, 0.5, -0.3]
    assert manifest["args"]["intercept_column_prepended"] is False


def test_simulate_usage_errors(tmp_path):
    # --q without --gamma
    code = main(["simulate", "--n", "10", "--beta", "1", "--q", "2",
                 "--seed", "0", "--out", str(tmp_path / "x.csv")])
    assert code == 2
    # q/gamma mismatch
    code = main(["simulate", "--n", "10", "--beta", "1", "--q", "2",
                 "--gamma", "0.5", "--seed", "0",
                 "--out", str(tmp_path / "x.csv")])
    assert code == 2
    # beta length vs covariates
    code = main(["simulate", "--n", "10", "--beta", "1,2", "--seed", "0",
                 "--out", str(tmp_path / "x.csv")])
    assert code == 2


def test_simulate_numeric_failure_exit_code(tmp_path):
    code = main(["simulate", "--n", "20", "--beta", "60",
                 "--seed", "0", "--out", str(tmp_path / "x.csv")])
    assert code == 3


def _make_series(tmp_path, n=80, p=8, seed=3):
    out = tmp_path / "series.csv"
    beta = [2.0] + [0.0] * p
    beta[2] = 1.0
    code = main([
        "simulate", "--n", str(n), "--beta", ",".join(map(str, beta)),
        "--gamma", "0.4", "--covariates", f"fourier:{p},0.7",
        "--seed", str(seed), "--out", str(out),
    ])
    assert code == 0
    return out, tmp_path / "series_covariates.csv"


def test_select_end_to_end(tmp_path):
    series, cov = _make_series(tmp_path)
    prefix = tmp_path / "run1"
    args = [
        "select", "--series", str(series), "--covariates", str(cov),
        "--q", "1", "--method", "ss_min", "--threshold", "0.5",
        "--subsamples", "40", "--grid-count", "30", "--max-outer", "3",
        "--seed", "5", "--out-prefix", str(prefix),
    ]
    assert main(args) == 0

    support = (tmp_path / "run1_support.csv").read_text().splitlines()
    assert support[0] == "index,frequency,selected,beta_hat"
    assert len(support) == 10  # p+1 rows

    gamma = (tmp_path / "run1_gamma.csv").read_text().splitlines()
    assert gamma[0] == "outer_iter,gamma_1"
    assert len(gamma) >= 2

    manifest = json.loads((tmp_path / "run1.manifest.json").read_text())
    assert manifest["command"] == "select"
    assert manifest["args"]["threshold"] == 0.5

    # byte-identical rerun (manifest compared modulo wall time)
    prefix2 = tmp_path / "run2"
    args2 = args[:-1] + [str(prefix2)]
    assert main(args2) == 0
    assert _read(tmp_path / "run1_support.csv") == _read(tmp_path / "run2_support.csv")
    assert _read(tmp_path / "run1_gamma.csv") == _read(tmp_path / "run2_gamma.csv")


def test_select_round_trip_values(tmp_path):
    series, cov = _make_series(tmp_path, seed=9)
    prefix = tmp_path / "rt"
    assert main([
        "select", "--series", str(series), "--covariates", str(cov),
        "--q", "1", "--method", "fast_ss", "--grid-count", "30",
        "--max-outer", "2", "--seed", "4", "--out-prefix", str(prefix),
    ]) == 0
    # shortest round-trip floats: reparsing reproduces values exactly
    rows = (tmp_path / "rt_support.csv").read_text().splitlines()[1:]
    freqs = [float(r.split(",")[1]) for r in rows]
    reserialized = [repr(f) for f in freqs]
    assert [r.split(",")[1] for r in rows] == reserialized


def test_select_wide_shape_completes(tmp_path):
    # the n=15, p=95 shape goes through the penalized GLM branch
    rng = np.random.default_rng(0)
    n, p = 15, 95
    x = rng.normal(0, 0.3, (n, p))
    covfile = tmp_path / "cov.csv"
    header = ",".join(f"x{i}" for i in range(1, p + 1))
    with open(covfile, "w") as fh:
        fh.write(header + "\n")
        np.savetxt(fh, x, delimiter=",")
    y = rng.poisson(2.0, n)
    series = tmp_path / "wide.csv"
    with open(series, "w") as fh:
        fh.write("t,y\n")
        for t, val in enumerate(y, 1):
            fh.write(f"{t},{val}\n")
    code = main([
        "select", "--series", str(series), "--covariates", str(covfile),
        "--q", "1", "--method", "fast_ss", "--grid-count", "25",
        "--max-outer", "2", "--seed", "1",
        "--out-prefix", str(tmp_path / "wide_run"),
    ])
    assert code == 0
    manifest = json.loads((tmp_path / "wide_run.manifest.json").read_text())
    assert manifest["args"]["intercept_column_prepended"] is True


def test_bench_command(tmp_path):
    cfg = {
        "n": 120, "p": 44, "q": 1, "sparsity": "five_pct",
        "gamma_true": [0.5], "beta0_intercept": 2.0, "replicates": 1,
        "methods": ["fast_ss", "lasso_cv"], "thresholds": {"fast_ss": 0.4},
        "seed": 2, "n_subsamples": 30, "grid_count": 25, "max_outer_iters": 2,
    }
    cfg_path = tmp_path / "bench.json"
    cfg_path.write_text(json.dumps(cfg))
    out_dir = tmp_path / "out"
    assert main(["bench", "--config", str(cfg_path), "--out-dir", str(out_dir)]) == 0

    metrics = (out_dir / "metrics.csv").read_text().splitlines()
    assert metrics[0].startswith(
        "n,q,sparsity,method,tpr_mean,tpr_sd,fpr_mean,fpr_sd"
    )
    assert len(metrics) == 3

    records = (out_dir / "records.csv").read_text().splitlines()
    assert records[0].startswith("replicate,seed,method,tpr,fpr")
    assert len(records) == 3

    manifest = json.loads((out_dir / "manifest.json").read_text())
    import hashlib

    assert manifest["config_hash"] == hashlib.sha256(cfg_path.read_bytes()).hexdigest()


def test_bench_usage_errors(tmp_path):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({"n": 100, "p": 44, "q": 1, "methods": []}))
    assert main(["bench", "--config", str(cfg_path),
                 "--out-dir", str(tmp_path / "o")]) == 2

    cfg_path.write_text(json.dumps({"n": 100, "p": 44, "q": 1, "bogus": 1}))
    assert main(["bench", "--config", str(cfg_path),
                 "--out-dir", str(tmp_path / "o")]) == 2

    assert main(["bench", "--config", str(tmp_path / "missing.json"),
                 "--out-dir", str(tmp_path / "o")]) == 4


def test_shipped_bench_config_schema():
    from pathlib import Path

    shipped = Path(__file__).resolve().parents[1] / "configs" / "bench_5pct_q1.json"
    cfg = json.loads(shipped.read_text())
    assert cfg["n"] == 1000 and cfg["p"] == 100 and cfg["q"] == 1
    assert cfg["sparsity"] == "five_pct"
    assert set(cfg["methods"]) >= {"ss_min", "fast_ss", "lasso_cv"}
