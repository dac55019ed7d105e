"""Command-line entry points: simulate, select, bench.

File conventions: CSV with a header row, comma delimiter, UTF-8, LF line
endings; floats are written in shortest round-trip decimal form so
reparsing an emitted file reproduces the in-memory values exactly. Every
command writes a JSON manifest holding the resolved arguments, a SHA-256
config hash, the seed, library and numpy versions, and the wall time.

Exit codes: 0 success, 2 usage/config error, 3 numeric failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bench import ExperimentConfig, fourier_covariates, run_experiment
from .errors import NumericError, UsageError
from .estimation import NewtonConfig
from .model import GlarmaParams, SeriesData, simulate
from .pipeline import PipelineConfig, run_pipeline
from .selection import SelectionConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _fmt(value) -> str:
    """Shortest decimal representation that round-trips."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_manifest(path: Path, command: str, args: dict, seed: int,
                    wall_time_s: float, config_bytes: bytes | None = None) -> None:
    if config_bytes is None:
        config_bytes = json.dumps(args, sort_keys=True, separators=(",", ":")).encode()
    manifest = {
        "command": command,
        "args": args,
        "config_hash": hashlib.sha256(config_bytes).hexdigest(),
        "seed": seed,
        "library_version": __version__,
        "numpy_version": np.__version__,
        "wall_time_s": wall_time_s,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_float_list(text: str, flag: str) -> list[float]:
    candidate = Path(text)
    if candidate.exists():
        raw = candidate.read_text(encoding="utf-8").replace("\n", ",")
        parts = [s for s in raw.split(",") if s.strip()]
    else:
        parts = [s for s in text.split(",") if s.strip()]
    try:
        return [float(s) for s in parts]
    except ValueError as exc:
        raise UsageError(f"{flag}: cannot parse {text!r} as numbers") from exc


def _load_covariates(spec: str | None, n: int):
    """Return (matrix, generated, prepended_ones) for a covariate spec."""
    if spec is None:
        return np.ones((n, 1)), False, False
    if spec.startswith("fourier:"):
        try:
            p_str, f_str = spec[len("fourier:"):].split(",")
            p, f = int(p_str), float(f_str)
        except ValueError as exc:
            raise UsageError(f"--covariates: bad fourier spec {spec!r}") from exc
        return fourier_covariates(n, p, f), True, False
    path = Path(spec)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        body = np.loadtxt(fh, delimiter=",", ndmin=2)
    if body.shape[0] != n:
        raise UsageError(f"covariate file has {body.shape[0]} rows, expected {n}")
    if header and header[0] == "intercept":
        return body, False, False
    return np.hstack([np.ones((n, 1)), body]), False, True


def _write_covariates(path: Path, x: np.ndarray) -> None:
    header = ["intercept"] + [f"x{i}" for i in range(1, x.shape[1])]
    _write_csv(path, header, x)


def _load_series(path: str) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        body = np.loadtxt(fh, delimiter=",", ndmin=2)
    if "y" not in header:
        raise UsageError(f"series file {path} has no 'y' column")
    return body[:, header.index("y")].astype(np.int64)


def cmd_simulate(args) -> int:
    start = time.perf_counter()
    beta = np.array(_parse_float_list(args.beta, "--beta"))
    gamma = np.array(_parse_float_list(args.gamma, "--gamma") if args.gamma else [])
    if args.q is not None:
        if args.gamma is None and args.q > 0:
            raise UsageError(f"--q {args.q} given but --gamma is missing")
        if args.q != gamma.size:
            raise UsageError(f"--q {args.q} does not match {gamma.size} gamma values")
    x, generated, prepended = _load_covariates(args.covariates, args.n)
    if beta.size != x.shape[1]:
        raise UsageError(
            f"beta has {beta.size} entries but covariates give {x.shape[1]} columns"
        )
    data = simulate(GlarmaParams(beta=beta, gamma=gamma), x, args.n, seed=args.seed)

    out = Path(args.out)
    _write_csv(out, ["t", "y"], zip(range(1, args.n + 1), data.y))
    if generated:
        _write_covariates(out.with_name(out.stem + "_covariates.csv"), x)
    resolved = {
        "n": args.n,
        "beta": beta.tolist(),
        "gamma": gamma.tolist(),
        "covariates": args.covariates,
        "out": str(args.out),
        "covariates_generated": generated,
        "intercept_column_prepended": prepended,
    }
    _write_manifest(
        out.with_name(out.stem + ".manifest.json"),
        "simulate",
        resolved,
        args.seed,
        time.perf_counter() - start,
    )
    return EXIT_OK


def cmd_select(args) -> int:
    start = time.perf_counter()
    y = _load_series(args.series)
    n = y.size
    x, generated, prepended = _load_covariates(args.covariates, n)
    data = SeriesData(y=y, x=x)
    sel = SelectionConfig(
        method=args.method,
        threshold=args.threshold,
        n_subsamples=args.subsamples,
        grid_count=args.grid_count,
        seed=args.seed,
    )
    cfg = PipelineConfig(
        q=args.q,
        selection=sel,
        newton=NewtonConfig(),
        max_outer_iters=args.max_outer,
    )
    result = run_pipeline(data, cfg)

    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    last = result.history[-1]
    support = set(result.support.tolist())
    _write_csv(
        prefix.with_name(prefix.name + "_support.csv"),
        ["index", "frequency", "selected", "beta_hat"],
        (
            (j, last.frequencies[j], int(j in support), result.beta_hat[j])
            for j in range(data.p_plus_1)
        ),
    )
    _write_csv(
        prefix.with_name(prefix.name + "_gamma.csv"),
        ["outer_iter"] + [f"gamma_{j}" for j in range(1, args.q + 1)],
        ((k + 1, *h.gamma) for k, h in enumerate(result.history)),
    )
    resolved = {
        "series": str(args.series),
        "covariates": args.covariates,
        "q": args.q,
        "method": args.method,
        "threshold": sel.resolved_threshold(),
        "subsamples": args.subsamples,
        "grid_count": args.grid_count,
        "max_outer": args.max_outer,
        "out_prefix": str(args.out_prefix),
        "intercept_column_prepended": prepended,
        "covariates_generated": generated,
        "stabilized": result.stabilized,
        "outer_iters": result.outer_iters,
    }
    _write_manifest(
        prefix.with_name(prefix.name + ".manifest.json"),
        "select",
        resolved,
        args.seed,
        time.perf_counter() - start,
    )
    return EXIT_OK


_RECORD_COLUMNS = [
    "replicate", "seed", "method", "tpr", "fpr", "runtime_s",
    "outer_iters", "stabilized", "support", "gamma_hat", "gamma_history",
    "lambda_used", "error",
]


def _record_cell(rec: dict, col: str) -> str:
    val = rec.get(col)
    if val is None:
        return ""
    if col == "support":
        return ";".join(str(int(j)) for j in val)
    if col == "gamma_hat":
        return ";".join(repr(float(g)) for g in np.atleast_1d(val))
    if col == "gamma_history":
        return "|".join(
            ";".join(repr(float(g)) for g in np.atleast_1d(gs)) for gs in val
        )
    if col == "lambda_used":
        arr = np.atleast_1d(val)
        return repr(float(arr[0])) if arr.size == 1 else ";".join(
            repr(float(v)) for v in arr
        )
    return _fmt(val)


def cmd_bench(args) -> int:
    start = time.perf_counter()
    config_path = Path(args.config)
    config_bytes = config_path.read_bytes()
    try:
        raw = json.loads(config_bytes)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {config_path} is not valid JSON: {exc}") from exc
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    for key in ("methods", "gamma_true"):
        if key in raw and isinstance(raw[key], list):
            raw[key] = tuple(raw[key])
    if args.threads is not None:
        raw["n_jobs"] = args.threads
    try:
        cfg = ExperimentConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad config: {exc}") from exc

    rows, records = run_experiment(cfg)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out_dir / "metrics.csv",
        ["n", "q", "sparsity", "method", "tpr_mean", "tpr_sd", "fpr_mean",
         "fpr_sd", "runtime_s", "replicates_effective"],
        (
            (r.n, r.q, r.sparsity, r.method, r.tpr_mean, r.tpr_sd,
             r.fpr_mean, r.fpr_sd, r.runtime_s, r.replicates_effective)
            for r in rows
        ),
    )
    with open(out_dir / "records.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(_RECORD_COLUMNS) + "\n")
        for rec in records:
            fh.write(",".join(_record_cell(rec, c) for c in _RECORD_COLUMNS) + "\n")
    _write_manifest(
        out_dir / "manifest.json",
        "bench",
        {"config": str(config_path), "out_dir": str(out_dir),
         "threads": args.threads},
        cfg.seed,
        time.perf_counter() - start,
        config_bytes=config_bytes,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparse-glarma",
        description="Sparse variable selection for GLARMA count time series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a series from the model")
    sim.add_argument("--n", type=int, required=True, help="series length")
    sim.add_argument("--beta", required=True,
                     help="regression coefficients: comma list or file")
    sim.add_argument("--gamma", help="ARMA coefficients: comma list or file")
    sim.add_argument("--q", type=int, help="ARMA order (validated against --gamma)")
    sim.add_argument("--covariates",
                     help="covariate CSV file or fourier:p,f (default: intercept only)")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output series CSV path")
    sim.set_defaults(func=cmd_simulate)

    sel = sub.add_parser("select", help="run the two-stage selection pipeline")
    sel.add_argument("--series", required=True, help="series CSV (t,y)")
    sel.add_argument("--covariates",
                     help="covariate CSV file or fourier:p,f (default: intercept only)")
    sel.add_argument("--q", type=int, required=True, help="ARMA order (>= 1)")
    sel.add_argument("--method", required=True,
                     choices=["ss_cv", "ss_min", "fast_ss"])
    sel.add_argument("--threshold", type=float,
                     help="selection frequency threshold (default per method)")
    sel.add_argument("--subsamples", type=int, default=1000)
    sel.add_argument("--grid-count", type=int, default=100)
    sel.add_argument("--max-outer", type=int, default=10)
    sel.add_argument("--seed", type=int, default=0)
    sel.add_argument("--out-prefix", required=True)
    sel.set_defaults(func=cmd_select)

    ben = sub.add_parser("bench", help="run a benchmark experiment from a config")
    ben.add_argument("--config", required=True, help="experiment JSON config")
    ben.add_argument("--out-dir", required=True)
    ben.add_argument("--threads", type=int, default=None,
                     help="replicate workers (0 = auto)")
    ben.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
