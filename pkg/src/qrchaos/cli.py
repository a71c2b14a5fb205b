"""Command-line interface: generate / run / sweep / metrics subcommands.

Exit codes: 0 success, 1 runtime or numeric failure, 2 configuration
error.  ``QR_THREADS`` caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import copy
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import _core
from .config import _read_ini, _resolved, build_config, config_digest
from .dynamics import Trajectory, trajectory_from_csv, trajectory_to_csv
from .exceptions import ConfigError, QrchaosError
from .metrics import (
    ami_first_minimum,
    lyapunov_rosenstein,
    nrmse_components,
    psd_method1,
    psd_method2,
)
from .pipeline import generate_data, run_experiment, valid_horizon

SMOKE_LENGTHS = {"washout": "100", "train": "500", "test": "500"}


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _write_kv_csv(path: Path, rows: list[tuple[str, object]]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("name,value\n")
        for name, value in rows:
            fh.write(f"{name},{_fmt(value)}\n")


def _write_table_csv(path: Path, header: str, table: np.ndarray) -> None:
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")


def _load_resolved(args) -> dict:
    resolved = _resolved(_read_ini(args.config))
    if getattr(args, "seed", None) is not None:
        resolved["pipeline"]["seed"] = str(args.seed)
    if getattr(args, "smoke", False):
        resolved["pipeline"].update(SMOKE_LENGTHS)
    return resolved


def cmd_generate(args) -> int:
    resolved = _load_resolved(args)
    cfg = build_config(resolved)
    out = Path(args.out)
    if not out.parent.is_dir():
        raise ConfigError(f"output directory {out.parent} does not exist")
    traj = generate_data(cfg)
    trajectory_to_csv(traj, out)
    stats = {
        "tau": cfg.system.tau,
        "mean": list(traj.mean),
        "std": list(traj.std),
        "fit_range": [0, cfg.washout + cfg.train],
    }
    out.with_suffix(out.suffix + ".stats.json").write_text(
        json.dumps(stats, indent=2) + "\n"
    )
    print(f"wrote {len(traj)} samples to {out}")
    return 0


def _metric_rows(result) -> list[tuple[str, object]]:
    rows: list[tuple[str, object]] = []
    for i, v in enumerate(result.train_nrmse):
        rows.append((f"train_nrmse_c{i}", v))
    for i, v in enumerate(result.test_nrmse):
        rows.append((f"test_nrmse_c{i}", v))
    rows.append(("valid_horizon", result.valid_horizon))
    m = result.metrics
    if m.ami_delay is not None:
        rows.append(("ami_delay", m.ami_delay))
        rows.append(("lyapunov_target", m.lyapunov_target))
        rows.append(("lyapunov_predicted", m.lyapunov_predicted))
    return rows


def _emit_run(result, resolved, out_dir: Path, duration: float) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    trajectory_to_csv(result.target, out_dir / "target.csv")
    trajectory_to_csv(result.predicted, out_dir / "predicted.csv")
    _write_kv_csv(out_dir / "metrics.csv", _metric_rows(result))
    paths = ["target.csv", "predicted.csv", "metrics.csv"]
    m = result.metrics
    for name in ("psd1_target", "psd1_predicted", "psd2_target", "psd2_predicted"):
        table = getattr(m, name)
        if table is not None:
            _write_table_csv(out_dir / f"{name}.csv", "freq,value", table)
            paths.append(f"{name}.csv")
    manifest = {
        "config_digest": config_digest(resolved),
        "seed": int(resolved["pipeline"]["seed"]),
        "g": result.g,
        "ridge": float(resolved["pipeline"]["ridge"]),
        "backend": _core.BACKEND,
        "train_nrmse": [float(v) for v in result.train_nrmse],
        "test_nrmse": [float(v) for v in result.test_nrmse],
        "valid_horizon": result.valid_horizon,
        "ami_delay": m.ami_delay,
        "lyapunov_target": m.lyapunov_target,
        "lyapunov_predicted": m.lyapunov_predicted,
        "files": paths,
        "duration_s": duration,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def cmd_run(args) -> int:
    resolved = _load_resolved(args)
    cfg = build_config(resolved)
    t0 = time.perf_counter()
    try:
        result = run_experiment(cfg)
    except QrchaosError as exc:
        print(f"run failed during pipeline: {exc}", file=sys.stderr)
        return 1
    manifest = _emit_run(result, resolved, Path(args.out), time.perf_counter() - t0)
    print(json.dumps(manifest, indent=2))
    return 0


def _parse_set(spec: str) -> tuple[str, list[str]]:
    """Parse 'key=v1,v2' or 'key=log:a:b:n' into (key, values)."""
    if "=" not in spec:
        raise ConfigError(f"--set needs key=values, got '{spec}'")
    key, _, vals = spec.partition("=")
    key = key.strip()
    if key not in ("g", "ridge", "seed", "diagonal_scale"):
        raise ConfigError(f"cannot sweep over '{key}'")
    vals = vals.strip()
    if vals.startswith("log:"):
        try:
            a, b, n = vals[4:].split(":")
            points = np.logspace(np.log10(float(a)), np.log10(float(b)), int(n))
        except ValueError as exc:
            raise ConfigError(f"bad log sweep spec '{vals}': {exc}") from exc
        return key, [f"{p:.17g}" for p in points]
    values = [v.strip() for v in vals.split(",") if v.strip()]
    if not values:
        raise ConfigError(f"empty value list in '{spec}'")
    return key, values


def _apply_point(resolved: dict, point: dict[str, str]) -> dict:
    out = copy.deepcopy(resolved)
    for key, val in point.items():
        if key == "g":
            out["reservoir"]["g"] = val
        elif key == "ridge":
            out["pipeline"]["ridge"] = val
        elif key == "seed":
            out["pipeline"]["seed"] = val
        elif key == "diagonal_scale":
            diag = [float(t) for t in out["hamiltonian"]["diagonal"].split(",")]
            out["hamiltonian"]["diagonal"] = ",".join(
                f"{d * float(val):.17g}" for d in diag
            )
    return out


def _run_point(job) -> dict:
    tag, resolved, out_dir = job
    cfg = build_config(resolved)
    t0 = time.perf_counter()
    result = run_experiment(cfg)
    manifest = _emit_run(result, resolved, Path(out_dir), time.perf_counter() - t0)
    manifest["point"] = tag
    return manifest


def cmd_sweep(args) -> int:
    resolved = _load_resolved(args)
    axes = [_parse_set(s) for s in args.set]
    if not axes:
        raise ConfigError("sweep needs at least one --set axis")
    points = [{}]
    for key, values in axes:
        points = [{**p, key: v} for p in points for v in values]
    out_root = Path(args.out)
    out_root.mkdir(parents=True, exist_ok=True)
    jobs = []
    for i, point in enumerate(points):
        tag = "point%04d" % i
        jobs.append((tag, _apply_point(resolved, point), str(out_root / tag)))
    workers = int(os.environ.get("QR_THREADS", "0")) or (os.cpu_count() or 1)
    results, failures = [], []
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        futs = {pool.submit(_run_point, job): job[0] for job in jobs}
        for fut in concurrent.futures.as_completed(futs):
            tag = futs[fut]
            try:
                results.append(fut.result())
            except Exception as exc:
                failures.append((tag, str(exc)))
                print(f"{tag} failed: {exc}", file=sys.stderr)
    results.sort(key=lambda m: -m["valid_horizon"])
    with open(out_root / "summary.csv", "w", newline="") as fh:
        fh.write("point,seed,g,ridge,valid_horizon,test_nrmse_c0\n")
        for m in results:
            fh.write(
                f"{m['point']},{m['seed']},{_fmt(m['g'])},"
                f"{_fmt(m['ridge'])},{m['valid_horizon']},"
                f"{_fmt(m['test_nrmse'][0])}\n"
            )
    for tag, msg in failures:
        print(f"FAILED {tag}: {msg}", file=sys.stderr)
    print(f"{len(results)} points ok, {len(failures)} failed; see {out_root}")
    return 0 if results else 1


def cmd_metrics(args) -> int:
    target = trajectory_from_csv(args.target)
    pred = trajectory_from_csv(args.predicted)
    k = min(len(target), len(pred))
    if k < 3:
        raise ConfigError("series too short to evaluate")
    tgt, prd = target.states[:k], pred.states[:k]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows: list[tuple[str, object]] = []
    err = nrmse_components(prd, tgt)
    for i, v in enumerate(err):
        rows.append((f"test_nrmse_c{i}", v))
    rows.append(("valid_horizon", valid_horizon(prd, tgt, args.threshold)))
    max_lag = min(200, (k - 1) // 2)
    delay = ami_first_minimum(tgt[:, 0], max_lag)
    rows.append(("ami_delay", delay))
    if k > 30 * delay:
        rows.append(
            ("lyapunov_target",
             lyapunov_rosenstein(tgt[:, 0], delay, sample_dt=target.tau))
        )
        rows.append(
            ("lyapunov_predicted",
             lyapunov_rosenstein(prd[:, 0], delay, sample_dt=pred.tau))
        )
    _write_kv_csv(out_dir / "metrics.csv", rows)
    _write_table_csv(out_dir / "psd1_target.csv", "freq,value",
                     psd_method1(tgt[:, 0], target.tau))
    _write_table_csv(out_dir / "psd1_predicted.csv", "freq,value",
                     psd_method1(prd[:, 0], pred.tau))
    _write_table_csv(out_dir / "psd2_target.csv", "freq,value",
                     psd_method2(tgt[:, -1], target.tau))
    _write_table_csv(out_dir / "psd2_predicted.csv", "freq,value",
                     psd_method2(prd[:, -1], pred.tau))
    print(f"metrics written to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrchaos",
        description="Quantum reservoir computing forecaster for chaotic systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="integrate and standardize a trajectory")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--seed", type=int)
    p.add_argument("--smoke", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="run one experiment end to end")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--smoke", action="store_true", help="truncated lengths")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--smoke", action="store_true")
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUES",
        help="sweep axis, e.g. g=0.1,1,10 or g=log:1e-2:1e3:13",
    )
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("metrics", help="recompute metrics from existing CSVs")
    p.add_argument("--target", required=True)
    p.add_argument("--predicted", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.4)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except QrchaosError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
