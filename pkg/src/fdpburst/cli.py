"""Command-line entry point: ``fdpburst {simulate,asymptotics,fit-factor,compare}``.

Exit codes: 0 success, 1 I/O failure, 2 invalid config or arguments,
3 numerical solver failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .asymptotics import (DEFAULT_GRID, AsymptoticSummary, LimitFunctions, SimesSolverError,
                          analyze)
from .configio import ConfigError, config_to_dict, load_config, parse_json
from .factorfit import (RankDeficiencyError, fit, format_real, read_matrix_csv,
                        to_loading_groups, write_loadings_csv)
from .gauss import std_cdf
from .model import InvalidConfigError, ensure_valid
from .montecarlo import Outcomes, compare_to_clt, histogram, resolve_threads, run_experiment

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
DEFAULT_BINS = 50


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _plain(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        out.writerows(rows)


def _cell(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format_real(x)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_manifest(out: Path, command: str, files, config_echo, seed, started: str) -> None:
    _write_json(out / "manifest.json", {
        "tool": "fdpburst",
        "version": __version__,
        "command": command,
        "config": config_echo,
        "seed": seed,
        "started_at": started,
        "finished_at": _now(),
        "files": {name: {"sha256": _sha256(out / name), "bytes": (out / name).stat().st_size}
                  for name in sorted(files)},
    })


def _prepare_out(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write to output directory {out}: {exc.strerror or exc}")
    return out


def _load(path: str, seed: Optional[int]):
    try:
        config, raw = load_config(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read config {path}: {exc.strerror or exc}")
    except InvalidConfigError as exc:
        raise CliError(EXIT_CONFIG, f"config error: {exc}")
    if seed is not None:
        if not 0 <= seed < 2 ** 64:
            raise CliError(EXIT_CONFIG, "config error: --seed must be a 64-bit unsigned integer")
        config = config.replace(seed=seed)
        raw = dict(raw, seed=seed)
    try:
        ensure_valid(config)
    except InvalidConfigError as exc:
        raise CliError(EXIT_CONFIG, f"config error: {exc}")
    return config, raw


def _histogram_rows(values, bins: int, sigma_sq: Optional[float]):
    """Rows (edge_lo, edge_hi, count, predicted_density) for ``values``.

    When a predicted normal is given, ``values`` are already on the
    sqrt(m)-scaled centred axis and the density is N(0, sigma_sq) averaged
    over each bin; otherwise the predicted column is left empty.
    """
    edges, counts = histogram(values, bins)
    rows = []
    for lo, hi, c in zip(edges[:-1], edges[1:], counts):
        if sigma_sq is not None and sigma_sq > 0:
            sd = math.sqrt(sigma_sq)
            dens = (std_cdf(hi / sd) - std_cdf(lo / sd)) / (hi - lo)
            rows.append([_cell(lo), _cell(hi), str(int(c)), _cell(dens)])
        else:
            rows.append([_cell(lo), _cell(hi), str(int(c)), ""])
    return rows


def _write_histograms(out: Path, config, outcomes: Outcomes, asym, bins: int) -> list[str]:
    root_m = math.sqrt(config.m)
    names = []
    clt = asym is not None and asym.is_clt
    for label, vals, limit, var in (
            ("fdp", outcomes.fdp, asym.fdp_limit if clt else None, asym.sigma_L_sq if clt else None),
            ("fpr", outcomes.fpr, asym.fpr_limit if clt else None, asym.sigma_R_sq if clt else None)):
        if clt:
            data, name = root_m * (vals - limit), f"hist_{label}_scaled.csv"
        else:
            data, name = vals, f"hist_{label}.csv"
        _write_rows(out / name, ["edge_lo", "edge_hi", "count", "predicted_density"],
                    _histogram_rows(data, bins, var))
        names.append(name)
    return names


def _write_replicates(path: Path, outcomes: Outcomes, k: int) -> None:
    header = ["replicate", "r", "v", "fdp", "fpr", "tau_bh"] + [f"w_{i + 1}" for i in range(k)]
    rows = ([str(i), str(int(outcomes.r[i])), str(int(outcomes.v[i])), _cell(outcomes.fdp[i]),
             _cell(outcomes.fpr[i]), _cell(outcomes.tau_bh[i])] + [_cell(x) for x in outcomes.w[i]]
            for i in range(len(outcomes)))
    _write_rows(path, header, rows)


def cmd_simulate(args) -> int:
    started = _now()
    config, raw = _load(args.config, args.seed)
    out = _prepare_out(args.out)
    try:
        result = run_experiment(config, threads=resolve_threads(args.threads), n_grid=args.grid)
    except SimesSolverError as exc:
        raise CliError(EXIT_SOLVER, f"solver failure: {exc}")
    asym = result.asymptotic
    try:
        _write_replicates(out / "replicates.csv", result.outcomes, config.loadings.k)
        _write_json(out / "summary.json", {
            "config": config_to_dict(config),
            "summary": result.summary,
            "asymptotic": asym.to_dict() if asym is not None else None,
            "comparison": result.comparison,
        })
        files = ["replicates.csv", "summary.json"]
        files += _write_histograms(out, config, result.outcomes, asym, args.bins)
        _write_manifest(out, "simulate", files, raw, config.seed, started)
    except OSError as exc:
        raise CliError(EXIT_IO, f"write failed: {exc.strerror or exc}")
    print(f"fdp_mean={result.summary['fdp_mean']:.6g} fdr_se={result.summary['fdr_se']:.3g} "
          f"replicates={len(result.outcomes)} -> {out}")
    return EXIT_OK


def _parse_w(text: str, k: int) -> np.ndarray:
    try:
        w = np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise CliError(EXIT_CONFIG, f"--w: cannot parse {text!r} as comma-separated numbers")
    if w.shape[0] != k:
        raise CliError(EXIT_CONFIG, f"--w: got {w.shape[0]} values, loadings have k={k}")
    return w


def cmd_asymptotics(args) -> int:
    started = _now()
    config, raw = _load(args.config, None)
    k = config.loadings.k
    if args.w:
        ws = [_parse_w(t, k) for t in args.w]
    elif config.latent_mode == "marginal":
        raise CliError(EXIT_CONFIG, "asymptotics are conditional on w: pass --w in marginal mode")
    else:
        ws = [np.asarray(config.w, dtype=float)]
    out = _prepare_out(args.out)
    grid = args.grid or DEFAULT_GRID
    t = np.geomspace(1e-6, 1.0, args.curve_points)
    summaries, curve_rows = [], []
    try:
        for idx, w in enumerate(ws):
            summary = analyze(config, w=w, n_grid=grid)
            summaries.append({"w": w, "summary": summary.to_dict()})
            lim = LimitFunctions(config.loadings, w, config.mu_a, config.pi1)
            for ti, gi in zip(t, lim.g(t)):
                curve_rows.append([str(idx), _cell(ti), _cell(gi), _cell(ti / config.q)])
    except SimesSolverError as exc:
        raise CliError(EXIT_SOLVER, f"solver failure: {exc}")
    try:
        _write_json(out / "asymptotics.json", {"config": config_to_dict(config), "results": summaries})
        _write_rows(out / "g_curves.csv", ["w_index", "t", "g", "simes_line"], curve_rows)
        _write_manifest(out, "asymptotics", ["asymptotics.json", "g_curves.csv"], raw,
                        config.seed, started)
    except OSError as exc:
        raise CliError(EXIT_IO, f"write failed: {exc.strerror or exc}")
    for item in summaries:
        s = item["summary"]
        print(f"w={np.asarray(item['w']).tolist()} regime={s['regime']} tau_star={s['tau_star']:.6g}")
    return EXIT_OK


def cmd_fit_factor(args) -> int:
    started = _now()
    try:
        y = read_matrix_csv(args.matrix)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read matrix {args.matrix}: {exc.strerror or exc}")
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, f"matrix error: {exc}")
    if args.replication < 1:
        raise CliError(EXIT_CONFIG, "--replication must be a positive integer")
    if not 1 <= args.k <= min(y.shape):
        raise CliError(EXIT_CONFIG, f"k={args.k} must lie in [1, min(n, m)={min(y.shape)}]")
    try:
        model = fit(y, args.k)
    except RankDeficiencyError as exc:
        raise CliError(EXIT_SOLVER, f"solver failure: {exc}")
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, f"matrix error: {exc}")
    groups = to_loading_groups(model, args.replication)
    out = _prepare_out(args.out)
    try:
        write_loadings_csv(out / "loadings.csv", groups)
        _write_rows(out / "l_tilde.csv", [f"l{i + 1}" for i in range(args.k)],
                    ([_cell(v) for v in row] for row in model.l_tilde))
        _write_json(out / "fit.json", {
            "n": y.shape[0], "m": y.shape[1], "k": args.k,
            "sigma_e": model.sigma_e, "implied_s_l": model.implied_s_l,
            "n_groups": groups.n_groups, "replication": args.replication,
            "simulated_m": y.shape[1] * args.replication,
        })
        _write_manifest(out, "fit-factor", ["loadings.csv", "l_tilde.csv", "fit.json"],
                        {"matrix": str(args.matrix), "k": args.k, "replication": args.replication},
                        None, started)
    except OSError as exc:
        raise CliError(EXIT_IO, f"write failed: {exc.strerror or exc}")
    print(f"sigma_e={model.sigma_e:.6g} implied_s_l={model.implied_s_l:.6g} -> {out}")
    return EXIT_OK


def _read_replicates(path: Path) -> Outcomes:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    k = sum(h.startswith("w_") for h in header)
    arr = np.array([[float(c) for c in row] for row in rows]).reshape(len(rows), len(header))
    return Outcomes(arr[:, 1].astype(np.int64), arr[:, 2].astype(np.int64), arr[:, 3], arr[:, 4],
                    arr[:, 5], arr[:, 6:6 + k])


def cmd_compare(args) -> int:
    run = Path(args.out)
    try:
        doc = parse_json((run / "summary.json").read_text())
        outcomes = _read_replicates(run / "replicates.csv")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read run directory {run}: {exc.strerror or exc}")
    except (ValueError, StopIteration) as exc:
        raise CliError(EXIT_CONFIG, f"malformed run files: {exc}")
    if not doc.get("asymptotic"):
        raise CliError(EXIT_CONFIG, "run has no asymptotic summary (marginal mode)")
    summary = AsymptoticSummary.from_dict(doc["asymptotic"])
    if not summary.is_clt:
        raise CliError(EXIT_CONFIG, "degenerate regime: no CLT comparison available")
    report = compare_to_clt(outcomes.fdp, outcomes.fpr, summary, int(doc["config"]["m"]))
    try:
        _write_json(run / "comparison.json", report)
    except OSError as exc:
        raise CliError(EXIT_IO, f"write failed: {exc.strerror or exc}")
    f = report["fdp"]
    print(f"fdp: mean_z={f['mean_z']:.3g} var_ratio={f['var_ratio']:.4g} ks={f['ks_distance']:.4g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fdpburst", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run replicated BH experiments")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory (created if missing)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $FDPBURST_THREADS, else all cores)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--grid", type=int, default=None, help="Simes grid size")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("asymptotics", help="Simes point, limits and CLT variances given w")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--w", action="append", default=[],
                   help="comma-separated latent values; repeat for several")
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--curve-points", type=int, default=400)
    p.set_defaults(func=cmd_asymptotics)

    p = sub.add_parser("fit-factor", help="fit a rank-k factor model to a data matrix CSV")
    p.add_argument("--matrix", required=True, help="CSV, rows = subjects, columns = hypotheses")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--replication", type=int, default=1)
    p.set_defaults(func=cmd_fit_factor)

    p = sub.add_parser("compare", help="recompute the CLT comparison for a finished run")
    p.add_argument("--out", required=True, help="directory written by simulate")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"fdpburst: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"fdpburst: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
