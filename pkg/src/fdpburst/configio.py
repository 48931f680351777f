"""JSON experiment configs (schema version 1).

Example::

    {
      "schema_version": 1,
      "m": 10000,
      "schedule": {"kind": "fixed", "pi1": 0.1},
      "mu_a": 2.0,
      "q": 0.1,
      "loadings": {"groups": [{"weight": 1.0, "loading": [0.5477]}]},
      "noise": {"kind": "block", "block_size": 20, "rho": 0.6},
      "latent": {"mode": "conditional", "w": [2.5]},
      "replicates": 25000,
      "seed": 1
    }

``loadings`` may instead be ``{"csv": "path", "finite_m": false}``, and custom
noise takes either ``"matrix"`` (nested lists) or ``"csv"``. Relative paths are
resolved against the config file's directory. Unknown keys are rejected.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .factorfit import read_loadings_csv, read_matrix_csv
from .model import (ExperimentConfig, InvalidConfigError, LoadingGroups, NoiseSpec,
                    NonnullSchedule)

SCHEMA_VERSION = 1

_TOP = {"schema_version", "m", "schedule", "mu_a", "q", "loadings", "noise", "latent",
        "replicates", "seed"}
_REQUIRED = {"schema_version", "m", "schedule", "mu_a", "q"}


class ConfigError(InvalidConfigError):
    """Malformed or invalid configuration document."""


def _keys(obj: Any, where: str, allowed: set, required: set = frozenset()) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(extra)}")
    missing = sorted(required - set(obj))
    if missing:
        raise ConfigError(f"{where}: missing field(s) {', '.join(missing)}")
    return obj


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return value


def _real(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _vector(value, where: str) -> np.ndarray:
    if not isinstance(value, list):
        raise ConfigError(f"{where}: expected a list of numbers")
    return np.array([_real(v, f"{where}[{i}]") for i, v in enumerate(value)], dtype=float)


def _path(value, base: Path, where: str) -> Path:
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a file path")
    p = Path(value)
    return p if p.is_absolute() else base / p


def _schedule(obj) -> NonnullSchedule:
    kind = _keys(obj, "schedule", {"kind", "pi1", "c", "a"}, {"kind"})["kind"]
    if kind == "fixed":
        _keys(obj, "schedule", {"kind", "pi1"}, {"kind", "pi1"})
        return NonnullSchedule.fixed(_real(obj["pi1"], "schedule.pi1"))
    if kind == "power_law":
        _keys(obj, "schedule", {"kind", "c", "a"}, {"kind", "c", "a"})
        return NonnullSchedule.power_law(_real(obj["c"], "schedule.c"), _real(obj["a"], "schedule.a"))
    raise ConfigError(f"schedule.kind: unknown kind {kind!r}")


def _loadings(obj, base: Path) -> LoadingGroups:
    _keys(obj, "loadings", {"groups", "csv", "finite_m"})
    finite_m = obj.get("finite_m", False)
    if not isinstance(finite_m, bool):
        raise ConfigError("loadings.finite_m: expected true or false")
    if ("groups" in obj) == ("csv" in obj):
        raise ConfigError("loadings: give exactly one of 'groups' or 'csv'")
    if "csv" in obj:
        path = _path(obj["csv"], base, "loadings.csv")
        try:
            return read_loadings_csv(path, finite_m=finite_m)
        except OSError as exc:
            raise ConfigError(f"loadings.csv: cannot read {path}: {exc.strerror}") from None
    groups = obj["groups"]
    if not isinstance(groups, list) or not groups:
        raise ConfigError("loadings.groups: expected a non-empty list")
    weights, rows = [], []
    for i, g in enumerate(groups):
        where = f"loadings.groups[{i}]"
        _keys(g, where, {"weight", "loading"}, {"weight", "loading"})
        weights.append(_real(g["weight"], where + ".weight"))
        rows.append(_vector(g["loading"], where + ".loading"))
    if len({r.shape[0] for r in rows}) != 1:
        raise ConfigError("loadings.groups: loading vectors differ in length")
    return LoadingGroups(np.array(weights), np.vstack(rows), finite_m=finite_m)


def _noise(obj, base: Path) -> NoiseSpec:
    kind = _keys(obj, "noise", {"kind", "block_size", "rho", "rhos", "matrix", "csv"}, {"kind"})["kind"]
    if kind == "independent":
        _keys(obj, "noise", {"kind"})
        return NoiseSpec.independent()
    if kind == "block":
        _keys(obj, "noise", {"kind", "block_size", "rho"}, {"kind", "block_size", "rho"})
        return NoiseSpec.block(_int(obj["block_size"], "noise.block_size"), _real(obj["rho"], "noise.rho"))
    if kind == "toeplitz":
        _keys(obj, "noise", {"kind", "rhos"}, {"kind", "rhos"})
        return NoiseSpec.toeplitz(_vector(obj["rhos"], "noise.rhos"))
    if kind == "custom":
        _keys(obj, "noise", {"kind", "matrix", "csv"}, {"kind"})
        if ("matrix" in obj) == ("csv" in obj):
            raise ConfigError("noise: custom noise needs exactly one of 'matrix' or 'csv'")
        if "csv" in obj:
            path = _path(obj["csv"], base, "noise.csv")
            try:
                return NoiseSpec.custom(read_matrix_csv(path))
            except OSError as exc:
                raise ConfigError(f"noise.csv: cannot read {path}: {exc.strerror}") from None
            except ValueError as exc:
                raise ConfigError(f"noise.csv: {exc}") from None
        mat = obj["matrix"]
        if not isinstance(mat, list):
            raise ConfigError("noise.matrix: expected a list of rows")
        rows = [_vector(r, f"noise.matrix[{i}]") for i, r in enumerate(mat)]
        if len({r.shape[0] for r in rows}) > 1:
            raise ConfigError("noise.matrix: rows differ in length")
        return NoiseSpec.custom(np.vstack(rows) if rows else np.zeros((0, 0)))
    raise ConfigError(f"noise.kind: unknown kind {kind!r}")


def config_from_dict(doc: dict, base: Optional[Path] = None) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from a parsed JSON document."""
    base = Path(base) if base is not None else Path.cwd()
    _keys(doc, "config", _TOP, _REQUIRED)
    version = _int(doc["schema_version"], "schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: unsupported version {version}, expected {SCHEMA_VERSION}")
    loadings = _loadings(doc["loadings"], base) if "loadings" in doc else LoadingGroups.none()
    noise = _noise(doc["noise"], base) if "noise" in doc else NoiseSpec.independent()
    latent = _keys(doc.get("latent", {"mode": "conditional"}), "latent", {"mode", "w"}, {"mode"})
    mode = latent["mode"]
    if mode not in ("conditional", "marginal"):
        raise ConfigError(f"latent.mode: expected 'conditional' or 'marginal', got {mode!r}")
    w = _vector(latent["w"], "latent.w") if "w" in latent else None
    if mode == "marginal" and w is not None:
        raise ConfigError("latent.w: only allowed in conditional mode")
    if mode == "conditional" and w is None and loadings.k:
        raise ConfigError("latent.w: conditional mode with k > 0 factors requires w")
    seed = _int(doc.get("seed", 0), "seed")
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed: must be a 64-bit unsigned integer")
    return ExperimentConfig(
        m=_int(doc["m"], "m"),
        schedule=_schedule(doc["schedule"]),
        mu_a=_real(doc["mu_a"], "mu_a"),
        q=_real(doc["q"], "q"),
        loadings=loadings,
        noise=noise,
        latent_mode=mode,
        w=w,
        replicates=_int(doc.get("replicates", 1000), "replicates"),
        seed=seed,
    )


def parse_json(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def load_config(path) -> tuple[ExperimentConfig, dict]:
    """Read, parse and build a config; returns ``(config, raw_document)``.

    ``OSError`` propagates for unreadable files; everything else is a
    :class:`ConfigError`.
    """
    path = Path(path)
    doc = parse_json(path.read_text())
    return config_from_dict(doc, base=path.parent), doc


def config_to_dict(config: ExperimentConfig) -> dict:
    """Inline JSON document for ``config`` (loadings and matrices written out)."""
    doc: dict = {"schema_version": SCHEMA_VERSION, "m": int(config.m)}
    s = config.schedule
    doc["schedule"] = ({"kind": "fixed", "pi1": s.pi1} if s.kind == "fixed"
                       else {"kind": "power_law", "c": s.c, "a": s.a})
    doc["mu_a"] = float(config.mu_a)
    doc["q"] = float(config.q)
    ld = config.loadings
    if ld.k:
        doc["loadings"] = {
            "groups": [{"weight": float(wt), "loading": [float(v) for v in row]}
                       for wt, row in zip(ld.weights, ld.loadings)],
            "finite_m": bool(ld.finite_m),
        }
    n = config.noise
    if n.kind == "block":
        doc["noise"] = {"kind": "block", "block_size": int(n.block_size), "rho": float(n.rho)}
    elif n.kind == "toeplitz":
        doc["noise"] = {"kind": "toeplitz", "rhos": [float(r) for r in n.rhos]}
    elif n.kind == "custom":
        doc["noise"] = {"kind": "custom", "matrix": np.asarray(n.matrix).tolist()}
    else:
        doc["noise"] = {"kind": "independent"}
    if config.latent_mode == "marginal":
        doc["latent"] = {"mode": "marginal"}
    else:
        doc["latent"] = {"mode": "conditional", "w": [float(v) for v in config.w]}
    doc["replicates"] = int(config.replicates)
    doc["seed"] = int(config.seed)
    return doc
