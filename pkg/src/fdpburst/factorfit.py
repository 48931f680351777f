"""Rank-k homoskedastic factor fits and the standardized loadings they imply."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import InvalidConfigError, LoadingGroups

RANK_TOL = 1e-12


class RankDeficiencyError(ValueError):
    """The requested rank exceeds the numerical rank of the centred data."""


@dataclass(frozen=True, eq=False)
class FittedFactorModel:
    l_tilde: np.ndarray
    sigma_e: float
    loadings_std: np.ndarray
    implied_s_l: float

    @property
    def m(self) -> int:
        return self.l_tilde.shape[0]

    @property
    def k(self) -> int:
        return self.l_tilde.shape[1]


def _column_signs(v: np.ndarray) -> np.ndarray:
    """+-1 per column so that its largest-magnitude entry becomes positive."""
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def fit(y, k: int) -> FittedFactorModel:
    """Fit a rank-``k`` factor model to an n x m matrix (rows are subjects).

    Columns are centred, the top ``k`` right singular vectors are scaled by
    their singular values to give ``l_tilde``, and the noise scale is the
    population standard deviation of the rank-``k`` residual.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise ValueError("data must be a 2-D matrix")
    n, m = y.shape
    if n < 2:
        raise ValueError("need at least two rows")
    if not 1 <= k <= min(n, m):
        raise ValueError(f"rank k={k} must lie in [1, min(n, m)={min(n, m)}]")
    if not np.all(np.isfinite(y)):
        raise ValueError("data contains non-finite entries")
    yc = y - y.mean(axis=0)
    u, s, vt = np.linalg.svd(yc, full_matrices=False)
    if s[0] == 0 or s[k - 1] < RANK_TOL * s[0]:
        raise RankDeficiencyError(
            f"singular value {k} is {s[k - 1]:.3g}, below {RANK_TOL:g} x the largest")
    signs = _column_signs(vt[:k].T)
    v = vt[:k].T * signs
    u = u[:, :k] * signs
    l_tilde = v * s[:k]
    residual = yc - (u * s[:k]) @ v.T
    sigma_e = float(residual.std(ddof=0))
    scale = np.sqrt(sigma_e ** 2 + np.einsum("ik,ik->i", l_tilde, l_tilde))
    loadings_std = l_tilde / scale[:, None]
    implied = float(np.max(np.einsum("ik,ik->i", loadings_std, loadings_std)))
    return FittedFactorModel(l_tilde, sigma_e, loadings_std, implied)


def to_loading_groups(model: FittedFactorModel, replication: int = 1) -> LoadingGroups:
    """One finite-m group per distinct standardized row, weight = multiplicity / m.

    ``replication`` copies of each row are simulated by running at
    ``m * replication`` hypotheses; the weights do not change.
    """
    if replication < 1:
        raise ValueError("replication must be a positive integer")
    rows = np.ascontiguousarray(model.loadings_std)
    _, first, counts = np.unique(rows, axis=0, return_index=True, return_counts=True)
    order = np.argsort(first, kind="stable")  # keep first-occurrence order
    weights = counts[order] / rows.shape[0]
    return LoadingGroups(weights, rows[first[order]], finite_m=True)


def planted_factor_data(n: int = 37, m: int = 22_283, k: int = 3, seed: int = 0,
                        column_scales=(0.8, 0.5, 0.4), sigma: float = 1.0):
    """Synthetic n x m data from a rank-k factor model with homoskedastic noise.

    Returns ``(y, planted_loadings)``.
    """
    scales = np.asarray(column_scales, dtype=float)[:k]
    if scales.shape[0] != k:
        raise ValueError("need one column scale per factor")
    rng = np.random.default_rng(seed)
    loadings = rng.standard_normal((m, k)) * scales
    scores = rng.standard_normal((n, k))
    y = scores @ loadings.T + sigma * rng.standard_normal((n, m))
    return y, loadings


def read_matrix_csv(path) -> np.ndarray:
    """Dense numeric CSV (no header). Raises ValueError naming the bad cell."""
    rows = []
    with open(path, newline="") as fh:
        for i, line in enumerate(csv.reader(fh), start=1):
            if not line:
                continue
            row = []
            for j, cell in enumerate(line, start=1):
                try:
                    row.append(float(cell))
                except ValueError:
                    raise ValueError(f"non-numeric cell {cell!r} at row {i}, column {j}") from None
            rows.append(row)
    if not rows:
        raise ValueError("empty matrix file")
    width = len(rows[0])
    for i, row in enumerate(rows, start=1):
        if len(row) != width:
            raise ValueError(f"row {i} has {len(row)} cells, expected {width}")
    return np.array(rows)


def write_loadings_csv(path, groups: LoadingGroups) -> None:
    """Loadings file: header ``weight,l1..lk`` then one row per group."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["weight"] + [f"l{i + 1}" for i in range(groups.k)])
        for wt, row in zip(groups.weights, groups.loadings):
            out.writerow([format_real(wt)] + [format_real(v) for v in row])


def read_loadings_csv(path, finite_m: bool = False) -> LoadingGroups:
    """Inverse of :func:`write_loadings_csv`; the header row is optional."""
    weights, loadings = [], []
    with open(path, newline="") as fh:
        for i, line in enumerate(csv.reader(fh), start=1):
            if not line:
                continue
            try:
                vals = [float(c) for c in line]
            except ValueError:
                if i == 1:
                    continue
                raise InvalidConfigError(f"{Path(path).name}: non-numeric entry on line {i}") from None
            weights.append(vals[0])
            loadings.append(vals[1:])
    if not weights:
        raise InvalidConfigError(f"{Path(path).name}: no loading rows")
    if len({len(r) for r in loadings}) != 1:
        raise InvalidConfigError(f"{Path(path).name}: rows have differing loading dimensions")
    return LoadingGroups(np.array(weights), np.array(loadings).reshape(len(weights), -1),
                         finite_m=finite_m)


def format_real(x: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(x), ".17g")
