"""Benjamini-Hochberg step-up procedure and its false-discovery statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BhOutcome:
    r: int
    v: int
    tau_bh: float
    fdp: float
    fpr: float


def _thresholds(count, q: float, m: int):
    # shared by both definitions so boundary ties resolve identically
    return count * q / m


def rejection_count(p_sorted: np.ndarray, q: float) -> int:
    """R = max{j : P_(j) <= j q / m}, with R = 0 when no j qualifies."""
    m = p_sorted.shape[0]
    ok = np.flatnonzero(p_sorted <= _thresholds(np.arange(1, m + 1), q, m))
    return int(ok[-1]) + 1 if ok.size else 0


def run_bh(p, h, q: float) -> BhOutcome:
    """Apply BH at level ``q`` to p-values ``p`` with nonnull indicators ``h``."""
    p = np.asarray(p, dtype=float)
    h = np.asarray(h, dtype=bool)
    m = p.shape[0]
    ps = np.sort(p, kind="stable")
    r = rejection_count(ps, q)
    if r == 0:
        return BhOutcome(0, 0, 0.0, 0.0, 0.0)
    tau = float(ps[r - 1])
    v = int(np.count_nonzero((p <= tau) & ~h))
    return BhOutcome(r, v, tau, v / r, v / m)


def tau_via_ecdf(p, q: float) -> float:
    """Rejection threshold from the ECDF crossing of the Simes line.

    Returns the largest observed p-value ``t`` with ``G_m(t) >= t / q``, where
    ``G_m`` is the p-value ECDF, or 0.0 when there is none. The supremum over
    all real ``t`` is ``R q / m``; no p-value lies strictly between the two, so
    ``{i : p_i <= result}`` is the BH rejection set either way.
    """
    p = np.asarray(p, dtype=float)
    m = p.shape[0]
    if m == 0:
        return 0.0
    ps = np.sort(p)
    ecdf_counts = np.searchsorted(ps, ps, side="right")
    ok = ps <= _thresholds(ecdf_counts, q, m)
    return float(ps[ok].max()) if ok.any() else 0.0


def rejected(p, q: float) -> np.ndarray:
    """Boolean mask of hypotheses rejected by BH."""
    p = np.asarray(p, dtype=float)
    r = rejection_count(np.sort(p), q)
    if r == 0:
        return np.zeros(p.shape, dtype=bool)
    return p <= np.sort(p)[r - 1]
