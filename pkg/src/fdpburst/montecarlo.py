"""Replicated BH experiments and their comparison with the conditional CLT."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .asymptotics import AsymptoticSummary, analyze
from .bh import rejection_count
from .model import ExperimentConfig
from .sampler import Sampler

DEFAULT_CHUNK = 256


@dataclass(frozen=True)
class ReplicateOutcome:
    replicate: int
    r: int
    v: int
    fdp: float
    fpr: float
    tau_bh: float
    w: tuple


@dataclass
class Outcomes:
    """Per-replicate scalars stored column-wise, in replicate order."""

    r: np.ndarray
    v: np.ndarray
    fdp: np.ndarray
    fpr: np.ndarray
    tau_bh: np.ndarray
    w: np.ndarray

    def __len__(self):
        return self.r.shape[0]

    def __getitem__(self, i) -> ReplicateOutcome:
        return ReplicateOutcome(int(i), int(self.r[i]), int(self.v[i]), float(self.fdp[i]),
                                float(self.fpr[i]), float(self.tau_bh[i]), tuple(self.w[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @classmethod
    def concat(cls, parts) -> "Outcomes":
        return cls(*(np.concatenate([getattr(p, f) for p in parts])
                     for f in ("r", "v", "fdp", "fpr", "tau_bh", "w")))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    outcomes: Outcomes
    summary: dict
    asymptotic: Optional[AsymptoticSummary] = None
    comparison: Optional[dict] = None


def _run_block(sampler, start: int, stop: int) -> Outcomes:
    n = stop - start
    q = sampler.config.q
    m = sampler.m
    r = np.zeros(n, dtype=np.int64)
    v = np.zeros(n, dtype=np.int64)
    tau = np.zeros(n)
    w = np.zeros((n, sampler.k))
    for off, idx in enumerate(range(start, stop)):
        d = sampler.draw(idx)
        ps = np.sort(d.p)
        rr = rejection_count(ps, q)
        if rr:
            r[off] = rr
            tau[off] = ps[rr - 1]
            v[off] = np.count_nonzero((d.p <= tau[off]) & ~d.h)
        w[off] = d.w
    return Outcomes(r, v, v / np.maximum(r, 1), v / m, tau, w)


def resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        env = os.environ.get("FDPBURST_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def simulate(config: ExperimentConfig, threads: Optional[int] = None, sampler=None,
             chunk: int = DEFAULT_CHUNK) -> Outcomes:
    """Run ``config.replicates`` replicates; output is independent of ``threads``."""
    sampler = sampler if sampler is not None else Sampler(config)
    n = config.replicates
    bounds = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
    threads = resolve_threads(threads)
    if threads == 1 or len(bounds) == 1:
        parts = [_run_block(sampler, lo, hi) for lo, hi in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: _run_block(sampler, *b), bounds))
    return Outcomes.concat(parts)


def summarize(outcomes: Outcomes) -> dict:
    n = len(outcomes)
    rejecting = outcomes.r >= 1
    fdp, fpr = outcomes.fdp, outcomes.fpr
    fdp_var = float(np.var(fdp, ddof=1)) if n > 1 else 0.0
    fpr_var = float(np.var(fpr, ddof=1)) if n > 1 else 0.0
    return {
        "replicates": n,
        "fdr_hat": float(np.mean(fdp)),
        "fdr_se": math.sqrt(fdp_var / n),
        "pfdr_hat": float(np.mean(fdp[rejecting])) if rejecting.any() else None,
        "n_zero_rejection": int(n - np.count_nonzero(rejecting)),
        "fdp_mean": float(np.mean(fdp)),
        "fdp_var": fdp_var,
        "fdp_median": float(np.median(fdp)),
        "fpr_mean": float(np.mean(fpr)),
        "fpr_var": fpr_var,
        "v_mean": float(np.mean(outcomes.v)),
        "r_mean": float(np.mean(outcomes.r)),
    }


def _moment_check(z: np.ndarray, sigma_sq: float) -> dict:
    n = z.shape[0]
    mean = float(np.mean(z))
    var = float(np.var(z, ddof=1))
    centred = z - mean
    m4 = float(np.mean(centred ** 4))
    var_se = math.sqrt(max(m4 - var * var, 0.0) / n)
    sigma = math.sqrt(sigma_sq)
    out = {
        "n": n,
        "predicted_var": sigma_sq,
        "mean": mean,
        "mean_se": sigma / math.sqrt(n),
        "mean_z": mean / (sigma / math.sqrt(n)) if sigma > 0 else math.nan,
        "var": var,
        "var_se": var_se,
        "var_z": (var - sigma_sq) / var_se if var_se > 0 else math.nan,
        "var_ratio": var / sigma_sq if sigma_sq > 0 else math.nan,
    }
    if sigma > 0:
        ks = stats.kstest(z, "norm", args=(0.0, sigma))
        out["ks_distance"] = float(ks.statistic)
        out["ks_pvalue"] = float(ks.pvalue)
    else:
        out["ks_distance"] = math.nan
        out["ks_pvalue"] = math.nan
    out["ks_critical_1pct"] = float(stats.kstwo.ppf(0.99, n))
    return out


def compare_to_clt(fdp, fpr, summary: AsymptoticSummary, m: int) -> dict:
    """Standardized moments and KS distances of sqrt(m)-scaled FDP and FPR against
    the predicted normals. Raises ValueError outside the CLT regime."""
    if not summary.is_clt:
        raise ValueError("CLT comparison is undefined in the degenerate (tau_star = 0) regime")
    root_m = math.sqrt(m)
    fdp = np.asarray(fdp, dtype=float)
    fpr = np.asarray(fpr, dtype=float)
    return {
        "m": m,
        "fdp": {"limit": summary.fdp_limit,
                **_moment_check(root_m * (fdp - summary.fdp_limit), summary.sigma_L_sq)},
        "fpr": {"limit": summary.fpr_limit,
                **_moment_check(root_m * (fpr - summary.fpr_limit), summary.sigma_R_sq)},
    }


def degenerate_checks(outcomes: Outcomes) -> dict:
    return {
        "fraction_with_rejection": float(np.mean(outcomes.r >= 1)),
        "fraction_with_false_discovery": float(np.mean(outcomes.v >= 1)),
        "mean_fpr": float(np.mean(outcomes.fpr)),
        "max_fpr": float(np.max(outcomes.fpr)),
    }


def run_experiment(config: ExperimentConfig, threads: Optional[int] = None, sampler=None,
                   n_grid: Optional[int] = None) -> ExperimentResult:
    outcomes = simulate(config, threads=threads, sampler=sampler)
    result = ExperimentResult(config, outcomes, summarize(outcomes))
    if config.latent_mode == "conditional":
        kwargs = {"n_grid": n_grid} if n_grid else {}
        asym = analyze(config, **kwargs)
        result.asymptotic = asym
        if asym.is_clt:
            result.comparison = compare_to_clt(outcomes.fdp, outcomes.fpr, asym, config.m)
        else:
            result.comparison = {"degenerate": degenerate_checks(outcomes)}
    return result


def histogram(values, bins: int, range: Optional[tuple] = None):
    """Uniform-width histogram; returns (edges, counts). Raises ValueError on empty input."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("histogram of an empty sequence")
    if bins < 1:
        raise ValueError("bins must be at least 1")
    if range is None:
        lo, hi = float(values.min()), float(values.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        range = (lo, hi)
    counts, edges = np.histogram(values, bins=bins, range=range)
    return edges, counts
