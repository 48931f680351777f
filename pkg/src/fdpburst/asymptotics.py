"""Limiting objects of BH conditional on the latent factor.

Everything here is deterministic given the loadings, ``w``, the effect size and
the limiting nonnull fraction: the per-group exceedance maps ``gamma``, the
subdistributions F0 and F1, the asymptotic ECDF G, its last crossing of the
Simes line, the covariance kernel at that point, and the CLT centres and
variances for the FDP and for V/m.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .gauss import std_isf, std_sf, rho_tilde
from .model import ExperimentConfig, LoadingGroups, NoiseSpec, assign_groups

NEAR_TANGENT_CG = 1e-6
DEFAULT_GRID = 20_000
T_FLOOR = 1e-10
BISECT_WIDTH = 1e-13
CUSTOM_CUTOFF = 1e-12


class SimesSolverError(RuntimeError):
    """The last crossing of the Simes line could not be bracketed."""


class AsymptoticsWarning(UserWarning):
    pass


def gamma(t, r: int, loading, w, mu_a: float):
    """P(P_i <= t | H_i = r, W = w) for a hypothesis with the given loading vector."""
    loading = np.atleast_1d(np.asarray(loading, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    shift = float(loading @ w) if loading.size else 0.0
    scale = math.sqrt(1.0 - float(loading @ loading)) if loading.size else 1.0
    z = std_isf(t)
    out = std_sf((z - mu_a * r - shift) / scale)
    return out if np.ndim(t) else float(out)


def _gamma_prime_core(z, r, shift, scale, mu_a):
    # phi(u) / (phi(z) * scale), combined in log space to dodge underflow
    u = (z - mu_a * r - shift) / scale
    return np.exp(0.5 * (z * z - u * u)) / scale


def gamma_prime(t, r: int, loading, w, mu_a: float):
    """Derivative of :func:`gamma` in t; defined on the open interval (0, 1)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(~((t_arr > 0) & (t_arr < 1))):
        raise ValueError("gamma_prime requires t in (0, 1)")
    loading = np.atleast_1d(np.asarray(loading, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    shift = float(loading @ w) if loading.size else 0.0
    scale = math.sqrt(1.0 - float(loading @ loading)) if loading.size else 1.0
    out = _gamma_prime_core(std_isf(t_arr), r, shift, scale, mu_a)
    return out if np.ndim(t) else float(out)


class LimitFunctions:
    """F0, F1, G and their derivatives for fixed loadings, w, mu_a and limiting pi1."""

    def __init__(self, loadings: LoadingGroups, w, mu_a: float, pi1: float):
        self.loadings = loadings
        self.w = np.atleast_1d(np.asarray(w, dtype=float)) if loadings.k else np.zeros(0)
        if self.w.shape[0] != loadings.k:
            raise ValueError(f"w has dimension {self.w.shape[0]}, loadings have k={loadings.k}")
        self.mu_a = float(mu_a)
        self.pi1 = float(pi1)
        self.pi0 = 1.0 - self.pi1
        self.weights = loadings.weights
        self.shift = loadings.loadings @ self.w if loadings.k else np.zeros(loadings.n_groups)
        self.scale = np.sqrt(1.0 - loadings.norms_sq)
        # merge groups sharing (shift, scale): gamma depends on nothing else
        keys = np.stack([self.shift, self.scale], axis=1)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        self._u_shift, self._u_scale = uniq[:, 0], uniq[:, 1]
        self._u_weight = np.bincount(inverse.ravel(), weights=self.weights, minlength=len(uniq))

    def pi(self, r: int) -> float:
        return self.pi1 if r else self.pi0

    def gamma_groups(self, r: int, t) -> np.ndarray:
        """gamma_jr(t) for every group j; shape (J,) + shape(t)."""
        z = std_isf(np.asarray(t, dtype=float))
        shift = self.shift.reshape((-1,) + (1,) * z.ndim)
        scale = self.scale.reshape(shift.shape)
        return std_sf((z - self.mu_a * r - shift) / scale)

    def _mix(self, r: int, t, deriv: bool, chunk: int = 2_000_000):
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        z = std_isf(flat)
        out = np.empty_like(flat)
        n_groups = self._u_shift.shape[0]
        step = max(1, chunk // max(n_groups, 1))
        for lo in range(0, flat.shape[0], step):
            zz = z[None, lo:lo + step]
            sh = self._u_shift[:, None]
            sc = self._u_scale[:, None]
            if deriv:
                vals = _gamma_prime_core(zz, r, sh, sc, self.mu_a)
            else:
                vals = std_sf((zz - self.mu_a * r - sh) / sc)
            out[lo:lo + step] = self._u_weight @ vals
        return out.reshape(t.shape)

    def f(self, r: int, t):
        """F_r(t) = pi_r * sum_j w_j gamma_jr(t)."""
        if self.pi(r) == 0.0:
            return np.zeros_like(np.asarray(t, dtype=float))
        return self.pi(r) * self._mix(r, t, deriv=False)

    def f_prime(self, r: int, t):
        if self.pi(r) == 0.0:
            return np.zeros_like(np.asarray(t, dtype=float))
        return self.pi(r) * self._mix(r, t, deriv=True)

    def f0(self, t):
        return self.f(0, t)

    def f1(self, t):
        return self.f(1, t)

    def g(self, t):
        return self.f(0, t) + self.f(1, t)

    def f0_prime(self, t):
        return self.f_prime(0, t)

    def f1_prime(self, t):
        return self.f_prime(1, t)

    def g_prime(self, t):
        return self.f_prime(0, t) + self.f_prime(1, t)


@dataclass
class SimesResult:
    tau_star: float
    regime: str
    crossings: list = field(default_factory=list)
    tangencies: list = field(default_factory=list)
    grid_size: int = 0


def _simes_grid(q: float, n_grid: int, t_floor: float) -> np.ndarray:
    log_part = np.geomspace(t_floor, q, n_grid)
    lin_part = np.linspace(t_floor, q, max(n_grid // 4, 2))
    return np.unique(np.concatenate([log_part, lin_part]))


def simes_point(limits: LimitFunctions, q: float, n_grid: int = DEFAULT_GRID,
                t_floor: float = T_FLOOR) -> SimesResult:
    """Largest t with G(t) >= t/q, via grid scan plus bisection on the last crossing.

    Returns the degenerate regime (tau_star = 0) when G stays below the Simes line
    on the whole grid.
    """

    def psi(t):
        return limits.g(t) - np.asarray(t) / q

    for attempt in range(3):
        size = n_grid * 2 ** attempt
        grid = _simes_grid(q, size, t_floor)
        vals = psi(grid)
        if np.all(np.isfinite(vals)):
            break
    else:
        raise SimesSolverError("G(t) - t/q is not finite on the Simes grid")

    nonneg = vals >= 0
    sign_change = np.flatnonzero(nonneg[:-1] != nonneg[1:])
    crossings = [float(0.5 * (grid[i] + grid[i + 1])) for i in sign_change]
    # interior local maxima of psi just below zero that never cross
    tangencies = []
    interior = np.flatnonzero((vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:]))
    scale = np.maximum(np.abs(grid[1:-1][interior]) / q, 1e-300)
    for i, sc in zip(interior, scale):
        if vals[i + 1] < 0 and abs(vals[i + 1]) <= 1e-9 * max(sc, 1.0):
            tangencies.append(float(grid[i + 1]))

    if not nonneg.any():
        return SimesResult(0.0, "degenerate_tau_zero", crossings, tangencies, grid.size)
    last = int(np.flatnonzero(nonneg)[-1])
    if last == grid.size - 1:
        return SimesResult(float(grid[-1]), "clt", crossings, tangencies, grid.size)
    lo, hi = float(grid[last]), float(grid[last + 1])
    while hi - lo > BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if psi(mid) >= 0:
            lo = mid
        else:
            hi = mid
    if not (lo > 0):
        raise SimesSolverError("bisection collapsed to zero")
    return SimesResult(0.5 * (lo + hi), "clt", crossings, tangencies, grid.size)


@dataclass(frozen=True)
class KernelValues:
    c00: float
    c11: float
    c10: float
    finite_m: bool = False


def _pair_offsets_block(m: int, size: int):
    # pairs (i, i+d) lying in the same block of consecutive indices
    for d in range(1, size):
        i = np.arange(m - d)
        same = (i // size) == ((i + d) // size)
        yield d, i[same]


def _cross_sum(a: np.ndarray, b: np.ndarray, noise: NoiseSpec, m: int) -> float:
    """(1/m) * sum_{i != j} rho_tilde(a_i, b_j, Gamma_ij) at finite m."""
    total = 0.0
    if noise.kind == "block":
        for d, i in _pair_offsets_block(m, noise.block_size):
            j = i + d
            total += float(np.sum(rho_tilde(a[i], b[j], noise.rho)))
            total += float(np.sum(rho_tilde(a[j], b[i], noise.rho)))
    elif noise.kind == "toeplitz":
        for d, rho in enumerate(noise.rhos, start=1):
            i = np.arange(m - d)
            total += float(np.sum(rho_tilde(a[i], b[i + d], rho)))
            total += float(np.sum(rho_tilde(a[i + d], b[i], rho)))
    elif noise.kind == "custom":
        mat = noise.matrix
        i, j = np.nonzero(np.abs(mat) >= CUSTOM_CUTOFF)
        off = i != j
        i, j = i[off], j[off]
        total = float(np.sum(rho_tilde(a[i], b[j], mat[i, j])))
    return total / m


def kernel_at_tau(limits: LimitFunctions, noise: NoiseSpec, tau: float,
                  m: Optional[int] = None) -> KernelValues:
    """Limiting covariance kernel c^(r0,r1)(tau, tau) of the subdistribution processes.

    Block and banded noise use the m -> infinity closed forms, averaged over loading
    groups. Custom correlation matrices, and loadings flagged ``finite_m``, are
    evaluated by the exact double sum at the configured ``m``.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("kernel_at_tau requires tau in (0, 1)")
    wts = limits.weights
    gam = {r: limits.gamma_groups(r, tau) for r in (0, 1)}
    pi = {r: limits.pi(r) for r in (0, 1)}

    def diag(r0, r1):
        same = pi[r0] * gam[r0] if r0 == r1 else 0.0
        return float(wts @ (same - pi[r0] * pi[r1] * gam[r0] * gam[r1]))

    finite = noise.kind == "custom" or (limits.loadings.finite_m and noise.kind != "independent")
    if finite and m is None:
        raise ValueError("finite-m kernel needs the configured m")

    def cross(r0, r1):
        scale = pi[r0] * pi[r1]
        if scale == 0.0 or noise.kind == "independent":
            return 0.0
        if finite:
            idx = assign_groups(m, limits.loadings)
            return scale * _cross_sum(gam[r0][idx], gam[r1][idx], noise, m)
        if noise.kind == "block":
            return scale * (noise.block_size - 1) * float(wts @ rho_tilde(gam[r0], gam[r1], noise.rho))
        if noise.kind == "toeplitz":
            return scale * 2.0 * sum(float(wts @ rho_tilde(gam[r0], gam[r1], rho)) for rho in noise.rhos)
        raise ValueError(f"unknown noise kind {noise.kind!r}")

    return KernelValues(
        c00=diag(0, 0) + cross(0, 0),
        c11=diag(1, 1) + cross(1, 1),
        c10=diag(1, 0) + cross(1, 0),
        finite_m=bool(finite),
    )


@dataclass
class AsymptoticSummary:
    tau_star: float
    regime: str
    q: float
    pi1_limit: float
    w: list
    f0_at_tau: float = math.nan
    f0_prime_at_tau: float = math.nan
    g_prime_at_tau: float = math.nan
    c_g: float = math.nan
    alpha: float = math.nan
    beta: float = math.nan
    c00: float = math.nan
    c11: float = math.nan
    c10: float = math.nan
    sigma_L_sq: float = math.nan
    sigma_R_sq: float = math.nan
    fdp_limit: float = math.nan
    fpr_limit: float = math.nan
    sparse: bool = False
    kernel_finite_m: bool = False
    reliable: bool = True
    crossings: list = field(default_factory=list)
    tangencies: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def is_clt(self) -> bool:
        return self.regime == "clt"

    def kernel_matrix(self) -> np.ndarray:
        return np.array([[self.c00, self.c10], [self.c10, self.c11]])

    def to_dict(self) -> dict:
        out = asdict(self)
        for key, val in out.items():
            if isinstance(val, float) and not math.isfinite(val):
                out[key] = None
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "AsymptoticSummary":
        vals = {k: (math.nan if v is None and k not in ("w",) else v) for k, v in data.items()}
        return cls(**vals)


def fdp_variance(tau, q, alpha, c00, c11, c10):
    return (q * q / (tau * tau)) * ((1 + alpha) ** 2 * c00 + alpha ** 2 * c11
                                    + 2 * alpha * (1 + alpha) * c10)


def fpr_variance(beta, c00, c11, c10):
    return (1 + beta) ** 2 * c00 + beta ** 2 * c11 + 2 * beta * (1 + beta) * c10


def analyze(config: ExperimentConfig, w=None, n_grid: int = DEFAULT_GRID) -> AsymptoticSummary:
    """Conditional asymptotic summary of BH for ``config`` at latent factor ``w``.

    ``w`` defaults to the configured conditional value. Raises ValueError in
    marginal mode without an explicit ``w``; propagates SimesSolverError.
    """
    if w is None:
        if config.latent_mode != "conditional" or config.w is None:
            raise ValueError("asymptotics are conditional on W = w; supply w")
        w = config.w
    w = np.atleast_1d(np.asarray(w, dtype=float)) if config.loadings.k else np.zeros(0)
    q = config.q
    sched = config.schedule
    pi1 = sched.limit()
    sparse = pi1 == 0.0
    notes = []
    if sched.kind == "power_law" and 0 < sched.a <= 0.5:
        msg = (f"power-law exponent a={sched.a} <= 1/2: sparse-limit formulas applied "
               "outside pi1 = o(1/sqrt(m))")
        notes.append(msg)
        warnings.warn(msg, AsymptoticsWarning, stacklevel=2)

    limits = LimitFunctions(config.loadings, w, config.mu_a, pi1)
    simes = simes_point(limits, q, n_grid=n_grid)
    summary = AsymptoticSummary(
        tau_star=simes.tau_star, regime=simes.regime, q=q, pi1_limit=pi1,
        w=[float(v) for v in w], sparse=sparse, crossings=simes.crossings,
        tangencies=simes.tangencies, warnings=notes)
    if simes.regime != "clt":
        # tau_BH -> 0 and V/m -> 0; the FDP limit is not determined
        summary.f0_at_tau = 0.0
        summary.fpr_limit = 0.0
        summary.reliable = False
        return summary

    tau = simes.tau_star
    f0 = float(limits.f0(tau))
    f0p = float(limits.f0_prime(tau))
    gp = float(limits.g_prime(tau))
    c_g = 1.0 / q - gp
    kern = kernel_at_tau(limits, config.noise, tau, m=config.m)
    if sparse:
        alpha = -1.0
        c00, c11, c10 = kern.c00, 0.0, 0.0
        f0 = tau / q
        beta = f0p / c_g
        sigma_l = 0.0
        sigma_r = c00 / (1.0 - q * gp) ** 2
    else:
        alpha = (f0p - f0 / tau) / c_g
        beta = f0p / c_g
        c00, c11, c10 = kern.c00, kern.c11, kern.c10
        sigma_l = fdp_variance(tau, q, alpha, c00, c11, c10)
        sigma_r = fpr_variance(beta, c00, c11, c10)

    summary.f0_at_tau = f0
    summary.f0_prime_at_tau = f0p
    summary.g_prime_at_tau = gp
    summary.c_g = c_g
    summary.alpha = alpha
    summary.beta = beta
    summary.c00, summary.c11, summary.c10 = c00, c11, c10
    summary.sigma_L_sq = sigma_l
    summary.sigma_R_sq = sigma_r
    summary.fdp_limit = q * f0 / tau
    summary.fpr_limit = f0
    summary.kernel_finite_m = kern.finite_m
    if c_g < NEAR_TANGENT_CG:
        msg = f"near-tangency at the Simes point (c_G={c_g:.3g}); variances unreliable"
        summary.warnings.append(msg)
        summary.reliable = False
        warnings.warn(msg, AsymptoticsWarning, stacklevel=2)
    return summary


# Closed forms for the no-factor corollaries, kept separate from the general path.

def no_factor_fdp_variance(tau: float, pi0: float, q: float, varrho00: float) -> float:
    """(pi0 q^2 / tau^2) (tau - pi0 tau^2 + pi0 varrho00)."""
    return (pi0 * q * q / (tau * tau)) * (tau - pi0 * tau * tau + pi0 * varrho00)


def block_fdp_variance(tau: float, pi0: float, q: float, block_size: int, rho_b: float) -> float:
    return (pi0 ** 2 * q ** 2 / tau ** 2) * (
        tau / pi0 - tau ** 2 + (block_size - 1) * rho_tilde(tau, tau, rho_b))


def toeplitz_fdp_variance(tau: float, pi0: float, q: float, rhos) -> float:
    band = 2.0 * sum(rho_tilde(tau, tau, r) for r in rhos)
    return (pi0 ** 2 * q ** 2 / tau ** 2) * (tau / pi0 - tau ** 2 + band)
