"""Univariate and bivariate standard-normal special functions.

The bivariate upper-orthant probability follows Genz's (2004) refinement of
the Drezner-Wesolowsky reduction: Gauss-Legendre quadrature over the
correlation parameter for moderate correlations, and an asymptotic expansion
plus quadrature in ``sqrt(1 - r**2)`` for strong correlations.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtr, ndtri

__all__ = [
    "std_cdf",
    "std_sf",
    "std_pdf",
    "std_quantile",
    "std_isf",
    "bvn_upper",
    "rho_tilde",
]

_TWO_PI = 2.0 * np.pi
_SQRT_TWO_PI = np.sqrt(_TWO_PI)
# below this distance from |rho| = 1 the comonotone/antithetic limits are used
_RHO_EDGE = 1e-12

_GL = {n: leggauss(n) for n in (6, 12, 20)}


def std_cdf(z):
    """Standard normal CDF, ``Phi(z)``."""
    return ndtr(z)


def std_sf(z):
    """Upper tail ``1 - Phi(z)``, computed without cancellation."""
    return ndtr(-np.asarray(z, dtype=float))


def std_pdf(z):
    z = np.asarray(z, dtype=float)
    return np.exp(-0.5 * z * z) / _SQRT_TWO_PI


def std_quantile(p):
    """Inverse of :func:`std_cdf` on the open interval (0, 1).

    Raises ValueError for any ``p`` outside (0, 1).
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~(arr > 0.0) | ~(arr < 1.0)):
        raise ValueError("std_quantile requires p in (0, 1)")
    z = ndtri(arr)
    # one Newton step against the CDF; ndtri is already close to correctly rounded
    z = z - (ndtr(z) - arr) / np.maximum(std_pdf(z), np.finfo(float).tiny)
    return z if np.ndim(p) else float(z)


def std_isf(t):
    """Upper-tail quantile ``Phi_bar^{-1}(t)`` on the closed interval [0, 1].

    Endpoints map to +inf (t=0) and -inf (t=1).
    """
    t = np.asarray(t, dtype=float)
    return -ndtri(t)


def _bvn_moderate(h, k, r, n):
    # |r| < 0.925: integrate over theta in [0, asin r]; returns P - Phi_bar(h)Phi_bar(k)
    x, w = _GL[n]
    hk = (h * k)[:, None]
    hs = ((h * h + k * k) / 2.0)[:, None]
    asr = (np.arcsin(r) / 2.0)[:, None]
    sn = np.sin(asr * (1.0 + x[None, :]))
    vals = np.exp((sn * hk - hs) / (1.0 - sn * sn))
    # row-wise sums keep results independent of the batch size
    return np.sum(vals * w, axis=1) * asr[:, 0] / _TWO_PI


def _bvn_strong(h, k, r, n):
    # |r| >= 0.925; returns the full upper-orthant probability
    x, w = _GL[n]
    k = np.where(r < 0, -k, k)
    hk = h * k
    bvn = np.zeros_like(h)
    inner = np.abs(r) < 1.0
    a2 = (1.0 - r) * (1.0 + r)
    a = np.sqrt(a2)
    bs = (h - k) ** 2
    c = (4.0 - hk) / 8.0
    d = (12.0 - hk) / 80.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        asr = -(bs / a2 + hk) / 2.0
        t1 = a * np.exp(asr) * (1.0 - c * (bs - a2) * (1.0 - d * bs) / 3.0 + c * d * a2 * a2)
        bvn = np.where(inner & (asr > -100.0), t1, 0.0)
        b = np.sqrt(bs)
        sp = _SQRT_TWO_PI * ndtr(-b / a)
        t2 = np.exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0)
        bvn = np.where(inner & (hk > -100.0), bvn - t2, bvn)
        ah = (a / 2.0)[:, None]
        xs = (ah * (1.0 + x[None, :])) ** 2
        asr2 = -(bs[:, None] / xs + hk[:, None]) / 2.0
        sp2 = 1.0 + c[:, None] * xs * (1.0 + 5.0 * d[:, None] * xs)
        rs = np.sqrt(1.0 - xs)
        ep = np.exp(-(hk[:, None] / 2.0) * xs / (1.0 + rs) ** 2) / rs
        terms = np.where(asr2 > -100.0, np.exp(asr2) * (sp2 - ep), 0.0)
        quad = ah[:, 0] * np.sum(terms * w, axis=1)
    bvn = np.where(inner, (quad - bvn) / _TWO_PI, 0.0)
    pos = r > 0
    out = np.where(pos, bvn + ndtr(-np.maximum(h, k)), 0.0)
    lower = np.where(h < 0, ndtr(k) - ndtr(h), ndtr(-h) - ndtr(-k))
    out = np.where(~pos & (h >= k), -bvn, out)
    out = np.where(~pos & (h < k), lower - bvn, out)
    return out


def _order_for(r):
    ar = np.abs(r)
    return np.where(ar < 0.3, 6, np.where(ar < 0.75, 12, 20))


def _orthant_excess(h, k, r):
    """``P(X > h, Y > k) - Phi_bar(h) Phi_bar(k)`` for finite h, k, |r| < 1 - edge."""
    out = np.empty_like(h)
    strong = np.abs(r) >= 0.925
    order = _order_for(r)
    for n in (6, 12, 20):
        sel = ~strong & (order == n)
        if sel.any():
            out[sel] = _bvn_moderate(h[sel], k[sel], r[sel], n)
    if strong.any():
        hs, ks, rs = h[strong], k[strong], r[strong]
        full = _bvn_strong(hs, ks, rs, 20)
        out[strong] = np.clip(full, 0.0, 1.0) - ndtr(-hs) * ndtr(-ks)
    return out


def bvn_upper(h, k, rho):
    """Upper orthant probability ``P(X > h, Y > k)`` for a standard bivariate
    normal with correlation ``rho``. Accepts infinite thresholds."""
    h, k, r = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (h, k, rho)))
    shape = h.shape
    h, k, r = (np.array(v, dtype=float).ravel() for v in (h, k, r))
    lo, hi = np.minimum(h, k), np.maximum(h, k)
    out = np.empty_like(lo)
    comon = r >= 1.0 - _RHO_EDGE
    anti = r <= -1.0 + _RHO_EDGE
    out[comon] = ndtr(-hi[comon])
    out[anti] = np.maximum(ndtr(-lo[anti]) + ndtr(-hi[anti]) - 1.0, 0.0)
    rest = ~(comon | anti)
    fin = rest & np.isfinite(lo) & np.isfinite(hi)
    inf_any = rest & ~fin
    # one threshold at -inf leaves the other marginal; +inf empties the orthant
    out[inf_any] = np.where(hi[inf_any] == np.inf, 0.0,
                            np.where(lo[inf_any] == -np.inf, ndtr(-hi[inf_any]), 0.0))
    if fin.any():
        hf, kf = lo[fin], hi[fin]
        out[fin] = np.clip(_orthant_excess(hf, kf, r[fin]) + ndtr(-hf) * ndtr(-kf), 0.0, 1.0)
    return out.reshape(shape) if shape else float(out[0])


def rho_tilde(t, s, rho):
    """Covariance of the exceedance indicators ``1{Z1 >= Phi_bar^{-1}(t)}`` and
    ``1{Z2 >= Phi_bar^{-1}(s)}`` for unit normals with correlation ``rho``.

    Vectorized over broadcastable ``t``, ``s``, ``rho``. Symmetric in (t, s)
    exactly. Raises ValueError when t, s leave [0, 1] or |rho| > 1.
    """
    t, s, r = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, s, rho)))
    if np.any(~((t >= 0) & (t <= 1))) or np.any(~((s >= 0) & (s <= 1))):
        raise ValueError("rho_tilde requires t, s in [0, 1]")
    if np.any(~(np.abs(r) <= 1)):
        raise ValueError("rho_tilde requires rho in [-1, 1]")
    shape = t.shape
    # canonical order makes the result exactly symmetric
    lo = np.minimum(t, s).ravel()
    hi = np.maximum(t, s).ravel()
    r = np.array(r, dtype=float).ravel()
    prod = lo * hi
    out = np.zeros_like(lo)

    comon = r >= 1.0 - _RHO_EDGE
    anti = r <= -1.0 + _RHO_EDGE
    out[comon] = lo[comon] - prod[comon]
    out[anti] = np.maximum(lo[anti] + hi[anti] - 1.0, 0.0) - prod[anti]

    interior = ~(comon | anti) & (r != 0.0) & (lo > 0.0) & (hi < 1.0)
    if interior.any():
        h = std_isf(lo[interior])
        k = std_isf(hi[interior])
        ri = r[interior]
        vals = np.empty_like(h)
        strong = np.abs(ri) >= 0.925
        moderate = ~strong
        if moderate.any():
            # Phi_bar(h) Phi_bar(k) is exactly the t*s term, so the integral is the answer
            vals[moderate] = _orthant_excess(h[moderate], k[moderate], ri[moderate])
        if strong.any():
            full = np.clip(_bvn_strong(h[strong], k[strong], ri[strong], 20), 0.0, 1.0)
            vals[strong] = full - prod[interior][strong]
        out[interior] = vals
    out[(lo == 0.0) | (hi == 1.0)] = 0.0  # a degenerate indicator has no covariance
    return out.reshape(shape) if shape else float(out[0])
