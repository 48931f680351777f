import math
import warnings

import numpy as np
import pytest
from hypothesis import settings
from scipy import integrate, optimize, stats

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def _phi(v):
    return math.exp(-0.5 * v * v) / math.sqrt(2.0 * math.pi)


def rho_tilde_quadrature(t, s, rho):
    """Independent oracle: adaptive 2-D quadrature of the bivariate normal density.

    The quadrant {Z1 >= h, Z2 >= k} is integrated in decorrelated coordinates
    Z1 = x, Z2 = rho x + sqrt(1 - rho^2) y, where the density factorizes.
    """
    if t in (0.0, 1.0) or s in (0.0, 1.0):
        return 0.0
    h, k = stats.norm.isf(t), stats.norm.isf(s)
    c = math.sqrt(1.0 - rho * rho)
    lower = lambda x: (k - rho * x) / c
    upper = lambda x: max(lower(x), 0.0) + 40.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.dblquad(lambda y, x: _phi(x) * _phi(y), h, h + 40.0, lower, upper,
                                   epsabs=1e-14, epsrel=1e-12)
    return val - t * s


def no_factor_simes_oracle(pi0, mu, q):
    """Root of t/q = pi0 t + (1 - pi0) sf(isf(t) - mu) by bracketing on (0, q]."""
    f = lambda t: pi0 * t + (1 - pi0) * stats.norm.sf(stats.norm.isf(t) - mu) - t / q
    return optimize.brentq(f, 1e-12, q * (1 - 1e-15), xtol=1e-15, rtol=4 * np.finfo(float).eps)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Record one pass/fail line per acceptance criterion and assert it."""

    def record(cid: str, title: str, checks):
        ok = all(c[1] for c in checks)
        parts = "; ".join(f"{label}: {'pass' if good else 'FAIL'} ({detail})"
                          for label, good, detail in checks)
        line = f"{'PASS' if ok else 'FAIL'}  criterion {cid} [{title}] {parts}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
