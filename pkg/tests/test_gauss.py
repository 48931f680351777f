import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from fdpburst.gauss import (bvn_upper, rho_tilde, std_cdf, std_isf, std_pdf, std_quantile,
                            std_sf)

from conftest import rho_tilde_quadrature

probs = st.floats(min_value=0.0, max_value=1.0)
open_probs = st.floats(min_value=1e-12, max_value=1 - 1e-12)
corrs = st.floats(min_value=-1.0, max_value=1.0)


def test_cdf_examples():
    assert std_cdf(0.0) == 0.5
    assert abs(std_cdf(40.0) - 1.0) <= 1e-15
    assert abs(std_cdf(1.959963985) - 0.975) < 1e-10
    assert std_sf(-40.0) == 1.0
    assert std_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-16)


def test_cdf_matches_erfc_reference():
    # erfc-based reference values for a few points
    for z in (-8.0, -3.0, -0.5, 0.7, 2.5, 6.0):
        ref = 0.5 * math.erfc(-z / math.sqrt(2))
        assert abs(std_cdf(z) - ref) <= 1e-15
        assert std_cdf(z) == pytest.approx(ref, rel=1e-13)


def test_quantile_examples():
    assert std_quantile(0.5) == 0.0
    assert abs(std_quantile(0.975) - 1.959963985) < 1e-9
    # p values whose complement 1 - p is exact in binary floating point
    for p in (2.0 ** -30, 2.0 ** -7, 0.25, 0.375):
        assert abs(std_quantile(p) + std_quantile(1 - p)) < 1e-12 * max(1, abs(std_quantile(p)))


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_quantile_domain(p):
    with pytest.raises(ValueError):
        std_quantile(p)


def test_round_trip_log_grid():
    p = np.concatenate([np.geomspace(1e-12, 0.5, 400), 1 - np.geomspace(1e-12, 0.5, 400)])
    back = std_cdf(std_quantile(p))
    assert np.max(np.abs(back - p)) <= 1e-12


@given(open_probs)
def test_quantile_inverts_cdf(p):
    assert abs(std_cdf(std_quantile(p)) - p) <= 1e-12


@given(st.floats(-30, 30), st.floats(-30, 30))
def test_cdf_monotone(a, b):
    lo, hi = sorted((a, b))
    assert std_cdf(lo) <= std_cdf(hi)


def test_isf_edges():
    assert std_isf(0.0) == math.inf
    assert std_isf(1.0) == -math.inf
    assert std_isf(0.5) == 0.0


def test_rho_tilde_examples():
    for t, s in ((0.1, 0.7), (0.02, 0.02), (0.9, 0.3)):
        assert rho_tilde(t, s, 0.0) == 0.0
    for t in (0.001, 0.3, 0.5, 0.99):
        assert rho_tilde(t, t, 1.0) == pytest.approx(t * (1 - t), abs=1e-15)
    assert abs(rho_tilde(0.5, 0.5, 0.5) - 1 / 12) < 1e-15


def test_rho_tilde_arcsine_closed_form():
    rhos = np.linspace(-1, 1, 401)
    exact = np.arcsin(rhos) / (2 * math.pi)
    got = np.array([rho_tilde(0.5, 0.5, r) for r in rhos])
    assert np.max(np.abs(got - exact)) <= 1e-12


def test_rho_tilde_against_quadrature(rng):
    for _ in range(50):
        t, s = rng.uniform(0, 1, 2)
        r = rng.uniform(-1, 1)
        assert abs(rho_tilde(t, s, r) - rho_tilde_quadrature(t, s, r)) <= 1e-8


def test_rho_tilde_antithetic():
    for t, s in ((0.3, 0.4), (0.8, 0.6), (0.5, 0.5)):
        assert rho_tilde(t, s, -1.0) == pytest.approx(max(t + s - 1, 0) - t * s, abs=1e-15)


def test_bvn_upper_reference():
    # independent case factorizes
    assert bvn_upper(0.3, -0.2, 0.0) == pytest.approx(stats.norm.sf(0.3) * stats.norm.sf(-0.2), abs=1e-15)
    ref = stats.multivariate_normal(mean=[0, 0], cov=[[1, 0.4], [0.4, 1]]).cdf([-0.3, -1.1])
    assert bvn_upper(0.3, 1.1, 0.4) == pytest.approx(ref, abs=1e-7)


@given(probs, probs, corrs)
def test_rho_tilde_symmetric_and_bounded(t, s, r):
    a = rho_tilde(t, s, r)
    assert a == rho_tilde(s, t, r)
    m = min(t, s)
    assert -m - 1e-15 <= a <= m + 1e-15


@given(probs, corrs)
def test_rho_tilde_boundaries(s, r):
    assert rho_tilde(0.0, s, r) == 0.0
    assert rho_tilde(1.0, s, r) == 0.0


@given(st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_rho_tilde_monotone_in_rho(t, s):
    vals = [rho_tilde(t, s, r) for r in np.linspace(-1, 1, 81)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("args", [(-0.1, 0.5, 0.0), (0.5, 1.2, 0.0), (0.5, 0.5, 1.01)])
def test_rho_tilde_domain(args):
    with pytest.raises(ValueError):
        rho_tilde(*args)


def test_rho_tilde_vectorized_matches_scalar(rng):
    t = rng.uniform(0, 1, 200)
    s = rng.uniform(0, 1, 200)
    r = rng.uniform(-1, 1, 200)
    vec = rho_tilde(t, s, r)
    assert np.array_equal(vec, np.array([rho_tilde(a, b, c) for a, b, c in zip(t, s, r)]))
