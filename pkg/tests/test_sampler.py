import numpy as np
import pytest
from scipy import stats

from fdpburst.model import (ExperimentConfig, InvalidConfigError, LoadingGroups, NoiseSpec,
                            NonnullSchedule)
from fdpburst.sampler import NoiseFactor, Sampler, draw_replicate, stream


def cfg(**kw):
    base = dict(m=100, schedule=NonnullSchedule.fixed(0.1), mu_a=2.0, q=0.1)
    base.update(kw)
    return ExperimentConfig(**base)


def stack(sampler, n, what="x"):
    out = []
    for i in range(n):
        h, w, x = sampler.statistics(i)
        out.append(x)
    return np.array(out)


def test_draw_is_deterministic():
    c = cfg(loadings=LoadingGroups.single([0.5]), w=[1.0], noise=NoiseSpec.toeplitz([0.4]))
    a, b = draw_replicate(c, 17), draw_replicate(c, 17)
    for f in ("h", "w", "x", "p"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    assert not np.array_equal(a.x, draw_replicate(c, 18).x)
    assert not np.array_equal(a.x, draw_replicate(c.replace(seed=1), 17).x)


def test_streams_are_distinct_by_role():
    a = stream(5, 3, 0).standard_normal(4)
    b = stream(5, 3, 1).standard_normal(4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, stream(5, 3, 0).standard_normal(4))


def test_pvalues_are_one_sided_sf():
    d = draw_replicate(cfg(), 0)
    assert np.array_equal(d.p, stats.norm.sf(d.x))


def test_null_pvalues_uniform():
    c = cfg(m=100_000, mu_a=1e-9, schedule=NonnullSchedule.power_law(1e-30, 1.0))
    d = draw_replicate(c, 0)
    assert not d.h.any()
    ks = stats.kstest(d.p, "uniform").statistic
    assert ks < stats.kstwo.ppf(0.99, d.p.size)


def test_conditional_mode_uses_fixed_w():
    c = cfg(loadings=LoadingGroups.single([0.5, 0.1]), w=[2.5, -1.0])
    assert np.array_equal(draw_replicate(c, 4).w, [2.5, -1.0])


def test_nonnull_fraction():
    d = draw_replicate(cfg(m=200_000), 0)
    assert abs(d.h.mean() - 0.1) < 4 * np.sqrt(0.09 / 200_000)


def test_invalid_config_propagates():
    with pytest.raises(InvalidConfigError):
        draw_replicate(cfg(noise=NoiseSpec.block(10, 1.5)), 0)


def test_block_pair_correlation():
    c = cfg(m=2, noise=NoiseSpec.block(2, 0.5), schedule=NonnullSchedule.power_law(1e-30, 1.0))
    x = stack(Sampler(c), 100_000)
    assert abs(np.corrcoef(x.T)[0, 1] - 0.5) < 0.01


def test_factor_correlation_and_unit_variance():
    c = cfg(m=40, loadings=LoadingGroups.single([0.3 ** 0.5]), noise=NoiseSpec.block(20, 0.6),
            latent_mode="marginal", schedule=NonnullSchedule.power_law(1e-30, 1.0))
    x = stack(Sampler(c), 100_000)
    corr = np.corrcoef(x[:, [0, 1, 25]].T)
    assert abs(corr[0, 2] - 0.3) < 0.01  # different blocks share only the factor
    assert abs(corr[0, 1] - (0.3 + 0.7 * 0.6)) < 0.01
    assert np.all(np.abs(x.var(axis=0) - 1.0) < 0.02)


def _cov_of(factor, n, seed=0):
    rng = np.random.default_rng(seed)
    return np.cov(np.array([factor.draw(rng) for _ in range(n)]).T)


@pytest.mark.parametrize("noise,m", [
    (NoiseSpec.block(7, 0.45), 30),
    (NoiseSpec.block(6, -0.15), 27),
    (NoiseSpec.toeplitz([0.65, 0.3]), 30),
])
def test_structured_paths_match_dense(noise, m):
    dense_mat = np.eye(m)
    if noise.kind == "block":
        for i in range(m):
            for j in range(m):
                if i != j and i // noise.block_size == j // noise.block_size:
                    dense_mat[i, j] = noise.rho
    else:
        for d, r in enumerate(noise.rhos, start=1):
            dense_mat += r * (np.eye(m, k=d) + np.eye(m, k=-d))
    fast = _cov_of(NoiseFactor(noise, m), 100_000, seed=1)
    dense = _cov_of(NoiseFactor(NoiseSpec.custom(dense_mat), m), 100_000, seed=2)
    assert np.max(np.abs(fast - dense_mat)) < 0.02
    assert np.max(np.abs(fast - dense)) < 0.03


def test_heteroskedastic_scale_by_group():
    ld = LoadingGroups(np.array([0.5, 0.5]), np.array([[0.8], [0.2]]))
    s = Sampler(cfg(m=10, loadings=ld, w=[0.0]))
    assert np.allclose(s.group_scale, np.sqrt([1 - 0.64, 1 - 0.04]))
    assert s.groups.tolist() == [0] * 5 + [1] * 5
