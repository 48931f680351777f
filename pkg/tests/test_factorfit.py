import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import subspace_angles

from fdpburst.factorfit import (FittedFactorModel, RankDeficiencyError, fit, planted_factor_data, read_loadings_csv,
                                read_matrix_csv, to_loading_groups, write_loadings_csv)
from fdpburst.model import ExperimentConfig, NonnullSchedule
from fdpburst.sampler import Sampler


def test_plant_and_recover_exact_rank():
    rng = np.random.default_rng(1)
    planted = rng.normal(size=(300, 3))
    y = rng.normal(size=(40, 3)) @ planted.T
    model = fit(y, 3)
    # centring can only shrink the score space, so compare against the centred scores' span
    assert np.max(subspace_angles(model.l_tilde, planted)) < 1e-8
    assert model.sigma_e < 1e-10


def test_pure_noise_scale():
    y = 1.7 * np.random.default_rng(2).normal(size=(50, 2000))
    model = fit(y, 1)
    assert abs(model.sigma_e / 1.7 - 1) < 0.05


def test_constant_column_contributes_nothing():
    rng = np.random.default_rng(3)
    y = rng.normal(size=(20, 30))
    y[:, 4] = 7.5
    model = fit(y, 2)
    assert np.allclose(model.l_tilde[4], 0, atol=1e-12)


def test_unit_variance_standardization():
    y, _ = planted_factor_data(n=37, m=500, seed=4)
    model = fit(y, 3)
    rows = np.sum(model.loadings_std ** 2, axis=1)
    resid = model.sigma_e ** 2 / (model.sigma_e ** 2 + np.sum(model.l_tilde ** 2, axis=1))
    assert np.allclose(rows + resid, 1.0, atol=1e-14)
    assert model.implied_s_l < 1 and model.implied_s_l == pytest.approx(rows.max())


def test_sign_convention():
    y, _ = planted_factor_data(n=30, m=200, seed=5)
    for model in (fit(y, 3), fit(-y, 3)):
        idx = np.argmax(np.abs(model.l_tilde), axis=0)
        assert np.all(model.l_tilde[idx, range(3)] > 0)
    assert np.allclose(fit(y, 3).l_tilde, fit(-y, 3).l_tilde, atol=1e-10)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=15)
def test_row_order_invariance(seed):
    y, _ = planted_factor_data(n=12, m=40, seed=seed % 1000)
    perm = np.random.default_rng(seed).permutation(12)
    a, b = fit(y, 2), fit(y[perm], 2)
    assert np.allclose(a.l_tilde, b.l_tilde, atol=1e-9)
    assert a.sigma_e == pytest.approx(b.sigma_e, rel=1e-12)


def test_errors():
    with pytest.raises(RankDeficiencyError):
        fit(np.outer(np.arange(5.0), np.ones(8)), 2)
    with pytest.raises(ValueError):
        fit(np.ones((1, 5)), 1)
    with pytest.raises(ValueError):
        fit(np.random.default_rng(0).normal(size=(4, 6)), 5)


def test_loading_groups_from_fit():
    y, _ = planted_factor_data(n=20, m=50, seed=6)
    model = fit(y, 2)
    groups = to_loading_groups(model, 1)
    assert groups.n_groups == 50 and groups.finite_m
    assert np.allclose(groups.weights, 1 / 50)
    assert to_loading_groups(model, 25).n_groups == 50


def test_identical_rows_merge():
    rows = np.array([[0.1, 0.2], [0.3, -0.1], [0.0, 0.5], [0.3, -0.1], [0.2, 0.2], [0.4, 0.0]])
    model = FittedFactorModel(rows, 1.0, rows, float(np.max(np.sum(rows ** 2, axis=1))))
    groups = to_loading_groups(model)
    assert groups.n_groups == 5
    assert sorted(groups.weights.tolist()) == pytest.approx([1 / 6] * 4 + [2 / 6])
    assert groups.weights[1] == pytest.approx(2 / 6)


def test_csv_round_trips(tmp_path):
    y, _ = planted_factor_data(n=10, m=12, k=2, seed=8)
    path = tmp_path / "y.csv"
    np.savetxt(path, y, delimiter=",", fmt="%.17g")
    assert np.array_equal(read_matrix_csv(path), y)
    groups = to_loading_groups(fit(y, 2))
    write_loadings_csv(tmp_path / "l.csv", groups)
    back = read_loadings_csv(tmp_path / "l.csv", finite_m=True)
    assert np.array_equal(back.weights, groups.weights)
    assert np.array_equal(back.loadings, groups.loadings)


def test_matrix_csv_bad_cell(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2,3\n4,x,6\n")
    with pytest.raises(ValueError, match="row 2, column 2"):
        read_matrix_csv(path)


def test_standardized_model_has_unit_marginal_variance():
    y, _ = planted_factor_data(n=15, m=8, seed=9)
    groups = to_loading_groups(fit(y, 3))
    c = ExperimentConfig(m=8, schedule=NonnullSchedule.power_law(1e-30, 1.0), mu_a=1.0, q=0.1,
                         loadings=groups, latent_mode="marginal")
    s = Sampler(c)
    x = np.array([s.statistics(i)[2] for i in range(100_000)])
    assert np.all(np.abs(x.var(axis=0) - 1) < 0.02)
