import numpy as np
import pytest
from sklearn.base import clone

from afbm.exceptions import DomainError, FactorizationError
from afbm.kernels import cov_realline, cov_Y
from afbm.sampler import (
    AfbmSampler,
    ComplexGrid,
    YSampler,
    cov_matrix_values,
    hermitian_factor,
    sample_afbm,
    sample_Y,
)


def test_grid_validation():
    g = ComplexGrid.real_line(0, 1, 5, components=2, epsilon_shift=0.1)
    assert len(g) == 5 and np.allclose(g.shifted.imag, 0.1)
    with pytest.raises(DomainError):
        ComplexGrid(np.array([1 - 1j]))
    with pytest.raises(DomainError):
        ComplexGrid(np.array([]))
    with pytest.raises(DomainError):
        ComplexGrid(np.array([0.0]), epsilon_shift=-1)


def test_same_seed_same_paths_and_thread_independence():
    grid = np.linspace(0, 1, 6)
    a = AfbmSampler(alpha=0.3, n_components=2, block_size=64).fit(grid).sample(300, seed=9)
    b = AfbmSampler(alpha=0.3, n_components=2, block_size=64, n_jobs=3).fit(grid).sample(300, seed=9)
    c = AfbmSampler(alpha=0.3, n_components=2, block_size=64).fit(grid).sample(300, seed=10)
    assert np.array_equal(a.values, b.values)
    assert not np.allclose(a.values, c.values)
    assert a.values.shape == (300, 2, 6)


def test_prefix_stability_across_sample_counts():
    grid = np.linspace(0, 1, 4)
    s = AfbmSampler(alpha=0.4, block_size=50).fit(grid)
    assert np.array_equal(s.sample(120, 3).values[:100], s.sample(100, 3).values)


def test_zero_point_is_pinned():
    paths = sample_afbm(ComplexGrid(np.array([0.0, 0.5, 1.0])), 0.3, 50, seed=1)
    assert np.all(paths.values[:, 0, 0] == 0)


def test_empirical_covariance_small():
    grid = np.array([-1.0, 0.5, 1.5])
    paths = AfbmSampler(alpha=0.4).fit(grid).sample(40_000, seed=2)
    g = paths.values[:, 0, :]
    emp = g.T @ g.conj() / g.shape[0]
    pseudo = g.T @ g / g.shape[0]
    assert np.abs(emp - cov_realline(grid[:, None], grid[None, :], 0.4)).max() < 0.03
    assert np.abs(pseudo).max() < 0.03


def test_Y_sampler_covariance_and_real():
    t = np.array([0.25, 0.5, 1.0])
    paths = sample_Y(t, 0.6, 1, 40_000, seed=4)
    assert not np.iscomplexobj(paths.values)
    y = paths.values[:, 0, :]
    assert np.abs(y.T @ y / y.shape[0] - cov_Y(t[:, None], t[None, :], 0.6)).max() < 0.01
    with pytest.raises(DomainError):
        YSampler(alpha=0.3).fit([-1.0, 1.0])


def test_hermitian_factor_jitter_and_failure():
    cov = cov_matrix_values(np.linspace(0.01, 0.02, 30), 0.8)
    low, jitter = hermitian_factor(cov)
    assert jitter <= 1e-8 * cov.diagonal().real.max() + 1e-30
    assert np.allclose(low @ low.conj().T, cov, atol=1e-7 * np.abs(cov).max())
    with pytest.raises(FactorizationError):
        hermitian_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_estimator_protocol():
    s = AfbmSampler(alpha=0.3, epsilon_shift=0.2, n_components=3)
    params = s.get_params()
    assert params["alpha"] == 0.3 and params["n_components"] == 3
    s2 = clone(s).set_params(alpha=0.7)
    assert s2.alpha == 0.7
    fitted = s2.fit([0.0, 1.0])
    assert np.allclose(fitted.points_.imag, 0.2)
    assert fitted.sample(10, 0).epsilon_shift == 0.2
    with pytest.raises(DomainError):
        AfbmSampler(alpha=1.3).fit([0.0, 1.0])


def test_iter_blocks_matches_sample():
    s = AfbmSampler(alpha=0.3, block_size=16).fit(np.linspace(0, 1, 3))
    blocks = np.concatenate([b for _, b in s.iter_blocks(40, 5)])
    assert np.array_equal(blocks, s.sample(40, 5).values)
