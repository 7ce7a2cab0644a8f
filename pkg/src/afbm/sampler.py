"""Seeded sampling of afBm paths and of the real process ``Y_t = Re G_{it}``.

Both samplers follow the scikit-learn estimator protocol: ``fit`` takes the
evaluation points and builds/factorises the covariance, ``sample`` draws
paths.  Randomness is drawn per (block of samples, component) from
independent child streams of a :class:`numpy.random.SeedSequence`, so output
does not depend on the number of worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive_int, check_upper_half_plane
from .exceptions import DomainError, FactorizationError
from .kernels import HurstIndex, as_hurst, cov_halfplane, cov_Y

__all__ = [
    "ComplexGrid",
    "SamplePaths",
    "cov_matrix_values",
    "cov_matrix_Y",
    "hermitian_factor",
    "AfbmSampler",
    "YSampler",
    "sample_afbm",
    "sample_Y",
    "BLOCK_SIZE",
]

BLOCK_SIZE = 1024
MAX_RELATIVE_JITTER = 1e-8


@dataclass(frozen=True)
class ComplexGrid:
    """Evaluation points in the closed upper half-plane, shifted by ``+i*epsilon_shift``."""

    points: np.ndarray
    components: int = 1
    epsilon_shift: float = 0.0

    def __post_init__(self):
        pts = np.atleast_1d(np.asarray(self.points, dtype=complex))
        if pts.ndim != 1 or pts.size == 0:
            raise DomainError("grid needs a nonempty 1-d array of points")
        if self.epsilon_shift < 0:
            raise DomainError("epsilon_shift must be >= 0")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "components", check_positive_int(self.components, "components"))
        object.__setattr__(self, "epsilon_shift", float(self.epsilon_shift))
        check_upper_half_plane(self.shifted, "grid points")

    @classmethod
    def real_line(cls, start, stop, num, components=1, epsilon_shift=0.0):
        pts = np.linspace(start, stop, num)
        if num > 1 and not np.all(np.diff(pts) > 0):
            raise DomainError("real grid must be strictly increasing")
        return cls(pts.astype(complex), components, epsilon_shift)

    @property
    def shifted(self) -> np.ndarray:
        return self.points + 1j * self.epsilon_shift

    def __len__(self):
        return len(self.points)


@dataclass
class SamplePaths:
    """Sampled paths, ``values[sample, component, point]``."""

    points: np.ndarray
    values: np.ndarray
    seed: int
    hurst: HurstIndex
    epsilon_shift: float = 0.0

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def components(self) -> int:
        return self.values.shape[1]

    def increments(self, lo: int = 0, hi: int | None = None) -> np.ndarray:
        """Consecutive increments on points ``lo..hi`` as ``(sample, segment, component)``."""
        sub = self.values[:, :, lo:hi]
        return np.swapaxes(np.diff(sub, axis=-1), 1, 2)

    def real_part(self) -> "SamplePaths":
        return SamplePaths(self.points, self.values.real.copy(), self.seed, self.hurst, self.epsilon_shift)


def cov_matrix_values(grid, h) -> np.ndarray:
    """Hermitian matrix ``E[G_{z_j} conj(G_{z_k})]`` on the (shifted) grid points."""
    z = grid.shifted if isinstance(grid, ComplexGrid) else check_upper_half_plane(grid)
    if z.size == 0:
        raise DomainError("grid must be nonempty")
    cov = np.asarray(cov_halfplane(z[:, None], z[None, :], as_hurst(h)), dtype=complex)
    cov = 0.5 * (cov + cov.conj().T)
    np.fill_diagonal(cov, cov.diagonal().real)
    return cov


def cov_matrix_Y(times, h) -> np.ndarray:
    """Real covariance ``E[Y_s Y_t]`` on nonnegative times."""
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise DomainError("times must be a nonempty 1-d array")
    cov = np.asarray(cov_Y(t[:, None], t[None, :], as_hurst(h)), dtype=float)
    return 0.5 * (cov + cov.T)


def hermitian_factor(cov: np.ndarray, max_relative_jitter: float = MAX_RELATIVE_JITTER):
    """Return ``(L, jitter)`` with ``L @ L^H ~= cov``.

    Rows with an exactly vanishing variance (the process pinned at 0) get a zero
    row.  Cholesky is tried with diagonal jitter starting at
    ``1e-14 * trace / n`` and growing tenfold up to
    ``max_relative_jitter * max(diag)``; after that an eigendecomposition with
    clipped eigenvalues is used if the most negative eigenvalue is within the
    same budget.
    """
    cov = np.asarray(cov)
    diag = cov.diagonal().real
    active = np.flatnonzero(diag > 0)
    factor = np.zeros_like(cov)
    if active.size == 0:
        return factor, 0.0
    sub = cov[np.ix_(active, active)]
    cap = max_relative_jitter * diag.max()
    eye = np.eye(active.size)
    jitter = 0.0
    trial = 1e-14 * diag[active].sum() / active.size
    while True:
        try:
            low = linalg.cholesky(sub + jitter * eye, lower=True, check_finite=False)
            factor[np.ix_(active, active)] = low
            return factor, jitter
        except linalg.LinAlgError:
            if trial > cap:
                break
            jitter = trial
            trial *= 10.0
    evals, evecs = linalg.eigh(sub)
    if evals.min() < -cap:
        raise FactorizationError(
            f"covariance not positive semidefinite (min eigenvalue {evals.min():.3e})",
            float(evals.min()),
        )
    factor[np.ix_(active, active)] = evecs * np.sqrt(np.clip(evals, 0.0, None))
    return factor, float(max(-evals.min(), 0.0))


def _block_rng(seed: int, block: int, component: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(block, component)))


class _GaussianPathSampler(BaseEstimator):
    _complex = True

    def _covariance(self, points):
        raise NotImplementedError

    def _validate_points(self, points):
        raise NotImplementedError

    def fit(self, X, y=None):
        """Build and factorise the covariance on the points ``X``."""
        check_positive_int(self.n_components, "n_components")
        check_positive_int(self.block_size, "block_size")
        self.hurst_ = as_hurst(self.alpha)
        self.points_ = self._validate_points(X)
        self.covariance_ = self._covariance(self.points_)
        self.factor_, self.jitter_ = hermitian_factor(self.covariance_)
        return self

    def _draw_block(self, seed, block, size):
        npts = self.factor_.shape[0]
        out = np.empty((size, self.n_components, npts), dtype=complex if self._complex else float)
        for comp in range(self.n_components):
            rng = _block_rng(seed, block, comp)
            if self._complex:
                raw = rng.standard_normal((size, npts, 2))
                xi = (raw[..., 0] + 1j * raw[..., 1]) / np.sqrt(2.0)
            else:
                xi = rng.standard_normal((size, npts))
            out[:, comp, :] = xi @ self.factor_.T
        return out

    def iter_blocks(self, n_samples, seed):
        """Yield ``(first_sample_index, values)`` blocks of at most ``block_size`` samples."""
        check_is_fitted(self, "factor_")
        n_samples = check_positive_int(n_samples, "n_samples")
        for block, start in enumerate(range(0, n_samples, self.block_size)):
            yield start, self._draw_block(seed, block, min(self.block_size, n_samples - start))

    def sample(self, n_samples, seed=0) -> SamplePaths:
        check_is_fitted(self, "factor_")
        n_samples = check_positive_int(n_samples, "n_samples")
        starts = list(range(0, n_samples, self.block_size))
        sizes = [min(self.block_size, n_samples - s) for s in starts]
        jobs = list(enumerate(sizes))
        if self.n_jobs and self.n_jobs > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=self.n_jobs) as pool:
                blocks = list(pool.map(lambda job: self._draw_block(seed, *job), jobs))
        else:
            blocks = [self._draw_block(seed, b, size) for b, size in jobs]
        values = np.concatenate(blocks, axis=0)
        return SamplePaths(self.points_, values, int(seed), self.hurst_, self._shift())

    def _shift(self):
        return 0.0


class AfbmSampler(_GaussianPathSampler):
    """Circularly-symmetric complex Gaussian sampler for afBm on a grid.

    Parameters
    ----------
    alpha : float
        Hurst index in (0, 1).
    epsilon_shift : float
        Imaginary shift added to every point passed to ``fit``.
    n_components : int
        Number of independent, identically distributed components ``d``.
    block_size : int
        Samples per independent RNG stream.
    n_jobs : int
        Worker threads used by ``sample``.
    """

    def __init__(self, alpha=0.5, epsilon_shift=0.0, n_components=1, block_size=BLOCK_SIZE, n_jobs=1):
        self.alpha = alpha
        self.epsilon_shift = epsilon_shift
        self.n_components = n_components
        self.block_size = block_size
        self.n_jobs = n_jobs

    def _validate_points(self, X):
        if isinstance(X, ComplexGrid):
            return X.shifted
        return ComplexGrid(np.ravel(X), self.n_components, self.epsilon_shift).shifted

    def _covariance(self, points):
        return cov_matrix_values(points, self.hurst_)

    def _shift(self):
        return float(self.epsilon_shift)


class YSampler(_GaussianPathSampler):
    """Real Gaussian sampler for ``Y_t = Re G_{it}`` on nonnegative times."""

    _complex = False

    def __init__(self, alpha=0.5, n_components=1, block_size=BLOCK_SIZE, n_jobs=1):
        self.alpha = alpha
        self.n_components = n_components
        self.block_size = block_size
        self.n_jobs = n_jobs

    def _validate_points(self, X):
        t = np.ravel(np.asarray(X, dtype=float))
        if t.size == 0 or np.any(t < 0):
            raise DomainError("Y times must be a nonempty set of nonnegative reals")
        return t

    def _covariance(self, points):
        return cov_matrix_Y(points, self.hurst_)


def sample_afbm(grid: ComplexGrid, h, n_samples: int, seed: int) -> SamplePaths:
    sampler = AfbmSampler(
        alpha=as_hurst(h).alpha, epsilon_shift=grid.epsilon_shift, n_components=grid.components
    )
    return sampler.fit(grid.points).sample(n_samples, seed)


def sample_Y(t_grid, h, d: int, n_samples: int, seed: int) -> SamplePaths:
    return YSampler(alpha=as_hurst(h).alpha, n_components=d).fit(t_grid).sample(n_samples, seed)
