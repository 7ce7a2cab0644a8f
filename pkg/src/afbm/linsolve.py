"""Linear differential equations ``dy = sum_i A_i y dX(i)`` solved by Chen series.

For linear fields ``V_i(y) = A_i y`` the coefficient of the iterated integral
``S(w_1, ..., w_n)`` in the expansion of ``y_t`` is the matrix
``A_{w_n} ... A_{w_1}`` applied to ``y_s`` (see :func:`word_matrix`).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_depth, check_dims, check_positive_int, check_word
from .exceptions import DimensionMismatchError, DomainError
from .signature import IteratedIntegrals, path_signature, segment_signature

__all__ = [
    "LinearFields",
    "SolveConfig",
    "SeriesResult",
    "random_fields",
    "word_matrix",
    "level_terms",
    "development_terms",
    "development_apply",
    "euler_step",
    "euler_solve",
    "chen_series_solve",
    "series_tail_bound",
    "ode_oracle",
    "ChenSeriesSolver",
    "DEFAULT_SERIES_TOL",
    "DEFAULT_MAX_TERMS",
]

DEFAULT_SERIES_TOL = 1e-10
DEFAULT_MAX_TERMS = 24

_ORDERS = ("forward", "reversed")


def _operator_norm(mat) -> float:
    # norm induced by the sup norm: max absolute row sum
    return float(np.abs(mat).sum(axis=-1).max())


@dataclass(frozen=True)
class LinearFields:
    """``d`` complex ``r x r`` matrices; ``norm_bound`` is the largest sup-norm operator norm."""

    matrices: np.ndarray

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=complex)
        if mats.ndim == 2:
            mats = mats[None]
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise DimensionMismatchError("fields must be an array of shape (d, r, r)")
        check_dims(mats.shape[0])
        object.__setattr__(self, "matrices", mats)

    @property
    def d(self) -> int:
        return self.matrices.shape[0]

    @property
    def r(self) -> int:
        return self.matrices.shape[1]

    @property
    def norm_bound(self) -> float:
        return max(_operator_norm(a) for a in self.matrices)

    def to_json_obj(self):
        return [[[[float(x.real), float(x.imag)] for x in row] for row in mat] for mat in self.matrices]

    @classmethod
    def from_json_obj(cls, obj):
        arr = np.asarray(obj, dtype=float)
        if arr.ndim != 4 or arr.shape[-1] != 2:
            raise DimensionMismatchError("expected a list of r x r matrices of [re, im] pairs")
        return cls(arr[..., 0] + 1j * arr[..., 1])


def random_fields(d: int, r: int, norm: float = 1.0, seed=None) -> LinearFields:
    """Complex Gaussian matrices rescaled so that every ``|||A_i||| == norm``."""
    rng = np.random.default_rng(seed)
    mats = rng.standard_normal((d, r, r)) + 1j * rng.standard_normal((d, r, r))
    mats *= norm / np.abs(mats).sum(axis=-1).max(axis=-1)[:, None, None]
    return LinearFields(mats)


@dataclass(frozen=True)
class SolveConfig:
    depth: int
    partition: tuple
    series_tol: float = DEFAULT_SERIES_TOL
    max_terms: int = DEFAULT_MAX_TERMS

    def __post_init__(self):
        check_depth(self.depth)
        part = tuple(int(p) for p in self.partition)
        if len(part) < 2 or any(b <= a for a, b in zip(part, part[1:])):
            raise DomainError("partition must be strictly increasing with at least two points")
        object.__setattr__(self, "partition", part)
        check_positive_int(self.max_terms, "max_terms")


@dataclass
class SeriesResult:
    y: np.ndarray
    terms_used: np.ndarray
    tail_bound: np.ndarray
    converged: np.ndarray


def _check_order(order):
    if order not in _ORDERS:
        raise DomainError(f"order must be one of {_ORDERS}")


def word_matrix(fields: LinearFields, w, order: str = "forward") -> np.ndarray:
    """Matrix ``M(w)`` with ``[V_{w_1} ... V_{w_n} Id](y) = M(w) y``, i.e. ``A_{w_n} ... A_{w_1}``.

    ``order="reversed"`` gives ``A_{w_1} ... A_{w_n}`` and exists only to show
    that this alternative convention disagrees with the ODE.
    """
    _check_order(order)
    out = np.eye(fields.r, dtype=complex)
    if w is None or len(w) == 0:
        return out
    letters = check_word(w, fields.d)
    for i in letters:
        a = fields.matrices[i - 1]
        out = a @ out if order == "forward" else out @ a
    return out


def level_terms(sig: IteratedIntegrals, fields: LinearFields, y, upto: int | None = None, order="forward"):
    """Series terms ``T_n = sum_{|w| = n} S(w) M(w) y`` for ``n = 1..upto`` (``upto <= sig.depth``)."""
    _check_order(order)
    if fields.d != sig.dims:
        raise DimensionMismatchError(f"fields have d={fields.d}, signature has d={sig.dims}")
    y = np.asarray(y, dtype=complex)
    if y.shape[-1] != fields.r:
        raise DimensionMismatchError(f"state has size {y.shape[-1]}, fields act on r={fields.r}")
    upto = sig.depth if upto is None else upto
    if upto > sig.depth:
        raise DomainError(f"requested {upto} terms from a depth-{sig.depth} signature")
    d, A = sig.dims, fields.matrices
    first = np.einsum("irs,...s->...ir", A, y)
    terms = []
    for n in range(1, upto + 1):
        lev = sig.level(n)
        if order == "reversed":
            nb = len(sig.batch_shape)
            lev = np.transpose(lev, tuple(range(nb)) + tuple(range(nb + n - 1, nb - 1, -1)))
        g = lev.reshape(sig.batch_shape + (d, d ** (n - 1)))
        acc = np.einsum("...ik,...ir->...kr", g, first)
        for _ in range(n - 1):
            acc = acc.reshape(acc.shape[:-2] + (d, -1, fields.r))
            acc = np.einsum("irs,...iks->...kr", A, acc)
        terms.append(acc[..., 0, :])
    return terms


def euler_step(sig: IteratedIntegrals, fields: LinearFields, depth: int, y, order="forward"):
    """One order-``depth`` Euler step ``y + sum_{n <= depth} T_n``."""
    if sig.depth < depth:
        raise DomainError(f"signature depth {sig.depth} < step depth {depth}")
    out = np.asarray(y, dtype=complex)
    for term in level_terms(sig, fields, y, depth, order):
        out = out + term
    return out


def euler_solve(paths, fields: LinearFields, cfg: SolveConfig, y0, order="forward"):
    """Compose Euler steps over the partition cells.

    ``paths`` is a :class:`~afbm.sampler.SamplePaths` (or an array
    ``(n_samples, d, points)``); ``cfg.partition`` lists grid indices.  Returns
    ``y`` at every partition index, shape ``(n_samples, len(partition), r)``.
    """
    values = paths.values if hasattr(paths, "values") else np.asarray(paths)
    npts = values.shape[-1]
    if cfg.partition[0] < 0 or cfg.partition[-1] >= npts:
        raise DomainError("partition indices must be grid points of the sample paths")
    if values.shape[1] != fields.d:
        raise DimensionMismatchError("paths and fields disagree on d")
    pts = np.swapaxes(values, 1, 2)
    y = np.broadcast_to(np.asarray(y0, dtype=complex), (values.shape[0], fields.r))
    out = [y]
    for lo, hi in zip(cfg.partition, cfg.partition[1:]):
        sig = path_signature(pts, cfg.depth, lo, hi + 1)
        y = euler_step(sig, fields, cfg.depth, y, order)
        out.append(y)
    return np.stack(out, axis=1)


def _segment_powers(increments, fields, nmax):
    # B_k^j / j! for every segment k, shape batch + (m, nmax + 1, r, r)
    b = np.einsum("...mi,irs->...mrs", increments, fields.matrices)
    eye = np.broadcast_to(np.eye(fields.r, dtype=complex), b.shape)
    powers = [eye]
    for j in range(1, nmax + 1):
        powers.append(b @ powers[-1] / j)
    return np.stack(powers, axis=-3)


def _graded_product(later, earlier, nmax):
    out = np.zeros(np.broadcast_shapes(later.shape, earlier.shape), dtype=complex)
    for n in range(nmax + 1):
        for j in range(n + 1):
            out[..., n, :, :] += later[..., j, :, :] @ earlier[..., n - j, :, :]
    return out


def development_terms(increments, fields: LinearFields, nmax: int, order="forward"):
    """Graded pieces ``G_0..G_nmax`` of ``exp(B_m) ... exp(B_1)`` with ``B_k = sum_i A_i dX_k(i)``.

    ``G_n`` equals ``sum_{|w| = n} S(w) M(w)`` for the piecewise-linear path
    with the given segment increments, at any ``n`` (no dense tensors needed).
    """
    _check_order(order)
    blocks = _segment_powers(np.asarray(increments, dtype=complex), fields, nmax)
    while blocks.shape[-4] > 1:
        m = blocks.shape[-4]
        even = blocks[..., 0 : m - m % 2 : 2, :, :, :]
        odd = blocks[..., 1 : m : 2, :, :, :]
        merged = _graded_product(odd, even, nmax) if order == "forward" else _graded_product(even, odd, nmax)
        if m % 2:
            merged = np.concatenate([merged, blocks[..., m - 1 :, :, :, :]], axis=-4)
        blocks = merged
    return blocks[..., 0, :, :, :]


def development_apply(increments, fields: LinearFields, y, nmax: int, order="forward"):
    """Graded pieces ``G_n y`` of ``exp(B_m) ... exp(B_1) y``, ``n = 0..nmax``.

    Same quantity as ``development_terms(...) @ y`` but propagated segment by
    segment on vectors, which is much cheaper for large batches.  Returns an
    array of shape ``batch + (nmax + 1, r)``.
    """
    _check_order(order)
    inc = np.asarray(increments, dtype=complex)
    b = np.einsum("...mi,irs->...mrs", inc, fields.matrices)
    y = np.asarray(y, dtype=complex)
    batch = np.broadcast_shapes(b.shape[:-3], y.shape[:-1])
    # layout batch + (r, nmax + 1) so each step is one batched matmul
    v = np.zeros(batch + (fields.r, nmax + 1), dtype=complex)
    v[..., 0] = y
    segs = range(b.shape[-3]) if order == "forward" else range(b.shape[-3] - 1, -1, -1)
    for k in segs:
        bk = b[..., k, :, :]
        out = v.copy()
        power = v
        for j in range(1, nmax + 1):
            # power[..., n] holds B^j v[..., n - j] / j!
            power = (bk @ power[..., :-1]) / j
            out[..., j:] += power
        v = out
    return np.swapaxes(v, -1, -2)


def series_tail_bound(l1_variation, norm_bound: float, y_norm, n_terms):
    """``|y| sum_{n > N} (C L)^n / n!``: bounds the remainder after ``N`` terms."""
    x = norm_bound * np.asarray(l1_variation, dtype=float)
    n_terms = np.asarray(n_terms)
    with np.errstate(over="ignore"):
        tail = np.exp(x) * special.gammainc(n_terms + 1, x)
    return np.asarray(y_norm) * np.where(x == 0, 0.0, tail)


def chen_series_solve(
    sig: IteratedIntegrals,
    fields: LinearFields,
    y_s,
    series_tol: float = DEFAULT_SERIES_TOL,
    max_terms: int = DEFAULT_MAX_TERMS,
    order: str = "forward",
) -> SeriesResult:
    """Partial sums of the Chen series for ``y_t`` started from ``y_s``.

    Terms up to ``sig.depth`` come from the stored levels; further terms are
    generated from the piecewise-linear increments carried by ``sig``.
    Summation stops per sample at the first ``N`` whose remainder bound
    ``|y_s| sum_{n>N} (C L)^n/n!`` is below ``series_tol`` (``C`` the field
    norm bound, ``L`` the l1-variation of the path); if ``max_terms`` is not
    enough the sample is flagged as not converged.
    """
    _check_order(order)
    max_terms = check_positive_int(max_terms, "max_terms")
    y_s = np.asarray(y_s, dtype=complex)
    batch = np.broadcast_shapes(sig.batch_shape, y_s.shape[:-1])
    y_s = np.broadcast_to(y_s, batch + (fields.r,))
    y_norm = np.abs(y_s).max(axis=-1)

    if sig.increments is not None:
        l1 = np.broadcast_to(np.abs(sig.increments).sum(axis=(-1, -2)), batch)
        n_range = np.arange(max_terms + 1)
        tails = series_tail_bound(l1[..., None], fields.norm_bound, y_norm[..., None], n_range)
        below = tails < series_tol
        converged = below.any(axis=-1)
        needed = np.where(converged, below.argmax(axis=-1), max_terms)
        tail = np.take_along_axis(tails, needed[..., None], axis=-1)[..., 0]
    else:
        needed = np.full(batch, min(sig.depth, max_terms))
        tail = np.full(batch, np.inf)
        converged = np.zeros(batch, dtype=bool)

    nmax = int(needed.max()) if needed.size else 0
    terms = level_terms(sig, fields, y_s, min(nmax, sig.depth), order)
    if nmax > sig.depth:
        if sig.increments is None:
            raise DomainError("signature lacks increments; cannot extend the series past its depth")
        extra = development_apply(sig.increments, fields, y_s, nmax, order)
        terms += [extra[..., n, :] for n in range(sig.depth + 1, nmax + 1)]

    partial = y_s
    out = np.array(y_s, dtype=complex, copy=True)
    for n, term in enumerate(terms, start=1):
        partial = partial + term
        out = np.where((needed == n)[..., None], partial, out)
    if not np.all(converged):
        warnings.warn(
            f"Chen series not converged within {max_terms} terms for "
            f"{int(np.size(converged) - np.count_nonzero(converged))} sample(s)",
            RuntimeWarning,
            stacklevel=2,
        )
    return SeriesResult(out, needed, tail, converged)


def _tree_product(mats):
    # ordered product mats[-1] @ ... @ mats[0]
    while mats.shape[0] > 1:
        m = mats.shape[0]
        merged = mats[1 : m : 2] @ mats[0 : m - m % 2 : 2]
        if m % 2:
            merged = np.concatenate([merged, mats[m - 1 :]], axis=0)
        mats = merged
    return mats[0]


def ode_oracle(smooth_path, fields: LinearFields, y0, richardson: bool = True):
    """Reference solution of ``dy = sum_i A_i y dX(i)`` along a finely sampled smooth path.

    First-order steps ``y <- (I + sum_i A_i dX_k(i)) y``.  With ``richardson``
    the result on every other point is combined with the full-resolution one
    (``2 y_h - y_{2h}``) to cancel the leading error term.
    """
    pts = np.asarray(smooth_path, dtype=complex)
    if pts.ndim != 2 or pts.shape[1] != fields.d:
        raise DimensionMismatchError("smooth_path must have shape (points, d)")
    y0 = np.asarray(y0, dtype=complex)

    def first_order(p):
        steps = np.eye(fields.r) + np.einsum("ki,irs->krs", np.diff(p, axis=0), fields.matrices)
        return _tree_product(steps) @ y0

    fine = first_order(pts)
    if not richardson:
        return fine
    if (pts.shape[0] - 1) % 2:
        raise DomainError("Richardson extrapolation needs an even number of steps")
    return 2.0 * fine - first_order(pts[::2])


class ChenSeriesSolver(BaseEstimator):
    """Solve the linear equation along sampled paths by summing its Chen series.

    Parameters
    ----------
    fields : array-like of shape (d, r, r)
        The matrices ``A_i``.
    y0 : array-like of shape (r,)
        Initial state at the first point of every path.
    depth : int
        Levels taken from the dense signature; further terms come from the
        segment increments.
    series_tol, max_terms
        Stopping rule of :func:`chen_series_solve`.
    """

    def __init__(self, fields=None, y0=None, depth=2, series_tol=DEFAULT_SERIES_TOL, max_terms=DEFAULT_MAX_TERMS):
        self.fields = fields
        self.y0 = y0
        self.depth = depth
        self.series_tol = series_tol
        self.max_terms = max_terms

    def fit(self, X=None, y=None):
        self.fields_ = self.fields if isinstance(self.fields, LinearFields) else LinearFields(self.fields)
        y0 = np.asarray(self.y0 if self.y0 is not None else np.ones(self.fields_.r), dtype=complex)
        if y0.shape != (self.fields_.r,):
            raise DimensionMismatchError("y0 must have shape (r,)")
        self.y0_ = y0
        check_depth(self.depth)
        return self

    def solve(self, X) -> SeriesResult:
        """Full :class:`SeriesResult` for paths ``X`` of shape ``(n_samples, n_points, d)``."""
        check_is_fitted(self, "fields_")
        X = np.asarray(X, dtype=complex)
        if X.ndim == 2:
            sig = segment_signature(X, self.depth)
        else:
            sig = path_signature(X, self.depth)
        return chen_series_solve(sig, self.fields_, self.y0_, self.series_tol, self.max_terms)

    def predict(self, X):
        """Endpoint states, shape ``(n_samples, r)``; a 2-d ``X`` is read as per-sample increments."""
        return self.solve(X).y
