"""Truncated signatures of piecewise-linear complex paths.

Word convention: ``S(i_1, ..., i_n)`` integrates ``dX(i_1)`` at the earliest
time and ``dX(i_n)`` at the latest, so that the signature over ``[s, t]`` is
the Chen product ``S_{s,u} (x) S_{u,t}`` with the earlier interval on the
left.  Levels are stored densely: level ``n`` is an array whose last axis has
``d**n`` entries in lexicographic word order; any leading axes are batch axes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_depth, check_dims, check_word, word_index
from .exceptions import DimensionMismatchError, DomainError, IntervalMismatchError
from .kernels import as_hurst

__all__ = [
    "IteratedIntegrals",
    "segment_signature",
    "chen_concat",
    "path_signature",
    "shuffle_words",
    "check_geometricity",
    "check_multiplicativity",
    "holder_norm",
    "CheckReport",
    "SignatureTransformer",
    "all_words",
]


@dataclass
class IteratedIntegrals:
    """Levels ``1..depth`` of the signature over ``interval``.

    ``increments`` optionally keeps the piecewise-linear segments the levels
    were computed from (shape ``batch + (segments, d)``); the series solver
    uses them to extend the expansion past ``depth`` without dense tensors.
    """

    levels: list
    dims: int
    interval: tuple | None = None
    increments: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.dims = check_dims(self.dims)
        check_depth(len(self.levels))
        for n, lev in enumerate(self.levels, start=1):
            if lev.shape[-1] != self.dims**n:
                raise DimensionMismatchError(f"level {n} has {lev.shape[-1]} entries, expected {self.dims ** n}")
        if self.interval is not None:
            self.interval = (complex(self.interval[0]), complex(self.interval[1]))

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def batch_shape(self) -> tuple:
        return self.levels[0].shape[:-1]

    def level(self, n: int) -> np.ndarray:
        """Level ``n`` reshaped to ``batch + (d,) * n``."""
        return self.levels[n - 1].reshape(self.batch_shape + (self.dims,) * n)

    def __getitem__(self, word):
        word = check_word(word, self.dims)
        if len(word) > self.depth:
            raise DomainError(f"word of length {len(word)} beyond depth {self.depth}")
        return self.levels[len(word) - 1][..., word_index(word, self.dims)]

    def truncate(self, depth: int) -> "IteratedIntegrals":
        return IteratedIntegrals(self.levels[:depth], self.dims, self.interval, self.increments)

    def sample(self, idx) -> "IteratedIntegrals":
        """Select batch entries ``idx`` (an index or slice on the first batch axis)."""
        inc = None if self.increments is None else self.increments[idx]
        return IteratedIntegrals([lev[idx] for lev in self.levels], self.dims, self.interval, inc)

    def flatten(self) -> np.ndarray:
        return np.concatenate(self.levels, axis=-1)

    @property
    def length(self) -> float:
        if self.interval is None:
            raise DomainError("signature has no interval attached")
        return abs(self.interval[1] - self.interval[0])


def all_words(dims: int, n: int):
    """All words of length ``n`` over ``1..dims`` in lexicographic order."""
    return list(itertools.product(range(1, dims + 1), repeat=n))


def segment_signature(increment, depth: int, interval=None) -> IteratedIntegrals:
    """Signature of a straight segment: level ``n`` at ``w`` is ``prod_j increment[w_j] / n!``."""
    depth = check_depth(depth)
    inc = np.asarray(increment, dtype=complex)
    d = check_dims(inc.shape[-1])
    levels = [inc]
    for n in range(2, depth + 1):
        prev = levels[-1]
        levels.append((prev[..., :, None] * inc[..., None, :]).reshape(inc.shape[:-1] + (d**n,)) / n)
    return IteratedIntegrals(levels, d, interval, inc[..., None, :])


def _tensor(a, b):
    return (a[..., :, None] * b[..., None, :]).reshape(np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (-1,))


def _chen_levels(a_levels, b_levels):
    out = []
    for k in range(1, len(a_levels) + 1):
        acc = a_levels[k - 1] + b_levels[k - 1]
        for j in range(1, k):
            acc = acc + _tensor(a_levels[j - 1], b_levels[k - j - 1])
        out.append(acc)
    return out


def chen_concat(a: IteratedIntegrals, b: IteratedIntegrals) -> IteratedIntegrals:
    """Signature over the concatenation of ``a``'s interval followed by ``b``'s."""
    if a.depth != b.depth or a.dims != b.dims:
        raise DimensionMismatchError("chen_concat needs equal depth and dims")
    interval = None
    if a.interval is not None and b.interval is not None:
        if not np.isclose(a.interval[1], b.interval[0], rtol=0, atol=1e-12):
            raise IntervalMismatchError(f"{a.interval} does not end where {b.interval} starts")
        interval = (a.interval[0], b.interval[1])
    elif a.interval is not None or b.interval is not None:
        interval = a.interval or b.interval
    inc = None
    if a.increments is not None and b.increments is not None:
        batch = np.broadcast_shapes(a.increments.shape[:-2], b.increments.shape[:-2])
        inc = np.concatenate(
            [np.broadcast_to(x, batch + x.shape[-2:]) for x in (a.increments, b.increments)], axis=-2
        )
    return IteratedIntegrals(_chen_levels(a.levels, b.levels), a.dims, interval, inc)


def path_signature(path, depth: int, lo: int = 0, hi: int | None = None, times=None) -> IteratedIntegrals:
    """Exact signature of the piecewise-linear interpolant through sampled points.

    ``path`` has shape ``batch + (points, d)``; points ``lo..hi`` (inclusive
    ``lo``, exclusive ``hi``) are used.  ``times`` labels the points so that
    the result carries its interval.
    """
    depth = check_depth(depth)
    pts = np.asarray(path, dtype=complex)
    if pts.ndim < 2:
        raise DomainError("path must have shape (..., points, d)")
    sub = pts[..., lo:hi, :]
    if sub.shape[-2] < 2:
        raise DomainError("path_signature needs at least two points")
    inc = np.diff(sub, axis=-2)
    interval = None
    if times is not None:
        tt = np.asarray(times)[lo:hi]
        interval = (tt[0], tt[-1])
    levels = [np.zeros(inc.shape[:-2] + (inc.shape[-1] ** n,), dtype=complex) for n in range(1, depth + 1)]
    for k in range(inc.shape[-2]):
        seg = segment_signature(inc[..., k, :], depth).levels
        levels = _chen_levels(levels, seg)
    return IteratedIntegrals(levels, inc.shape[-1], interval, inc)


def shuffle_words(u, v) -> list:
    """All order-preserving interleavings of ``u`` and ``v``, with multiplicity."""
    u = tuple(u)
    v = tuple(v)
    if not u:
        return [v]
    if not v:
        return [u]
    return [w + (u[-1],) for w in shuffle_words(u[:-1], v)] + [w + (v[-1],) for w in shuffle_words(u, v[:-1])]


@lru_cache(maxsize=None)
def _shuffle_table(dims: int, n1: int, n2: int):
    # for every (u, v) pair: flat indices of the shuffled words at level n1 + n2
    rows = []
    for u in all_words(dims, n1):
        for v in all_words(dims, n2):
            rows.append([word_index(w, dims) for w in shuffle_words(u, v)])
    return np.array(rows, dtype=np.intp)


@dataclass
class CheckReport:
    max_residual: float
    passed: bool
    tol: float
    per_level: dict = field(default_factory=dict)
    worst: tuple | None = None


def check_geometricity(sig: IteratedIntegrals, tol: float = 1e-12) -> CheckReport:
    """Max residual of ``S(u) S(v) - sum_{w in u sh v} S(w)`` over ``|u| + |v| <= depth``."""
    d = sig.dims
    worst_val, worst = 0.0, None
    per_level = {}
    for n in range(2, sig.depth + 1):
        level_max = 0.0
        for n1 in range(1, n):
            n2 = n - n1
            table = _shuffle_table(d, n1, n2)
            prod = (sig.levels[n1 - 1][..., :, None] * sig.levels[n2 - 1][..., None, :]).reshape(
                sig.batch_shape + (-1,)
            )
            summed = sig.levels[n - 1][..., table].sum(axis=-1)
            res = np.abs(prod - summed)
            flat = res.reshape(-1, res.shape[-1]).max(axis=0)
            m = float(flat.max())
            if m > worst_val:
                pair = int(flat.argmax())
                worst_val = m
                worst = (all_words(d, n1)[pair // d**n2], all_words(d, n2)[pair % d**n2])
            level_max = max(level_max, m)
        per_level[n] = level_max
    return CheckReport(worst_val, worst_val < tol, tol, per_level, worst)


def check_multiplicativity(
    full: IteratedIntegrals, left: IteratedIntegrals, right: IteratedIntegrals, tol: float = 1e-12
) -> CheckReport:
    """Residual of Chen's relation ``full = left (x) right`` level by level."""
    if not (full.depth == left.depth == right.depth and full.dims == left.dims == right.dims):
        raise DimensionMismatchError("signatures must share depth and dims")
    if full.interval is not None and left.interval is not None and right.interval is not None:
        ok = (
            np.isclose(left.interval[1], right.interval[0], rtol=0, atol=1e-12)
            and np.isclose(full.interval[0], left.interval[0], rtol=0, atol=1e-12)
            and np.isclose(full.interval[1], right.interval[1], rtol=0, atol=1e-12)
        )
        if not ok:
            raise IntervalMismatchError("left and right must partition the full interval")
    expected = _chen_levels(left.levels, right.levels)
    per_level = {n: float(np.max(np.abs(full.levels[n - 1] - expected[n - 1]))) for n in range(1, full.depth + 1)}
    worst = max(per_level.values())
    return CheckReport(worst, worst < tol, tol, per_level)


def holder_norm(sigs, h):
    """``max_{n, w, interval} |S^n(w)| / |t - s|**(n alpha)`` over a collection of signatures.

    Batch axes are kept: the maximum is taken over levels, words and intervals only.
    """
    a = as_hurst(h).alpha
    if isinstance(sigs, IteratedIntegrals):
        sigs = [sigs]
    sigs = list(sigs)
    if not sigs:
        raise DomainError("holder_norm needs at least one signature")
    best = None
    for sig in sigs:
        length = sig.length
        if length == 0:
            raise DomainError("zero-length interval in holder_norm")
        for n, lev in enumerate(sig.levels, start=1):
            val = np.abs(lev).max(axis=-1) / length ** (n * a)
            best = val if best is None else np.maximum(best, val)
    return best[()] if np.ndim(best) == 0 else best


class SignatureTransformer(TransformerMixin, BaseEstimator):
    """Map sampled paths ``(n_samples, n_points, d)`` to flattened truncated signatures.

    Parameters
    ----------
    depth : int
        Truncation level ``N``.
    """

    def __init__(self, depth=2):
        self.depth = depth

    def fit(self, X, y=None):
        X = self._check_X(X)
        self.n_features_in_ = X.shape[-1]
        self.n_output_features_ = sum(self.n_features_in_**n for n in range(1, self.depth + 1))
        return self

    def _check_X(self, X):
        if hasattr(X, "values") and hasattr(X, "points"):
            X = np.swapaxes(X.values, 1, 2)
        X = np.asarray(X, dtype=complex)
        if X.ndim != 3:
            raise DomainError("expected an array of shape (n_samples, n_points, d)")
        check_depth(self.depth)
        check_dims(X.shape[-1])
        return X

    def signatures(self, X) -> IteratedIntegrals:
        return path_signature(self._check_X(X), self.depth)

    def transform(self, X):
        X = self._check_X(X)
        if hasattr(self, "n_features_in_") and X.shape[-1] != self.n_features_in_:
            raise DimensionMismatchError(f"fitted on d={self.n_features_in_}, got d={X.shape[-1]}")
        return path_signature(X, self.depth).flatten()

