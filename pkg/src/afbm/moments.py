"""Variances of iterated integrals: Wick-formula quadrature, Monte Carlo
estimates, and regressions testing factorial decay and Hölder scaling.

Variance conventions
--------------------
For afBm the iterated integrals are centred (every expectation of a product
of non-conjugated Gaussian factors vanishes), so the centred variance and the
second moment coincide.  For the real process ``Y`` they differ at even levels;
both are available through ``centered``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from sklearn.base import BaseEstimator

from ._validation import check_word
from .exceptions import (
    CapExceededError,
    DegenerateFitError,
    DomainError,
    InsufficientSamplesError,
    QuadratureError,
)
from .kernels import _power_sum_over_cos, as_hurst, build_contour, deriv_cov_halfplane, deriv_cov_Y
from .quadrature import graded_rule, simplex_rule
from .signature import IteratedIntegrals

__all__ = [
    "PairingSet",
    "admissible_permutations",
    "y_pairings",
    "wick_variance_Y",
    "wick_variance_gamma",
    "mc_variance",
    "FactorialDecayFit",
    "factorial_decay_fit",
    "HolderMomentFit",
    "holder_moment_fit",
    "FitResult",
    "MomentReport",
    "MIN_MC_SAMPLES",
]

MAX_PERMUTATION_WORD = 8
MAX_WICK_Y_WORD = 3
MAX_WICK_GAMMA_WORD = 2
MIN_MC_SAMPLES = 100
# cap on nodes per simplex copy in the Y quadrature, and entries per tile
_MAX_SIMPLEX_NODES = 2**14
_TILE_ENTRIES = 2**22
_Y_GRADING_RATIO = 0.25


# ---------------------------------------------------------------- pairings


@dataclass(frozen=True)
class PairingSet:
    """Permutations ``sigma`` (0-based tuples) with ``word[j] == word[sigma[j]]``."""

    word: tuple
    permutations: tuple

    def __len__(self):
        return len(self.permutations)

    def __iter__(self):
        return iter(self.permutations)


def admissible_permutations(word) -> PairingSet:
    """Permutations of positions preserving letters; there are ``prod_j m_j!`` of them."""
    word = check_word(word)
    n = len(word)
    if n > MAX_PERMUTATION_WORD:
        raise CapExceededError(f"word length {n} exceeds {MAX_PERMUTATION_WORD}")
    groups = {}
    for j, letter in enumerate(word):
        groups.setdefault(letter, []).append(j)
    blocks = list(groups.values())
    perms = []
    for images in itertools.product(*(itertools.permutations(b) for b in blocks)):
        sigma = [0] * n
        for block, image in zip(blocks, images):
            for j, k in zip(block, image):
                sigma[j] = k
        perms.append(tuple(sigma))
    return PairingSet(word, tuple(sorted(perms)))


def _matchings(labels):
    # perfect matchings of range(len(labels)) pairing equal labels only
    if not labels:
        yield ()
        return
    first, rest = 0, list(range(1, len(labels)))
    for k in rest:
        if labels[k] != labels[first]:
            continue
        remaining = [j for j in rest if j != k]
        for sub in _matchings([labels[j] for j in remaining]):
            yield ((first, k),) + tuple((remaining[a], remaining[b]) for a, b in sub)


def y_pairings(word, centered: bool = True) -> list:
    """Pairings of two copies of ``word`` (positions ``0..n-1`` and ``n..2n-1``).

    A pair only joins equal letters.  With ``centered`` the pairings that never
    cross between the copies are dropped, which subtracts the squared mean.
    """
    word = check_word(word)
    n = len(word)
    out = []
    for m in _matchings(list(word) + list(word)):
        if centered and not any((a < n) != (b < n) for a, b in m):
            continue
        out.append(m)
    return out


# ---------------------------------------------------------- Wick for Y


def _wick_Y_rule(word, pairings, s, t, alpha, m, grading):
    n = len(word)
    pts, wts = simplex_rule(n, m, s, t, grading)
    total = 0.0
    tile = max(1, _TILE_ENTRIES // len(wts))
    for pairing in pairings:
        within_a = np.ones(len(wts))
        within_b = np.ones(len(wts))
        cross = []
        for a, b in pairing:
            a, b = sorted((a, b))
            if b < n:
                within_a = within_a * deriv_cov_Y(pts[:, a], pts[:, b], alpha)
            elif a >= n:
                within_b = within_b * deriv_cov_Y(pts[:, a - n], pts[:, b - n], alpha)
            else:
                cross.append((a, b - n))
        left = wts * within_a
        right = wts * within_b
        if not cross:
            total += left.sum() * right.sum()
            continue
        for lo in range(0, len(wts), tile):
            blk = slice(lo, lo + tile)
            prod = np.ones((len(pts[blk]), len(wts)))
            for a, b in cross:
                prod *= deriv_cov_Y(pts[blk, a][:, None], pts[None, :, b], alpha)
            total += left[blk] @ prod @ right
    return float(total)


def wick_variance_Y(word, s: float, t: float, h, centered: bool = True, rtol: float = 1e-6) -> float:
    """Variance of ``Y^n_{st}(word)`` from Wick's formula, by simplex quadrature.

    The ``2n``-fold integral of products of ``E[Y'_x Y'_y]`` over the product
    of two ordered simplices is computed with tensor Gauss-Legendre rules of
    increasing size until successive values agree to ``rtol``.  The kernel is
    singular at the origin, so when ``s`` is close to it relative to ``t - s``
    nodes are graded toward ``s`` with exponent ``2 / alpha``.

    Parameters
    ----------
    centered : bool
        ``True`` gives ``E|X - EX|^2``; ``False`` the second moment ``E X^2``.

    Raises
    ------
    QuadratureError
        If the tolerance is not met within the node budget.
    """
    word = check_word(word)
    if len(word) > MAX_WICK_Y_WORD:
        raise CapExceededError(f"Y quadrature supports words up to length {MAX_WICK_Y_WORD}")
    s, t = float(s), float(t)
    if not (0.0 <= s < t):
        raise DomainError("wick_variance_Y requires 0 <= s < t")
    a = as_hurst(h).alpha
    n = len(word)
    pairings = y_pairings(word, centered)
    if not pairings:
        return 0.0
    grading = 2.0 / a if s <= _Y_GRADING_RATIO * (t - s) else 1.0
    sizes = [m for m in (6, 8, 12, 16, 20, 24, 32, 48, 64, 96, 128, 192, 256) if m**n <= _MAX_SIMPLEX_NODES]
    prev, change = None, np.inf
    for m in sizes:
        val = _wick_Y_rule(word, pairings, s, t, a, m, grading)
        if prev is not None:
            change = abs(val - prev)
            if change <= rtol * abs(val):
                return val
        prev = val
    raise QuadratureError(
        f"Y quadrature for {word} stalled at relative change {change / abs(prev):.2e}", prev, change
    )


# ------------------------------------------------------ Wick for afBm


def _inc_cov(z, w, s, a):
    # E[(G_z - G_s) conj(G_w - G_s)]
    sc, wc = np.conj(s), np.conj(w)
    bases = [-1j * (z - sc), -1j * (s - wc), -1j * (z - wc), -1j * (s - sc) + 0 * z]
    return _power_sum_over_cos(bases, [1, 1, -1, -1], a)


def _inc_dconj(z, w, s, a):
    # E[(G_z - G_s) conj(G'_w)]
    wc = np.conj(w)
    return -2j * a * _power_sum_over_cos([-1j * (z - wc), -1j * (s - wc)], [1, -1], a, k=1)


def _d_inc(z, w, s, a):
    # E[G'_z conj(G_w - G_s)]
    return -2j * a * _power_sum_over_cos([-1j * (z - np.conj(s)), -1j * (z - np.conj(w))], [1, -1], a, k=1)


def _segment_nodes(za, zb, other_a, other_b, m, grading):
    # nodes on the segment za->zb (with weights for d|z|/|zb - za|), graded
    # toward an end that can meet the other segment at a real point, where
    # the kernel blows up; the graded end is used as the anchor so that
    # clustered nodes never round onto the singular point
    def hits(p):
        return p.imag == 0.0 and (p == other_a or p == other_b)

    if hits(za):
        x, wx = graded_rule(m, grading, 0)
        return za + (zb - za) * x, wx
    if hits(zb):
        x, wx = graded_rule(m, grading, 0)
        return zb + (za - zb) * x, wx
    x, wx = graded_rule(m, 1.0, 0)
    return za + (zb - za) * x, wx


def _gamma_rule(word, s, t, a, m, grading):
    path = build_contour(s, t)
    segs = path.segments
    total = 0j
    repeated = len(word) == 2 and word[0] == word[1]
    for za, zb in segs:
        for wa, wb in segs:
            z, wu = _segment_nodes(za, zb, wa, wb, m, grading)
            w, wv = _segment_nodes(wa, wb, za, zb, m, grading)
            z, w = z[:, None], w[None, :]
            jac = (zb - za) * np.conj(wb - wa)
            f = deriv_cov_halfplane(z, w, a)
            if len(word) == 2:
                g = f * _inc_cov(z, w, s, a)
                if repeated:
                    g = g + _inc_dconj(z, w, s, a) * _d_inc(z, w, s, a)
                f = g
            total += jac * (wu @ f @ wv)
    return float(total.real)


def wick_variance_gamma(word, s, t, h, rtol: float = 1e-6) -> float:
    """Variance of the afBm iterated integral ``G^n_{st}(word)``, ``n <= 2``.

    The Wick sum over :func:`admissible_permutations` is written along
    :func:`build_contour` and its conjugate.  Inner integrals are done in
    closed form, leaving a two-dimensional integral over the contour squared:

    * ``n = 1``: ``E[G'_z conj G'_w]``;
    * ``n = 2``: ``E[G'_z conj G'_w] E[(G_z - G_s) conj(G_w - G_s)]``, plus
      ``E[(G_z - G_s) conj G'_w] E[G'_z conj(G_w - G_s)]`` for a repeated letter.

    Each pair of contour legs uses tensor Gauss-Legendre, graded toward
    corners where both legs touch the real axis at the same point.
    """
    word = check_word(word)
    if len(word) > MAX_WICK_GAMMA_WORD:
        raise CapExceededError(f"afBm quadrature supports words up to length {MAX_WICK_GAMMA_WORD}")
    s, t = complex(s), complex(t)
    a = as_hurst(h).alpha
    if s == t:
        return 0.0
    grading = 2.0 / a
    prev, change = None, np.inf
    for m in (16, 24, 32, 48, 64, 96, 128, 192, 256, 384):
        val = _gamma_rule(word, s, t, a, m, grading)
        if prev is not None:
            change = abs(val - prev)
            if change <= rtol * abs(val):
                return val
        prev = val
    raise QuadratureError(
        f"afBm quadrature for {word} stalled at relative change {change / abs(prev):.2e}", prev, change
    )


# ---------------------------------------------------------- Monte Carlo


def mc_variance(samples, word=None, centered: bool = True):
    """Monte Carlo variance of one iterated-integral entry, with jackknife error.

    Parameters
    ----------
    samples : IteratedIntegrals or array_like
        Per-sample signatures (first batch axis = samples) together with
        ``word``, or directly the per-sample entries.
    centered : bool
        ``True``: unbiased ``E|X - EX|^2``.  ``False``: ``E|X|^2``.

    Returns
    -------
    estimate, stderr : float
    """
    if isinstance(samples, IteratedIntegrals):
        if word is None:
            raise DomainError("a word is needed to pick an entry from signatures")
        x = np.asarray(samples[word])
    else:
        x = np.asarray(samples)
    x = x.reshape(-1)
    n = x.size
    if n < MIN_MC_SAMPLES:
        raise InsufficientSamplesError(f"need at least {MIN_MC_SAMPLES} samples, got {n}")
    if not centered:
        sq = np.abs(x) ** 2
        return float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(n))
    dev = np.abs(x - x.mean()) ** 2
    ss = dev.sum()
    est = ss / (n - 1)
    # leave-one-out sums of squares about the leave-one-out mean
    loo = (ss - n / (n - 1) * dev) / (n - 2)
    se = math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return float(est), float(se)


# ---------------------------------------------------------------- fits


@dataclass
class FitResult:
    """Outcome of a log-linear regression together with its verdict.

    ``verdict`` is one of ``"PASS"``, ``"FAIL"`` or ``"DEGENERATE"``.
    """

    slope: float
    intercept: float
    r_squared: float
    residuals: np.ndarray
    slope_ci: tuple
    constant: float
    verdict: str
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"


def _linfit(x, y):
    res = stats.linregress(x, y)
    dof = len(x) - 2
    half = stats.t.ppf(0.975, dof) * res.stderr if dof > 0 else np.inf
    resid = y - (res.intercept + res.slope * x)
    return res.slope, res.intercept, res.rvalue**2, resid, (res.slope - half, res.slope + half)


def _check_estimates(values, stderrs, min_count):
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size < min_count:
        raise DegenerateFitError(f"need at least {min_count} estimates, got {v.size}")
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise DegenerateFitError("every estimate must be finite and positive")
    if stderrs is not None:
        se = np.asarray(stderrs, dtype=float).reshape(-1)
        if se.shape != v.shape:
            raise DomainError("stderrs must match the estimates")
        if np.any(se > v):
            raise DegenerateFitError("an estimate is dominated by its standard error")
    return v


class FactorialDecayFit(BaseEstimator):
    """Fit ``log(Var_n n!) = a + s n`` and test the bound ``(C'|t-s|)^(2 n alpha) / n!``.

    Parameters
    ----------
    alpha : float
        Hurst index, used to convert the slope into ``C' = exp(s / (2 alpha)) / |t - s|``.
    interval_length : float
        ``|t - s|``.
    margin : float
        Multiplier on the fitted ``C'`` when checking domination.
    min_r2 : float
        Required coefficient of determination.
    """

    def __init__(self, alpha=0.5, interval_length=1.0, margin=1.5, min_r2=0.98):
        self.alpha = alpha
        self.interval_length = interval_length
        self.margin = margin
        self.min_r2 = min_r2

    def fit(self, X, y=None, stderrs=None):
        """``X``: per-level variances ``Var_1..Var_N`` (or ``(levels, variances)`` via ``y``)."""
        if y is None:
            v = _check_estimates(X, stderrs, 3)
            levels = np.arange(1, v.size + 1, dtype=float)
        else:
            v = _check_estimates(y, stderrs, 3)
            levels = np.asarray(X, dtype=float).reshape(-1)
        a = as_hurst(self.alpha).alpha
        length = float(self.interval_length)
        if length <= 0:
            raise DomainError("interval_length must be positive")
        log_fact = np.array([math.lgamma(n + 1) for n in levels])
        target = np.log(v) + log_fact
        slope, intercept, r2, resid, ci = _linfit(levels, target)
        c_prime = math.exp(slope / (2 * a)) / length
        log_bound = 2 * levels * a * math.log(c_prime * self.margin * length) - log_fact
        dominated = bool(np.all(np.log(v) <= log_bound))
        verdict = "PASS" if (r2 >= self.min_r2 and dominated) else "FAIL"
        self.result_ = FitResult(
            slope, intercept, r2, resid, ci, c_prime, verdict,
            {"levels": levels, "log_bound": log_bound, "dominated": dominated},
        )
        self.slope_, self.c_prime_, self.r2_ = slope, c_prime, r2
        return self

    def predict(self, X):
        """Fitted ``Var_n`` at levels ``X``."""
        n = np.asarray(X, dtype=float)
        lf = np.array([math.lgamma(k + 1) for k in n.reshape(-1)]).reshape(n.shape)
        return np.exp(self.result_.intercept + self.result_.slope * n - lf)


def factorial_decay_fit(variances, interval_length: float, h, stderrs=None, margin: float = 1.5) -> FitResult:
    est = FactorialDecayFit(as_hurst(h).alpha, interval_length, margin)
    return est.fit(variances, stderrs=stderrs).result_


class HolderMomentFit(BaseEstimator):
    """Regress ``log E|y_t - y_s|^2`` on ``log|t - s|``.

    The verdict checks the bound direction, ``slope >= 2 alpha - tol``;
    ``details["in_window"]`` records whether the slope is also within ``tol``
    of ``2 alpha``.  The fitted constant is ``exp(intercept)``.
    """

    def __init__(self, alpha=0.5, tol=0.15):
        self.alpha = alpha
        self.tol = tol

    def fit(self, X, y, stderrs=None):
        seps = np.asarray(X, dtype=float).reshape(-1)
        moments = np.asarray(y, dtype=float).reshape(-1)
        if seps.shape != moments.shape:
            raise DomainError("separations and moments must have the same length")
        if np.unique(seps).size < 4 or np.any(seps <= 0) or seps.max() / seps.min() < 10:
            raise DegenerateFitError("need >= 4 distinct positive separations spanning a decade")
        a = as_hurst(self.alpha).alpha
        if np.all(moments == 0):
            self.result_ = FitResult(
                np.nan, np.nan, np.nan, np.zeros_like(moments), (np.nan, np.nan), 0.0,
                "DEGENERATE", {"reason": "all moments vanish", "in_window": False},
            )
            return self
        v = _check_estimates(moments, stderrs, 4)
        slope, intercept, r2, resid, ci = _linfit(np.log(seps), np.log(v))
        verdict = "PASS" if slope >= 2 * a - self.tol else "FAIL"
        details = {"in_window": bool(abs(slope - 2 * a) <= self.tol), "target": 2 * a}
        self.result_ = FitResult(slope, intercept, r2, resid, ci, math.exp(intercept), verdict, details)
        return self

    def predict(self, X):
        return self.result_.constant * np.asarray(X, dtype=float) ** self.result_.slope


def holder_moment_fit(separations, moments, h, stderrs=None, tol: float = 0.15) -> FitResult:
    return HolderMomentFit(as_hurst(h).alpha, tol).fit(separations, moments, stderrs).result_


@dataclass
class MomentReport:
    """Per-level estimates and derived verdicts of one moment experiment."""

    levels: list
    words: list
    estimates: np.ndarray
    stderrs: np.ndarray
    wick_values: np.ndarray | None = None
    fit: FitResult | None = None
    verdicts: dict = field(default_factory=dict)

    def __post_init__(self):
        self.estimates = np.asarray(self.estimates, dtype=float)
        self.stderrs = np.asarray(self.stderrs, dtype=float)
        if np.any(self.stderrs <= 0):
            raise DomainError("standard errors must be positive")

    def rows(self):
        wick = self.wick_values if self.wick_values is not None else [np.nan] * len(self.levels)
        for lvl, w, e, se, wv in zip(self.levels, self.words, self.estimates, self.stderrs, wick):
            yield {"level": lvl, "word": "".join(map(str, w)), "variance": e, "stderr": se, "wick": wv}
