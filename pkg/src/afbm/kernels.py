"""Closed-form covariance kernels of analytic fractional Brownian motion.

Every kernel here is a pure, vectorised function of its arguments.  Complex
fractional powers always use the principal branch, which is continuous on the
closed right half-plane where all bases ``-i(z - conj(w))`` live when ``z`` and
``w`` are in the closed upper half-plane.

Most afBm quantities are combinations ``sum_j s_j b_j**(2*alpha - k) / (4 cos(pi*alpha))``
whose numerator vanishes identically at ``alpha = 1/2``.  They are evaluated
through :func:`_power_sum_over_cos`, which divides out the common factor
analytically and therefore has no removable singularity to patch around.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import HALFPLANE_TOL, check_alpha, check_upper_half_plane
from .exceptions import DomainError, SingularInputError

__all__ = [
    "HurstIndex",
    "ContourPath",
    "as_hurst",
    "c_alpha",
    "deriv_cov_halfplane",
    "cov_halfplane",
    "cov_realline",
    "cross_cov_re_im",
    "deriv_cov_Y",
    "cov_Y",
    "var_Y_increment",
    "build_contour",
    "STRAIGHT_LINE_THRESHOLD",
]

STRAIGHT_LINE_THRESHOLD = 0.5
# below this distance from 1/2 the literal Prop.-(3) style formulas lose digits
_HALF_WINDOW = 1e-4


@dataclass(frozen=True)
class HurstIndex:
    """A validated Hurst index ``alpha`` in the open interval (0, 1)."""

    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))

    @property
    def c_alpha(self) -> float:
        return c_alpha(self)

    def __float__(self):
        return self.alpha


def as_hurst(h) -> HurstIndex:
    return h if isinstance(h, HurstIndex) else HurstIndex(h)


def _scalar(x):
    x = np.asarray(x)
    return x[()] if x.ndim == 0 else x


def c_alpha(h) -> float:
    """``alpha (1 - 2 alpha) / (2 cos(pi alpha))``.

    With ``delta = alpha - 1/2`` the ratio equals ``alpha / (pi sinc(delta))``
    exactly, which is how it is evaluated; the value at ``alpha = 1/2`` is
    ``1 / (2 pi)``.
    """
    a = as_hurst(h).alpha
    return float(a / (np.pi * np.sinc(a - 0.5)))


def _phi(u):
    # (exp(u) - 1) / u, entire, equal to 1 at u = 0
    u = np.asarray(u, dtype=complex)
    out = np.ones_like(u)
    nz = u != 0
    out[nz] = np.expm1(u[nz]) / u[nz]
    return out


def _power_sum_over_cos(bases, signs, alpha: float, k: int = 0):
    """``sum_j signs[j] * bases[j]**(2 alpha - k) / (4 cos(pi alpha))``.

    Requires ``sum_j signs[j] * bases[j]**(1 - k) == 0`` identically (true for
    every afBm combination with ``k`` in {0, 1}).  Bases must lie in the closed
    right half-plane; the principal branch is used.
    """
    delta = alpha - 0.5
    total = 0j
    for b, sgn in zip(bases, signs):
        b = np.asarray(b, dtype=complex)
        if np.any(b.real < -HALFPLANE_TOL * np.maximum(1.0, np.abs(b))):
            raise DomainError("fractional-power base left the closed right half-plane")
        b = np.where(b.real < 0, 1j * b.imag, b)
        zero = b == 0
        if k >= 1 and np.any(zero):
            raise SingularInputError("kernel evaluated on its singularity")
        safe = np.where(zero, 1.0, b)
        log_b = np.log(safe)
        term = safe ** (1 - k) * 2.0 * log_b * _phi(2.0 * delta * log_b)
        total = total + sgn * np.where(zero, 0.0, term)
    return -total / (4.0 * np.pi * np.sinc(delta))


def deriv_cov_halfplane(z, w, h):
    """Hermitian covariance ``E[G'_z conj(G'_w)] = c_alpha (-i(z - conj w))**(2 alpha - 2)``.

    The pseudo-covariance ``E[G'_z G'_w]`` vanishes and is not computed.
    """
    a = as_hurst(h).alpha
    z = check_upper_half_plane(z, "z")
    w = check_upper_half_plane(w, "w")
    b = -1j * (z - np.conj(w))
    if np.any(b.real < -HALFPLANE_TOL):
        raise DomainError("principal branch undefined below the real axis")
    if np.any(b == 0):
        raise SingularInputError("-i(z - conj(w)) = 0: kernel is singular there")
    return _scalar(c_alpha(a) * b ** (2 * a - 2))


def cov_halfplane(z, w, h):
    """``E[G_z conj(G_w)]`` for ``z, w`` anywhere in the closed upper half-plane.

    Obtained by integrating :func:`deriv_cov_halfplane` from 0 to ``z`` and to
    ``w``: ``[(-iz)**(2a) + (i conj w)**(2a) - (-i(z - conj w))**(2a)] / (4 cos(pi a))``.
    On the real line this reproduces :func:`cov_realline`.
    """
    a = as_hurst(h).alpha
    z = check_upper_half_plane(z, "z")
    w = check_upper_half_plane(w, "w")
    wc = np.conj(w)
    return _scalar(_power_sum_over_cos([-1j * z, 1j * wc, -1j * (z - wc)], [1, 1, -1], a))


def cov_realline(s, t, h):
    """``E[G_s conj(G_t)]`` for real ``s, t`` (with ``sgn(0) = 0``).

    The pseudo-covariance ``E[G_s G_t]`` is identically zero and not computed.
    """
    a = as_hurst(h).alpha
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if abs(a - 0.5) < _HALF_WINDOW:
        return _scalar(np.asarray(cov_halfplane(s, t, a), dtype=complex))
    pa = np.pi * a
    num = (
        np.exp(-1j * pa * np.sign(s)) * np.abs(s) ** (2 * a)
        + np.exp(1j * pa * np.sign(t)) * np.abs(t) ** (2 * a)
        - np.exp(1j * pa * np.sign(t - s)) * np.abs(s - t) ** (2 * a)
    )
    return _scalar(num / (4.0 * np.cos(pa)))


def cross_cov_re_im(s, t, h) -> float:
    """``E[Re G_s Im G_t] = -(tan(pi a) / 8) [-sgn(s)|s|^2a + sgn(t)|t|^2a - sgn(t-s)|t-s|^2a]``."""
    a = as_hurst(h).alpha
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    bracket = (
        -np.sign(s) * np.abs(s) ** (2 * a)
        + np.sign(t) * np.abs(t) ** (2 * a)
        - np.sign(t - s) * np.abs(t - s) ** (2 * a)
    )
    return _scalar(-np.tan(np.pi * a) / 8.0 * bracket)


def deriv_cov_Y(s, t, h) -> float:
    """``E[Y'_s Y'_t] = alpha (1 - 2 alpha) / (4 cos(pi alpha)) (s + t)**(2 alpha - 2)``, ``s, t > 0``."""
    a = as_hurst(h).alpha
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s <= 0) or np.any(t <= 0):
        raise DomainError("deriv_cov_Y requires s > 0 and t > 0")
    return _scalar(0.5 * c_alpha(a) * (s + t) ** (2 * a - 2))


def cov_Y(s, t, h) -> float:
    """``E[Y_s Y_t] = [s^2a + t^2a - (s + t)^2a] / (8 cos(pi a))`` for ``s, t >= 0``."""
    a = as_hurst(h).alpha
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise DomainError("Y is indexed by nonnegative times")
    out = 0.5 * _power_sum_over_cos([s, t, s + t], [1, 1, -1], a)
    return _scalar(np.real(out))


def var_Y_increment(s, t, h) -> float:
    """``Var(Y_t - Y_s)`` for ``0 <= s <= t``.

    Closed form ``c'/(2a(2a - 1)) [(2t)^2a + (2s)^2a - 2(t + s)^2a]`` with
    ``c' = a(1 - 2a)/(4 cos(pi a))``; evaluated without cancellation at ``a = 1/2``.
    """
    a = as_hurst(h).alpha
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < s):
        raise DomainError("var_Y_increment requires 0 <= s <= t")
    out = -0.5 * _power_sum_over_cos([2 * t, 2 * s, s + t], [1, 1, -2], a)
    return _scalar(np.maximum(np.real(out), 0.0))


@dataclass(frozen=True)
class ContourPath:
    """Piecewise-linear path with an affine parametrisation of [0, 1].

    ``vertices[j] -> vertices[j + 1]`` is traversed while the parameter runs
    over ``[breaks[j], breaks[j + 1]]``.  A degenerate contour has one vertex.
    """

    vertices: np.ndarray
    breaks: np.ndarray = field(default=None)

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.vertices, dtype=complex))
        object.__setattr__(self, "vertices", v)
        if self.breaks is None:
            nseg = max(len(v) - 1, 1)
            object.__setattr__(self, "breaks", np.linspace(0.0, 1.0, nseg + 1))
        else:
            object.__setattr__(self, "breaks", np.asarray(self.breaks, dtype=float))

    @property
    def start(self) -> complex:
        return complex(self.vertices[0])

    @property
    def end(self) -> complex:
        return complex(self.vertices[-1])

    @property
    def is_degenerate(self) -> bool:
        return len(self.vertices) < 2

    @property
    def segments(self) -> list[tuple[complex, complex]]:
        v = self.vertices
        return [(complex(v[j]), complex(v[j + 1])) for j in range(len(v) - 1)]

    def _locate(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        j = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, len(self.vertices) - 2)
        return x, j

    def __call__(self, x):
        if self.is_degenerate:
            return _scalar(np.full(np.shape(x), self.vertices[0]))
        x, j = self._locate(x)
        lo, hi = self.breaks[j], self.breaks[j + 1]
        frac = (x - lo) / (hi - lo)
        return _scalar(self.vertices[j] + frac * (self.vertices[j + 1] - self.vertices[j]))

    def derivative(self, x):
        """``d gamma / dx`` (piecewise constant, right-continuous)."""
        if self.is_degenerate:
            return _scalar(np.zeros(np.shape(x), dtype=complex))
        x, j = self._locate(x)
        return _scalar((self.vertices[j + 1] - self.vertices[j]) / (self.breaks[j + 1] - self.breaks[j]))

    def stopped(self, x: float) -> "ContourPath":
        """The same path stopped at parameter ``x``, keeping the parametrisation."""
        x = float(np.clip(x, 0.0, 1.0))
        keep = self.breaks < x
        verts = list(self.vertices[: int(keep.sum())]) + [self(x)]
        brks = list(self.breaks[: int(keep.sum())]) + [x]
        if len(verts) < 2:
            return ContourPath(np.array([self.start]), np.array([0.0]))
        return ContourPath(np.array(verts), np.array(brks))


def build_contour(s, t, threshold: float = STRAIGHT_LINE_THRESHOLD) -> ContourPath:
    """Integration contour from ``s`` to ``t`` inside the closed upper half-plane.

    Returns the three-leg path ``s -> s + iL -> t + iL -> t`` with
    ``L = |Re(t - s)|`` (legs on thirds of [0, 1]), or the straight segment
    ``[s, t]`` when ``|Im(t - s)| >= threshold * |Re(t - s)|``.
    """
    s = complex(check_upper_half_plane(s, "s"))
    t = complex(check_upper_half_plane(t, "t"))
    if s == t:
        return ContourPath(np.array([s]), np.array([0.0]))
    dre = abs((t - s).real)
    if abs((t - s).imag) >= threshold * dre:
        return ContourPath(np.array([s, t]), np.array([0.0, 1.0]))
    lift = 1j * dre
    return ContourPath(np.array([s, s + lift, t + lift, t]), np.array([0.0, 1 / 3, 2 / 3, 1.0]))
