"""Input validation helpers used across the estimators and free functions."""

from __future__ import annotations

import numbers

import numpy as np

from .exceptions import CapExceededError, DomainError

MAX_DEPTH = 8
MAX_DIMS = 4

# tolerance on Im z when deciding whether a point sits in the closed upper half-plane
HALFPLANE_TOL = 1e-12


def check_alpha(alpha) -> float:
    if isinstance(alpha, bool) or not isinstance(alpha, numbers.Real):
        raise DomainError(f"alpha must be a real number, got {alpha!r}")
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_depth(depth) -> int:
    depth = check_positive_int(depth, "depth")
    if depth > MAX_DEPTH:
        raise CapExceededError(f"depth {depth} exceeds the cap {MAX_DEPTH}")
    return depth


def check_dims(dims) -> int:
    dims = check_positive_int(dims, "dims")
    if dims > MAX_DIMS:
        raise CapExceededError(f"dims {dims} exceeds the cap {MAX_DIMS}")
    return dims


def check_upper_half_plane(points, name: str = "points") -> np.ndarray:
    """Return ``points`` as a complex array, refusing anything below the real axis."""
    z = np.asarray(points, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise DomainError(f"{name} must be finite")
    if np.any(z.imag < -HALFPLANE_TOL):
        raise DomainError(f"{name} must lie in the closed upper half-plane")
    return z


def check_word(word, dims: int | None = None) -> tuple[int, ...]:
    """Normalise a word to a tuple of 1-based letters."""
    if isinstance(word, numbers.Integral):
        word = (word,)
    try:
        letters = tuple(int(i) for i in word)
    except TypeError as exc:
        raise DomainError(f"word must be a sequence of letters, got {word!r}") from exc
    if len(letters) == 0:
        raise DomainError("word must be nonempty")
    if min(letters) < 1:
        raise DomainError(f"letters are 1-based, got {letters}")
    if dims is not None and max(letters) > dims:
        raise DomainError(f"letter {max(letters)} outside alphabet 1..{dims}")
    return letters


def word_index(word: tuple[int, ...], dims: int) -> int:
    """Lexicographic position of a 1-based word among all words of its length."""
    idx = 0
    for letter in word:
        idx = idx * dims + (letter - 1)
    return idx
