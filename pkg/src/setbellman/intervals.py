"""Componentwise interval sets, interval arithmetic and Hausdorff distances.

Scalar interval "pairs" are plain ``(lower, upper)`` tuples; the arithmetic
helpers broadcast, so the endpoints may also be numpy arrays.  Box-shaped sets
of value functions and cost matrices are :class:`IntervalVector` and
:class:`IntervalCost`, which reject reversed bounds instead of swapping them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class _Box:
    ndim = None
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float)
        upper = np.array(self.upper, dtype=float)
        if lower.shape != upper.shape:
            raise ValueError(f"lower/upper shapes differ: {lower.shape} vs {upper.shape}")
        if lower.ndim != self.ndim:
            raise ValueError(f"{type(self).__name__} needs {self.ndim}-d bounds, got {lower.ndim}-d")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("interval bounds must be finite")
        if np.any(lower > upper):
            bad = np.argwhere(lower > upper)[0]
            raise ValueError(f"reversed bounds at index {tuple(int(i) for i in bad)}: lower > upper")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def point(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(x, x.copy())

    @property
    def shape(self):
        return self.lower.shape

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def is_degenerate(self) -> bool:
        return bool(np.array_equal(self.lower, self.upper))

    def contains_box(self, other) -> bool:
        """True iff ``other`` is a subset of this box."""
        return bool(np.all(self.lower <= other.lower) and np.all(other.upper <= self.upper))

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)


@dataclass(frozen=True, eq=False)
class IntervalVector(_Box):
    """Box ``[lower, upper]`` of value functions in R^S."""

    lower: np.ndarray
    upper: np.ndarray
    ndim = 1

    def __len__(self):
        return self.lower.shape[0]


@dataclass(frozen=True, eq=False)
class IntervalCost(_Box):
    """Box ``[lower, upper]`` of S x A cost matrices."""

    lower: np.ndarray
    upper: np.ndarray
    ndim = 2


def _check_pair(x):
    lo, hi = x
    if np.any(np.asarray(lo) > np.asarray(hi)):
        raise ValueError(f"reversed interval {x!r}")
    return lo, hi


def interval_add(x, y):
    (a, b), (c, d) = _check_pair(x), _check_pair(y)
    return a + c, b + d


def interval_sub(x, y):
    """``[a, b] - [c, d] = [a - c, b - d]``.

    This is endpoint-wise subtraction, not classical interval subtraction
    (``[a - d, b - c]``).  The result is reversed whenever ``y`` is wider than
    ``x``; nothing in the solver path relies on it.
    """
    (a, b), (c, d) = _check_pair(x), _check_pair(y)
    return a - c, b - d


def interval_scale(alpha, x):
    if np.any(np.asarray(alpha) < 0):
        raise ValueError("interval scaling is only defined for non-negative factors")
    a, b = _check_pair(x)
    return alpha * a, alpha * b


def interval_min(x, y):
    """Smallest interval containing ``{min(u, v) : u in x, v in y}``."""
    (a, b), (c, d) = _check_pair(x), _check_pair(y)
    return np.minimum(a, c), np.minimum(b, d)


def _same_length(x: IntervalVector, y) -> None:
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")


def hausdorff_interval(x: IntervalVector, y: IntervalVector) -> float:
    """Sup-norm Hausdorff distance between two boxes, from their endpoints alone."""
    _same_length(x, y)
    return float(max(np.max(np.abs(x.lower - y.lower)), np.max(np.abs(x.upper - y.upper))))


def hausdorff_point_sets(a, b) -> float:
    """Exact sup-norm Hausdorff distance between two finite point sets.

    ``a`` and ``b`` are arrays of shape ``(n, S)`` and ``(m, S)`` (1-d input is
    read as ``n`` points in R^1).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("Hausdorff distance needs non-empty sets")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    dist = np.max(np.abs(a[:, None, :] - b[None, :, :]), axis=2)
    return float(max(dist.min(axis=1).max(), dist.min(axis=0).max()))


def interval_contains(x: IntervalVector, v, tol: float = 0.0) -> bool:
    v = np.asarray(v, dtype=float)
    _same_length(x, v)
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return bool(np.all(x.lower - tol <= v) and np.all(v <= x.upper + tol))


def excess_distance(x: IntervalVector, v) -> float:
    """Sup-norm distance from point ``v`` to box ``x`` (zero inside)."""
    v = np.asarray(v, dtype=float)
    _same_length(x, v)
    return float(np.max(np.maximum(np.maximum(x.lower - v, v - x.upper), 0.0)))


def inflate(x: IntervalVector, eps: float) -> IntervalVector:
    if eps < 0:
        raise ValueError("inflation radius must be non-negative")
    return IntervalVector(x.lower - eps, x.upper + eps)
