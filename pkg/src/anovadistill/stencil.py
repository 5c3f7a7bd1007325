"""Finite-difference stencils for first and mixed partial derivatives.

A k-th order mixed difference is the signed sum of the black box over the
2^k corners of a centered box, divided by the product of the bandwidths.
Binary coordinates use the inclusion-exclusion partial difference instead
(corner values 1/0, no bandwidth divisor); mixed continuous/binary sets
compose the two multiplicatively.

Boundary rule: if a half-step would leave [0, 1] along some coordinate, the
stencil center is shifted along that coordinate until the full stencil fits.
The spacing (and hence the divisor and the quadratic-exactness property) is
preserved; only the expansion point moves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from anovadistill.data import IndexSet
from anovadistill.predictor import Predictor


def bandwidths(h: float, k: int, mode: str = "constant") -> tuple[float, ...]:
    """Per-coordinate bandwidths for a k-th order stencil.

    "constant" uses h for every coordinate.  "schedule" uses
    h_l = h ** (1 / 2**(l-1)), the successively widening steps suggested by
    the estimator's convergence analysis, normalized so h_1 == h.
    """
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    if mode == "constant":
        return (float(h),) * k
    if mode == "schedule":
        return tuple(float(h) ** (1.0 / 2 ** (l - 1)) for l in range(1, k + 1))
    raise ValueError(f"unknown bandwidth mode {mode!r}")


def _normalize_h(h, k: int) -> tuple[float, ...]:
    if np.isscalar(h):
        return (float(h),) * k
    hs = tuple(float(v) for v in h)
    if len(hs) != k:
        raise ValueError(f"need {k} bandwidths, got {len(hs)}")
    return hs


@dataclass
class Stencil:
    """Evaluation points, corner signs and divisor of one mixed difference."""

    center: np.ndarray
    points: np.ndarray  # (2^k, p)
    signs: np.ndarray  # (2^k,)
    divisor: float

    def apply(self, pred: Predictor) -> float:
        vals = pred.evaluate_batch(self.points)
        return float(np.dot(vals, self.signs) / self.divisor)


def _corner_signs(k: int) -> tuple[np.ndarray, np.ndarray]:
    masks = np.arange(2**k)[:, None] >> np.arange(k)[None, :] & 1  # bit l set => minus side
    return masks, np.where(masks.sum(axis=1) % 2 == 0, 1.0, -1.0)


def stencil_points_batch(
    X: np.ndarray,
    coords: Sequence[int],
    hs: Sequence[float],
    binary: Iterable[int] = (),
) -> tuple[np.ndarray, np.ndarray, float]:
    """Stencil corners for every row of X at once.

    Returns (points, signs, divisor) where points has shape (m * 2^k, p)
    with the 2^k corners of row i stored contiguously.
    """
    X = np.asarray(X, dtype=float)
    m, _ = X.shape
    k = len(coords)
    binary = frozenset(binary)
    masks, signs = _corner_signs(k)

    centers = X.copy()
    divisor = 1.0
    for l, j in enumerate(coords):
        if j in binary:
            continue
        half = hs[l] / 2.0
        if half > 0.5:
            raise ValueError(f"bandwidth {hs[l]} does not fit inside [0, 1]")
        centers[:, j] = np.clip(X[:, j], half, 1.0 - half)
        divisor *= hs[l]

    points = np.repeat(centers, 2**k, axis=0)
    for l, j in enumerate(coords):
        minus = np.tile(masks[:, l].astype(bool), m)
        if j in binary:
            points[:, j] = np.where(minus, 0.0, 1.0)
        else:
            half = hs[l] / 2.0
            points[minus, j] -= half
            points[~minus, j] += half
    return points, signs, divisor


def apply_stencil_batch(
    pred: Predictor,
    X: np.ndarray,
    coords: Sequence[int],
    hs: Sequence[float],
    binary: Iterable[int] = (),
) -> np.ndarray:
    """Mixed differences for every row of X, one predictor batch total."""
    m = np.asarray(X).shape[0]
    k = len(coords)
    points, signs, divisor = stencil_points_batch(X, coords, hs, binary)
    vals = pred.evaluate_batch(points)
    return (vals.reshape(m, 2**k) * signs).sum(axis=1) / divisor


def build_stencil(x, j: IndexSet, h, binary: Iterable[int] = ()) -> Stencil:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    hs = _normalize_h(h, j.order)
    points, signs, divisor = stencil_points_batch(x, j.indices, hs, binary)
    return Stencil(center=x[0], points=points, signs=signs, divisor=divisor)


def central_difference(pred: Predictor, x, j: int, h: float) -> float:
    """(f(x + h/2 e_j) - f(x - h/2 e_j)) / h with the boundary-shift rule."""
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return float(apply_stencil_batch(pred, x, (int(j),), (float(h),))[0])


def mixed_difference(pred: Predictor, x, j: IndexSet, h, binary: Iterable[int] = ()) -> float:
    """Signed 2^|j|-corner difference; equals nested central differences."""
    if j.order < 1:
        raise ValueError("mixed_difference requires |j| >= 1")
    hs = _normalize_h(h, j.order)
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return float(apply_stencil_batch(pred, x, j.indices, hs, binary)[0])


def binary_partial_difference(pred: Predictor, x, j: IndexSet) -> float:
    """Inclusion-exclusion difference over binary coordinates.

    sum over j' subset of j of (-1)^{|j \\ j'|} f(x with x_{j'}=1, rest of j=0);
    constant in the complement iff no interaction strictly above j exists.
    """
    if j.order < 1:
        raise ValueError("binary_partial_difference requires |j| >= 1")
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return float(
        apply_stencil_batch(pred, x, j.indices, (1.0,) * j.order, binary=j.indices)[0]
    )
