"""Ten synthetic regression models used as reference black boxes.

Each function takes ten inputs.  Predictors accept points on the canonical
unit cube and map them internally onto each function's sampling box (an
affine map per coordinate), so the whole pipeline runs on one domain.
F1 samples four of its coordinates on [0.6, 1] and the rest on (0, 1);
F2..F10 sample every coordinate on (-1, 1).

Each predictor also knows its ground-truth pairwise interaction set,
computed numerically: a pair {a, b} interacts iff the cross-difference of
the function is not identically zero, tested as mean-square > 1e-6 over a
low-discrepancy sample of interior points.  The mean-square (not the
centered variance) is the right detector: a pure bilinear term such as
x2*x7 has a constant, nonzero cross-derivative.
"""

from __future__ import annotations

import numpy as np

from anovadistill.data import IndexSet
from anovadistill.predictor import Predictor

_PI = np.pi


def _f1(x):
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10 = (x[:, k] for k in range(10))
    return (
        _PI ** (x1 * x2) * np.sqrt(2.0 * x3)
        - np.arcsin(x4)
        + np.log(x3 + x5)
        - (x9 / x10) * np.sqrt(x7 / x8)
        - x2 * x7
    )


def _f2(x):
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10 = (x[:, k] for k in range(10))
    return (
        _PI ** (x1 * x2) * np.sqrt(2.0 * np.abs(x3))
        - np.arcsin(0.5 * x4)
        + np.log(np.abs(x3 + x5) + 1.0)
        + (x9 / (1.0 + np.abs(x10))) * np.sqrt(np.abs(x7) / (1.0 + np.abs(x8)))
        - x2 * x7
    )


def _f3(x):
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10 = (x[:, k] for k in range(10))
    # x3^(2|x4|) read as (x3^2)^|x4| so negative bases stay real
    return (
        np.exp(np.abs(x1 - x2))
        + np.abs(x2 * x3)
        - np.power(x3 * x3, np.abs(x4))
        + np.log(x4 * x4 + x5 * x5 + x7 * x7 + x8 * x8)
        + x9
        + 1.0 / (1.0 + x10 * x10)
    )


def _f4(x):
    x1, x4 = x[:, 0], x[:, 3]
    return _f3(x) + (x1 * x4) ** 2


def _f5(x):
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10 = (x[:, k] for k in range(10))
    return (
        1.0 / (1.0 + x1 * x1 + x2 * x2 + x3 * x3)
        + np.sqrt(np.exp(x4 + x5))
        + np.abs(x6 + x7)
        + x8 * x9 * x10
    )


def _f6(x):
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10 = (x[:, k] for k in range(10))
    return (
        np.exp(np.abs(x1 * x2) + 1.0)
        - np.exp(np.abs(x3 + x4) + 1.0)
        + np.cos(x5 + x6 - x8)
        + np.sqrt(x8 * x8 + x9 * x9 + x10 * x10)
    )


def _f7(x):
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10 = (x[:, k] for k in range(10))
    return (
        (np.arctan(x1) + np.arctan(x2)) ** 2
        + np.maximum(x3 * x4 + x6, 0.0)
        - 1.0 / (1.0 + (x4 * x5 * x6 * x7 * x8) ** 2)
        + (np.abs(x7) / (1.0 + np.abs(x9))) ** 5
        + x.sum(axis=1)
    )


def _f8(x):
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10 = (x[:, k] for k in range(10))
    return (
        x1 * x2
        + 2.0 ** (x3 + x5 + x6)
        + 2.0 ** (x3 + x4 + x5 + x7)
        + np.sin(x7 * np.sin(x8 + x9))
        + np.arccos(0.9 * x10)
    )


def _f9(x):
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10 = (x[:, k] for k in range(10))
    return (
        np.tanh(x1 * x2 + x3 * x4) * np.sqrt(np.abs(x5))
        + np.exp(x5 + x6)
        + np.log((x6 * x7 * x8) ** 2 + 1.0)
        + x9 * x10
        + 1.0 / (1.0 + np.abs(x10))
    )


def _f10(x):
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10 = (x[:, k] for k in range(10))
    return (
        np.sinh(x1 + x2)
        + np.arccos(np.tanh(x3 + x5 + x7))
        + np.cos(x4 + x5)
        + 1.0 / np.cos(x7 * x9)
    )


_FORMULAS = {
    "F1": _f1, "F2": _f2, "F3": _f3, "F4": _f4, "F5": _f5,
    "F6": _f6, "F7": _f7, "F8": _f8, "F9": _f9, "F10": _f10,
}

SUITE_NAMES = tuple(_FORMULAS)

# sampling boxes, per coordinate: (lo, hi) applied to canonical [0, 1]
_F1_UPPER = (3, 4, 7, 9)  # 0-based coordinates sampled on [0.6, 1]


def _box(name: str) -> np.ndarray:
    box = np.empty((10, 2))
    if name == "F1":
        box[:, 0], box[:, 1] = 0.0, 1.0
        for k in _F1_UPPER:
            box[k] = (0.6, 1.0)
    else:
        box[:, 0], box[:, 1] = -1.0, 1.0
    return box


class AnalyticPredictor(Predictor):
    """One of the ten reference functions behind the Predictor interface."""

    def __init__(self, name: str, cache: bool = False):
        if name not in _FORMULAS:
            raise ValueError(f"unknown analytic predictor {name!r}; choose one of {SUITE_NAMES}")
        super().__init__(10, cache=cache)
        self.name = name
        self._formula = _FORMULAS[name]
        self._box = _box(name)

    def to_box(self, points: np.ndarray) -> np.ndarray:
        lo, hi = self._box[:, 0], self._box[:, 1]
        return lo + points * (hi - lo)

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self._formula(self.to_box(points))

    def true_pairs(self) -> frozenset[IndexSet]:
        return true_interaction_pairs(self.name)


def make_analytic(name: str, cache: bool = False) -> AnalyticPredictor:
    return AnalyticPredictor(name, cache=cache)


def _halton(n: int, dim: int) -> np.ndarray:
    """Deterministic low-discrepancy points in (0, 1)^dim (van der Corput bases)."""
    primes = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)
    out = np.empty((n, dim))
    for d in range(dim):
        b = primes[d]
        seq = np.empty(n)
        for i in range(n):
            f, r, idx = 1.0, 0.0, i + 1
            while idx > 0:
                f /= b
                r += f * (idx % b)
                idx //= b
            seq[i] = r
        out[:, d] = seq
    return out


_ORACLE_POINTS = 512
_ORACLE_H = 0.1
_ORACLE_TOL = 1e-6
_pair_cache: dict[str, frozenset[IndexSet]] = {}


def true_interaction_pairs(name: str) -> frozenset[IndexSet]:
    """Ground-truth second-order interaction set of one suite function.

    A pair {a, b} is a true interaction iff some ANOVA component containing
    both features is nonzero, which holds iff the cross-difference of f in
    a and b is not identically zero.  Tested numerically as mean-square of
    the 4-point cross stencil > 1e-6 over 512 low-discrepancy interior
    points of the canonical cube.
    """
    if name in _pair_cache:
        return _pair_cache[name]
    pred = AnalyticPredictor(name)
    half = _ORACLE_H / 2.0
    base = half + (1.0 - _ORACLE_H) * _halton(_ORACLE_POINTS, 10)
    pairs = []
    for a in range(10):
        for b in range(a + 1, 10):
            pts = np.repeat(base, 4, axis=0)
            signs = np.tile([1.0, -1.0, -1.0, 1.0], _ORACLE_POINTS)
            off = np.array([[half, half], [half, -half], [-half, half], [-half, -half]])
            pts[:, a] += np.tile(off[:, 0], _ORACLE_POINTS)
            pts[:, b] += np.tile(off[:, 1], _ORACLE_POINTS)
            vals = pred.evaluate_batch(pts)
            diffs = (vals * signs).reshape(_ORACLE_POINTS, 4).sum(axis=1) / _ORACLE_H**2
            if float(np.mean(diffs * diffs)) > _ORACLE_TOL:
                pairs.append(IndexSet.of(a, b))
    result = frozenset(pairs)
    _pair_cache[name] = result
    return result
