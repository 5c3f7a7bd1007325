"""Batch-evaluation abstraction over the black-box model being distilled.

Every predictor maps an (m, p) matrix of scaled inputs to m finite reals.
Batching is the only evaluation API: derivative stencils and Monte-Carlo
scoring naturally emit large batches, and external bridges amortize their
round-trips over them.  `eval_count` tracks actual model evaluations
(cache misses only) so screening cost can be audited exactly.
"""

from __future__ import annotations

import threading

import numpy as np


class PredictorError(RuntimeError):
    """Raised when a predictor cannot produce a finite output for a batch."""


class EvalCache:
    """Fingerprint-keyed memo of previous evaluations.

    Keys are the raw float64 bytes of each row, so bit-identical inputs are
    guaranteed bit-identical outputs.
    """

    def __init__(self) -> None:
        self._store: dict[bytes, float] = {}
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._store)

    def get(self, key: bytes):
        return self._store.get(key)

    def put(self, key: bytes, value: float) -> None:
        self._store[key] = value


class Predictor:
    """Base class: subclasses implement `_evaluate(points) -> values`.

    Thread-safe: counter and cache updates are guarded, and `_evaluate`
    of the built-in predictors is stateless.
    """

    def __init__(self, p: int, cache: bool = False):
        self.p = int(p)
        self.eval_count = 0
        self._cache = EvalCache() if cache else None
        self._lock = threading.Lock()

    # -- subclass hook -------------------------------------------------
    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- public API ----------------------------------------------------
    def evaluate_batch(self, points) -> np.ndarray:
        points = np.ascontiguousarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.p:
            raise PredictorError(
                f"dimension mismatch: predictor expects p={self.p}, got shape {points.shape}"
            )
        m = points.shape[0]
        if m == 0:
            return np.empty(0)
        if not np.isfinite(points).all():
            bad = int(np.argwhere(~np.isfinite(points).all(axis=1))[0][0])
            raise PredictorError(f"non-finite input in batch row {bad}")

        if self._cache is None:
            out = np.asarray(self._evaluate(points), dtype=float).reshape(m)
            self._check_finite(out, points)
            with self._lock:
                self.eval_count += m
            return out

        keys = [points[i].tobytes() for i in range(m)]
        out = np.empty(m)
        miss_rows = []
        with self._lock:
            for i, key in enumerate(keys):
                val = self._cache.get(key)
                if val is None:
                    miss_rows.append(i)
                else:
                    out[i] = val
                    self._cache.hits += 1
        if miss_rows:
            sub = points[miss_rows]
            vals = np.asarray(self._evaluate(sub), dtype=float).reshape(len(miss_rows))
            self._check_finite(vals, sub)
            with self._lock:
                for i, v in zip(miss_rows, vals):
                    # first write wins so duplicate rows in one batch agree
                    prev = self._cache.get(keys[i])
                    if prev is None:
                        self._cache.put(keys[i], float(v))
                        self._cache.misses += 1
                        self.eval_count += 1
                        out[i] = v
                    else:
                        out[i] = prev
        return out

    @property
    def cache_stats(self) -> tuple[int, int]:
        if self._cache is None:
            return (0, 0)
        return (self._cache.hits, self._cache.misses)

    @staticmethod
    def _check_finite(values: np.ndarray, points: np.ndarray) -> None:
        finite = np.isfinite(values)
        if not finite.all():
            row = int(np.argwhere(~finite)[0][0])
            raise PredictorError(
                f"non-finite output at batch row {row}: input {points[row].tolist()}"
            )


class CallablePredictor(Predictor):
    """Wraps an in-process batch callable (m, p) array -> length-m array."""

    def __init__(self, fn, p: int, cache: bool = False, name: str = "callable"):
        super().__init__(p, cache=cache)
        self._fn = fn
        self.name = name

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        return self._fn(points)


class LookupPredictor(Predictor):
    """In-memory table of known (input row -> output) pairs.

    Useful for replaying recorded evaluations; unknown rows are an error.
    """

    def __init__(self, points, values):
        points = np.asarray(points, dtype=float)
        values = np.asarray(values, dtype=float)
        super().__init__(points.shape[1])
        self._table = {
            np.ascontiguousarray(points[i]).tobytes(): float(values[i])
            for i in range(points.shape[0])
        }

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        out = np.empty(points.shape[0])
        for i in range(points.shape[0]):
            key = np.ascontiguousarray(points[i]).tobytes()
            if key not in self._table:
                raise PredictorError(f"row {i} not present in lookup table")
            out[i] = self._table[key]
        return out
