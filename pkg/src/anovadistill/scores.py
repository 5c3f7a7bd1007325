"""Monte-Carlo estimation of derivative-based interaction scores.

Two quantities are estimated from the same stencil evaluations:

* ``interaction_score`` -- the expected conditional variance of the mixed
  difference over the complement block.  It is zero exactly when no
  interaction *strictly above* the index set exists, so it certifies that
  whole branches of higher-order candidates can be dropped.

* ``pair_strength`` -- the plain mean square of the mixed difference.  It is
  zero exactly when no interaction *containing* the index set (the set
  itself included) exists, which is the right detector for ranking and for
  keeping pure interactions in the fitted model.  A pure product term like
  x_a * x_b has a constant cross-difference: zero conditional variance but
  mean square one.

Anchors (the index-set block) and complements are resampled independently
from the empirical rows, matching the product-of-marginals form of the
population score.  Per-candidate RNG streams are derived from the base seed
and the index set, so batch results are reproducible regardless of
evaluation order or worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from anovadistill.data import Dataset, IndexSet
from anovadistill.predictor import Predictor
from anovadistill.stencil import apply_stencil_batch, bandwidths
from anovadistill.stencil import _normalize_h


def resolve_bandwidths(h, order: int, h_mode: str = "constant") -> tuple[float, ...]:
    """Per-coordinate bandwidths: an explicit list wins, otherwise the mode."""
    if np.isscalar(h):
        return bandwidths(float(h), order, h_mode)
    return _normalize_h(h, order)


@dataclass(frozen=True)
class McConfig:
    """Sampling sizes and seed for the score estimators."""

    m_anchor: int = 30
    m_comp: int = 30
    seed: int = 0
    variance_mode: str = "unbiased"
    exhaustive: bool = False

    def __post_init__(self) -> None:
        if not self.exhaustive and (self.m_anchor < 2 or self.m_comp < 2):
            raise ValueError("m_anchor and m_comp must be >= 2")
        if self.variance_mode != "unbiased":
            raise ValueError("only the unbiased variance estimator is supported")

    def to_dict(self) -> dict:
        return {
            "m_anchor": self.m_anchor,
            "m_comp": self.m_comp,
            "seed": self.seed,
            "variance_mode": self.variance_mode,
            "exhaustive": self.exhaustive,
        }


def _candidate_rng(mc: McConfig, j: IndexSet, stream: int) -> np.random.Generator:
    seq = np.random.SeedSequence([int(mc.seed) & 0xFFFFFFFF, stream, j.order, *j.indices])
    return np.random.Generator(np.random.PCG64(seq))


def _unbiased_var_rows(mat: np.ndarray) -> np.ndarray:
    """Unbiased variance along axis 1, shifted by the first column.

    The shift makes rows of identical values give exactly 0.0, which the
    degenerate cases (predictor ignores the varied block) rely on; tiny
    negative rounding is clamped so scores stay nonnegative.
    """
    d = mat - mat[:, :1]
    m = mat.shape[1]
    s1 = d.sum(axis=1)
    s2 = (d * d).sum(axis=1)
    return np.maximum((s2 - s1 * s1 / m) / (m - 1), 0.0)


def _draw_rows(rng, n: int, m: int, exhaustive: bool) -> np.ndarray:
    if exhaustive:
        return np.arange(n)
    return rng.integers(0, n, size=m)


def total_effect_score(pred: Predictor, data: Dataset, j: int, mc: McConfig) -> float:
    """Expected variance of f as feature j varies, complement held fixed.

    Zero exactly when f ignores feature j.  Complement rows are drawn from
    the empirical complement marginal, anchor values for coordinate j from
    its own empirical marginal.
    """
    j = int(j)
    if not 0 <= j < data.p:
        raise ValueError(f"feature index {j} out of range [0, {data.p})")
    rng = _candidate_rng(mc, IndexSet.of(j), stream=0)
    comp_rows = _draw_rows(rng, data.n, mc.m_comp, mc.exhaustive)
    anchor_vals = data.values[_draw_rows(rng, data.n, mc.m_anchor, mc.exhaustive), j]
    mc_, ma_ = len(comp_rows), len(anchor_vals)

    pts = np.repeat(data.values[comp_rows], ma_, axis=0)
    pts[:, j] = np.tile(anchor_vals, mc_)
    vals = pred.evaluate_batch(pts).reshape(mc_, ma_)
    return float(np.mean(_unbiased_var_rows(vals)))


def _difference_matrix(
    pred: Predictor, data: Dataset, j: IndexSet, mc: McConfig, hs
) -> np.ndarray:
    """Mixed differences on an (m_anchor, m_comp) grid of resampled blocks."""
    rng = _candidate_rng(mc, j, stream=1)
    cols = list(j.indices)
    anchor_rows = _draw_rows(rng, data.n, mc.m_anchor, mc.exhaustive)
    comp_rows = _draw_rows(rng, data.n, mc.m_comp, mc.exhaustive)
    ma_, mc_ = len(anchor_rows), len(comp_rows)

    X = np.repeat(data.values[comp_rows], ma_, axis=0).reshape(mc_, ma_, data.p)
    X = np.swapaxes(X, 0, 1).reshape(ma_ * mc_, data.p)  # anchor-major layout
    anchor_block = data.values[np.repeat(anchor_rows, mc_)][:, cols]
    X[:, cols] = anchor_block

    binary = data.binary_features & set(cols)
    diffs = apply_stencil_batch(pred, X, cols, hs, binary=binary)
    return diffs.reshape(ma_, mc_)


def interaction_score(
    pred: Predictor, data: Dataset, j: IndexSet, mc: McConfig, h=0.1,
    h_mode: str = "constant",
) -> float:
    """Estimate of the expected conditional variance of the mixed difference.

    For each anchor draw of the j-block, the unbiased variance of the mixed
    difference over independently drawn complement blocks; averaged over
    anchors.  All-binary index sets automatically use the partial difference.
    """
    if j.order < 1:
        raise ValueError("interaction_score requires |j| >= 1")
    hs = resolve_bandwidths(h, j.order, h_mode)
    diffs = _difference_matrix(pred, data, j, mc, hs)
    return float(np.mean(_unbiased_var_rows(diffs)))


def pair_strength(
    pred: Predictor, data: Dataset, j: IndexSet, mc: McConfig, h=0.1,
    h_mode: str = "constant",
) -> float:
    """Mean squared mixed difference; zero iff no interaction contains j."""
    if j.order < 1:
        raise ValueError("pair_strength requires |j| >= 1")
    hs = resolve_bandwidths(h, j.order, h_mode)
    diffs = _difference_matrix(pred, data, j, mc, hs)
    return float(np.mean(diffs * diffs))


@dataclass
class ImportanceTable:
    """Scores per candidate index set, with sampling provenance."""

    entries: dict[IndexSet, dict] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def add(self, j: IndexSet, score: float, strength: float, evals: int) -> None:
        self.entries[j] = {
            "score": score,
            "strength": strength,
            "order": j.order,
            "evals": evals,
        }

    def score(self, j: IndexSet) -> float:
        return self.entries[j]["score"]

    def strength(self, j: IndexSet) -> float:
        return self.entries[j]["strength"]

    @property
    def normalization(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for j, e in self.entries.items():
            out[j.order] = max(out.get(j.order, 0.0), e["score"])
        return out

    def to_dict(self) -> dict:
        scores = [
            {"j": list(j.indices), **self.entries[j]}
            for j in sorted(self.entries, key=lambda s: (s.order, s.indices))
        ]
        return {"scores": scores, "config": self.config}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _score_one(pred, data, j, mc, h, h_mode):
    try:
        hs = resolve_bandwidths(h, j.order, h_mode)
        diffs = _difference_matrix(pred, data, j, mc, hs)
    except Exception as exc:
        raise type(exc)(f"scoring candidate {j} failed: {exc}") from exc
    # stencil points submitted; equals cache misses for a cold, uncached run
    evals = diffs.size * 2**j.order
    score = float(np.mean(_unbiased_var_rows(diffs)))
    strength = float(np.mean(diffs * diffs))
    return score, strength, evals


def score_batch(
    pred: Predictor,
    data: Dataset,
    candidates: list[IndexSet],
    mc: McConfig,
    h=0.1,
    workers: int = 1,
    h_mode: str = "constant",
) -> ImportanceTable:
    """Score every candidate; deterministic for a fixed seed at any worker count."""
    if len(set(candidates)) != len(candidates):
        raise ValueError("duplicate candidate")
    table = ImportanceTable(config={"mc": mc.to_dict(), "h": h, "h_mode": h_mode})
    if not candidates:
        return table
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda j: _score_one(pred, data, j, mc, h, h_mode), candidates)
            )
    else:
        results = [_score_one(pred, data, j, mc, h, h_mode) for j in candidates]
    for j, (score, strength, evals) in zip(candidates, results):
        table.add(j, score, strength, evals)
    return table
