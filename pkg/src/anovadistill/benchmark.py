"""Pairwise interaction-detection benchmark on the analytic suite.

For each reference function: draw uniform rows, score every feature pair
with the mean-square cross-difference, and rank the pairs against the
function's ground-truth pair set.  AUROC is computed tie-aware from ranks,
so no threshold is involved; a complete ranking of all pairs is what gets
evaluated.
"""

from __future__ import annotations

import time
from itertools import combinations

import numpy as np

from anovadistill.data import IndexSet, uniform_dataset
from anovadistill.scores import McConfig, score_batch
from anovadistill.suite import SUITE_NAMES, AnalyticPredictor, true_interaction_pairs


def auroc_from_scores(scores: np.ndarray, labels: np.ndarray) -> float:
    """Tie-aware area under the ROC curve from a score ranking."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUROC needs both positive and negative pairs")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.size)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        jx = i
        while jx + 1 < scores.size and sorted_scores[jx + 1] == sorted_scores[i]:
            jx += 1
        ranks[order[i : jx + 1]] = 0.5 * (i + jx) + 1.0  # average rank, 1-based
        i = jx + 1
    pos_ranks = ranks[labels].sum()
    return float((pos_ranks - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def benchmark_function(
    name: str, n: int = 3000, mc: McConfig | None = None, h: float = 0.1, seed: int = 0
) -> dict:
    """Score all pairs of one suite function and rank them against truth."""
    mc = mc or McConfig()
    pred = AnalyticPredictor(name)
    data = uniform_dataset(10, n, seed=seed)
    pairs = [IndexSet(c) for c in combinations(range(10), 2)]
    per_fn_mc = McConfig(
        mc.m_anchor, mc.m_comp,
        seed=int(np.random.SeedSequence([mc.seed, SUITE_NAMES.index(name)]).generate_state(1)[0]),
        exhaustive=mc.exhaustive,
    )
    table = score_batch(pred, data, pairs, per_fn_mc, h)
    truth = true_interaction_pairs(name)
    strengths = np.array([table.strength(j) for j in pairs])
    labels = np.array([j in truth for j in pairs])
    return {
        "auroc": auroc_from_scores(strengths, labels),
        "n_true_pairs": int(labels.sum()),
        "evals": int(sum(e["evals"] for e in table.entries.values())),
        "pair_scores": [
            {
                "j": list(j.indices),
                "strength": table.strength(j),
                "score": table.score(j),
                "true": bool(lab),
            }
            for j, lab in zip(pairs, labels)
        ],
    }


def run_benchmark(
    functions=SUITE_NAMES, n: int = 3000, mc: McConfig | None = None,
    h: float = 0.1, seed: int = 0,
) -> dict:
    mc = mc or McConfig(seed=seed)
    t0 = time.monotonic()
    per_function = {}
    for name in functions:
        per_function[name] = benchmark_function(name, n=n, mc=mc, h=h, seed=seed)
    aurocs = [per_function[name]["auroc"] for name in functions]
    return {
        "functions": per_function,
        "average_auroc": float(np.mean(aurocs)),
        "n_rows": n,
        "total_evals": int(sum(f["evals"] for f in per_function.values())),
        "wall_time_s": time.monotonic() - t0,
    }
