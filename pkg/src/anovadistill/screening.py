"""Level-wise screening of features and interactions.

Stage one drops features the black box ignores (total-effect score below a
relative floor).  Stage two walks interaction orders 1..K Apriori-style: a
size-k candidate is considered only if all of its size-(k-1) ancestors
survived, each level is thresholded at a fraction tau of the level's best
score, and then truncated to a per-order cap.  Selection uses the
mean-square difference strength, whose zero set is exactly "no interaction
containing this index set", so pure interactions are kept for the fit; the
expected-conditional-variance score is recorded alongside for every
candidate.

The surviving term set R consists of the main effects of every selected
feature plus all surviving interactions up to order K.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from anovadistill.data import Dataset, IndexSet, ancestors
from anovadistill.predictor import Predictor
from anovadistill.scores import McConfig, score_batch, total_effect_score

_DEFAULT_CAPS = (300, 100, 20)  # orders 2, 3, 4


@dataclass(frozen=True)
class ScreeningConfig:
    K: int = 3
    tau: float = 0.1
    tau0_frac: float = 0.01
    caps: tuple[int, ...] = _DEFAULT_CAPS
    mc: McConfig = field(default_factory=McConfig)
    h: float = 0.1
    h_mode: str = "constant"
    gammas: tuple[float, ...] | None = None  # explicit per-level thresholds
    workers: int = 1
    # scores at or below this are stencil arithmetic noise, not signal;
    # squared-output units
    zero_tol: float = 1e-18

    def __post_init__(self) -> None:
        if not 1 <= self.K <= 4:
            raise ValueError("K must be between 1 and 4")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if any(c <= 0 for c in self.caps):
            raise ValueError("caps must be positive")
        if self.gammas is not None and len(self.gammas) < self.K:
            raise ValueError(f"need {self.K} explicit thresholds, got {len(self.gammas)}")

    def cap_for(self, k: int) -> int | None:
        if k < 2:
            return None
        idx = k - 2
        return self.caps[idx] if idx < len(self.caps) else self.caps[-1]

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "tau": self.tau,
            "tau0_frac": self.tau0_frac,
            "caps": list(self.caps),
            "mc": self.mc.to_dict(),
            "h": self.h,
            "h_mode": self.h_mode,
            "gammas": list(self.gammas) if self.gammas is not None else None,
            "zero_tol": self.zero_tol,
        }


@dataclass
class LevelAudit:
    k: int
    s_size: int
    gamma: float | None
    evals: int
    candidates: list[tuple[IndexSet, float, float]]  # (set, selection value, variance score)
    selected: list[IndexSet]


@dataclass
class ScreeningResult:
    V: tuple[int, ...]
    feature_scores: dict[int, float]
    tau0: float
    levels: list[LevelAudit]
    R: list[IndexSet]
    config: dict

    def level_sets(self) -> dict[int, list[IndexSet]]:
        return {lv.k: list(lv.selected) for lv in self.levels}

    @property
    def total_evals(self) -> int:
        return sum(lv.evals for lv in self.levels)

    def to_dict(self) -> dict:
        return {
            "V": list(self.V),
            "feature_scores": {str(k): v for k, v in sorted(self.feature_scores.items())},
            "tau0": self.tau0,
            "levels": [
                {
                    "k": lv.k,
                    "S_size": lv.s_size,
                    "gamma": lv.gamma,
                    "evals": lv.evals,
                    "scores": [
                        {"j": list(j.indices), "strength": s, "score": v}
                        for j, s, v in lv.candidates
                    ],
                    "selected": [list(j.indices) for j in lv.selected],
                }
                for lv in self.levels
            ],
            "R": [list(j.indices) for j in sorted(self.R, key=lambda j: (j.order, j.indices))],
            "audit": {"total_evals": self.total_evals},
            "config": self.config,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def feature_scores(pred: Predictor, data: Dataset, cfg: ScreeningConfig) -> np.ndarray:
    return np.array(
        [total_effect_score(pred, data, j, cfg.mc) for j in range(data.p)]
    )


def screen_features(pred: Predictor, data: Dataset, cfg: ScreeningConfig) -> tuple[int, ...]:
    """Features whose total effect exceeds tau0_frac of the best one."""
    scores = feature_scores(pred, data, cfg)
    if float(scores.max(initial=0.0)) <= cfg.zero_tol:
        return ()
    tau0 = cfg.tau0_frac * float(scores.max())
    return tuple(int(j) for j in range(data.p) if scores[j] > max(tau0, cfg.zero_tol))


def _threshold_and_cap(
    scored: list[tuple[IndexSet, float]], gamma: float | None, cap: int | None,
    zero_tol: float,
) -> list[IndexSet]:
    if gamma is None:
        survivors = []
    else:
        floor = max(gamma, zero_tol)
        survivors = [(j, s) for j, s in scored if s > floor]
    survivors.sort(key=lambda e: (-e[1], e[0].indices))
    if cap is not None:
        survivors = survivors[:cap]
    return [j for j, _ in survivors]


def _apriori_candidates(prev: list[IndexSet], k: int) -> list[IndexSet]:
    """Join sets from C_{k-1} sharing a (k-2)-prefix, then prune by ancestors."""
    prev_set = set(prev)
    items = sorted(j.indices for j in prev)
    out = []
    for a_i, a in enumerate(items):
        for b in items[a_i + 1 :]:
            if a[:-1] != b[:-1]:
                break  # sorted prefixes: no later b can share the prefix
            cand = IndexSet(a + (b[-1],))
            if all(anc in prev_set for anc in ancestors(cand)):
                out.append(cand)
    return sorted(out, key=lambda j: j.indices)


def screen_interactions(
    pred: Predictor | None,
    data: Dataset | None,
    cfg: ScreeningConfig,
    scorer=None,
    V: tuple[int, ...] | None = None,
) -> ScreeningResult:
    """Run the level-wise screen and assemble the candidate term set R.

    ``scorer`` overrides the Monte-Carlo scoring with a callable
    ``scorer(list[IndexSet]) -> dict[IndexSet, (strength, score, evals)]``;
    used by tests to drive the screen from a fixed score table.
    """
    if scorer is None:
        if pred is None or data is None:
            raise ValueError("need a predictor and data unless a scorer is given")

        def scorer(cands: list[IndexSet]) -> dict:
            table = score_batch(
                pred, data, cands, cfg.mc, cfg.h, workers=cfg.workers, h_mode=cfg.h_mode
            )
            return {
                j: (e["strength"], e["score"], e["evals"])
                for j, e in table.entries.items()
            }

    if V is None:
        scores = feature_scores(pred, data, cfg)
        tau0 = cfg.tau0_frac * float(scores.max(initial=0.0))
        if float(scores.max(initial=0.0)) <= cfg.zero_tol:
            V = ()
        else:
            V = tuple(
                int(j) for j in range(len(scores))
                if scores[j] > max(tau0, cfg.zero_tol)
            )
        fscores = {int(j): float(scores[j]) for j in range(len(scores))}
        feature_evals = len(scores) * (
            (data.n if cfg.mc.exhaustive else cfg.mc.m_anchor)
            * (data.n if cfg.mc.exhaustive else cfg.mc.m_comp)
        )
    else:
        V = tuple(sorted(int(j) for j in V))
        fscores = {}
        tau0 = 0.0
        feature_evals = 0

    levels: list[LevelAudit] = []
    current = [IndexSet.of(j) for j in V]
    prev_selected: list[IndexSet] = []
    for k in range(1, cfg.K + 1):
        if k == 1:
            s_k = current
        else:
            s_k = _apriori_candidates(prev_selected, k)
        if not s_k:
            levels.append(LevelAudit(k, 0, None, 0, [], []))
            prev_selected = []
            continue
        table = scorer(s_k)
        scored = [(j, table[j][0]) for j in s_k]
        evals = sum(table[j][2] for j in s_k)
        if cfg.gammas is not None:
            gamma = float(cfg.gammas[k - 1])
        else:
            gamma = cfg.tau * max(s for _, s in scored)
        selected = _threshold_and_cap(scored, gamma, cfg.cap_for(k), cfg.zero_tol)
        levels.append(
            LevelAudit(
                k,
                len(s_k),
                gamma,
                evals,
                [(j, table[j][0], table[j][1]) for j in s_k],
                selected,
            )
        )
        prev_selected = selected

    r: list[IndexSet] = [IndexSet.of(j) for j in V]
    for lv in levels:
        if lv.k >= 2:
            r.extend(lv.selected)
    audit_cfg = dict(cfg.to_dict())
    audit_cfg["feature_evals"] = feature_evals
    return ScreeningResult(V, fscores, tau0, levels, r, audit_cfg)


def brute_force_screen(
    table, cfg: ScreeningConfig, V: tuple[int, ...]
) -> dict[int, list[IndexSet]]:
    """Exhaustive-enumeration reference of the level construction.

    ``table`` maps IndexSet -> selection value and must cover every subset
    of V up to order K.  Returns the selected sets per level; used as the
    oracle for property tests of :func:`screen_interactions`.
    """
    V = tuple(sorted(int(j) for j in V))
    lookup = dict(table)
    levels: dict[int, list[IndexSet]] = {}
    prev: set[IndexSet] = set()
    for k in range(1, cfg.K + 1):
        if k == 1:
            s_k = [IndexSet.of(j) for j in V]
        else:
            s_k = []
            for combo in combinations(V, k):
                j = IndexSet(combo)
                if all(IndexSet(sub) in prev for sub in combinations(combo, k - 1)):
                    s_k.append(j)
        if not s_k:
            levels[k] = []
            prev = set()
            continue
        missing = [j for j in s_k if j not in lookup]
        if missing:
            raise ValueError(f"incomplete score table: missing {missing[0]}")
        if cfg.gammas is not None:
            gamma = float(cfg.gammas[k - 1])
        else:
            gamma = cfg.tau * max(lookup[j] for j in s_k)
        kept = sorted(
            (j for j in s_k if lookup[j] > max(gamma, cfg.zero_tol)),
            key=lambda j: (-lookup[j], j.indices),
        )
        cap = cfg.cap_for(k)
        if cap is not None:
            kept = kept[:cap]
        levels[k] = kept
        prev = set(kept)
    return levels
