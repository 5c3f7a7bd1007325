"""Fit and interrogate the sparse functional ANOVA surrogate.

The surrogate is an intercept plus one component function per selected term,
predicting the *black box's outputs* (never the original labels).  The
default backend represents each component on a tensor-product piecewise-
linear basis and solves one joint ridge least-squares problem, which is
deterministic and exact for in-span targets.  A feedforward backend trains
one small network per component jointly by Adam instead.

Components are sums of blocks.  After fitting, the identifiability
transform re-centers every component so its empirical marginal mean over
each of its own variables vanishes, pushing the removed pieces into
lower-order components and the intercept; total predictions are unchanged.
Importances, per-feature attributions and partial-dependence tables are all
defined on the transformed model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import chain, combinations

import numpy as np

from anovadistill.data import Dataset, FeatureSpec, IndexSet, unscale_grid
from anovadistill.nn import Adam, Mlp
from anovadistill.predictor import Predictor


class FitError(RuntimeError):
    """Raised when the surrogate cannot be fitted."""


# ---------------------------------------------------------------------------
# hat basis helpers
# ---------------------------------------------------------------------------

def _hat_cells(x: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Cell index and local coordinate for a uniform m-knot hat basis."""
    t = np.clip(np.asarray(x, dtype=float), 0.0, 1.0) * (m - 1)
    cell = np.minimum(t.astype(int), m - 2)
    return cell, t - cell


def hat_design(cols: np.ndarray, knots: tuple[int, ...]) -> np.ndarray:
    """Dense design matrix of the tensor-product hat basis at given points."""
    n, k = cols.shape
    size = int(np.prod(knots))
    cells, us = [], []
    for d in range(k):
        c, u = _hat_cells(cols[:, d], knots[d])
        cells.append(c)
        us.append(u)
    strides = np.ones(k, dtype=int)
    for d in range(k - 2, -1, -1):
        strides[d] = strides[d + 1] * knots[d + 1]
    design = np.zeros((n, size))
    rows = np.arange(n)
    for corner in range(2**k):
        flat = np.zeros(n, dtype=int)
        w = np.ones(n)
        for d in range(k):
            bit = (corner >> d) & 1
            flat += (cells[d] + bit) * strides[d]
            w *= us[d] if bit else 1.0 - us[d]
        design[rows, flat] += w
    return design


def hat_marginal_weights(column: np.ndarray, m: int) -> np.ndarray:
    """Empirical mean of each hat basis function over one data column."""
    return hat_design(np.asarray(column, dtype=float)[:, None], (m,)).mean(axis=0)


def _subsets(items: tuple) -> list[tuple]:
    return list(chain.from_iterable(combinations(items, r) for r in range(len(items) + 1)))


# ---------------------------------------------------------------------------
# component blocks
# ---------------------------------------------------------------------------

class GridBlock:
    """Tensor-product piecewise-linear function over a feature subset."""

    kind = "grid"

    def __init__(self, dims: tuple[int, ...], knots: tuple[int, ...], coef: np.ndarray):
        self.dims = tuple(int(d) for d in dims)
        self.knots = tuple(int(m) for m in knots)
        self.coef = np.asarray(coef, dtype=float).reshape(self.knots)

    def evaluate_rows(self, X: np.ndarray) -> np.ndarray:
        return self.evaluate_local(X[:, self.dims])

    def evaluate_local(self, U: np.ndarray) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        if U.ndim == 1:
            U = U[:, None]
        k = len(self.dims)
        cells, us = [], []
        for d in range(k):
            c, u = _hat_cells(U[:, d], self.knots[d])
            cells.append(c)
            us.append(u)
        strides = np.ones(k, dtype=int)
        for d in range(k - 2, -1, -1):
            strides[d] = strides[d + 1] * self.knots[d + 1]
        flatcoef = self.coef.ravel()
        out = np.zeros(U.shape[0])
        for corner in range(2**k):
            flat = np.zeros(U.shape[0], dtype=int)
            w = np.ones(U.shape[0])
            for d in range(k):
                bit = (corner >> d) & 1
                flat += (cells[d] + bit) * strides[d]
                w *= us[d] if bit else 1.0 - us[d]
            out += flatcoef[flat] * w
        return out

    def anova_pieces(self, weight_of) -> dict[tuple, "GridBlock | float"]:
        """Decompose into centered pieces per feature subset.

        ``weight_of(feature, m)`` returns the empirical hat-basis means.
        Piece for the full set is the centered block; lower subsets carry
        the marginalized remainders, the empty subset the overall mean.
        """
        dims = self.dims
        k = len(dims)
        contr: dict[tuple, np.ndarray] = {(): self.coef}
        for removed in _subsets(dims):
            if not removed or removed in contr:
                continue
            base = contr[removed[:-1]]
            axis = [d for d in dims if d not in removed[:-1]].index(removed[-1])
            w = weight_of(removed[-1], self.knots[dims.index(removed[-1])])
            contr[removed] = np.tensordot(base, w, axes=([axis], [0]))
        pieces: dict[tuple, GridBlock | float] = {}
        for u in _subsets(dims):
            if not u:
                pieces[u] = float(contr[dims])
                continue
            u_knots = tuple(self.knots[dims.index(d)] for d in u)
            acc = np.zeros(u_knots)
            for v in _subsets(u):
                removed = tuple(d for d in dims if d not in v)
                sign = -1.0 if (len(u) - len(v)) % 2 else 1.0
                t = contr[removed]  # tensor over v's axes
                # broadcast over the axes of u missing from v
                shape = tuple(
                    self.knots[dims.index(d)] if d in v else 1 for d in u
                )
                acc += sign * np.asarray(t).reshape(shape)
            pieces[u] = GridBlock(u, u_knots, acc)
        return pieces

    def to_dict(self) -> dict:
        return {
            "type": "grid",
            "dims": list(self.dims),
            "knots": list(self.knots),
            "coef": self.coef.ravel().tolist(),
        }


class ConstBlock:
    """A constant carried inside a component (kept out of the intercept
    so the component's own marginal means stay exactly zero)."""

    kind = "const"

    def __init__(self, value: float, dims: tuple[int, ...] = ()):
        self.value = float(value)
        self.dims = tuple(dims)

    def evaluate_rows(self, X: np.ndarray) -> np.ndarray:
        return np.full(X.shape[0], self.value)

    def evaluate_local(self, U: np.ndarray) -> np.ndarray:
        U = np.asarray(U)
        n = U.shape[0] if U.ndim > 0 else 1
        return np.full(n, self.value)

    def to_dict(self) -> dict:
        return {"type": "const", "dims": list(self.dims), "value": self.value}


_COMBO_CAP = 200_000  # max fixed-value combinations per marginal evaluation


class MlpBlock:
    """One feedforward network over a feature subset, with a scale factor."""

    kind = "mlp"

    def __init__(self, dims: tuple[int, ...], net: Mlp, scale: float = 1.0):
        self.dims = tuple(int(d) for d in dims)
        self.net = net
        self.scale = float(scale)

    def evaluate_rows(self, X: np.ndarray) -> np.ndarray:
        return self.evaluate_local(X[:, self.dims])

    def evaluate_local(self, U: np.ndarray) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        if U.ndim == 1:
            U = U[:, None]
        return self.scale * self.net.predict(U)

    def marginalize(self, removed: tuple[int, ...], values_of) -> "MarginalMlpBlock | float":
        fixed = {d: np.asarray(values_of(d), dtype=float) for d in removed}
        kept = tuple(d for d in self.dims if d not in removed)
        block = MarginalMlpBlock(kept, self.dims, self.net, fixed, self.scale)
        if kept:
            return block
        return float(block.evaluate_local(np.zeros((1, 0)))[0])

    def to_dict(self) -> dict:
        return {
            "type": "mlp",
            "dims": list(self.dims),
            "scale": self.scale,
            "net": self.net.to_dict(),
        }


class MarginalMlpBlock:
    """A network averaged over empirical values of some of its inputs."""

    kind = "mlp_marginal"

    def __init__(self, dims, base_dims, net: Mlp, fixed: dict[int, np.ndarray],
                 scale: float = 1.0):
        self.dims = tuple(int(d) for d in dims)
        self.base_dims = tuple(int(d) for d in base_dims)
        self.net = net
        self.fixed = {int(d): np.asarray(v, dtype=float) for d, v in fixed.items()}
        self.scale = float(scale)

    def _combos(self) -> np.ndarray:
        order = sorted(self.fixed)
        grids = np.meshgrid(*(self.fixed[d] for d in order), indexing="ij")
        combos = np.stack([g.ravel() for g in grids], axis=1)
        if combos.shape[0] > _COMBO_CAP:
            idx = np.unique(np.linspace(0, combos.shape[0] - 1, _COMBO_CAP).astype(int))
            combos = combos[idx]
        return combos

    def evaluate_rows(self, X: np.ndarray) -> np.ndarray:
        return self.evaluate_local(X[:, self.dims])

    def evaluate_local(self, U: np.ndarray) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        if U.ndim == 1:
            U = U[:, None]
        n = U.shape[0]
        combos = self._combos()
        c = combos.shape[0]
        order = sorted(self.fixed)
        inputs = np.empty((n * c, len(self.base_dims)))
        for pos, d in enumerate(self.base_dims):
            if d in self.fixed:
                inputs[:, pos] = np.tile(combos[:, order.index(d)], n)
            else:
                inputs[:, pos] = np.repeat(U[:, self.dims.index(d)], c)
        return self.scale * self.net.predict(inputs).reshape(n, c).mean(axis=1)

    def marginalize(self, removed: tuple[int, ...], values_of):
        fixed = dict(self.fixed)
        for d in removed:
            fixed[d] = np.asarray(values_of(d), dtype=float)
        kept = tuple(d for d in self.dims if d not in removed)
        block = MarginalMlpBlock(kept, self.base_dims, self.net, fixed, self.scale)
        if kept:
            return block
        return float(block.evaluate_local(np.zeros((1, 0)))[0])

    def to_dict(self) -> dict:
        return {
            "type": "mlp_marginal",
            "dims": list(self.dims),
            "base_dims": list(self.base_dims),
            "scale": self.scale,
            "net": self.net.to_dict(),
            "fixed": {str(d): v.tolist() for d, v in self.fixed.items()},
        }


def _block_from_dict(d: dict):
    kind = d["type"]
    if kind == "grid":
        return GridBlock(tuple(d["dims"]), tuple(d["knots"]), np.asarray(d["coef"]))
    if kind == "const":
        return ConstBlock(d["value"], tuple(d["dims"]))
    if kind == "mlp":
        return MlpBlock(tuple(d["dims"]), Mlp.from_dict(d["net"]), d["scale"])
    if kind == "mlp_marginal":
        return MarginalMlpBlock(
            tuple(d["dims"]),
            tuple(d["base_dims"]),
            Mlp.from_dict(d["net"]),
            {int(k): np.asarray(v) for k, v in d["fixed"].items()},
            d["scale"],
        )
    raise FitError(f"unknown block type {kind!r} in model file")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComponentSpec:
    """Per-term override of the fitting backend."""

    j: IndexSet
    backend: str = "grid"
    knots: tuple[int, ...] | None = None
    hidden: tuple[int, ...] = (64, 32)
    ridge: float | None = None


@dataclass(frozen=True)
class FitConfig:
    backend: str = "grid"
    ridge: float = 1e-6
    knots_main: int = 16
    knots_pair: int = 8
    knots_high: int = 5
    hidden: tuple[int, ...] = (64, 32)
    lr: float = 1e-3
    batch: int = 1024
    epochs: int = 200
    weight_decay: float = 7.483e-9
    seed: int = 0
    grad_tol: float = 1e-8

    def knots_for(self, j: IndexSet, specs: tuple[FeatureSpec, ...]) -> tuple[int, ...]:
        base = {1: self.knots_main, 2: self.knots_pair}.get(j.order, self.knots_high)
        return tuple(2 if specs[d].kind == "binary" else base for d in j.indices)

    def to_dict(self) -> dict:
        return {
            "backend": self.backend,
            "ridge": self.ridge,
            "knots": [self.knots_main, self.knots_pair, self.knots_high],
            "hidden": list(self.hidden),
            "lr": self.lr,
            "batch": self.batch,
            "epochs": self.epochs,
            "seed": self.seed,
        }


# ---------------------------------------------------------------------------
# the model
# ---------------------------------------------------------------------------

@dataclass
class AnovaModel:
    beta0: float
    components: dict[IndexSet, list]
    specs: tuple[FeatureSpec, ...]
    identifiable: bool = False
    backend: str = "grid"
    diagnostics: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return len(self.specs)

    def term_orders(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for j in self.components:
            out[j.order] = out.get(j.order, 0) + 1
        return out

    def component_values(self, X: np.ndarray) -> dict[IndexSet, np.ndarray]:
        X = np.asarray(X, dtype=float)
        out = {}
        for j in sorted(self.components, key=lambda s: (s.order, s.indices)):
            vals = np.zeros(X.shape[0])
            for b in self.components[j]:
                vals += b.evaluate_rows(X)
            out[j] = vals
        return out

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.p:
            raise FitError(f"dimension mismatch: model expects p={self.p}, got {X.shape}")
        out = np.full(X.shape[0], self.beta0)
        for vals in self.component_values(X).values():
            out += vals
        return out

    def predict(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.p,):
            raise FitError(f"dimension mismatch: model expects p={self.p}, got {x.shape}")
        return float(self.beta0 + sum(v for v in self.predict_components(x).values()))

    def predict_components(self, x) -> dict[IndexSet, float]:
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return {j: float(v[0]) for j, v in self.component_values(x).items()}

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        comps = []
        for j in sorted(self.components, key=lambda s: (s.order, s.indices)):
            comps.append(
                {"j": list(j.indices), "blocks": [b.to_dict() for b in self.components[j]]}
            )
        return {
            "version": 1,
            "beta0": self.beta0,
            "identifiable": self.identifiable,
            "backend": self.backend,
            "specs": [s.to_dict() for s in self.specs],
            "components": comps,
            "diagnostics": self.diagnostics,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @staticmethod
    def from_dict(d: dict) -> "AnovaModel":
        if d.get("version") != 1:
            raise FitError(f"unsupported model version {d.get('version')!r}")
        comps = {
            IndexSet(tuple(c["j"])): [_block_from_dict(b) for b in c["blocks"]]
            for c in d["components"]
        }
        specs = tuple(FeatureSpec.from_dict(s) for s in d["specs"])
        return AnovaModel(
            beta0=float(d["beta0"]),
            components=comps,
            specs=specs,
            identifiable=bool(d["identifiable"]),
            backend=d.get("backend", "grid"),
            diagnostics=d.get("diagnostics", {}),
        )

    @staticmethod
    def load(path) -> "AnovaModel":
        with open(path, encoding="utf-8") as fh:
            return AnovaModel.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

def _component_plan(r_terms, data, cfg, specs):
    overrides = {s.j: s for s in (specs or [])}
    plan = []
    for j in sorted(set(r_terms), key=lambda s: (s.order, s.indices)):
        ov = overrides.get(j)
        backend = ov.backend if ov else cfg.backend
        knots = (ov.knots if ov and ov.knots else cfg.knots_for(j, data.specs))
        hidden = ov.hidden if ov else cfg.hidden
        plan.append((j, backend, knots, hidden))
    return plan


def fit(
    pred: Predictor,
    data: Dataset,
    r_terms,
    cfg: FitConfig | None = None,
    specs: list[ComponentSpec] | None = None,
) -> AnovaModel:
    """Fit the surrogate to the black box's outputs on the training rows."""
    cfg = cfg or FitConfig()
    y = pred.evaluate_batch(data.values)
    beta0 = float(np.mean(y))
    r_terms = [j if isinstance(j, IndexSet) else IndexSet(tuple(j)) for j in r_terms]
    if not r_terms:
        return AnovaModel(
            beta0, {}, data.specs, backend=cfg.backend,
            diagnostics={"train_mse": float(np.var(y)), "iterations": 0, "n_params": 0},
        )
    plan = _component_plan(r_terms, data, cfg, specs)
    if any(backend == "feedforward" for _, backend, _, _ in plan):
        return _fit_feedforward(data, y, beta0, plan, cfg)
    return _fit_grid(data, y, beta0, plan, cfg)


def _fit_grid(data, y, beta0, plan, cfg) -> AnovaModel:
    resid = y - beta0
    designs, slices, start = [], [], 0
    for j, _, knots, _ in plan:
        D = hat_design(data.values[:, list(j.indices)], knots)
        designs.append(D)
        slices.append(slice(start, start + D.shape[1]))
        start += D.shape[1]
    X = np.hstack(designs)
    n, n_params = X.shape
    lam = cfg.ridge
    A = X.T @ X + lam * np.eye(n_params)
    b = X.T @ resid
    try:
        chol = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise FitError(
            "singular normal equations; set a ridge weight > 0 to make the fit well-posed"
        ) from None

    def solve(rhs):
        return np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))

    coef = solve(b)
    iterations = 1
    grad = (2.0 / n) * (A @ coef - b)
    while np.linalg.norm(grad) > cfg.grad_tol and iterations < 30:
        coef -= solve(A @ coef - b)
        grad = (2.0 / n) * (A @ coef - b)
        iterations += 1
    if not np.isfinite(coef).all():
        raise FitError("non-finite coefficients; check inputs or increase ridge weight")

    components = {
        j: [GridBlock(j.indices, knots, coef[sl])]
        for (j, _, knots, _), sl in zip(plan, slices)
    }
    train_mse = float(np.mean((resid - X @ coef) ** 2))
    diagnostics = {
        "train_mse": train_mse,
        "gradient_norm": float(np.linalg.norm(grad)),
        "iterations": iterations,
        "n_params": int(n_params),
    }
    return AnovaModel(beta0, components, data.specs, backend="grid", diagnostics=diagnostics)


def _fit_feedforward(data, y, beta0, plan, cfg) -> AnovaModel:
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xF17]))
    nets = []
    for j, _, _, hidden in plan:
        nets.append(Mlp(j.order, tuple(hidden), rng, init_scale=0.1))
    beta = np.array([beta0])
    params = [beta]
    for net in nets:
        params.extend(net.params())
    opt = Adam(params, lr=cfg.lr, weight_decay=cfg.weight_decay)
    n = data.n
    cols = [list(j.indices) for j, _, _, _ in plan]

    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch):
            idx = order[lo : lo + cfg.batch]
            Xb, yb = data.values[idx], y[idx]
            preds = np.full(len(idx), beta[0])
            caches = []
            for net, c in zip(nets, cols):
                out, cache = net.forward(Xb[:, c])
                preds += out
                caches.append(cache)
            dl = 2.0 * (preds - yb) / len(idx)
            if not np.isfinite(dl).all():
                raise FitError("non-finite loss during feedforward fit")
            grads = [np.array([dl.sum()])]
            for net, cache in zip(nets, caches):
                gw, gb = net.backward(cache, dl)
                grads.extend([*gw, *gb])
            opt.step(params, grads)

    components = {}
    for (j, _, _, _), net in zip(plan, nets):
        components[j] = [MlpBlock(j.indices, net)]
    preds = np.full(n, beta[0])
    for net, c in zip(nets, cols):
        preds += net.predict(data.values[:, c])
    diagnostics = {
        "train_mse": float(np.mean((preds - y) ** 2)),
        "iterations": cfg.epochs,
        "n_params": int(sum(p.size for p in params)),
    }
    return AnovaModel(
        float(beta[0]), components, data.specs, backend="feedforward", diagnostics=diagnostics
    )


# ---------------------------------------------------------------------------
# identifiability transform and reports
# ---------------------------------------------------------------------------

def identifiable_transform(model: AnovaModel, data: Dataset) -> AnovaModel:
    """Re-center all components to zero empirical marginal means.

    Works top-down: each component is split into its centered part plus
    marginalized remainders; remainders flow into the lower-order
    components (created if absent) and the intercept.  Total prediction is
    unchanged at every point.
    """
    if model.identifiable:
        return model
    weights_memo: dict[tuple[int, int], np.ndarray] = {}

    def weight_of(feature: int, m: int) -> np.ndarray:
        key = (feature, m)
        if key not in weights_memo:
            weights_memo[key] = hat_marginal_weights(data.column(feature), m)
        return weights_memo[key]

    def values_of(feature: int) -> np.ndarray:
        return data.column(feature)

    comps: dict[IndexSet, list] = {j: list(bs) for j, bs in model.components.items()}
    beta0 = model.beta0
    max_order = max((j.order for j in comps), default=0)

    for k in range(max_order, 0, -1):
        for j in sorted([s for s in comps if s.order == k], key=lambda s: s.indices):
            new_blocks: list = []
            for block in comps[j]:
                if isinstance(block, ConstBlock):
                    beta0 += block.value
                    continue
                if isinstance(block, GridBlock):
                    pieces = block.anova_pieces(weight_of)
                    for u, piece in pieces.items():
                        if u == ():
                            beta0 += piece
                        elif u == block.dims:
                            new_blocks.append(piece)
                        else:
                            comps.setdefault(IndexSet(u), []).append(piece)
                    continue
                # network-backed blocks: signed marginalized wrappers
                dims = block.dims
                memo: dict[tuple, object] = {}

                def marg(removed, _block=block, _memo=memo):
                    if removed not in _memo:
                        _memo[removed] = _block.marginalize(removed, values_of)
                    return _memo[removed]

                for u in _subsets(dims):
                    target = new_blocks if u == dims else None
                    const_acc = 0.0
                    blocks_acc: list = []
                    for v in _subsets(u):
                        sign = -1.0 if (len(u) - len(v)) % 2 else 1.0
                        removed = tuple(d for d in dims if d not in v)
                        piece = block if not removed else marg(removed)
                        if isinstance(piece, float):
                            const_acc += sign * piece
                        else:
                            scaled = _with_scale(piece, sign)
                            blocks_acc.append(scaled)
                    if u == ():
                        beta0 += const_acc
                        continue
                    if const_acc != 0.0:
                        blocks_acc.append(ConstBlock(const_acc, u))
                    if target is not None:
                        target.extend(blocks_acc)
                    else:
                        comps.setdefault(IndexSet(u), []).extend(blocks_acc)
            comps[j] = new_blocks
    return AnovaModel(
        beta0,
        comps,
        model.specs,
        identifiable=True,
        backend=model.backend,
        diagnostics=dict(model.diagnostics),
    )


def _with_scale(block, sign: float):
    if sign == 1.0:
        return block
    if isinstance(block, MlpBlock):
        return MlpBlock(block.dims, block.net, block.scale * sign)
    if isinstance(block, MarginalMlpBlock):
        return MarginalMlpBlock(block.dims, block.base_dims, block.net, block.fixed,
                                block.scale * sign)
    raise FitError(f"cannot scale block of type {type(block).__name__}")


def _ensure_identifiable(model: AnovaModel, data: Dataset) -> AnovaModel:
    return model if model.identifiable else identifiable_transform(model, data)


def component_importance(model: AnovaModel, data: Dataset) -> dict[IndexSet, float]:
    """Empirical variance of each (centered) component over the training rows."""
    model = _ensure_identifiable(model, data)
    return {
        j: float(np.var(vals))
        for j, vals in model.component_values(data.values).items()
    }


def normalize_scores(scores: dict) -> dict:
    top = max(scores.values(), default=0.0)
    if top <= 0.0:
        return {k: 0.0 for k in scores}
    return {k: v / top for k, v in scores.items()}


def anova_shap_local(model: AnovaModel, x, data: Dataset | None = None) -> np.ndarray:
    """Per-feature attribution: sum of all components containing the feature."""
    if not model.identifiable:
        if data is None:
            raise FitError("model must be identifiable (pass data to auto-transform)")
        model = identifiable_transform(model, data)
    x = np.asarray(x, dtype=float)
    if x.shape != (model.p,):
        raise FitError(f"dimension mismatch: expected {model.p} coordinates")
    comp_vals = model.predict_components(x)
    phi = np.zeros(model.p)
    for j, v in comp_vals.items():
        for f in j:
            phi[f] += v
    return phi


def anova_shap_global(model: AnovaModel, data: Dataset) -> np.ndarray:
    """Empirical variance of the local attribution of each feature."""
    model = _ensure_identifiable(model, data)
    phi = np.zeros((data.n, model.p))
    for j, vals in model.component_values(data.values).items():
        for f in j:
            phi[:, f] += vals
    return np.var(phi, axis=0)


def partial_dependence(model: AnovaModel, j: IndexSet, resolution: int = 25) -> dict:
    """Component values on a uniform grid, with raw-unit coordinates."""
    if j not in model.components:
        raise FitError(f"unknown component {j}")
    k = j.order
    axes_scaled = [np.linspace(0.0, 1.0, resolution) for _ in range(k)]
    mesh = np.meshgrid(*axes_scaled, indexing="ij")
    pts_scaled = np.stack([m.ravel() for m in mesh], axis=1)
    X = np.zeros((pts_scaled.shape[0], model.p))
    X[:, list(j.indices)] = pts_scaled
    vals = np.zeros(X.shape[0])
    for b in model.components[j]:
        vals += b.evaluate_rows(X)
    pts_raw = np.stack(
        [
            unscale_grid(pts_scaled[:, d], model.specs[j.indices[d]])
            for d in range(k)
        ],
        axis=1,
    )
    return {
        "j": j,
        "columns": [model.specs[d].name for d in j.indices],
        "points": pts_raw,
        "points_scaled": pts_scaled,
        "values": vals,
    }
