"""Tabular data model: feature scaling, CSV ingestion and index-set combinatorics.

All internal math runs on the unit cube: continuous features are min-max
scaled to [0, 1] at ingestion, binary features stay {0, 1}.  The scaler
parameters are kept on each :class:`FeatureSpec` so raw/scaled coordinates
stay invertible.  Index sets name ANOVA terms and are always stored as
strictly increasing 0-based feature indices.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

CONTINUOUS = "continuous"
BINARY = "binary"


class DataError(ValueError):
    """Raised for malformed input data or schema violations."""


@dataclass(frozen=True)
class FeatureSpec:
    """Name, kind and raw range of one input feature."""

    name: str
    kind: str = CONTINUOUS
    raw_min: float = 0.0
    raw_max: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in (CONTINUOUS, BINARY):
            raise DataError(f"unknown feature kind {self.kind!r} for {self.name!r}")
        if self.kind == CONTINUOUS and not self.raw_min < self.raw_max:
            raise DataError(
                f"constant feature {self.name!r}: raw_min == raw_max == {self.raw_min}"
            )
        if self.kind == BINARY and (self.raw_min, self.raw_max) != (0.0, 1.0):
            raise DataError(f"binary feature {self.name!r} must span {{0, 1}}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "raw_min": self.raw_min,
            "raw_max": self.raw_max,
        }

    @staticmethod
    def from_dict(d: dict) -> "FeatureSpec":
        return FeatureSpec(d["name"], d["kind"], d["raw_min"], d["raw_max"])


@dataclass(frozen=True)
class IndexSet:
    """A sorted, duplicate-free set of feature indices naming one ANOVA term.

    The empty set is allowed only as the ancestor sentinel of singletons;
    every real term has order >= 1.
    """

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise DataError(f"index set {idx} is not strictly increasing")
        if any(i < 0 for i in idx):
            raise DataError(f"negative feature index in {idx}")

    @staticmethod
    def of(*indices: int) -> "IndexSet":
        return IndexSet(tuple(sorted(set(int(i) for i in indices))))

    @property
    def order(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, i: int) -> bool:
        return i in self.indices

    def issubset(self, other: "IndexSet") -> bool:
        return set(self.indices) <= set(other.indices)

    def __str__(self) -> str:
        return "{" + ",".join(str(i) for i in self.indices) + "}"


EMPTY_SET = IndexSet(())


def ancestors(j: IndexSet) -> set[IndexSet]:
    """All subsets of ``j`` with one element removed; |A(j)| == |j|."""
    if j.order < 1:
        raise DataError("ancestors() requires a nonempty index set")
    return {IndexSet(c) for c in combinations(j.indices, j.order - 1)}


@dataclass(frozen=True)
class Dataset:
    """A scaled feature matrix plus per-feature metadata.

    ``values`` is an (n, p) float array on the scaled domain; immutable
    after construction, safe to share across workers.
    """

    specs: tuple[FeatureSpec, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "specs", tuple(self.specs))
        if vals.ndim != 2:
            raise DataError("values must be a 2-D matrix")
        n, p = vals.shape
        if n < 2 or p < 1:
            raise DataError(f"dataset needs n >= 2 rows and p >= 1 features, got {vals.shape}")
        if p != len(self.specs):
            raise DataError(f"{len(self.specs)} specs for {p} columns")
        for k, spec in enumerate(self.specs):
            col = vals[:, k]
            if spec.kind == BINARY:
                if not np.isin(col, (0.0, 1.0)).all():
                    raise DataError(f"binary column {spec.name!r} has values outside {{0, 1}}")
            elif col.min() < -1e-12 or col.max() > 1 + 1e-12:
                raise DataError(f"scaled column {spec.name!r} leaves [0, 1]")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def binary_features(self) -> frozenset[int]:
        return frozenset(k for k, s in enumerate(self.specs) if s.kind == BINARY)

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]


def scale_point(raw, specs: tuple[FeatureSpec, ...]) -> tuple[np.ndarray, bool]:
    """Map a raw row onto the scaled domain.

    Out-of-range continuous coordinates are clamped into [0, 1]; the second
    return value flags whether any clamping happened.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (len(specs),):
        raise DataError(f"expected {len(specs)} coordinates, got shape {raw.shape}")
    out = np.empty_like(raw)
    clamped = False
    for k, spec in enumerate(specs):
        if spec.kind == BINARY:
            out[k] = raw[k]
        else:
            u = (raw[k] - spec.raw_min) / (spec.raw_max - spec.raw_min)
            if u < 0.0 or u > 1.0:
                clamped = True
                u = min(max(u, 0.0), 1.0)
            out[k] = u
    return out, clamped


def unscale_point(scaled, specs: tuple[FeatureSpec, ...]) -> np.ndarray:
    """Inverse of :func:`scale_point` for in-range points."""
    scaled = np.asarray(scaled, dtype=float)
    if scaled.shape != (len(specs),):
        raise DataError(f"expected {len(specs)} coordinates, got shape {scaled.shape}")
    out = np.empty_like(scaled)
    for k, spec in enumerate(specs):
        if spec.kind == BINARY:
            out[k] = scaled[k]
        else:
            out[k] = spec.raw_min + scaled[k] * (spec.raw_max - spec.raw_min)
    return out


def unscale_grid(grid: np.ndarray, spec: FeatureSpec) -> np.ndarray:
    """Map a 1-D scaled grid back to raw units for one feature."""
    if spec.kind == BINARY:
        return np.asarray(grid, dtype=float)
    return spec.raw_min + np.asarray(grid, dtype=float) * (spec.raw_max - spec.raw_min)


def _load_schema_hints(schema) -> dict[str, str]:
    if schema is None:
        return {}
    if isinstance(schema, (str, Path)):
        with open(schema, encoding="utf-8") as fh:
            schema = json.load(fh)
    hints = dict(schema)
    for name, kind in hints.items():
        if kind not in (CONTINUOUS, BINARY):
            raise DataError(f"schema hint for {name!r} must be 'continuous' or 'binary'")
    return hints


def load_csv(path, schema=None) -> Dataset:
    """Load a UTF-8 header CSV, infer feature kinds and min-max scale.

    ``schema`` may be a dict or a JSON file mapping column name to
    ``"continuous"`` / ``"binary"``.  Columns whose values all lie in
    {0, 1} default to binary; everything else is continuous.  A constant
    continuous column is rejected because it cannot be scaled.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    hints = _load_schema_hints(schema)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        rows = []
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{rownum}: expected {len(header)} cells, got {len(row)}")
            parsed = []
            for colnum, cell in enumerate(row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}:{rownum}: column {header[colnum]!r}: "
                        f"cannot parse {cell!r} as a number"
                    ) from None
            rows.append(parsed)
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 data rows, got {len(rows)}")
    raw = np.asarray(rows, dtype=float)

    specs = []
    scaled = np.empty_like(raw)
    for k, name in enumerate(header):
        col = raw[:, k]
        kind = hints.get(name)
        if kind is None:
            kind = BINARY if np.isin(col, (0.0, 1.0)).all() else CONTINUOUS
        if kind == BINARY:
            if not np.isin(col, (0.0, 1.0)).all():
                raise DataError(f"{path}: column {name!r} hinted binary but not in {{0, 1}}")
            specs.append(FeatureSpec(name, BINARY, 0.0, 1.0))
            scaled[:, k] = col
        else:
            lo, hi = float(col.min()), float(col.max())
            if lo == hi:
                raise DataError(f"{path}: constant feature {name!r} (all values {lo})")
            specs.append(FeatureSpec(name, CONTINUOUS, lo, hi))
            scaled[:, k] = (col - lo) / (hi - lo)
    return Dataset(tuple(specs), scaled)


def unit_specs(p: int) -> tuple[FeatureSpec, ...]:
    """Identity specs for p features already on [0, 1]."""
    return tuple(FeatureSpec(f"x{k}") for k in range(p))


def uniform_dataset(p: int, n: int, seed: int) -> Dataset:
    """n uniform rows on the unit cube with identity scaling."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), p, n]))
    return Dataset(unit_specs(p), rng.random((n, p)))
