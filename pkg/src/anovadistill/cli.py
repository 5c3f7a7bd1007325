"""Command-line pipeline: screen -> distill -> explain, plus the benchmark.

One JSON config file plus flag overrides fully determines a run; the same
config and seed reproduce byte-identical reports.  Timestamps and wall
times live in a separate "meta" block so everything under "result" can be
compared bytewise.

Exit codes: 0 success, 2 usage/config error, 3 predictor failure,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import shlex
import sys
import time
from pathlib import Path

import numpy as np

from anovadistill.benchmark import run_benchmark
from anovadistill.data import (
    DataError,
    Dataset,
    IndexSet,
    load_csv,
    uniform_dataset,
)
from anovadistill.external import spawn_external
from anovadistill.model import (
    AnovaModel,
    FitConfig,
    FitError,
    anova_shap_local,
    component_importance,
    fit,
    identifiable_transform,
    normalize_scores,
    anova_shap_global,
    partial_dependence,
)
from anovadistill.predictor import PredictorError
from anovadistill.scores import McConfig
from anovadistill.screening import ScreeningConfig, screen_interactions
from anovadistill.suite import SUITE_NAMES, AnalyticPredictor


class ConfigError(ValueError):
    pass


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PREDICTOR = 3
EXIT_NUMERICAL = 4


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def _load_config(args) -> dict:
    cfg: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    for key in ("data", "predictor", "seed", "out"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    screening = cfg.setdefault("screening", {})
    for key in ("K", "tau", "h"):
        val = getattr(args, key, None)
        if val is not None:
            screening[key] = val
    return cfg


def _screening_config(cfg: dict, seed: int) -> ScreeningConfig:
    s = cfg.get("screening", {})
    mc = McConfig(
        m_anchor=int(s.get("m_anchor", 30)),
        m_comp=int(s.get("m_comp", 30)),
        seed=seed,
        exhaustive=bool(s.get("exhaustive", False)),
    )
    return ScreeningConfig(
        K=int(s.get("K", 3)),
        tau=float(s.get("tau", 0.1)),
        tau0_frac=float(s.get("tau0_frac", 0.01)),
        caps=tuple(s.get("caps", (300, 100, 20))),
        mc=mc,
        h=float(s.get("h", 0.1)),
        h_mode=s.get("h_mode", "constant"),
    )


def _fit_config(cfg: dict, seed: int) -> FitConfig:
    f = cfg.get("fit", {})
    return FitConfig(
        backend=f.get("backend", "grid"),
        ridge=float(f.get("ridge", 1e-6)),
        knots_main=int(f.get("knots_main", 16)),
        knots_pair=int(f.get("knots_pair", 8)),
        knots_high=int(f.get("knots_high", 5)),
        hidden=tuple(f.get("hidden", (64, 32))),
        lr=float(f.get("lr", 1e-3)),
        batch=int(f.get("batch", 1024)),
        epochs=int(f.get("epochs", 200)),
        seed=seed,
    )


def _build_predictor(cfg: dict):
    spec = cfg.get("predictor")
    if spec is None:
        raise ConfigError("no predictor configured")
    if isinstance(spec, str):
        kind, _, rest = spec.partition(":")
        if kind == "analytic":
            spec = {"analytic": rest}
        elif kind == "external":
            spec = {"external": shlex.split(rest), "p": cfg.get("p")}
        else:
            raise ConfigError(f"unknown predictor spec {spec!r}")
    if "analytic" in spec:
        name = spec["analytic"]
        if name not in SUITE_NAMES:
            raise ConfigError(f"unknown analytic predictor {name!r}")
        return AnalyticPredictor(name, cache=bool(spec.get("cache", False)))
    if "external" in spec:
        p = spec.get("p")
        if p is None:
            raise ConfigError("external predictor needs its input dimension 'p'")
        return spawn_external(list(spec["external"]), int(p),
                              timeout=float(spec.get("timeout", 60.0)))
    raise ConfigError(f"cannot interpret predictor spec {spec!r}")


def _build_dataset(cfg: dict, pred, seed: int) -> Dataset:
    data_spec = cfg.get("data")
    if data_spec is None:
        raise ConfigError("no data configured")
    if isinstance(data_spec, str) and data_spec.startswith("synthetic:"):
        data_spec = {"synthetic": {"n": int(data_spec.split(":", 1)[1])}}
    if isinstance(data_spec, dict) and "synthetic" in data_spec:
        n = int(data_spec["synthetic"].get("n", 3000))
        return uniform_dataset(pred.p, n, seed=seed)
    path = Path(data_spec)
    if not path.exists():
        raise ConfigError(f"data file not found: {path}")
    return load_csv(path, schema=cfg.get("schema"))


def _write_report(path: Path, result: dict, config: dict, t0: float) -> None:
    payload = {
        "meta": {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                 "wall_time_s": time.monotonic() - t0},
        "config": config,
        "result": result,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def _split_rows(n: int, holdout_frac: float, seed: int):
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5B117]))
    order = rng.permutation(n)
    n_hold = int(round(n * holdout_frac))
    return np.sort(order[n_hold:]), np.sort(order[:n_hold])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_screen(cfg: dict) -> int:
    t0 = time.monotonic()
    out = Path(cfg.get("out", "."))
    seed = int(cfg.get("seed", 0))
    pred = _build_predictor(cfg)
    data = _build_dataset(cfg, pred, seed)
    scfg = _screening_config(cfg, seed)
    result = screen_interactions(pred, data, scfg)
    _write_report(out / "screening.json", result.to_dict(), cfg, t0)
    print(f"screening: |V|={len(result.V)}, |R|={len(result.R)} -> {out / 'screening.json'}")
    return EXIT_OK


def cmd_distill(cfg: dict) -> int:
    t0 = time.monotonic()
    out = Path(cfg.get("out", "."))
    seed = int(cfg.get("seed", 0))
    pred = _build_predictor(cfg)
    data = _build_dataset(cfg, pred, seed)
    holdout_frac = float(cfg.get("holdout_frac", 0.2))
    train_idx, hold_idx = _split_rows(data.n, holdout_frac, seed)
    train = Dataset(data.specs, data.values[train_idx])

    screening_path = cfg.get("screening_result")
    if screening_path:
        with open(screening_path, encoding="utf-8") as fh:
            sr = json.load(fh)["result"]
        r_terms = [IndexSet(tuple(t)) for t in sr["R"]]
        screening_dict = sr
    else:
        scfg = _screening_config(cfg, seed)
        result = screen_interactions(pred, train, scfg)
        r_terms = result.R
        screening_dict = result.to_dict()
        _write_report(out / "screening.json", screening_dict, cfg, t0)

    if cfg.get("main_effects_only"):
        r_terms = [j for j in r_terms if j.order == 1]
    model = fit(pred, train, r_terms, _fit_config(cfg, seed))
    model = identifiable_transform(model, train)
    out.mkdir(parents=True, exist_ok=True)
    model.save(out / "model.json")

    y_train = pred.evaluate_batch(train.values)
    train_mse = float(np.mean((model.predict_batch(train.values) - y_train) ** 2))
    report = {
        "train_mse": train_mse,
        "train_r2": _r2(model.predict_batch(train.values), y_train),
        "components_per_order": {str(k): v for k, v in sorted(model.term_orders().items())},
        "n_terms": len(model.components),
        "beta0": model.beta0,
        "fit_diagnostics": model.diagnostics,
    }
    if len(hold_idx):
        y_hold = pred.evaluate_batch(data.values[hold_idx])
        pred_hold = model.predict_batch(data.values[hold_idx])
        report["holdout_mse"] = float(np.mean((pred_hold - y_hold) ** 2))
        report["holdout_r2"] = _r2(pred_hold, y_hold)
    _write_report(out / "fit_report.json", report, cfg, t0)
    print(
        f"distill: {len(model.components)} terms, train MSE {train_mse:.3e}"
        + (f", held-out R2 {report['holdout_r2']:.4f}" if "holdout_r2" in report else "")
    )
    return EXIT_OK


def _r2(pred_vals: np.ndarray, y: np.ndarray) -> float:
    denom = float(np.var(y))
    if denom == 0.0:
        return 1.0 if np.allclose(pred_vals, y) else 0.0
    return float(1.0 - np.mean((pred_vals - y) ** 2) / denom)


def cmd_explain(cfg: dict) -> int:
    t0 = time.monotonic()
    out = Path(cfg.get("out", "."))
    seed = int(cfg.get("seed", 0))
    model_path = cfg.get("model", out / "model.json")
    if not Path(model_path).exists():
        raise ConfigError(f"model file not found: {model_path}")
    model = AnovaModel.load(model_path)
    pred = _build_predictor(cfg) if cfg.get("predictor") else None
    if cfg.get("data") is None:
        raise ConfigError("explain needs the training data to evaluate importances")
    if pred is None:
        # data must be a CSV; synthetic data needs the predictor's dimension
        data = _build_dataset(cfg, model, seed)
    else:
        data = _build_dataset(cfg, pred, seed)
    model = identifiable_transform(model, data)

    comp_imp = component_importance(model, data)
    comp_norm = normalize_scores(comp_imp)
    shap_global = anova_shap_global(model, data)
    top = float(shap_global.max()) if shap_global.size and shap_global.max() > 0 else 1.0
    result = {
        "component_importance": [
            {"j": list(j.indices), "raw": comp_imp[j], "normalized": comp_norm[j]}
            for j in sorted(comp_imp, key=lambda s: (s.order, s.indices))
        ],
        "global_shap": {
            "raw": shap_global.tolist(),
            "normalized": (shap_global / top).tolist(),
            "features": [s.name for s in model.specs],
        },
    }
    _write_report(out / "global_importance.json", result, cfg, t0)

    rows_path = cfg.get("rows")
    if rows_path:
        rows = _load_rows(rows_path, model)
        if rows.shape[0] == 0:
            print("warning: rows file is empty; skipping local attributions", file=sys.stderr)
        else:
            with open(out / "local_shap.csv", "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow([s.name for s in model.specs])
                for i in range(rows.shape[0]):
                    phi = anova_shap_local(model, rows[i])
                    writer.writerow([repr(float(v)) for v in phi])

    pd_dir = out / "pd"
    pd_dir.mkdir(parents=True, exist_ok=True)
    resolution = int(cfg.get("explain", {}).get("resolution", 10))
    for j in sorted(model.components, key=lambda s: (s.order, s.indices)):
        tab = partial_dependence(model, j, resolution=resolution)
        fname = "x".join(str(i) for i in j.indices) + ".csv"
        with open(pd_dir / fname, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(tab["columns"] + ["value"])
            for row, val in zip(tab["points"], tab["values"]):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(val))])
    print(f"explain: wrote global_importance.json and {len(model.components)} pd tables")
    return EXIT_OK


def _load_rows(path, model: AnovaModel) -> np.ndarray:
    from anovadistill.data import scale_point

    path = Path(path)
    if not path.exists():
        raise ConfigError(f"rows file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        raw = [[float(c) for c in row] for row in reader if row and any(c.strip() for c in row)]
    if not raw:
        return np.empty((0, model.p))
    scaled = np.empty((len(raw), model.p))
    for i, row in enumerate(raw):
        scaled[i], _ = scale_point(row, model.specs)
    return scaled


def cmd_benchmark(cfg: dict) -> int:
    t0 = time.monotonic()
    out = Path(cfg.get("out", "."))
    seed = int(cfg.get("seed", 0))
    b = cfg.get("benchmark", {})
    functions = b.get("functions", list(SUITE_NAMES))
    bad = [f for f in functions if f not in SUITE_NAMES]
    if bad:
        raise ConfigError(f"unknown benchmark functions: {bad}")
    n = int(b.get("n", 3000))
    mc = McConfig(m_anchor=int(b.get("m_anchor", 30)), m_comp=int(b.get("m_comp", 30)),
                  seed=seed)
    h = float(b.get("h", cfg.get("screening", {}).get("h", 0.1)))
    report = run_benchmark(functions, n=n, mc=mc, h=h, seed=seed)
    wall = report.pop("wall_time_s")
    _write_report(out / "benchmark.json", report, cfg, t0)
    for name in functions:
        print(f"  {name}: AUROC {report['functions'][name]['auroc']:.3f}")
    print(f"benchmark: average AUROC {report['average_auroc']:.3f} ({wall:.1f}s)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="anovadistill",
        description="Distill a black-box tabular predictor into a functional "
                    "ANOVA surrogate and explain it.",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("screen", cmd_screen),
        ("distill", cmd_distill),
        ("explain", cmd_explain),
        ("benchmark", cmd_benchmark),
    ):
        p = sub.add_parser(name)
        p.set_defaults(fn=fn)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--data", help="CSV path or synthetic:<n>")
        p.add_argument("--predictor", help="analytic:<F1..F10> or external:<command>")
        p.add_argument("--K", type=int, help="maximum interaction order")
        p.add_argument("--tau", type=float, help="relative screening threshold")
        p.add_argument("--h", type=float, help="finite-difference bandwidth")
        p.add_argument("--seed", type=int, help="base RNG seed")
        p.add_argument("--out", help="output directory")
        if name == "distill":
            p.add_argument("--screening-result", dest="screening_result",
                           help="reuse an existing screening.json")
        if name == "explain":
            p.add_argument("--model", help="fitted model.json")
            p.add_argument("--rows", help="CSV of raw rows for local attributions")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        for extra in ("screening_result", "model", "rows"):
            val = getattr(args, extra, None)
            if val is not None:
                cfg[extra] = val
        return args.fn(cfg)
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PredictorError as exc:
        print(f"predictor error: {exc}", file=sys.stderr)
        return EXIT_PREDICTOR
    except (FitError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
