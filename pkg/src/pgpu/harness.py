"""Experiment orchestration: pipeline runners, baselines, the suite, and result files."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping

import numpy as np

from .core import (
    FlipRateSpec,
    PipelineConfig,
    estimate_boundary_cv,
    estimate_boundary_min,
    fit_relabelled_classifier,
    observed_gap,
)
from .datagen import (
    PUDataset,
    estimate_clean_gap,
    flip_labels,
    gen_overlap_square,
    gen_triangles,
    load_csv,
    rank_normalized_gap,
    split,
)
from .kernels import KernelSpec
from .kmm import KmmConfig
from .svm import (
    PlattCalibration,
    SvmConfig,
    SvmModel,
    decision_values,
    predict_proba_batch,
    train_prob_svm,
    train_weighted_svm,
)

METHOD_NAMES = ("pgpu", "pgpu_cv", "svm_naive", "elkan", "clean")

RESULTS_FILE = "results.csv"
SUMMARY_FILE = "summary.json"
TIMINGS_FILE = "timings.csv"


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment suite.

    ``flip`` may be a single flip-rate setting, a sequence of settings, or
    None for clean data. ``dataset_n`` is the total sample size (split evenly
    per class for the triangles generator).
    """

    dataset_source: str | Mapping[str, str] = "triangles"
    flip: FlipRateSpec | tuple[FlipRateSpec, ...] | None = None
    methods: tuple[str, ...] = ("pgpu", "svm_naive")
    n_splits: int = 10
    master_seed: int = 0
    svm: SvmConfig = SvmConfig()
    kmm: KmmConfig = KmmConfig()
    n_prime: int = 3
    dataset_n: int = 2000
    train_fraction: float = 0.75
    kmm_kernel: KernelSpec | None = None

    def __post_init__(self) -> None:
        if self.n_splits < 1:
            raise ValueError("n_splits must be at least 1")
        if not self.methods:
            raise ValueError("methods must be nonempty")
        for m in self.methods:
            if m not in METHOD_NAMES:
                raise ValueError(f"unknown method {m!r}; valid: {METHOD_NAMES}")
        if isinstance(self.dataset_source, str):
            if self.dataset_source not in ("triangles", "overlap_square"):
                raise ValueError(f"unknown dataset_source {self.dataset_source!r}")
        elif not (isinstance(self.dataset_source, Mapping) and "csv" in self.dataset_source):
            raise ValueError("dataset_source must be 'triangles', 'overlap_square', or {'csv': path}")
        if self.dataset_n < 4:
            raise ValueError("dataset_n must be at least 4")

    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(svm=self.svm, kmm=self.kmm, n_prime=self.n_prime,
                              kmm_kernel=self.kmm_kernel)


@dataclass(frozen=True)
class ResultRecord:
    """Accuracy summary for one method on one flip setting across all splits."""

    method: str
    setting: str
    accuracy_mean: float
    accuracy_std: float
    per_split: tuple[float, ...]
    split_ids: tuple[int, ...]
    errors: tuple[str, ...]
    wall_time_s: float
    cell_times: tuple[tuple[int, float], ...] = field(default=())


def derive_seed(master_seed: int, *parts) -> int:
    """Stable per-cell seed derivation, reproducible across runs and platforms."""
    payload = repr((int(master_seed),) + tuple(parts)).encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "little") % (2**32)


def evaluate(model: SvmModel, calib: PlattCalibration | None, test: PUDataset) -> float:
    """Fraction of test points whose decision sign matches the latent label.

    The calibration argument is accepted for interface symmetry with the
    probability pipeline; accuracy only uses the decision sign.
    """
    del calib
    if test.y is None:
        raise ValueError("evaluation requires latent labels")
    pred = np.where(decision_values(model, test.X) >= 0.0, 1, -1)
    return float(np.mean(pred == test.y))


def run_pgpu(train: PUDataset, test: PUDataset, config: PipelineConfig = PipelineConfig(),
             boundary_mode: str = "min_nprime", cv_seed: int = 0) -> float:
    """Full pipeline: estimate observed gaps, pick the boundary, relabel,
    reweight with KMM, train the weighted SVM, and score on the test set."""
    if boundary_mode not in ("min_nprime", "cv"):
        raise ValueError(f"unknown boundary_mode {boundary_mode!r}")
    model, calib = train_prob_svm(train.X, train.s, config.svm)
    gaps = observed_gap(predict_proba_batch(model, calib, train.X))
    if boundary_mode == "cv":
        boundary = estimate_boundary_cv(train, config, seed=cv_seed)
    else:
        boundary = estimate_boundary_min(gaps, train.s, config.n_prime)
    final, _, _ = fit_relabelled_classifier(train.X, train.s, gaps, boundary, config)
    return evaluate(final, None, test)


def run_svm_naive(train: PUDataset, test: PUDataset,
                  config: PipelineConfig = PipelineConfig()) -> float:
    """Baseline: unweighted SVM that treats the observed PU labels as truth."""
    kernel = config.svm.resolve_kernel(train.dim)
    model = train_weighted_svm(train.X, train.s, np.ones(train.n), config.svm.C, kernel)
    return evaluate(model, None, test)


def elkan_weights(c: float, p_pos_unlabelled) -> np.ndarray:
    """Per-unlabelled-example positive weight w = ((1-c)/c) * p/(1-p), clipped to [0, 1]."""
    if not c > 0:
        raise ValueError("label frequency estimate must be positive")
    p = np.asarray(p_pos_unlabelled, dtype=float)
    w = ((1.0 - c) / c) * (p / (1.0 - p))
    return np.clip(w, 0.0, 1.0)


def run_elkan(train: PUDataset, test: PUDataset, config: PipelineConfig = PipelineConfig(),
              seed: int = 0) -> float:
    """Reweighting baseline: estimate the label frequency c on a held-out
    20% of the training data, then duplicate each unlabelled example into a
    weighted positive and a weighted negative copy."""
    n = train.n
    perm = np.random.default_rng(seed).permutation(n)
    n_fit = int(round(0.8 * n))
    n_fit = min(max(n_fit, 2), n - 1)
    fit_idx = np.sort(perm[:n_fit])
    cal_idx = np.sort(perm[n_fit:])
    cal_pos = cal_idx[train.s[cal_idx] == 1]
    if cal_pos.size == 0:
        raise ValueError("no observed positives in the calibration split")
    model, calib = train_prob_svm(train.X[fit_idx], train.s[fit_idx], config.svm)
    c = float(predict_proba_batch(model, calib, train.X[cal_pos]).mean())
    if c <= 0:
        raise ValueError("estimated label frequency is zero")

    pos = np.flatnonzero(train.s == 1)
    unl = np.flatnonzero(train.s == -1)
    w_unl = elkan_weights(c, predict_proba_batch(model, calib, train.X[unl]))
    X_big = np.vstack([train.X[pos], train.X[unl], train.X[unl]])
    y_big = np.concatenate([
        np.ones(pos.size, dtype=int),
        np.ones(unl.size, dtype=int),
        -np.ones(unl.size, dtype=int),
    ])
    w_big = np.concatenate([np.ones(pos.size), w_unl, 1.0 - w_unl])
    kernel = config.svm.resolve_kernel(train.dim)
    final = train_weighted_svm(X_big, y_big, w_big, config.svm.C, kernel)
    return evaluate(final, None, test)


def _normalize_settings(flip) -> list[tuple[str, FlipRateSpec | None]]:
    if flip is None:
        return [("none", None)]
    if isinstance(flip, FlipRateSpec):
        return [(flip.describe(), flip)]
    out = []
    for spec in flip:
        if not isinstance(spec, FlipRateSpec):
            raise ValueError("flip entries must be FlipRateSpec instances")
        out.append((spec.describe(), spec))
    if not out:
        return [("none", None)]
    return out


def _make_dataset(config: ExperimentConfig, setting_idx: int) -> PUDataset:
    seed = derive_seed(config.master_seed, "gen", setting_idx)
    src = config.dataset_source
    if src == "triangles":
        half = config.dataset_n // 2
        return gen_triangles(half, config.dataset_n - half, seed)
    if src == "overlap_square":
        return gen_overlap_square(config.dataset_n, seed)
    return load_csv(src["csv"])


def _run_method(name: str, train: PUDataset, test: PUDataset, pcfg: PipelineConfig,
                seed: int) -> float:
    if name == "pgpu":
        return run_pgpu(train, test, pcfg, boundary_mode="min_nprime")
    if name == "pgpu_cv":
        return run_pgpu(train, test, pcfg, boundary_mode="cv", cv_seed=seed)
    if name == "svm_naive":
        return run_svm_naive(train, test, pcfg)
    if name == "elkan":
        return run_elkan(train, test, pcfg, seed=seed)
    raise ValueError(f"unknown method {name!r}")


def _aggregate(method: str, setting: str,
               cells: list[tuple[int, float | None, str | None, float]]) -> ResultRecord:
    oks = [(sid, acc) for sid, acc, err, _ in cells if err is None]
    accs = tuple(acc for _, acc in oks)
    if accs:
        mean = float(np.mean(accs))
        std = float(np.std(accs, ddof=1)) if len(accs) > 1 else 0.0
    else:
        mean = math.nan
        std = math.nan
    return ResultRecord(
        method=method,
        setting=setting,
        accuracy_mean=mean,
        accuracy_std=std,
        per_split=accs,
        split_ids=tuple(sid for sid, _ in oks),
        errors=tuple(f"split {sid}: {err}" for sid, _, err, _ in cells if err is not None),
        wall_time_s=float(sum(t for _, _, _, t in cells)),
        cell_times=tuple((sid, t) for sid, _, _, t in cells),
    )


def run_suite(config: ExperimentConfig) -> list[ResultRecord]:
    """Run every (setting x split x method) cell and aggregate accuracies.

    Per-cell failures are recorded in the matching record's ``errors`` and do
    not abort the remaining cells. Identical configs give identical records
    apart from wall times.
    """
    settings = _normalize_settings(config.flip)
    pcfg = config.pipeline()
    records: list[ResultRecord] = []
    for si, (sname, fspec) in enumerate(settings):
        clean = _make_dataset(config, si)
        if fspec is None:
            pu = clean
        else:
            gap = rank_normalized_gap(estimate_clean_gap(clean, config.svm), clean.y)
            pu = flip_labels(clean, gap, fspec, seed=derive_seed(config.master_seed, "flip", si))
        cells: dict[str, list[tuple[int, float | None, str | None, float]]] = {
            m: [] for m in config.methods
        }
        for split_id in range(config.n_splits):
            sseed = derive_seed(config.master_seed, "split", si, split_id)
            tr, te = split(pu, config.train_fraction, sseed)
            tr_blind = tr.without_latent()
            clean_tr = clean_te = None
            if "clean" in config.methods:
                clean_tr, clean_te = split(clean, config.train_fraction, sseed)
            for m in config.methods:
                started = time.perf_counter()
                acc: float | None
                err: str | None
                try:
                    if m == "clean":
                        acc = run_svm_naive(clean_tr.without_latent(), clean_te, pcfg)
                    else:
                        mseed = derive_seed(config.master_seed, "method", si, split_id, m)
                        acc = _run_method(m, tr_blind, te, pcfg, mseed)
                    err = None
                except (ValueError, RuntimeError) as exc:
                    acc, err = None, str(exc)
                cells[m].append((split_id, acc, err, time.perf_counter() - started))
        for m in config.methods:
            records.append(_aggregate(m, sname, cells[m]))
    return records


def summarize(records: list[ResultRecord]) -> dict:
    rows = []
    for r in records:
        rows.append({
            "method": r.method,
            "setting": r.setting,
            "accuracy_mean": None if math.isnan(r.accuracy_mean) else r.accuracy_mean,
            "accuracy_std": None if math.isnan(r.accuracy_std) else r.accuracy_std,
            "n_splits_ok": len(r.per_split),
            "errors": list(r.errors),
        })
    return {"results": rows}


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def write_results(records: list[ResultRecord], out_dir) -> dict[str, Path]:
    """Emit results.csv and summary.json (deterministic given the records'
    accuracies) plus timings.csv (wall-clock, inherently run-dependent)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res_rows = []
    timing_rows = []
    for r in records:
        for sid, acc in zip(r.split_ids, r.per_split):
            res_rows.append([r.method, r.setting, sid, repr(acc)])
        for sid, t in r.cell_times:
            timing_rows.append([r.method, r.setting, sid, f"{t:.6f}"])
    paths = {
        RESULTS_FILE: out / RESULTS_FILE,
        SUMMARY_FILE: out / SUMMARY_FILE,
        TIMINGS_FILE: out / TIMINGS_FILE,
    }
    paths[RESULTS_FILE].write_text(
        _csv_text(["method", "setting", "split", "accuracy"], res_rows), encoding="utf-8")
    paths[SUMMARY_FILE].write_text(
        json.dumps(summarize(records), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    paths[TIMINGS_FILE].write_text(
        _csv_text(["method", "setting", "split", "wall_time_s"], timing_rows), encoding="utf-8")
    return paths


def _kernel_from_dict(d) -> KernelSpec | None:
    if d is None:
        return None
    if not isinstance(d, Mapping):
        raise ValueError("kernel must be null or an object with 'kind' (and 'gamma')")
    unknown = set(d) - {"kind", "gamma"}
    if unknown:
        raise ValueError(f"unknown kernel fields: {sorted(unknown)}")
    kind = d.get("kind", "rbf")
    if kind == "linear":
        return KernelSpec(kind="linear")
    return KernelSpec(kind=kind, gamma=float(d.get("gamma", 1.0)))


def _kernel_to_dict(k: KernelSpec | None):
    if k is None:
        return None
    if k.kind == "linear":
        return {"kind": "linear"}
    return {"kind": k.kind, "gamma": k.gamma}


def _flip_from_dict(d) -> FlipRateSpec:
    if not isinstance(d, Mapping):
        raise ValueError("flip setting must be an object with 'kind' and parameters")
    unknown = set(d) - {"kind", "alpha", "beta"}
    if unknown:
        raise ValueError(f"unknown flip fields: {sorted(unknown)}")
    beta = d.get("beta")
    return FlipRateSpec(d.get("kind", ""), float(d.get("alpha", -1.0)),
                        None if beta is None else float(beta))


def _flip_to_dict(f: FlipRateSpec) -> dict:
    out = {"kind": f.kind, "alpha": f.alpha}
    if f.beta is not None:
        out["beta"] = f.beta
    return out


def config_from_dict(d: Mapping) -> ExperimentConfig:
    """Build an ExperimentConfig from the JSON object form, rejecting unknown keys."""
    if not isinstance(d, Mapping):
        raise ValueError("config must be a JSON object")
    valid = {f.name for f in fields(ExperimentConfig)}
    unknown = set(d) - valid
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    kwargs: dict = {}
    if "dataset_source" in d:
        kwargs["dataset_source"] = d["dataset_source"]
    if "flip" in d:
        flip = d["flip"]
        if flip is None:
            kwargs["flip"] = None
        elif isinstance(flip, (list, tuple)):
            kwargs["flip"] = tuple(_flip_from_dict(x) for x in flip)
        else:
            kwargs["flip"] = _flip_from_dict(flip)
    if "methods" in d:
        kwargs["methods"] = tuple(d["methods"])
    for key in ("n_splits", "master_seed", "n_prime", "dataset_n"):
        if key in d:
            kwargs[key] = int(d[key])
    if "train_fraction" in d:
        kwargs["train_fraction"] = float(d["train_fraction"])
    if "svm" in d:
        sd = d["svm"]
        unknown = set(sd) - {"C", "kernel"}
        if unknown:
            raise ValueError(f"unknown svm fields: {sorted(unknown)}")
        kwargs["svm"] = SvmConfig(C=float(sd.get("C", 1.0)), kernel=_kernel_from_dict(sd.get("kernel")))
    if "kmm" in d:
        kd = d["kmm"]
        unknown = set(kd) - {"upper_bound_B", "epsilon", "max_iters", "tol"}
        if unknown:
            raise ValueError(f"unknown kmm fields: {sorted(unknown)}")
        eps = kd.get("epsilon")
        kwargs["kmm"] = KmmConfig(
            upper_bound_B=float(kd.get("upper_bound_B", 1000.0)),
            epsilon=None if eps is None else float(eps),
            max_iters=int(kd.get("max_iters", 5000)),
            tol=float(kd.get("tol", 1e-6)),
        )
    if "kmm_kernel" in d:
        kwargs["kmm_kernel"] = _kernel_from_dict(d["kmm_kernel"])
    return ExperimentConfig(**kwargs)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    if cfg.flip is None:
        flip = None
    elif isinstance(cfg.flip, FlipRateSpec):
        flip = _flip_to_dict(cfg.flip)
    else:
        flip = [_flip_to_dict(f) for f in cfg.flip]
    return {
        "dataset_source": cfg.dataset_source if isinstance(cfg.dataset_source, str)
        else dict(cfg.dataset_source),
        "flip": flip,
        "methods": list(cfg.methods),
        "n_splits": cfg.n_splits,
        "master_seed": cfg.master_seed,
        "svm": {"C": cfg.svm.C, "kernel": _kernel_to_dict(cfg.svm.kernel)},
        "kmm": {
            "upper_bound_B": cfg.kmm.upper_bound_B,
            "epsilon": cfg.kmm.epsilon,
            "max_iters": cfg.kmm.max_iters,
            "tol": cfg.kmm.tol,
        },
        "n_prime": cfg.n_prime,
        "dataset_n": cfg.dataset_n,
        "train_fraction": cfg.train_fraction,
        "kmm_kernel": _kernel_to_dict(cfg.kmm_kernel),
    }
