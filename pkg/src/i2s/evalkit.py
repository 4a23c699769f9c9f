"""Stratified cross-validation, classification metrics, ablation, PCA, benchmarks.

Fold evaluation may run on a small thread pool (capped by the I2S_THREADS
environment variable); results are aggregated in fold order so every report
is deterministic for a given seed.
"""

from __future__ import annotations

import io
import csv
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import pipeline as pl
from .aggregate import DescriptorConfig, descriptor_matrix
from .ensemble import TrainParams
from .pose import Dataset

STAGES = ("object", "hoi", "subject")


def worker_count() -> int:
    """Worker cap for parallel fold evaluation (I2S_THREADS overrides)."""
    env = os.environ.get("I2S_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise ValueError(f"I2S_THREADS must be an integer, got '{env}'") from exc
        if value < 1:
            raise ValueError("I2S_THREADS must be >= 1")
        return value
    return os.cpu_count() or 1


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[tuple[str, ...], ...]
    strata: dict  # sequence id -> stratification label actually used


def stratified_folds(dataset: Dataset, k: int, seed: int) -> FoldPlan:
    """Partition sequence ids into k folds stratified by (subject, HOI).

    Strata smaller than k fall back to HOI-only stratification. Within each
    stratum members are shuffled (seeded) and dealt round-robin, with the
    dealing offset rotating so overall fold sizes stay balanced.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(dataset) < k:
        raise ValueError(f"dataset of {len(dataset)} sequences is smaller than k={k}")
    pair_groups: dict = {}
    for seq in dataset:
        pair_groups.setdefault((seq.subject, seq.interaction), []).append(seq.id)
    groups: dict = {}
    strata: dict = {}
    for (subject, hoi), ids in pair_groups.items():
        if len(ids) >= k:
            key = f"{subject}||{hoi}"
        else:
            key = f"||{hoi}"
        groups.setdefault(key, []).extend(ids)
        for sid in ids:
            strata[sid] = key
    rng = np.random.default_rng(seed)
    folds: list[list[str]] = [[] for _ in range(k)]
    dealt = 0
    for key in sorted(groups):
        members = sorted(groups[key])
        order = rng.permutation(len(members))
        for j, idx in enumerate(order):
            folds[(dealt + j) % k].append(members[idx])
        dealt += len(members)
    return FoldPlan(folds=tuple(tuple(f) for f in folds), strata=strata)


@dataclass(frozen=True)
class ClassMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    classes: tuple[str, ...]
    per_class: dict
    macro_f1: float
    confusion: np.ndarray  # rows = true class, columns = predicted


def compute_metrics(y_true, y_pred, classes=None) -> MetricsReport:
    """One-vs-rest accuracy, precision, recall, F1 per class plus macro F1.

    Zero denominators yield 0 (a class never predicted has precision 0).
    """
    y_true = [str(v) for v in y_true]
    y_pred = [str(v) for v in y_pred]
    if len(y_true) == 0:
        raise ValueError("empty input")
    if len(y_true) != len(y_pred):
        raise ValueError("y_true and y_pred lengths differ")
    if classes is None:
        classes = sorted(set(y_true) | set(y_pred))
    classes = tuple(classes)
    index = {c: i for i, c in enumerate(classes)}
    n = len(y_true)
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        confusion[index[t], index[p]] += 1
    per_class = {}
    f1s = []
    for c in classes:
        i = index[c]
        tp = int(confusion[i, i])
        fp = int(confusion[:, i].sum()) - tp
        fn = int(confusion[i, :].sum()) - tp
        tn = n - tp - fp - fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[c] = ClassMetrics(
            accuracy=(tp + tn) / n,
            precision=precision,
            recall=recall,
            f1=f1,
            support=tp + fn,
        )
        f1s.append(f1)
    return MetricsReport(
        classes=classes,
        per_class=per_class,
        macro_f1=float(np.mean(f1s)),
        confusion=confusion,
    )


def average_reports(reports) -> MetricsReport:
    """Arithmetic mean over folds; confusion matrices are summed.

    Per-class values average over the folds where the class actually appears
    in the truth; macro F1 is the plain mean of the fold macro F1s.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to average")
    classes = reports[0].classes
    per_class = {}
    for c in classes:
        rows = [r.per_class[c] for r in reports if r.per_class[c].support > 0]
        if rows:
            per_class[c] = ClassMetrics(
                accuracy=float(np.mean([m.accuracy for m in rows])),
                precision=float(np.mean([m.precision for m in rows])),
                recall=float(np.mean([m.recall for m in rows])),
                f1=float(np.mean([m.f1 for m in rows])),
                support=int(sum(r.per_class[c].support for r in reports)),
            )
        else:
            per_class[c] = ClassMetrics(0.0, 0.0, 0.0, 0.0, 0)
    confusion = np.sum([r.confusion for r in reports], axis=0)
    return MetricsReport(
        classes=classes,
        per_class=per_class,
        macro_f1=float(np.mean([r.macro_f1 for r in reports])),
        confusion=confusion,
    )


@dataclass(frozen=True)
class CrossValResult:
    stages: dict  # stage name -> averaged MetricsReport
    fold_reports: tuple  # per fold: dict stage -> MetricsReport

    def stage_f1(self, stage: str) -> float:
        return self.stages[stage].macro_f1


def _truth_for_stage(seq, stage: str) -> str:
    if stage == "object":
        return seq.object
    if stage == "hoi":
        return seq.interaction
    return seq.subject


def cross_validate(
    dataset: Dataset,
    config: DescriptorConfig,
    params: TrainParams | None = None,
    k: int = 5,
    seed: int = 42,
    augment: str = "truth",
    family_cache=None,
) -> CrossValResult:
    """Stratified k-fold evaluation of the full three-stage pipeline."""
    if params is None:
        params = TrainParams()
    plan = stratified_folds(dataset, k, seed)
    sequences = list(dataset)
    X = descriptor_matrix(sequences, config, family_cache)
    position = {seq.id: i for i, seq in enumerate(sequences)}
    objects = [s.object for s in sequences]
    hois = [s.interaction for s in sequences]
    subjects = [s.subject for s in sequences]
    class_sets = {
        "object": tuple(sorted(set(objects))),
        "hoi": tuple(sorted(set(hois))),
        "subject": tuple(sorted(set(subjects))),
    }

    def run_fold(fold_ids):
        test_idx = np.asarray([position[sid] for sid in fold_ids], dtype=np.intp)
        mask = np.ones(len(sequences), dtype=bool)
        mask[test_idx] = False
        train_idx = np.nonzero(mask)[0]
        model = pl.train_on_features(
            X[train_idx],
            [objects[i] for i in train_idx],
            [hois[i] for i in train_idx],
            [subjects[i] for i in train_idx],
            config,
            params,
            augment,
        )
        preds = pl.predict_features(model, X[test_idx])
        report = {}
        for stage in STAGES:
            truth = [
                _truth_for_stage(sequences[i], stage) for i in test_idx
            ]
            predicted = [getattr(p, stage) for p in preds]
            report[stage] = compute_metrics(truth, predicted, class_sets[stage])
        return report

    with ThreadPoolExecutor(max_workers=min(worker_count(), k)) as pool:
        fold_reports = list(pool.map(run_fold, plan.folds))
    stages = {
        stage: average_reports([fr[stage] for fr in fold_reports]) for stage in STAGES
    }
    return CrossValResult(stages=stages, fold_reports=tuple(fold_reports))


@dataclass(frozen=True)
class AblationRow:
    feature_set: str
    object_f1: float
    hoi_f1: float
    subject_f1: float
    i2s_f1: float


def run_ablation(
    dataset: Dataset,
    configs,
    params: TrainParams | None = None,
    k: int = 5,
    seed: int = 42,
    augment: str = "truth",
) -> list[AblationRow]:
    """Cross-validate each descriptor config; rows sorted ascending by I2S F1."""
    configs = list(configs)
    if not configs:
        raise ValueError("no descriptor configs given")
    family_cache: dict = {}
    rows = []
    for config in configs:
        result = cross_validate(
            dataset, config, params, k=k, seed=seed, augment=augment,
            family_cache=family_cache,
        )
        o = result.stage_f1("object")
        h = result.stage_f1("hoi")
        s = result.stage_f1("subject")
        rows.append(
            AblationRow(
                feature_set=str(config),
                object_f1=o,
                hoi_f1=h,
                subject_f1=s,
                i2s_f1=(o + h + s) / 3.0,
            )
        )
    rows.sort(key=lambda r: r.i2s_f1)
    return rows


def ablation_csv(rows) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["feature_set", "object_f1", "hoi_f1", "subject_f1", "i2s_f1"])
    for r in rows:
        writer.writerow([r.feature_set, r.object_f1, r.hoi_f1, r.subject_f1, r.i2s_f1])
    return out.getvalue()


def pca2_components(matrix) -> np.ndarray:
    """Top two principal axes of the mean-centered data, shape (2, d).

    Each component's sign is fixed by making its largest-magnitude loading
    positive, so the axes are reproducible.
    """
    X = np.asarray(matrix, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("matrix must be 2-D")
    n, d = X.shape
    if n < 3:
        raise ValueError(f"need at least 3 rows, got {n}")
    if d < 2:
        raise ValueError(f"need at least 2 columns, got {d}")
    centered = X - X.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:2].copy()
    for i in range(2):
        j = int(np.argmax(np.abs(components[i])))
        if components[i, j] < 0:
            components[i] = -components[i]
    return components


def pca2(matrix) -> np.ndarray:
    """Mean-centered projection onto the top two principal components."""
    X = np.asarray(matrix, dtype=np.float64)
    components = pca2_components(X)
    return (X - X.mean(axis=0)) @ components.T


def bench(dataset: Dataset, config: DescriptorConfig, params: TrainParams | None = None) -> dict:
    """Wall-clock training time, median per-sequence inference time, model size."""
    if params is None:
        params = TrainParams()
    t0 = time.perf_counter()
    model = pl.train_pipeline(dataset, config, params)
    training_seconds = time.perf_counter() - t0
    repeats = []
    for _ in range(5):
        t0 = time.perf_counter()
        for seq in dataset:
            pl.predict_pipeline(model, seq)
        repeats.append((time.perf_counter() - t0) / len(dataset))
    return {
        "features": str(config),
        "sequences": len(dataset),
        "training_seconds": training_seconds,
        "inference_seconds_per_sequence": float(np.median(repeats)),
        "model_bytes": pl.pipeline_bytes(model),
    }
