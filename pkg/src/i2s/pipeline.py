"""Three-stage classify-and-augment pipeline: object, then interaction, then subject.

Stage 1 predicts the manipulated object from the sequence descriptor. Its
label code is appended to the descriptor for stage 2 (interaction / HOI
recognition), and both codes are appended for stage 3 (subject
identification). Training augments with ground-truth codes by default;
inference always chains the predicted labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ensemble
from .aggregate import DescriptorConfig, build_descriptor, descriptor_matrix
from .ensemble import EnsembleModel, TrainParams
from .pose import Dataset, Sequence

PIPELINE_FORMAT_VERSION = 1
AUGMENT_MODES = ("truth", "oof", "none")
_STAGE_FILES = ("stage1_object.i2s", "stage2_hoi.i2s", "stage3_subject.i2s")


@dataclass(frozen=True)
class I2SPrediction:
    object: str
    hoi: str
    subject: str
    object_scores: dict
    hoi_scores: dict
    subject_scores: dict


@dataclass(frozen=True)
class PipelineTrace:
    """Instrumented single-sequence prediction with the exact stage inputs."""

    prediction: I2SPrediction
    descriptor: np.ndarray
    stage2_input: np.ndarray
    stage3_input: np.ndarray


@dataclass
class I2SModel:
    stage1: EnsembleModel
    stage2: EnsembleModel
    stage3: EnsembleModel
    config: DescriptorConfig
    object_codes: dict
    hoi_codes: dict
    augmented: bool = True

    def __post_init__(self):
        extra = 1 if self.augmented else 0
        if self.stage2.feature_count != self.stage1.feature_count + extra:
            raise ValueError("stage 2 feature count inconsistent with stage 1")
        if self.stage3.feature_count != self.stage1.feature_count + 2 * extra:
            raise ValueError("stage 3 feature count inconsistent with stage 1")

    @property
    def feature_count(self) -> int:
        return self.stage1.feature_count


def augment_features(vector, label: str, dictionary: dict) -> np.ndarray:
    """Copy of ``vector`` with the label's integer code appended."""
    vector = np.asarray(vector, dtype=np.float64)
    if label not in dictionary:
        raise ValueError(f"unknown label '{label}'")
    return np.concatenate([vector, [float(dictionary[label])]])


def _codes_column(labels, dictionary: dict) -> np.ndarray:
    return np.array([float(dictionary[lab]) for lab in labels])[:, None]


def _stratified_index_folds(labels, k: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    groups: dict = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    folds: list[list[int]] = [[] for _ in range(k)]
    dealt = 0
    for lab in sorted(groups):
        members = np.asarray(groups[lab])
        rng.shuffle(members)
        for j, idx in enumerate(members):
            folds[(dealt + j) % k].append(int(idx))
        dealt += len(members)
    return [np.asarray(sorted(f), dtype=np.intp) for f in folds]


def _oof_codes(X: np.ndarray, labels, params: TrainParams, dictionary: dict) -> np.ndarray:
    """Out-of-fold predicted label codes, one per row, for leakage-free augmentation."""
    n = X.shape[0]
    k = min(5, min(np.bincount([dictionary[lab] for lab in labels]).min(), n))
    k = max(2, int(k))
    folds = _stratified_index_folds(labels, k, params.seed)
    out = np.empty((n, 1))
    for fold in folds:
        if fold.size == 0:
            continue
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        sub = ensemble.train(X[mask], [labels[i] for i in np.nonzero(mask)[0]], params)
        pred, _ = sub.predict_batch(X[fold])
        out[fold, 0] = [float(dictionary[p]) for p in pred]
    return out


def train_on_features(
    X: np.ndarray,
    objects,
    hois,
    subjects,
    config: DescriptorConfig,
    params: TrainParams | None = None,
    augment: str = "truth",
) -> I2SModel:
    """Train the three stages on a precomputed descriptor matrix."""
    if params is None:
        params = TrainParams()
    if augment not in AUGMENT_MODES:
        raise ValueError(f"augment must be one of {AUGMENT_MODES}")
    objects = [str(v) for v in objects]
    hois = [str(v) for v in hois]
    subjects = [str(v) for v in subjects]
    for stage_no, labels in ((1, objects), (2, hois), (3, subjects)):
        if len(set(labels)) < 2:
            raise ValueError(f"stage {stage_no} needs ≥2 classes")

    object_codes = {c: i for i, c in enumerate(sorted(set(objects)))}
    hoi_codes = {c: i for i, c in enumerate(sorted(set(hois)))}

    stage1 = ensemble.train(X, objects, params)
    if augment == "none":
        stage2 = ensemble.train(X, hois, params)
        stage3 = ensemble.train(X, subjects, params)
    else:
        if augment == "truth":
            obj_col = _codes_column(objects, object_codes)
            hoi_col = _codes_column(hois, hoi_codes)
        else:
            obj_col = _oof_codes(X, objects, params, object_codes)
            hoi_col = _oof_codes(np.hstack([X, obj_col]), hois, params, hoi_codes)
        stage2 = ensemble.train(np.hstack([X, obj_col]), hois, params)
        stage3 = ensemble.train(np.hstack([X, obj_col, hoi_col]), subjects, params)
    return I2SModel(
        stage1=stage1,
        stage2=stage2,
        stage3=stage3,
        config=config,
        object_codes=object_codes,
        hoi_codes=hoi_codes,
        augmented=augment != "none",
    )


def train_pipeline(
    dataset: Dataset,
    config: DescriptorConfig,
    params: TrainParams | None = None,
    augment: str = "truth",
) -> I2SModel:
    X = descriptor_matrix(dataset, config)
    return train_on_features(
        X,
        [s.object for s in dataset],
        [s.interaction for s in dataset],
        [s.subject for s in dataset],
        config,
        params,
        augment,
    )


def _score_map(model: EnsembleModel, proba_row: np.ndarray) -> dict:
    return {c: float(p) for c, p in zip(model.classes, proba_row)}


def predict_features(model: I2SModel, X: np.ndarray) -> list[I2SPrediction]:
    """Chained prediction for descriptor rows; predicted codes feed stages 2-3."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.feature_count:
        raise ValueError(
            f"descriptor length mismatch: got {X.shape[-1]}, "
            f"model expects {model.feature_count}"
        )
    obj_labels, obj_proba = model.stage1.predict_batch(X)
    if model.augmented:
        obj_col = _codes_column(obj_labels, model.object_codes)
        x2 = np.hstack([X, obj_col])
    else:
        x2 = X
    hoi_labels, hoi_proba = model.stage2.predict_batch(x2)
    if model.augmented:
        hoi_col = _codes_column(hoi_labels, model.hoi_codes)
        x3 = np.hstack([x2, hoi_col])
    else:
        x3 = X
    subj_labels, subj_proba = model.stage3.predict_batch(x3)
    return [
        I2SPrediction(
            object=obj_labels[i],
            hoi=hoi_labels[i],
            subject=subj_labels[i],
            object_scores=_score_map(model.stage1, obj_proba[i]),
            hoi_scores=_score_map(model.stage2, hoi_proba[i]),
            subject_scores=_score_map(model.stage3, subj_proba[i]),
        )
        for i in range(X.shape[0])
    ]


def predict_pipeline(model: I2SModel, seq: Sequence) -> I2SPrediction:
    vec = build_descriptor(seq, model.config).values
    return predict_features(model, vec[None, :])[0]


def predict_pipeline_traced(model: I2SModel, seq: Sequence) -> PipelineTrace:
    vec = build_descriptor(seq, model.config).values
    if vec.shape[0] != model.feature_count:
        raise ValueError(
            f"descriptor length mismatch: got {vec.shape[0]}, "
            f"model expects {model.feature_count}"
        )
    obj_label, obj_scores = ensemble.predict(model.stage1, vec)
    x2 = augment_features(vec, obj_label, model.object_codes) if model.augmented else vec
    hoi_label, hoi_scores = ensemble.predict(model.stage2, x2)
    x3 = augment_features(x2, hoi_label, model.hoi_codes) if model.augmented else vec
    subj_label, subj_scores = ensemble.predict(model.stage3, x3)
    pred = I2SPrediction(
        object=obj_label,
        hoi=hoi_label,
        subject=subj_label,
        object_scores=obj_scores,
        hoi_scores=hoi_scores,
        subject_scores=subj_scores,
    )
    return PipelineTrace(prediction=pred, descriptor=vec, stage2_input=x2, stage3_input=x3)


def save_pipeline(model: I2SModel, directory) -> int:
    """Persist the three stage models plus a JSON manifest; returns total bytes."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    total = 0
    for fname, stage in zip(_STAGE_FILES, (model.stage1, model.stage2, model.stage3)):
        total += ensemble.save(stage, directory / fname)
    manifest = {
        "format_version": PIPELINE_FORMAT_VERSION,
        "features": str(model.config),
        "augmented": model.augmented,
        "object_codes": model.object_codes,
        "hoi_codes": model.hoi_codes,
    }
    data = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    (directory / "manifest.json").write_text(data, encoding="utf-8")
    return total + len(data.encode("utf-8"))


def pipeline_bytes(model: I2SModel) -> int:
    """Serialized size of the full pipeline without touching disk."""
    manifest = {
        "format_version": PIPELINE_FORMAT_VERSION,
        "features": str(model.config),
        "augmented": model.augmented,
        "object_codes": model.object_codes,
        "hoi_codes": model.hoi_codes,
    }
    total = len((json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8"))
    for stage in (model.stage1, model.stage2, model.stage3):
        total += len(ensemble.to_bytes(stage))
    return total


def load_pipeline(directory) -> I2SModel:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise ValueError(f"no pipeline manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("format_version") != PIPELINE_FORMAT_VERSION:
        raise ValueError(
            f"unsupported pipeline format version {manifest.get('format_version')}"
        )
    stages = [ensemble.load(directory / fname) for fname in _STAGE_FILES]
    return I2SModel(
        stage1=stages[0],
        stage2=stages[1],
        stage3=stages[2],
        config=DescriptorConfig.from_string(manifest["features"]),
        object_codes={k: int(v) for k, v in manifest["object_codes"].items()},
        hoi_codes={k: int(v) for k, v in manifest["hoi_codes"].items()},
        augmented=bool(manifest["augmented"]),
    )
