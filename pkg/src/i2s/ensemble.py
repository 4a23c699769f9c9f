"""Self-contained gradient-boosted decision-tree multiclass classifier.

One regression tree per class per boosting round, fit to softmax gradients
with second-order (gradient and hessian) leaf weights. Split search is exact
greedy over sorted unique feature values; sorted row orders are partitioned
down the tree instead of re-sorted. Training is deterministic for a given
(rows, labels, params) including the seed.

Models persist to a versioned little-endian binary format with magic header
"I2S1"; see docs/model_format.md for the byte layout.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numba import njit

MAGIC = b"I2S1"
FORMAT_VERSION = 1

# Ridge term added to hessian sums in leaf weights and split gains, as in
# common boosted-tree implementations. Keeps weights bounded when
# probabilities saturate (hessians -> 0).
LAMBDA = 1.0


@dataclass(frozen=True)
class TrainParams:
    rounds: int = 100
    max_depth: int = 6
    learning_rate: float = 0.3
    min_split_gain: float = 0.0
    min_leaf_samples: int = 1
    subsample_fraction: float = 1.0
    seed: int = 42

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if not 0.0 < self.subsample_fraction <= 1.0:
            raise ValueError("subsample_fraction must be in (0, 1]")
        if self.min_leaf_samples < 1:
            raise ValueError("min_leaf_samples must be >= 1")
        if self.min_split_gain < 0.0:
            raise ValueError("min_split_gain must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class Tree:
    """Flat node arrays; feature == -1 marks a leaf, value holds its weight."""

    feature: np.ndarray  # int32
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    value: np.ndarray  # float64

    def __len__(self) -> int:
        return len(self.feature)

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            nd = node[idx]
            f = self.feature[nd]
            go_left = X[idx, f] < self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active[idx] = self.feature[node[idx]] >= 0
        return self.value[node]


@njit(cache=True)
def _best_split(S, X, g, h, lam, min_leaf, gtot, htot):
    """Exact greedy split over every feature's sorted order.

    Returns (raw_gain, feature, position) where raw_gain is twice the split
    gain before the 1/2 factor; ties resolve to the lowest feature index and
    then the lowest threshold.
    """
    d, n = S.shape
    parent = gtot * gtot / (htot + lam)
    best_gain = -np.inf
    best_f = -1
    best_pos = -1
    for f in range(d):
        gl = 0.0
        hl = 0.0
        bg = -np.inf
        bpos = -1
        for i in range(n - 1):
            r = S[f, i]
            gl += g[r]
            hl += h[r]
            if X[r, f] == X[S[f, i + 1], f]:
                continue
            nl = i + 1
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            gr = gtot - gl
            hr = htot - hl
            gain = gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent
            if gain > bg:
                bg = gain
                bpos = i
        if bg > best_gain:
            best_gain = bg
            best_f = f
            best_pos = bpos
    return best_gain, best_f, best_pos


@njit(cache=True)
def _partition(S, goes_left, n_left):
    """Split per-feature sorted row orders into left/right, preserving order."""
    d, n = S.shape
    sl = np.empty((d, n_left), dtype=np.int32)
    sr = np.empty((d, n - n_left), dtype=np.int32)
    for f in range(d):
        a = 0
        b = 0
        for i in range(n):
            r = S[f, i]
            if goes_left[r]:
                sl[f, a] = r
                a += 1
            else:
                sr[f, b] = r
                b += 1
    return sl, sr


class _TreeBuilder:
    def __init__(self, X, g, h, params: TrainParams):
        self.X = X
        self.g = g
        self.h = h
        self.params = params
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []

    def _add_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def build(self, S: np.ndarray, depth: int) -> int:
        node = self._add_node()
        rows = S[0]
        n = rows.shape[0]
        gtot = float(self.g[rows].sum())
        htot = float(self.h[rows].sum())
        leaf_value = self.params.learning_rate * (-gtot / (htot + LAMBDA))
        if depth >= self.params.max_depth or n < max(2, 2 * self.params.min_leaf_samples):
            self.value[node] = leaf_value
            return node
        raw_gain, f, pos = _best_split(
            S, self.X, self.g, self.h, LAMBDA, self.params.min_leaf_samples, gtot, htot
        )
        if f < 0 or not 0.5 * raw_gain > self.params.min_split_gain:
            self.value[node] = leaf_value
            return node
        lo = self.X[S[f, pos], f]
        hi = self.X[S[f, pos + 1], f]
        thr = 0.5 * (lo + hi)
        goes_left = self.X[:, f] < thr
        n_left = int(goes_left[rows].sum())
        if n_left == 0 or n_left == n:
            # midpoint rounded onto a data value; treat as unsplittable
            self.value[node] = leaf_value
            return node
        sl, sr = _partition(S, goes_left, n_left)
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self.build(sl, depth + 1)
        self.right[node] = self.build(sr, depth + 1)
        return node

    def finish(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            value=np.asarray(self.value, dtype=np.float64),
        )


def _softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class EnsembleModel:
    classes: tuple[str, ...]
    trees: list  # [round][class] -> Tree
    params: TrainParams
    feature_count: int

    @property
    def label_codes(self) -> dict:
        return {c: i for i, c in enumerate(self.classes)}

    def decision_scores(self, X: np.ndarray, num_rounds: int | None = None) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.feature_count:
            raise ValueError(
                f"row length {X.shape[-1]} ≠ feature count {self.feature_count}"
            )
        scores = np.zeros((X.shape[0], len(self.classes)))
        for round_trees in self.trees[:num_rounds]:
            for k, tree in enumerate(round_trees):
                scores[:, k] += tree.predict(X)
        return scores

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _softmax(self.decision_scores(X))

    def predict_batch(self, X: np.ndarray):
        proba = self.predict_proba(X)
        codes = np.argmax(proba, axis=1)  # ties resolve to the lowest code
        labels = [self.classes[c] for c in codes]
        return labels, proba


def train(rows, labels, params: TrainParams | None = None) -> EnsembleModel:
    """Fit boosted trees, one per class per round, on softmax gradients."""
    if params is None:
        params = TrainParams()
    try:
        X = np.asarray(rows, dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"ragged rows: {exc}") from exc
    if X.ndim != 2:
        raise ValueError(f"rows must form a 2-D matrix, got ndim={X.ndim} (ragged rows?)")
    labels = [str(lab) for lab in labels]
    n, d = X.shape
    if len(labels) != n:
        raise ValueError(f"{len(labels)} labels for {n} rows")
    if n < 2:
        raise ValueError("need at least 2 training rows")
    if not np.isfinite(X).all():
        raise ValueError("training rows contain non-finite values")
    for lab in labels:
        if not lab:
            raise ValueError("labels must be non-empty strings")
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise ValueError(f"need ≥2 classes, got {len(classes)}")
    codes = {c: i for i, c in enumerate(classes)}
    y = np.array([codes[lab] for lab in labels])
    n_classes = len(classes)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0

    X = np.ascontiguousarray(X)
    sort_global = np.ascontiguousarray(
        np.argsort(X, axis=0, kind="stable").T.astype(np.int32)
    )
    rng = np.random.default_rng(params.seed)
    scores = np.zeros((n, n_classes))
    all_trees = []
    for _ in range(params.rounds):
        proba = _softmax(scores)
        if params.subsample_fraction < 1.0:
            m = max(1, int(round(params.subsample_fraction * n)))
            pick = rng.permutation(n)[:m]
            mask = np.zeros(n, dtype=np.bool_)
            mask[pick] = True
            s_root, _ = _partition(sort_global, mask, m)
        else:
            s_root = sort_global
        round_trees = []
        for k in range(n_classes):
            g = np.ascontiguousarray(proba[:, k] - onehot[:, k])
            h = np.ascontiguousarray(proba[:, k] * (1.0 - proba[:, k]))
            builder = _TreeBuilder(X, g, h, params)
            builder.build(s_root, 0)
            round_trees.append(builder.finish())
        for k, tree in enumerate(round_trees):
            scores[:, k] += tree.predict(X)
        all_trees.append(round_trees)
    return EnsembleModel(
        classes=classes, trees=all_trees, params=params, feature_count=d
    )


def predict(model: EnsembleModel, row) -> tuple[str, dict]:
    """Label plus softmax-normalized score per class for a single row."""
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1 or row.shape[0] != model.feature_count:
        raise ValueError(
            f"row length {row.shape[-1] if row.ndim else 0} ≠ "
            f"feature count {model.feature_count}"
        )
    labels, proba = model.predict_batch(row[None, :])
    scores = {c: float(p) for c, p in zip(model.classes, proba[0])}
    return labels[0], scores


def to_bytes(model: EnsembleModel) -> bytes:
    buf = bytearray()
    p = model.params
    buf += struct.pack(
        "<IIddIdQ",
        p.rounds,
        p.max_depth,
        p.learning_rate,
        p.min_split_gain,
        p.min_leaf_samples,
        p.subsample_fraction,
        p.seed,
    )
    buf += struct.pack("<II", model.feature_count, len(model.classes))
    for c in model.classes:
        raw = c.encode("utf-8")
        buf += struct.pack("<I", len(raw)) + raw
    buf += struct.pack("<I", len(model.trees))
    for round_trees in model.trees:
        for tree in round_trees:
            buf += struct.pack("<I", len(tree))
            buf += tree.feature.astype("<i4").tobytes()
            buf += tree.threshold.astype("<f8").tobytes()
            buf += tree.left.astype("<i4").tobytes()
            buf += tree.right.astype("<i4").tobytes()
            buf += tree.value.astype("<f8").tobytes()
    payload = bytes(buf)
    return MAGIC + struct.pack("<HQ", FORMAT_VERSION, len(payload)) + payload


class _Reader:
    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        self.offset = offset

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise ValueError("truncated model file")
        out = self.data[self.offset : self.offset + n]
        self.offset += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def from_bytes(data: bytes) -> EnsembleModel:
    rd = _Reader(data)
    if rd.take(len(MAGIC)) != MAGIC:
        raise ValueError("bad magic")
    (version,) = rd.unpack("<H")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version}")
    (payload_len,) = rd.unpack("<Q")
    if len(data) - rd.offset != payload_len:
        raise ValueError("truncated model file")
    rounds, max_depth, lr, msg, mls, sub, seed = rd.unpack("<IIddIdQ")
    params = TrainParams(
        rounds=rounds,
        max_depth=max_depth,
        learning_rate=lr,
        min_split_gain=msg,
        min_leaf_samples=mls,
        subsample_fraction=sub,
        seed=seed,
    )
    feature_count, n_classes = rd.unpack("<II")
    classes = []
    for _ in range(n_classes):
        (ln,) = rd.unpack("<I")
        classes.append(rd.take(ln).decode("utf-8"))
    (n_rounds,) = rd.unpack("<I")
    trees = []
    for _ in range(n_rounds):
        round_trees = []
        for _ in range(n_classes):
            (n_nodes,) = rd.unpack("<I")
            feature = np.frombuffer(rd.take(4 * n_nodes), dtype="<i4").astype(np.int32)
            threshold = np.frombuffer(rd.take(8 * n_nodes), dtype="<f8").astype(np.float64)
            left = np.frombuffer(rd.take(4 * n_nodes), dtype="<i4").astype(np.int32)
            right = np.frombuffer(rd.take(4 * n_nodes), dtype="<i4").astype(np.int32)
            value = np.frombuffer(rd.take(8 * n_nodes), dtype="<f8").astype(np.float64)
            bad = feature[feature >= 0]
            if bad.size and bad.max() >= feature_count:
                raise ValueError("split feature index out of range")
            round_trees.append(Tree(feature, threshold, left, right, value))
        trees.append(round_trees)
    if rd.offset != len(data):
        raise ValueError("trailing data after model payload")
    return EnsembleModel(
        classes=tuple(classes), trees=trees, params=params, feature_count=feature_count
    )


def save(model: EnsembleModel, path) -> int:
    """Write the model; returns the file size in bytes."""
    data = to_bytes(model)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def load(path) -> EnsembleModel:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
