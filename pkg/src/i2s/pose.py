"""Domain types for bimanual 3D hand-pose sequences, JSONL I/O, validation,
and temporal segmentation.

A frame holds 42 joints (right hand joints 0-20, left hand joints 21-41).
Within a hand, joint 0 is the wrist, followed by four joints per finger in
the order thumb, index, middle, ring, pinky, each base to tip.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

N_JOINTS_PER_HAND = 21
N_JOINTS = 2 * N_JOINTS_PER_HAND
FRAME_VALUES = N_JOINTS * 3  # 126 flattened coordinates per frame

FINGERS = ("thumb", "index", "middle", "ring", "pinky")
FINGER_SEGMENTS = ("mcp", "pip", "dip", "tip")

WRIST = 0
LEFT_OFFSET = N_JOINTS_PER_HAND


def finger_joint(finger: int, segment: int) -> int:
    """Hand-local index of a finger joint (segment 0=mcp .. 3=tip)."""
    return 1 + 4 * finger + segment


TIP_JOINTS = tuple(finger_joint(f, 3) for f in range(5))
THUMB_TIP = finger_joint(0, 3)
PINKY_TIP = finger_joint(4, 3)
INDEX_MCP = finger_joint(1, 0)
PINKY_MCP = finger_joint(4, 0)

HAND_JOINT_NAMES = ("wrist",) + tuple(
    f"{finger}_{seg}" for finger in FINGERS for seg in FINGER_SEGMENTS
)
JOINT_NAMES = tuple(f"R_{n}" for n in HAND_JOINT_NAMES) + tuple(
    f"L_{n}" for n in HAND_JOINT_NAMES
)
COORDINATE_NAMES = tuple(f"{j}_{ax}" for j in JOINT_NAMES for ax in "xyz")

_REQUIRED_FIELDS = ("id", "subject", "object", "interaction", "fps", "frames")


@dataclass(frozen=True)
class Sequence:
    """One labelled hand-pose clip.

    ``frames`` is a (T, 42, 3) float64 array and is treated as immutable
    after construction; the array is marked read-only so instances can be
    shared freely across workers.
    """

    id: str
    subject: str
    object: str
    interaction: str
    fps: float
    frames: np.ndarray

    def __post_init__(self):
        frames = np.ascontiguousarray(self.frames, dtype=np.float64)
        if frames.ndim != 3 or frames.shape[1:] != (N_JOINTS, 3):
            raise ValueError(
                f"sequence '{self.id}': frames must have shape (T, {N_JOINTS}, 3), "
                f"got {frames.shape}"
            )
        if frames.shape[0] < 3:
            raise ValueError(
                f"sequence '{self.id}': {frames.shape[0]} frames < 3"
            )
        if not self.fps > 0:
            raise ValueError(f"sequence '{self.id}': fps must be positive")
        for label_field in ("id", "subject", "object", "interaction"):
            if not getattr(self, label_field):
                raise ValueError(f"sequence '{self.id}': empty {label_field}")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


@dataclass(frozen=True)
class Dataset:
    sequences: tuple[Sequence, ...]

    def __post_init__(self):
        sequences = tuple(self.sequences)
        seen = set()
        for seq in sequences:
            if seq.id in seen:
                raise ValueError(f"duplicate sequence id '{seq.id}'")
            seen.add(seq.id)
        object.__setattr__(self, "sequences", sequences)

    def __len__(self) -> int:
        return len(self.sequences)

    def __iter__(self):
        return iter(self.sequences)

    def __getitem__(self, i):
        return self.sequences[i]


def _parse_record(rec: dict, lineno: int) -> Sequence:
    for field in _REQUIRED_FIELDS:
        if field not in rec:
            raise ValueError(f"line {lineno}: missing field '{field}'")
    seq_id = rec["id"]
    raw_frames = rec["frames"]
    for idx, values in enumerate(raw_frames):
        if len(values) != FRAME_VALUES:
            raise ValueError(
                f"line {lineno}: sequence '{seq_id}' frame {idx}: "
                f"frame length {len(values)} ≠ {FRAME_VALUES}"
            )
    try:
        frames = np.asarray(raw_frames, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ValueError(
            f"line {lineno}: sequence '{seq_id}': non-numeric frame data ({exc})"
        ) from exc
    frames = frames.reshape(len(raw_frames), N_JOINTS, 3)
    try:
        return Sequence(
            id=str(seq_id),
            subject=str(rec["subject"]),
            object=str(rec["object"]),
            interaction=str(rec["interaction"]),
            fps=float(rec["fps"]),
            frames=frames,
        )
    except ValueError as exc:
        raise ValueError(f"line {lineno}: {exc}") from exc


def load_sequences(path) -> Dataset:
    """Parse a JSON Lines dataset (one sequence record per line).

    Non-finite coordinates are accepted here; use :func:`validate_sequence`
    to drop the affected frames before feature extraction.
    """
    sequences = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(rec, dict):
                raise ValueError(f"line {lineno}: record is not a JSON object")
            seq = _parse_record(rec, lineno)
            if seq.id in seen:
                raise ValueError(f"line {lineno}: duplicate sequence id '{seq.id}'")
            seen.add(seq.id)
            sequences.append(seq)
    return Dataset(tuple(sequences))


def save_sequences(dataset: Dataset, path) -> None:
    """Write a dataset in the canonical JSONL format (round-trip exact)."""
    with open(path, "w", encoding="utf-8") as fh:
        for seq in dataset:
            rec = {
                "id": seq.id,
                "subject": seq.subject,
                "object": seq.object,
                "interaction": seq.interaction,
                "fps": seq.fps,
                "frames": seq.frames.reshape(seq.n_frames, FRAME_VALUES).tolist(),
            }
            fh.write(json.dumps(rec) + "\n")


def validate_sequence(seq: Sequence) -> Sequence:
    """Drop every frame containing a non-finite coordinate.

    Frame order is otherwise preserved. Raises if fewer than 3 frames remain.
    """
    finite = np.isfinite(seq.frames).all(axis=(1, 2))
    if finite.all():
        return seq
    kept = seq.frames[finite]
    if kept.shape[0] < 3:
        raise ValueError(
            f"sequence '{seq.id}': sequence too short after validation"
        )
    return replace(seq, frames=kept)


def validate_dataset(dataset: Dataset) -> Dataset:
    return Dataset(tuple(validate_sequence(s) for s in dataset))


def segment_sequence(
    seq: Sequence, window_seconds: float, overlap_fraction: float
) -> list[Sequence]:
    """Cut a sequence into fixed-length windows.

    Window length W = round(window_seconds * fps) frames; consecutive windows
    start a stride of max(1, round(W * (1 - overlap_fraction))) apart.
    Trailing frames that cannot fill a whole window are discarded. Child ids
    are ``<parent id>#<start frame>`` and labels are inherited.
    """
    if not window_seconds > 0:
        raise ValueError("window_seconds must be positive")
    if not 0.0 <= overlap_fraction < 1.0:
        raise ValueError("overlap_fraction must be in [0, 1)")
    window = int(round(window_seconds * seq.fps))
    if window < 3:
        raise ValueError(f"window of {window} frames < 3")
    stride = max(1, int(round(window * (1.0 - overlap_fraction))))
    segments = []
    for start in range(0, seq.n_frames - window + 1, stride):
        segments.append(
            replace(
                seq,
                id=f"{seq.id}#{start}",
                frames=seq.frames[start : start + window],
            )
        )
    return segments
