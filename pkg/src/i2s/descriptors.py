"""Per-frame spatial, orientation, and inter-hand features plus kinematic series.

The per-frame operations are pure functions of the joint array. Batched
``*_series`` variants over a whole (T, 42, 3) clip are the hot path used by
descriptor assembly; the single-frame wrappers delegate to them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pose import (
    COORDINATE_NAMES,
    FINGERS,
    FINGER_SEGMENTS,
    HAND_JOINT_NAMES,
    INDEX_MCP,
    JOINT_NAMES,
    LEFT_OFFSET,
    N_JOINTS,
    PINKY_MCP,
    PINKY_TIP,
    THUMB_TIP,
    WRIST,
    Sequence,
    finger_joint,
)

SPATIAL_SIZE = 344
ORIENTATION_SIZE = 36
IHSE_SIZE = 23
KINEMATIC_COLUMNS = 126


@dataclass(frozen=True)
class FrameFeatureRow:
    """Raw features for one frame, tagged with the family initial."""

    values: np.ndarray
    family: str  # "S", "O", or "I"


@dataclass(frozen=True)
class KinematicSeries:
    velocities: np.ndarray  # (T-1, 126), length units per second
    accelerations: np.ndarray  # (T-2, 126), length units per second^2


def _hand_indices() -> tuple[np.ndarray, ...]:
    bone_a, bone_b = [], []
    wrist_a, tip_b = [], []
    ang_prev, ang_mid, ang_next = [], [], []
    for hand in (0, LEFT_OFFSET):
        for finger in range(5):
            chain = [hand + WRIST] + [
                hand + finger_joint(finger, seg) for seg in range(4)
            ]
            for k in range(4):
                bone_a.append(chain[k])
                bone_b.append(chain[k + 1])
            for k in (1, 2, 3):  # interior joints: mcp, pip, dip
                ang_prev.append(chain[k - 1])
                ang_mid.append(chain[k])
                ang_next.append(chain[k + 1])
        for finger in range(5):
            wrist_a.append(hand + WRIST)
            tip_b.append(hand + finger_joint(finger, 3))
    return tuple(
        np.asarray(ix, dtype=np.intp)
        for ix in (bone_a, bone_b, wrist_a, tip_b, ang_prev, ang_mid, ang_next)
    )


(_BONE_A, _BONE_B, _WRIST_A, _TIP_B, _ANG_PREV, _ANG_MID, _ANG_NEXT) = _hand_indices()

_SPAN_A = np.asarray([THUMB_TIP, LEFT_OFFSET + THUMB_TIP], dtype=np.intp)
_SPAN_B = np.asarray([PINKY_TIP, LEFT_OFFSET + PINKY_TIP], dtype=np.intp)
_PALM_WRIST = np.asarray([WRIST, LEFT_OFFSET + WRIST], dtype=np.intp)
_PALM_INDEX = np.asarray([INDEX_MCP, LEFT_OFFSET + INDEX_MCP], dtype=np.intp)
_PALM_PINKY = np.asarray([PINKY_MCP, LEFT_OFFSET + PINKY_MCP], dtype=np.intp)


def _check_frames(frames: np.ndarray) -> np.ndarray:
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 3 or frames.shape[1:] != (N_JOINTS, 3):
        raise ValueError(f"expected (T, {N_JOINTS}, 3) joint array, got {frames.shape}")
    return frames


def spatial_series(frames: np.ndarray) -> np.ndarray:
    """Per-frame spatial features, shape (T, 344).

    Layout: 42 joint norms, 126 planar distances (xy, yz, xz per joint),
    40 bone lengths (4 per finger, wrist through tip), 10 wrist-to-fingertip
    distances, 126 raw coordinates.
    """
    frames = _check_frames(frames)
    t = frames.shape[0]
    x, y, z = frames[..., 0], frames[..., 1], frames[..., 2]
    norms = np.linalg.norm(frames, axis=2)
    planar = np.stack(
        [np.hypot(x, y), np.hypot(y, z), np.hypot(x, z)], axis=2
    ).reshape(t, 126)
    bones = np.linalg.norm(frames[:, _BONE_B] - frames[:, _BONE_A], axis=2)
    wrist_tip = np.linalg.norm(frames[:, _TIP_B] - frames[:, _WRIST_A], axis=2)
    coords = frames.reshape(t, 126)
    return np.concatenate([norms, planar, bones, wrist_tip, coords], axis=1)


def orientation_series(frames: np.ndarray) -> np.ndarray:
    """Per-frame orientation features, shape (T, 36).

    30 flexion angles (radians, angle between consecutive bone vectors at the
    mcp/pip/dip joints of each finger) followed by the two unit palm normals
    (cross of wrist->index_mcp and wrist->pinky_mcp per hand). Zero-length
    bones and degenerate palms map to angle 0 / zero normal.
    """
    frames = _check_frames(frames)
    t = frames.shape[0]
    u = frames[:, _ANG_MID] - frames[:, _ANG_PREV]
    v = frames[:, _ANG_NEXT] - frames[:, _ANG_MID]
    nu = np.linalg.norm(u, axis=2)
    nv = np.linalg.norm(v, axis=2)
    denom = nu * nv
    cosang = np.einsum("tkc,tkc->tk", u, v) / np.where(denom > 0, denom, 1.0)
    angles = np.arccos(np.clip(cosang, -1.0, 1.0))
    angles[denom == 0] = 0.0

    a = frames[:, _PALM_INDEX] - frames[:, _PALM_WRIST]
    b = frames[:, _PALM_PINKY] - frames[:, _PALM_WRIST]
    normal = np.cross(a, b)
    nn = np.linalg.norm(normal, axis=2, keepdims=True)
    normal = np.where(nn > 0, normal / np.where(nn > 0, nn, 1.0), 0.0)
    return np.concatenate([angles, normal.reshape(t, 6)], axis=1)


def ihse_series(frames: np.ndarray) -> np.ndarray:
    """Per-frame inter-hand spatial envelope, shape (T, 23).

    Right and left hand spans (thumb tip to pinky tip) followed by the 21
    distances between corresponding joints of the two hands.
    """
    frames = _check_frames(frames)
    spans = np.linalg.norm(frames[:, _SPAN_A] - frames[:, _SPAN_B], axis=2)
    inter = np.linalg.norm(
        frames[:, :LEFT_OFFSET] - frames[:, LEFT_OFFSET:], axis=2
    )
    return np.concatenate([spans, inter], axis=1)


def spatial_frame(joints: np.ndarray) -> FrameFeatureRow:
    return FrameFeatureRow(spatial_series(np.asarray(joints)[None])[0], "S")


def orientation_frame(joints: np.ndarray) -> FrameFeatureRow:
    return FrameFeatureRow(orientation_series(np.asarray(joints)[None])[0], "O")


def ihse_frame(joints: np.ndarray) -> FrameFeatureRow:
    return FrameFeatureRow(ihse_series(np.asarray(joints)[None])[0], "I")


def kinematic_series(seq: Sequence) -> KinematicSeries:
    """Finite-difference joint velocities and accelerations.

    v(t) = (p(t) - p(t-1)) * fps for t = 1..T-1 and
    a(t) = (v(t) - v(t-1)) * fps for t = 2..T-1, both (rows, 126).
    """
    if seq.n_frames < 3:
        raise ValueError(f"sequence '{seq.id}': need at least 3 frames")
    coords = seq.frames.reshape(seq.n_frames, KINEMATIC_COLUMNS)
    velocities = np.diff(coords, axis=0) * seq.fps
    accelerations = np.diff(velocities, axis=0) * seq.fps
    return KinematicSeries(velocities=velocities, accelerations=accelerations)


def spatial_feature_names() -> list[str]:
    names = [f"norm[{j}]" for j in JOINT_NAMES]
    for j in JOINT_NAMES:
        names += [f"planar_xy[{j}]", f"planar_yz[{j}]", f"planar_xz[{j}]"]
    for hand in ("R", "L"):
        for finger in FINGERS:
            for seg in FINGER_SEGMENTS:
                names.append(f"bone[{hand}_{finger}_{seg}]")
    for hand in ("R", "L"):
        names += [f"wrist_tip[{hand}_{finger}]" for finger in FINGERS]
    names += list(COORDINATE_NAMES)
    return names


def orientation_feature_names() -> list[str]:
    names = []
    for hand in ("R", "L"):
        for finger in FINGERS:
            for seg in ("mcp", "pip", "dip"):
                names.append(f"angle[{hand}_{finger}_{seg}]")
    for hand in ("R", "L"):
        names += [f"palm_n{ax}[{hand}]" for ax in "xyz"]
    return names


def ihse_feature_names() -> list[str]:
    return ["span[R]", "span[L]"] + [f"interhand[{j}]" for j in HAND_JOINT_NAMES]
