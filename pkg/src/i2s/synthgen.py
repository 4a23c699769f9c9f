"""Deterministic synthetic bimanual-interaction generator.

Every sequence is a deterministic kinematic template plus seeded Gaussian
jitter. Subjects carry a latent signature (hand scale, preferred motion
frequency, approach tempo, baseline finger curl); objects carry an
inter-hand separation envelope and articulation amplitude. "grasp" clips are
a short approach-and-hold, "use" clips oscillate at the subject's frequency.

Those signatures are what make the pipeline separable end to end: hand
scale feeds the spatial family, the separation envelope feeds the
inter-hand family, and the articulation pattern feeds the kinematic and
frequency families.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pose import Dataset, Sequence

INTERACTIONS = ("grasp", "use")

_FINGER_ANGLES = (0.96, 0.31, 0.0, -0.26, -0.56)  # radians from +y in the palm plane
_METACARPALS = (0.050, 0.092, 0.098, 0.090, 0.080)  # wrist -> mcp, meters
_PHALANGES = (
    (0.046, 0.036, 0.030),
    (0.042, 0.026, 0.020),
    (0.046, 0.029, 0.021),
    (0.042, 0.027, 0.020),
    (0.034, 0.021, 0.018),
)


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 6
    n_objects: int = 4
    sequences_per_cell: int = 10
    fps: float = 30.0
    grasp_seconds: float = 5.0
    use_seconds: float = 11.0
    noise_std: float = 0.002
    seed: int = 42

    def __post_init__(self):
        if self.n_subjects < 2 or self.n_objects < 2:
            raise ValueError("need at least 2 subjects and 2 objects")
        if self.sequences_per_cell < 1:
            raise ValueError("sequences_per_cell must be >= 1")
        if not self.fps > 0:
            raise ValueError("fps must be positive")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        for secs in (self.grasp_seconds, self.use_seconds):
            if int(round(secs * self.fps)) < 4:
                raise ValueError("window too short: need at least 4 frames per clip")


def _hand_frames(scale: float, curl: np.ndarray) -> np.ndarray:
    """Right-hand joint positions over time, (T, 21, 3), wrist at the origin.

    Fingers fan out in the xy-plane; ``curl`` pitches each phalanx
    progressively toward -z.
    """
    t = curl.shape[0]
    joints = np.zeros((t, 21, 3))
    for finger in range(5):
        ang = _FINGER_ANGLES[finger]
        direction = np.array([np.sin(ang), np.cos(ang), 0.0])
        pos = _METACARPALS[finger] * scale * direction[None, :].repeat(t, axis=0)
        joints[:, 1 + 4 * finger] = pos
        for k, length in enumerate(_PHALANGES[finger], start=1):
            pitch = curl * k
            bone = (
                np.cos(pitch)[:, None] * direction[None, :]
                - np.sin(pitch)[:, None] * np.array([0.0, 0.0, 1.0])[None, :]
            )
            pos = pos + length * scale * bone
            joints[:, 1 + 4 * finger + k] = pos
    return joints


def _smoothstep(x: np.ndarray) -> np.ndarray:
    s = np.clip(x, 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def _sequence_frames(
    subject: dict, obj: dict, interaction: str, n_frames: int, fps: float
) -> np.ndarray:
    t = np.arange(n_frames) / fps
    if interaction == "use":
        phase = 2.0 * np.pi * subject["freq"] * t
        separation = obj["separation"] + obj["amplitude"] * np.sin(phase)
        curl = subject["curl"] + obj["curl_amplitude"] * np.sin(phase + 1.0)
    else:
        ease = _smoothstep(t / (1.8 / subject["tempo"]))
        separation = obj["separation"] + 0.16 * (1.0 - ease)
        open_curl = max(0.05, subject["curl"] - 0.25)
        curl = open_curl + (subject["curl"] - open_curl) * ease
    right = _hand_frames(subject["scale"], curl)
    left = right * np.array([-1.0, 1.0, 1.0])
    offset = np.zeros((n_frames, 1, 3))
    offset[:, 0, 0] = separation / 2.0
    return np.concatenate([right + offset, left - offset], axis=1)


def generate(config: SynthConfig) -> Dataset:
    """Build the full synthetic dataset, deterministic per seed."""
    n_frames = {
        "grasp": int(round(config.grasp_seconds * config.fps)),
        "use": int(round(config.use_seconds * config.fps)),
    }
    subj_span = max(config.n_subjects - 1, 1)
    obj_span = max(config.n_objects - 1, 1)
    sequences = []
    for i in range(config.n_subjects):
        fraction = i / subj_span
        subject = {
            "scale": 0.85 + 0.30 * fraction,
            "freq": 0.9 + 2.2 * fraction,
            "tempo": 0.9 + 0.2 * fraction,
            "curl": 0.30 + 0.25 * fraction,
        }
        subject_label = f"subject_{i + 1}"
        for j in range(config.n_objects):
            obj = {
                "separation": 0.14 + 0.08 * j,
                "amplitude": 0.012 + 0.009 * j,
                "curl_amplitude": 0.10 + 0.04 * j,
            }
            object_label = f"object_{j + 1}"
            for verb_idx, verb in enumerate(INTERACTIONS):
                template = _sequence_frames(
                    subject, obj, verb, n_frames[verb], config.fps
                )
                for r in range(config.sequences_per_cell):
                    if config.noise_std > 0:
                        rng = np.random.default_rng(
                            np.random.SeedSequence((config.seed, i, j, verb_idx, r))
                        )
                        frames = template + rng.normal(
                            0.0, config.noise_std, size=template.shape
                        )
                    else:
                        frames = template.copy()
                    sequences.append(
                        Sequence(
                            id=f"{subject_label}-{object_label}-{verb}-{r:03d}",
                            subject=subject_label,
                            object=object_label,
                            interaction=f"{object_label}_{verb}",
                            fps=config.fps,
                            frames=frames,
                        )
                    )
    return Dataset(tuple(sequences))
