"""Temporal pooling over per-frame features and descriptor assembly.

Three pooling schemes are used: DACT (column mean and population standard
deviation), RS-DACT (DACT plus column min and max), and moment statistics
(mean, population skewness, excess kurtosis). A descriptor concatenates the
pooled family blocks in the canonical order S, O, K, F, I.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import descriptors, spectral
from .pose import COORDINATE_NAMES, Sequence

FAMILY_ORDER = "SOKFI"
FAMILY_SIZES = {"S": 688, "O": 144, "K": 756, "F": 504, "I": 92}
FAMILY_NAMES = {
    "S": "spatial",
    "O": "orientation",
    "K": "kinematic",
    "F": "frequency",
    "I": "ihse",
}


@dataclass(frozen=True)
class AggregateStats:
    """Column statistics of a (T, d) feature matrix.

    Skewness and kurtosis are defined as 0 for zero-variance columns so a
    constant feature can never poison downstream training with NaNs.
    """

    mean: np.ndarray
    std: np.ndarray
    minimum: np.ndarray
    maximum: np.ndarray
    skewness: np.ndarray
    kurtosis: np.ndarray


def column_stats(matrix) -> AggregateStats:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    mean = m.mean(axis=0)
    centered = m - mean
    m2 = (centered**2).mean(axis=0)
    m3 = (centered**3).mean(axis=0)
    m4 = (centered**4).mean(axis=0)
    std = np.sqrt(m2)
    nonzero = m2 > 0
    safe_m2 = np.where(nonzero, m2, 1.0)
    skew = np.where(nonzero, m3 / safe_m2**1.5, 0.0)
    kurt = np.where(nonzero, m4 / safe_m2**2 - 3.0, 0.0)
    return AggregateStats(
        mean=mean,
        std=std,
        minimum=m.min(axis=0),
        maximum=m.max(axis=0),
        skewness=skew,
        kurtosis=kurt,
    )


def dact(matrix) -> np.ndarray:
    """Column means followed by column population standard deviations."""
    s = column_stats(matrix)
    return np.concatenate([s.mean, s.std])


def rs_dact(matrix) -> np.ndarray:
    """DACT extended with column minima and maxima (range-sensitive)."""
    s = column_stats(matrix)
    return np.concatenate([s.mean, s.std, s.minimum, s.maximum])


def moment_stats(matrix) -> np.ndarray:
    """Column means, population skewness, and excess kurtosis."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] < 1:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if m.shape[0] < 2:
        raise ValueError(f"need at least 2 rows for moment statistics, got {m.shape[0]}")
    s = column_stats(m)
    return np.concatenate([s.mean, s.skewness, s.kurtosis])


@dataclass(frozen=True)
class DescriptorConfig:
    """An ordered subset of the five feature families.

    Input order is irrelevant; families are stored in canonical S, O, K, F, I
    order so e.g. "KOSI" and "SOKI" denote the same descriptor.
    """

    families: tuple[str, ...]

    def __post_init__(self):
        if not self.families:
            raise ValueError("descriptor config needs at least one family")
        object.__setattr__(
            self,
            "families",
            tuple(f for f in FAMILY_ORDER if f in self.families),
        )

    @classmethod
    def from_string(cls, text: str) -> "DescriptorConfig":
        valid = ", ".join(FAMILY_ORDER)
        seen = []
        for ch in text.strip().upper():
            if ch not in FAMILY_ORDER:
                raise ValueError(
                    f"unknown descriptor initial '{ch}' (valid: {valid})"
                )
            if ch in seen:
                raise ValueError(
                    f"duplicate descriptor initial '{ch}' (valid: {valid})"
                )
            seen.append(ch)
        if not seen:
            raise ValueError(f"empty feature set (valid initials: {valid})")
        return cls(tuple(seen))

    @property
    def size(self) -> int:
        return sum(FAMILY_SIZES[f] for f in self.families)

    def __str__(self) -> str:
        return "".join(self.families)


ALL_FAMILIES = DescriptorConfig.from_string(FAMILY_ORDER)


@dataclass(frozen=True)
class DescriptorVector:
    values: np.ndarray
    config: DescriptorConfig

    @property
    def layout(self) -> tuple[tuple[str, str], ...]:
        return descriptor_layout(self.config)

    def __len__(self) -> int:
        return len(self.values)


def family_vector(seq: Sequence, family: str) -> np.ndarray:
    """Pooled descriptor block for a single family."""
    frames = seq.frames
    if family == "S":
        return dact(descriptors.spatial_series(frames))
    if family == "O":
        return rs_dact(descriptors.orientation_series(frames))
    if family == "K":
        ks = descriptors.kinematic_series(seq)
        return np.concatenate(
            [moment_stats(ks.velocities), moment_stats(ks.accelerations)]
        )
    if family == "F":
        return spectral.frequency_descriptor(seq)
    if family == "I":
        return rs_dact(descriptors.ihse_series(frames))
    raise ValueError(f"unknown family '{family}'")


def build_descriptor(seq: Sequence, config: DescriptorConfig) -> DescriptorVector:
    """Assemble the per-sequence descriptor for the configured families.

    Family K pools accelerations over T-2 rows, so it needs T >= 4 frames;
    the other families work for any valid sequence (T >= 3).
    """
    blocks = [family_vector(seq, fam) for fam in config.families]
    values = np.concatenate(blocks)
    return DescriptorVector(values=values, config=config)


def family_matrix(sequences, family: str) -> np.ndarray:
    rows = [family_vector(seq, family) for seq in sequences]
    return np.vstack(rows) if rows else np.empty((0, FAMILY_SIZES[family]))


def descriptor_matrix(sequences, config: DescriptorConfig, family_cache=None) -> np.ndarray:
    """Stack descriptors for many sequences into an (N, d) matrix.

    ``family_cache`` maps family initial to a precomputed (N, size) matrix;
    ablation runs share extraction work across configs this way.
    """
    sequences = list(sequences)
    if family_cache is None:
        family_cache = {}
    blocks = []
    for fam in config.families:
        if fam not in family_cache:
            family_cache[fam] = family_matrix(sequences, fam)
        blocks.append(family_cache[fam])
    return np.hstack(blocks)


def _family_base_names(family: str) -> list[str]:
    if family == "S":
        return descriptors.spatial_feature_names()
    if family == "O":
        return descriptors.orientation_feature_names()
    if family == "I":
        return descriptors.ihse_feature_names()
    raise ValueError(f"no base names for family '{family}'")


def family_layout(family: str) -> list[str]:
    """Feature names for one pooled family block, in output order."""
    if family == "S":
        base = _family_base_names("S")
        return [f"mean({n})" for n in base] + [f"std({n})" for n in base]
    if family in ("O", "I"):
        base = _family_base_names(family)
        names = []
        for stat in ("mean", "std", "min", "max"):
            names += [f"{stat}({n})" for n in base]
        return names
    if family == "K":
        names = []
        for series in ("vel", "acc"):
            for stat in ("mean", "skew", "kurt"):
                names += [f"{stat}({series}[{c}])" for c in COORDINATE_NAMES]
        return names
    if family == "F":
        return spectral.frequency_feature_names()
    raise ValueError(f"unknown family '{family}'")


@lru_cache(maxsize=None)
def _layout_for(families: tuple[str, ...]) -> tuple[tuple[str, str], ...]:
    entries = []
    for fam in families:
        entries += [(fam, name) for name in family_layout(fam)]
    return tuple(entries)


def descriptor_layout(config: DescriptorConfig) -> tuple[tuple[str, str], ...]:
    """(family, feature name) for every descriptor index, in order."""
    return _layout_for(config.families)
