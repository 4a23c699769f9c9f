"""Discrete Fourier analysis of joint-coordinate time series.

Four scalars summarize each spectrum over the positive-frequency bins
k = 1..floor(N/2) (the DC bin is excluded so a resting offset carries no
signal): total power, dominant frequency, spectral centroid, and spectral
entropy in bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pose import COORDINATE_NAMES, Sequence

FREQUENCY_SIZE = 504
SCALAR_NAMES = ("power", "domfreq", "centroid", "entropy")

# Coefficients whose magnitude falls below this many multiples of
# N * eps * max|x| are treated as exact zeros. FFT round-off on signals with
# cancelling bins (e.g. a constant series) otherwise leaves ~1e-13 residue
# that would defeat the zero-power rule.
_FLUSH_FACTOR = 32.0


@dataclass(frozen=True)
class Spectrum:
    coefficients: np.ndarray  # complex, length n
    psd: np.ndarray  # |X[k]|^2 / n, length n
    fps: float
    n: int


@dataclass(frozen=True)
class SpectralScalars:
    total_power: float
    dominant_frequency: float
    spectral_centroid: float
    spectral_entropy: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.total_power,
                self.dominant_frequency,
                self.spectral_centroid,
                self.spectral_entropy,
            ]
        )


def dft(series, fps: float) -> Spectrum:
    """Exact discrete Fourier transform X[k] = sum_n x[n] e^{-2πi nk/N}."""
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    n = x.shape[0]
    if n < 3:
        raise ValueError(f"series length {n} < 3")
    if not np.isfinite(x).all():
        raise ValueError("series contains non-finite values")
    if not fps > 0:
        raise ValueError("fps must be positive")
    coeff = np.fft.fft(x)
    scale = np.abs(x).max()
    if scale > 0:
        floor = _FLUSH_FACTOR * np.finfo(np.float64).eps * n * scale
        coeff[np.abs(coeff) < floor] = 0.0
    psd = (coeff.real**2 + coeff.imag**2) / n
    return Spectrum(coefficients=coeff, psd=psd, fps=float(fps), n=n)


def spectral_scalars(spectrum: Spectrum) -> SpectralScalars:
    """Summarize a spectrum over bins 1..floor(N/2).

    Zero total power (a static series) maps to all-zero scalars. Dominant
    frequency ties break toward the lowest bin.
    """
    half = spectrum.n // 2
    p = spectrum.psd[1 : half + 1]
    total = float(p.sum())
    if total == 0.0:
        return SpectralScalars(0.0, 0.0, 0.0, 0.0)
    freqs = np.arange(1, half + 1) * (spectrum.fps / spectrum.n)
    dominant = float(freqs[int(np.argmax(p))])
    centroid = float((freqs * p).sum() / total)
    q = p / total
    nz = q > 0
    entropy = float(-(q[nz] * np.log2(q[nz])).sum())
    return SpectralScalars(total, dominant, centroid, entropy)


def frequency_descriptor(seq: Sequence) -> np.ndarray:
    """Four spectral scalars for each of the 126 coordinate series.

    Returns a length-504 vector of (power, domfreq, centroid, entropy)
    blocks in coordinate order, matching spectral_scalars(dft(column)).
    """
    t = seq.n_frames
    if t < 3:
        raise ValueError(f"sequence '{seq.id}': need at least 3 frames")
    coords = seq.frames.reshape(t, 126)
    coeff = np.fft.fft(coords, axis=0)
    scale = np.abs(coords).max(axis=0)
    floor = _FLUSH_FACTOR * np.finfo(np.float64).eps * t * scale
    coeff[np.abs(coeff) < floor[None, :]] = 0.0
    psd = (coeff.real**2 + coeff.imag**2) / t

    half = t // 2
    p = psd[1 : half + 1, :]
    total = p.sum(axis=0)
    freqs = np.arange(1, half + 1) * (seq.fps / t)
    dominant = freqs[np.argmax(p, axis=0)]
    safe_total = np.where(total > 0, total, 1.0)
    centroid = (freqs[:, None] * p).sum(axis=0) / safe_total
    q = p / safe_total
    with np.errstate(divide="ignore", invalid="ignore"):
        logq = np.where(q > 0, np.log2(np.where(q > 0, q, 1.0)), 0.0)
    entropy = -(q * logq).sum(axis=0)

    zero = total == 0
    out = np.stack([total, dominant, centroid, entropy], axis=1)
    out[zero] = 0.0
    return out.reshape(FREQUENCY_SIZE)


def frequency_feature_names() -> list[str]:
    names = []
    for coord in COORDINATE_NAMES:
        names += [f"{scalar}[{coord}]" for scalar in SCALAR_NAMES]
    return names
