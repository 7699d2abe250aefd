"""Receive front end: AGC and the mixed-resolution ADC bank.

A single real gain is applied to the whole receive matrix so the real part of
the high-resolution columns has RMS 1/3, placing roughly three standard
deviations across the quantizer core [-1, 1]. Low-resolution columns are then
quantized per real dimension by a midrise uniform quantizer; high-resolution
columns pass through unquantized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .config import SystemConfig
from .pilot import PilotMatrix

AGC_TARGET_RMS = 1.0 / 3.0


@dataclass
class QuantizerSpec:
    B: int
    clamp: float
    thresholds: np.ndarray  # (2^B + 1,) estimator bin edges; outer edges at -/+ clamp
    levels: np.ndarray      # (2^B,) output levels, strictly increasing


def make_quantizer(B: int, clamp: float = 2.22) -> QuantizerSpec:
    if B < 1:
        raise ValueError("quantizer needs B >= 1")
    if clamp <= 1.0:
        raise ValueError("clamp must exceed the quantizer core edge 1")
    b = np.arange(1, 2 ** B)
    thresholds = np.concatenate([[-clamp], -1.0 + 2.0 ** (1 - B) * b, [clamp]])
    levels = -1.0 + 2.0 ** (-B) * (2 * np.arange(1, 2 ** B + 1) - 1)
    return QuantizerSpec(B=B, clamp=clamp, thresholds=thresholds, levels=levels)


def bin_index(x: np.ndarray, B: int) -> np.ndarray:
    """0-based bin index per sample. Saturation bins are half-infinite: the
    estimator clamp plays no role in the forward quantization."""
    idx = np.ceil((np.asarray(x) + 1.0) * 2.0 ** (B - 1)).astype(int) - 1
    return np.clip(idx, 0, 2 ** B - 1)


def quantize(Y: np.ndarray, qspec: QuantizerSpec, hi_set: np.ndarray) -> np.ndarray:
    """Quantize the low-resolution columns of Y, real and imaginary parts
    independently; columns in hi_set pass through."""
    out = qspec.levels[bin_index(Y.real, qspec.B)] + 1j * qspec.levels[bin_index(Y.imag, qspec.B)]
    out = np.asarray(out, dtype=complex)
    if len(hi_set):
        out[:, hi_set] = Y[:, hi_set]
    return out


def agc_gain(Y: np.ndarray, hi_set: np.ndarray) -> tuple[float, bool]:
    """Gain normalizing the real-part RMS of the high-resolution columns to
    1/3. Falls back to all columns when no high-resolution antenna exists
    (the gain stage sits before the ADCs and sees the analog signal either
    way). Returns (gain, warning) with gain 1 on an all-zero input."""
    cols = Y[:, hi_set] if len(hi_set) else Y
    rms = np.sqrt(np.mean(cols.real ** 2))
    if rms <= 0.0 or not np.isfinite(rms):
        return 1.0, True
    return AGC_TARGET_RMS / rms, False


@dataclass
class QuantizedFrame:
    Ytilde: np.ndarray    # (M, N_r) mixed-resolution observation, post-AGC
    hi_set: np.ndarray    # high-resolution column indices
    lo_set: np.ndarray    # low-resolution column indices
    quantizer: QuantizerSpec
    agc: float            # applied gain (divide estimates by this)
    agc_warning: bool
    sigma2_gen: float     # noise variance used when the frame was generated [W]


def build_frame(cfg: SystemConfig, chan: ChannelRealization, pilot: PilotMatrix,
                rng: np.random.Generator) -> QuantizedFrame:
    """Simulate one pilot frame: Y = S H + W, AGC, mixed-resolution ADC."""
    Y0 = pilot.S @ chan.H
    if cfg.sigma2_rel is not None:
        mean_pow = float(np.mean(np.abs(Y0) ** 2))
        sigma2 = cfg.sigma2_rel * (mean_pow if mean_pow > 0 else 1.0)
    else:
        sigma2 = cfg.sigma2
    M, N = Y0.shape
    W = np.sqrt(sigma2 / 2.0) * (rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N)))
    Y = Y0 + W
    hi = cfg.hi_set()
    gain, warn = agc_gain(Y, hi)
    qspec = make_quantizer(cfg.B, cfg.clamp)
    Ytilde = quantize(gain * Y, qspec, hi)
    return QuantizedFrame(Ytilde=Ytilde, hi_set=hi, lo_set=cfg.lo_set(),
                          quantizer=qspec, agc=gain, agc_warning=warn,
                          sigma2_gen=sigma2)
