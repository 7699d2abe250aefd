"""Spherical-wavefront Rician channel assembly.

Each device-antenna coefficient is built from exact per-antenna path lengths
(no planar approximation), a deterministic LoS term and a sum of unit-amplitude
scattered terms. Optionally the scattered sum is normalized by sqrt(L_p);
by default it is left unnormalized.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .scenario import ActivityPattern, DevicePlacement, large_scale_gain, rician_factor


@dataclass
class ChannelRealization:
    H: np.ndarray          # (K, N_r) effective rows: activity * sqrt(power) * gain * small-scale
    h_small: np.ndarray    # (K, N_r) small-scale part only
    alpha: np.ndarray      # (K,)
    powers: np.ndarray     # (K,) transmit powers [W]

    def active_rows(self) -> np.ndarray:
        return self.H[self.alpha.astype(bool)]


def small_scale(placement: DevicePlacement, cfg: SystemConfig) -> np.ndarray:
    """(K, N_r) small-scale coefficients from exact path lengths."""
    kappa = rician_factor(placement.d_mid)[:, None]
    two_pi = 2.0 * np.pi / cfg.wavelength
    los = np.sqrt(kappa / (kappa + 1.0)) * np.exp(1j * two_pi * placement.d_los)
    if cfg.L_p == 0:
        return los
    nlos = np.exp(1j * two_pi * placement.d_nlos).sum(axis=2)
    if cfg.nlos_norm:
        nlos = nlos / np.sqrt(cfg.L_p)
    return los + np.sqrt(1.0 / (kappa + 1.0)) * nlos


def assemble_H(activity: ActivityPattern, placement: DevicePlacement,
               powers: np.ndarray, cfg: SystemConfig) -> ChannelRealization:
    h = small_scale(placement, cfg)
    beta = large_scale_gain(cfg, placement.d_los)
    H = activity.alpha[:, None] * np.sqrt(powers)[:, None] * beta * h
    return ChannelRealization(H=H, h_small=h, alpha=activity.alpha.copy(),
                              powers=np.asarray(powers, dtype=float))


def export_realization(real: ChannelRealization, path_prefix: str) -> tuple[str, str]:
    """Write H to `<prefix>.bin` (interleaved float64 re/im, row-major) and
    `<prefix>.csv` (k, n, re, im). Returns the two paths."""
    H = real.H
    bin_path = path_prefix + ".bin"
    csv_path = path_prefix + ".csv"
    flat = np.empty(H.size * 2, dtype=np.float64)
    flat[0::2] = H.real.ravel()
    flat[1::2] = H.imag.ravel()
    flat.tofile(bin_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "n", "re", "im"])
        K, N = H.shape
        for k in range(K):
            for n in range(N):
                writer.writerow([k, n, repr(float(H[k, n].real)), repr(float(H[k, n].imag))])
    return bin_path, csv_path


def load_realization_bin(path: str, K: int, N_r: int) -> np.ndarray:
    flat = np.fromfile(path, dtype=np.float64)
    if flat.size != 2 * K * N_r:
        raise ValueError("binary channel dump has unexpected size")
    return (flat[0::2] + 1j * flat[1::2]).reshape(K, N_r)
