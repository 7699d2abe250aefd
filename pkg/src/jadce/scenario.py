"""Deployment geometry: device drops, scatterers, activity, link budget.

The receive array is a ULA on the x-axis at half-wavelength spacing, centered
on the origin. Devices are dropped in the upper half-plane by (angle, range)
around the array center; each NLoS path gets one scatterer point placed on a
constant-path-length ellipse so the total device-scatterer-antenna length
lands inside the configured window for every antenna.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig


class ScenarioError(RuntimeError):
    """Raised when a geometric draw cannot satisfy its constraints."""


_MAX_TRIES = 200


@dataclass
class DevicePlacement:
    device_xy: np.ndarray     # (K, 2)
    scatterer_xy: np.ndarray  # (K, L_p, 2)
    d_los: np.ndarray         # (K, N_r) exact per-antenna LoS distance [m]
    d_nlos: np.ndarray        # (K, N_r, L_p) total scattered path length [m]
    d_mid: np.ndarray         # (K,) LoS distance at the mid-array antenna
    angles: np.ndarray        # (K,) azimuth off broadside [rad]


@dataclass
class ActivityPattern:
    alpha: np.ndarray       # (K,) 0/1
    active_idx: np.ndarray  # (K_a,) sorted


def antenna_positions(cfg: SystemConfig) -> np.ndarray:
    """(N_r, 2) antenna coordinates on the x-axis."""
    n = np.arange(cfg.N_r)
    x = (n - (cfg.N_r - 1) / 2.0) * cfg.wavelength / 2.0
    return np.stack([x, np.zeros_like(x)], axis=1)


def place_devices(cfg: SystemConfig, rng: np.random.Generator) -> DevicePlacement:
    ants = antenna_positions(cfg)
    mid = cfg.N_r // 2
    ant_mid = ants[mid]
    # Mid-array antenna sits lambda/4 off the array center, so inset the range
    # draw by lambda/4 to keep d_mid inside the configured window exactly.
    inset = cfg.wavelength / 4.0
    lo, hi = cfg.d_los_range
    if hi - lo <= 2 * inset:
        raise ScenarioError("d_los_range is narrower than the mid-antenna offset")

    theta = rng.uniform(np.deg2rad(-80.0), np.deg2rad(80.0), size=cfg.K)
    r_c = rng.uniform(lo + inset, hi - inset, size=cfg.K)
    dev = np.stack([r_c * np.sin(theta), r_c * np.cos(theta)], axis=1)

    d_los = np.linalg.norm(dev[:, None, :] - ants[None, :, :], axis=2)
    d_mid = d_los[:, mid]

    half_ap = cfg.N_r * cfg.wavelength / 4.0  # max antenna offset from the mid element
    n_lo, n_hi = cfg.d_nlos_range
    scat = np.zeros((cfg.K, cfg.L_p, 2))
    d_nlos = np.zeros((cfg.K, cfg.N_r, cfg.L_p))
    for k in range(cfg.K):
        L_min = max(n_lo + half_ap, d_mid[k] + 0.5)
        L_max = n_hi - half_ap
        if cfg.L_p > 0 and L_min >= L_max:
            raise ScenarioError(
                f"no admissible scattered path length for device at d={d_mid[k]:.1f} m "
                f"(window {cfg.d_nlos_range}, aperture margin {half_ap:.2f} m)")
        for l in range(cfg.L_p):
            scat[k, l] = _draw_scatterer(rng, dev[k], ant_mid, ants, L_min, L_max,
                                         n_lo, n_hi)
            d_dev = np.linalg.norm(dev[k] - scat[k, l])
            d_nlos[k, :, l] = d_dev + np.linalg.norm(scat[k, l] - ants, axis=1)
    return DevicePlacement(dev, scat, d_los, d_nlos, d_mid, theta)


def _draw_scatterer(rng, dev, ant_mid, ants, L_min, L_max, n_lo, n_hi):
    """One scatterer on an ellipse with foci (device, mid antenna)."""
    focal = dev - ant_mid
    c = np.linalg.norm(focal) / 2.0
    center = (dev + ant_mid) / 2.0
    u_hat = focal / (2.0 * c)
    v_hat = np.array([-u_hat[1], u_hat[0]])
    for _ in range(_MAX_TRIES):
        L = rng.uniform(L_min, L_max)
        a = L / 2.0
        b = np.sqrt(max(a * a - c * c, 0.0))
        psi = rng.uniform(0.0, 2.0 * np.pi)
        p = center + a * np.cos(psi) * u_hat + b * np.sin(psi) * v_hat
        if p[1] <= 0.0:
            continue  # behind the array
        total = np.linalg.norm(dev - p) + np.linalg.norm(p - ants, axis=1)
        if total.min() >= n_lo and total.max() <= n_hi:
            return p
    raise ScenarioError("scatterer draw failed to satisfy the path-length window")


def sample_activity(cfg: SystemConfig, rng: np.random.Generator) -> ActivityPattern:
    """Exactly K_a active devices, uniformly chosen."""
    idx = np.sort(rng.choice(cfg.K, size=cfg.K_a, replace=False))
    alpha = np.zeros(cfg.K, dtype=int)
    alpha[idx] = 1
    return ActivityPattern(alpha=alpha, active_idx=idx)


def rician_factor(d_mid: np.ndarray) -> np.ndarray:
    """Distance-dependent Rician K-factor (linear) from its dB law."""
    return 10.0 ** ((13.0 - 0.03 * np.asarray(d_mid)) / 10.0)


def power_control(cfg: SystemConfig, d_mid: np.ndarray) -> np.ndarray:
    """Per-device transmit power [W], compensating path loss at 100 m reference."""
    return cfg.P_t_watts * (np.asarray(d_mid) / 100.0) ** 2


def large_scale_gain(cfg: SystemConfig, d: np.ndarray) -> np.ndarray:
    """Amplitude multiplier applied to the small-scale channel.

    "friis-amplitude" uses wavelength/(4 pi d) so that the squared magnitude is
    the Friis power gain; "literal" applies the squared form directly as an
    amplitude.
    """
    base = cfg.wavelength / (4.0 * np.pi * np.asarray(d))
    if cfg.pathloss_mode == "literal":
        return base ** 2
    return base
