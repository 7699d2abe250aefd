import numpy as np
import pytest

from jadce.channel import (assemble_H, export_realization, load_realization_bin,
                           small_scale)
from jadce.config import SystemConfig
from jadce.scenario import (DevicePlacement, antenna_positions, place_devices,
                            power_control, rician_factor, sample_activity)
from jadce.tsoamp import build_dictionary


@pytest.fixture(scope="module")
def cfg():
    return SystemConfig(N_r=32, K=24, K_a=5, M=16, G_r=64, delta_H=8)


@pytest.fixture(scope="module")
def placement(cfg):
    return place_devices(cfg, np.random.default_rng(2))


def test_pure_los_magnitude_and_phase(cfg, placement):
    los_cfg = cfg.replace(L_p=0)
    pl = place_devices(los_cfg, np.random.default_rng(2))
    h = small_scale(pl, los_cfg)
    kappa = rician_factor(pl.d_mid)[:, None]
    assert np.allclose(np.abs(h), np.sqrt(kappa / (kappa + 1.0)), rtol=1e-12)
    expected_phase = np.exp(1j * 2.0 * np.pi * pl.d_los / los_cfg.wavelength)
    np.testing.assert_allclose(h / np.abs(h), expected_phase, atol=1e-10)


def test_scattered_normalization_switch(cfg, placement):
    h_raw = small_scale(placement, cfg)
    h_norm = small_scale(placement, cfg.replace(nlos_norm=True))
    kappa = rician_factor(placement.d_mid)[:, None]
    los = np.sqrt(kappa / (kappa + 1.0)) * np.exp(
        1j * 2.0 * np.pi * placement.d_los / cfg.wavelength)
    np.testing.assert_allclose(h_norm - los, (h_raw - los) / np.sqrt(cfg.L_p),
                               rtol=1e-10, atol=1e-14)


def test_assemble_zeroes_inactive_rows(cfg, placement):
    act = sample_activity(cfg, np.random.default_rng(9))
    powers = power_control(cfg, placement.d_mid)
    real = assemble_H(act, placement, powers, cfg)
    inactive = ~act.alpha.astype(bool)
    assert np.all(real.H[inactive] == 0.0)
    assert np.all(np.abs(real.H[act.alpha.astype(bool)]) > 0.0)


def test_assemble_row_scaling(cfg, placement):
    act = sample_activity(cfg, np.random.default_rng(9))
    powers = power_control(cfg, placement.d_mid)
    real = assemble_H(act, placement, powers, cfg)
    k = int(act.active_idx[0])
    beta = cfg.wavelength / (4.0 * np.pi * placement.d_los[k])
    np.testing.assert_allclose(real.H[k], np.sqrt(powers[k]) * beta * real.h_small[k],
                               rtol=1e-12)


def test_literal_pathloss_squares_amplitude(cfg, placement):
    act = sample_activity(cfg, np.random.default_rng(9))
    powers = power_control(cfg, placement.d_mid)
    amp = assemble_H(act, placement, powers, cfg).H
    lit = assemble_H(act, placement, powers, cfg.replace(pathloss_mode="literal")).H
    k = int(act.active_idx[1])
    base = cfg.wavelength / (4.0 * np.pi * placement.d_los[k])
    np.testing.assert_allclose(lit[k], amp[k] * base, rtol=1e-12)


def _broadside_placement(cfg: SystemConfig, d: float) -> DevicePlacement:
    ants = antenna_positions(cfg)
    dev = np.array([[0.0, d]])
    d_los = np.linalg.norm(dev[:, None, :] - ants[None, :, :], axis=2)
    return DevicePlacement(
        device_xy=dev, scatterer_xy=np.zeros((1, 0, 2)), d_los=d_los,
        d_nlos=np.zeros((1, cfg.N_r, 0)), d_mid=d_los[:, cfg.N_r // 2],
        angles=np.zeros(1))


def test_wavefront_curvature_disperses_angular_energy():
    """A close device's row spreads over many angular bins of the full-array
    basis; a distant device's row stays concentrated. The subarray basis
    keeps the close device far more concentrated than the full basis does."""
    cfg = SystemConfig(L_p=0)
    full = build_dictionary(cfg.N_r, cfg.G_r, 1)
    sub = build_dictionary(cfg.N_r, cfg.G_r, 2)

    def top_frac(dic, d, top=16):
        h = small_scale(_broadside_placement(cfg, d), cfg)
        e = np.abs(h @ dic.D) ** 2
        e = np.sort(e[0])[::-1]
        return e[:top].sum() / e.sum()

    near_full = top_frac(full, 48.0)
    far_full = top_frac(full, 5000.0)
    near_sub = top_frac(sub, 48.0)
    assert far_full > 0.95
    assert near_full < 0.25
    assert near_sub > near_full + 0.1


def test_export_round_trip(tmp_path, cfg, placement):
    act = sample_activity(cfg, np.random.default_rng(4))
    powers = power_control(cfg, placement.d_mid)
    real = assemble_H(act, placement, powers, cfg)
    prefix = str(tmp_path / "chan")
    bin_path, csv_path = export_realization(real, prefix)
    back = load_realization_bin(bin_path, cfg.K, cfg.N_r)
    np.testing.assert_array_equal(back, real.H)
    lines = open(csv_path).read().splitlines()
    assert lines[0] == "k,n,re,im"
    assert len(lines) == 1 + cfg.K * cfg.N_r
    k, n, re, im = lines[1].split(",")
    assert (int(k), int(n)) == (0, 0)
    assert complex(float(re), float(im)) == real.H[0, 0]


def test_load_rejects_wrong_size(tmp_path):
    p = tmp_path / "bad.bin"
    np.zeros(7).tofile(p)
    with pytest.raises(ValueError):
        load_realization_bin(str(p), 2, 2)
