import numpy as np
import pytest

from jadce.baselines import oamp_mmv_single, swomp
from jadce.channel import assemble_H
from jadce.config import SystemConfig, get_profile
from jadce.frontend import build_frame
from jadce.harness import apply_axis, run_trial
from jadce.pilot import PilotMatrix, make_pilot
from jadce.scenario import place_devices, power_control, sample_activity
from jadce.tsoamp import run_tsoamp


def _link(cfg, seed):
    rng = np.random.default_rng(seed)
    placement = place_devices(cfg, rng)
    act = sample_activity(cfg, rng)
    chan = assemble_H(act, placement, power_control(cfg, placement.d_mid), cfg)
    pilot = make_pilot(cfg.M, cfg.K, np.random.default_rng(seed + 1))
    frame = build_frame(cfg, chan, pilot, np.random.default_rng(seed + 2))
    return chan, pilot, frame, act


def _nmse_db(H, H_hat):
    return 10.0 * np.log10(np.sum(np.abs(H - H_hat) ** 2) / np.sum(np.abs(H) ** 2))


@pytest.fixture(scope="module")
def clean_cfg():
    return SystemConfig(N_r=32, K=32, K_a=3, M=16, G_r=64, delta_H=8,
                        n_hires=32, sigma2_rel=1e-12, wavelength=0.2,
                        noise_psd=-132.0)


@pytest.mark.parametrize("seed", [100, 101, 102])
def test_swomp_noiseless_exact_support(clean_cfg, seed):
    chan, pilot, frame, act = _link(clean_cfg, seed)
    res = swomp(frame, pilot, clean_cfg)
    np.testing.assert_array_equal(res.alpha_hat, act.alpha)
    assert res.n_iter1 == clean_cfg.K_a          # stops right after the support
    assert _nmse_db(chan.H, res.H_hat) < -60.0
    assert res.X_hat is None and res.n_iter2 == 0
    np.testing.assert_array_equal(res.lambda_final, res.alpha_hat.astype(float))


def test_swomp_refit_is_least_squares(clean_cfg):
    chan, pilot, frame, act = _link(clean_cfg, 110)
    res = swomp(frame, pilot, clean_cfg)
    sup = np.flatnonzero(res.alpha_hat)
    coeffs, *_ = np.linalg.lstsq(pilot.S[:, sup], frame.Ytilde, rcond=None)
    np.testing.assert_allclose(res.H_hat[sup], coeffs / frame.agc, atol=1e-10)
    assert np.all(res.H_hat[res.alpha_hat == 0] == 0.0)


def test_swomp_zero_observation_selects_cap(clean_cfg):
    chan, pilot, frame, act = _link(clean_cfg, 120)
    frame.Ytilde = np.zeros_like(frame.Ytilde)
    res = swomp(frame, pilot, clean_cfg)
    assert res.alpha_hat.sum() == min(2 * clean_cfg.K_a, clean_cfg.M)
    assert np.all(np.isfinite(res.H_hat))
    assert np.max(np.abs(res.H_hat)) < 1e-10


def test_swomp_permutation_equivariant(clean_cfg):
    chan, pilot, frame, act = _link(clean_cfg, 130)
    rng = np.random.default_rng(0)
    perm = rng.permutation(clean_cfg.K)
    pilot_p = PilotMatrix(S=pilot.S[:, perm], row_idx=pilot.row_idx)
    res = swomp(frame, pilot, clean_cfg)
    res_p = swomp(frame, pilot_p, clean_cfg)
    np.testing.assert_array_equal(res_p.alpha_hat, res.alpha_hat[perm])
    np.testing.assert_allclose(res_p.H_hat, res.H_hat[perm], atol=1e-8)


@pytest.fixture(scope="module")
def far_cfg():
    # distant devices: planar wavefronts, the full-array angular basis is sparse
    return SystemConfig(N_r=32, K=24, K_a=4, M=24, G_r=64, delta_H=8,
                        n_hires=32, sigma2_rel=1e-12, wavelength=0.2,
                        noise_psd=-132.0, d_los_range=(995.0, 1005.0),
                        d_nlos_range=(995.0, 1210.0))


@pytest.mark.parametrize("seed", [200, 201])
def test_single_stage_matches_far_field(far_cfg, seed):
    chan, pilot, frame, act = _link(far_cfg, seed)
    res = oamp_mmv_single(frame, pilot, far_cfg)
    ref = run_tsoamp(frame, pilot, far_cfg)
    np.testing.assert_array_equal(res.alpha_hat, act.alpha)
    assert _nmse_db(chan.H, res.H_hat) < -60.0
    assert abs(_nmse_db(chan.H, res.H_hat) - _nmse_db(chan.H, ref.H_hat)) < 3.0


def test_single_stage_support_statistic_in_unit_interval(far_cfg):
    chan, pilot, frame, act = _link(far_cfg, 210)
    res = oamp_mmv_single(frame, pilot, far_cfg)
    assert np.all(res.lambda_final >= 0.0) and np.all(res.lambda_final <= 1.0)
    assert set(res.clamp_events) == {"ext_z", "gamma", "v_tilde"}


def test_single_stage_permutation_equivariant(far_cfg):
    chan, pilot, frame, act = _link(far_cfg, 220)
    rng = np.random.default_rng(1)
    perm = rng.permutation(far_cfg.K)
    pilot_p = PilotMatrix(S=pilot.S[:, perm], row_idx=pilot.row_idx)
    res = oamp_mmv_single(frame, pilot, far_cfg)
    res_p = oamp_mmv_single(frame, pilot_p, far_cfg)
    np.testing.assert_allclose(res_p.lambda_final, res.lambda_final[perm], atol=1e-8)
    np.testing.assert_array_equal(res_p.alpha_hat, res.alpha_hat[perm])


def test_two_stage_beats_single_stage_near_field():
    """Close devices smear energy across the full-array angular grid; the
    subarray-aware solver should hold a clear estimation margin there."""
    cfg = apply_axis(get_profile("desk"), "d", 20.0)
    gaps = []
    for i in range(8):
        ts = run_trial(cfg, "tsoamp", 500 + i)
        mmv = run_trial(cfg, "oampmmv", 500 + i)
        gaps.append(10.0 * np.log10(mmv.nmse) - 10.0 * np.log10(ts.nmse))
    gaps = np.array(gaps)
    assert np.all(gaps > 0.0)
    assert gaps.mean() > 3.0
