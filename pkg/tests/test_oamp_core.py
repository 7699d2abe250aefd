import numpy as np
import pytest

from jadce.oamp_core import (GAMMA_GUARD, VAR_FLOOR, OampState, denoise,
                             detection_columns, extrinsic_u, init_state,
                             le_step, project, sigma2_threshold,
                             update_sigma2, update_slab_var,
                             update_sparsity_common)
from jadce.pilot import make_pilot

# support probability / posterior mean references computed once with a
# Gauss-Hermite Bayes oracle (tests/oracles.gh_spike_slab), frozen to 12 digits
DENOISE_CASES = [
    # r, tau, psi, lam, pi, mu_re, mu_im
    ((0.8 + 0.3j), 0.2, 1.5, 0.1, 2.466234470631e-01, 1.740871391034e-01, 6.528267716377e-02),
    ((0.05 - 0.02j), 0.1, 2.0, 0.1, 5.409749971948e-03, 2.576071415213e-04, -1.030428566085e-04),
    ((-1.2 + 0.9j), 0.5, 0.7, 0.3, 7.114082511524e-01, -4.979857758067e-01, 3.734893318550e-01),
    ((2.5 + 0j), 0.05, 4.0, 0.02, 1.000000000000e+00, 2.469135802469e+00, 0.0),
    (0j, 0.3, 1.0, 0.5, 1.875000000000e-01, 0.0, 0.0),
    ((-0.4 - 1.1j), 1.0, 0.25, 0.25, 2.596562739368e-01, -2.077250191494e-02, -5.712438026609e-02),
]


def _denoise_scalar(r, tau, psi, lam, **kw):
    pi, mu, gamma = denoise(np.array([[r]]), np.array([tau]), np.array([psi]),
                            np.array([[lam]]), **kw)
    return pi[0, 0], mu[0, 0], gamma[0]


@pytest.mark.parametrize("r,tau,psi,lam,pi_ref,mu_re,mu_im", DENOISE_CASES)
def test_denoiser_frozen_values(r, tau, psi, lam, pi_ref, mu_re, mu_im):
    pi, mu, _ = _denoise_scalar(r, tau, psi, lam)
    assert pi == pytest.approx(pi_ref, abs=1e-9)
    assert mu.real == pytest.approx(mu_re, abs=1e-9)
    assert mu.imag == pytest.approx(mu_im, abs=1e-9)


def test_support_probability_monotone_in_energy():
    mags = np.linspace(0.0, 4.0, 30)
    pis = [_denoise_scalar(m + 0.0j, 0.3, 1.2, 0.1)[0] for m in mags]
    assert np.all(np.diff(pis) > 0)


def test_degenerate_priors_pin_support():
    pi0, mu0, _ = _denoise_scalar(1.0 + 0j, 0.2, 1.0, 0.0)
    pi1, mu1, _ = _denoise_scalar(1.0 + 0j, 0.2, 1.0, 1.0)
    assert pi0 == 0.0 and mu0 == 0.0
    assert pi1 == 1.0
    assert mu1 == pytest.approx((1.0 / 1.2) * 1.0)


def test_support_mask_zeroes_masked_rows():
    rng = np.random.default_rng(0)
    r = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
    tau = np.full(3, 0.2)
    psi = np.full(3, 1.0)
    lam = np.full((6, 3), 0.3)
    mask = np.zeros((6, 1))
    mask[[1, 4]] = 1.0
    pi, mu, _ = denoise(r, tau, psi, lam, support_mask=mask)
    assert np.all(pi[[0, 2, 3, 5]] == 0.0)
    assert np.all(mu[[0, 2, 3, 5]] == 0.0)
    ref_pi, _, _ = denoise(r, tau, psi, lam)
    np.testing.assert_allclose(pi[[1, 4]], ref_pi[[1, 4]], rtol=1e-12)


def test_canonical_variance_dominates_bookkeeping_form():
    rng = np.random.default_rng(1)
    r = rng.standard_normal((40, 4)) + 1j * rng.standard_normal((40, 4))
    tau = np.full(4, 0.3)
    psi = np.full(4, 1.1)
    lam = np.full((40, 4), 0.2)
    _, _, g_book = denoise(r, tau, psi, lam)
    _, _, g_can = denoise(r, tau, psi, lam, canonical_gamma=True)
    assert np.all(g_can >= g_book - 1e-15)


def test_le_step_identities():
    rng = np.random.default_rng(3)
    M, K, N = 16, 40, 5
    S = make_pilot(M, K, rng).S
    u = rng.standard_normal((K, N)) + 1j * rng.standard_normal((K, N))
    z = rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N))
    nu = np.full(N, 0.05)
    v, r, tau = le_step(z, nu, S, u)
    resid = z - S @ u
    np.testing.assert_allclose(v, np.mean(np.abs(resid) ** 2, axis=0) - nu, rtol=1e-12)
    np.testing.assert_allclose(r, u + (K / M) * (S.conj().T @ resid), rtol=1e-12)
    np.testing.assert_allclose(tau, ((K - M) / M) * v + (K / M) * nu, rtol=1e-12)


def test_le_step_exact_recovery_square_pilot():
    # M = K: the pilot is unitary and the pseudo-observation equals the truth
    rng = np.random.default_rng(4)
    K = 24
    S = make_pilot(K, K, rng).S
    x = rng.standard_normal((K, 2)) + 1j * rng.standard_normal((K, 2))
    u = rng.standard_normal((K, 2)) + 1j * rng.standard_normal((K, 2))
    _, r, _ = le_step(S @ x, np.full(2, 1e-8), S, u)
    np.testing.assert_allclose(r, x, atol=1e-10)


def test_le_step_variance_floor():
    rng = np.random.default_rng(5)
    M, K = 8, 16
    S = make_pilot(M, K, rng).S
    z = np.zeros((M, 1), dtype=complex)
    v, _, _ = le_step(z, np.full(1, 2.0), S, np.zeros((K, 1), dtype=complex))
    assert v[0] == VAR_FLOOR


def test_init_state_moments():
    rng = np.random.default_rng(6)
    M, K, N = 10, 20, 8
    Y = 2.0 * (rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N)))
    hi = np.array([0, 4])
    st = init_state(Y, hi, M, K, lambda0=0.1, epsilon=0.4)
    col_e = np.sum(np.abs(Y) ** 2, axis=0) / M
    assert st.sigma2 == pytest.approx(np.mean(col_e[hi]) / 101.0)
    np.testing.assert_allclose(
        st.slab_var, np.maximum((col_e - st.sigma2) * K / (0.1 * M), 1e-6))
    assert st.u.shape == (K, N) and not st.u.any()
    assert np.all(st.sparsity == 0.1)
    assert st.clamp_events == {"ext_z": 0, "gamma": 0, "v_tilde": 0}


def _blank_state(K, N, eps=0.0):
    return OampState(u=np.zeros((K, N), dtype=complex),
                     u_tilde=np.zeros((2, N), dtype=complex),
                     v_tilde=np.ones(N), sigma2=0.1,
                     slab_var=np.ones(N), sparsity=np.full((K, N), 0.1),
                     lambda0=0.1, epsilon=eps)


def test_extrinsic_u_algebra_and_damping():
    K, N = 3, 2
    r = np.ones((K, N), dtype=complex)
    tau = np.array([0.4, 0.5])
    mu = 0.5 * np.ones((K, N), dtype=complex)
    gamma = np.array([0.1, 0.2])
    st = _blank_state(K, N, eps=0.0)
    u, g = extrinsic_u(r, tau, mu, gamma, st)
    expect = (tau * 0.5 - gamma * 1.0) / (tau - gamma)
    np.testing.assert_allclose(u, np.broadcast_to(expect, (K, N)), rtol=1e-12)
    np.testing.assert_array_equal(g, gamma)

    st2 = _blank_state(K, N, eps=0.25)
    st2.u = np.full((K, N), 2.0, dtype=complex)
    u2, _ = extrinsic_u(r, tau, mu, gamma, st2)
    np.testing.assert_allclose(u2, np.broadcast_to(0.75 * expect + 0.25 * 2.0, (K, N)),
                               rtol=1e-12)


def test_gamma_guard_caps_and_counts():
    K, N = 2, 3
    st = _blank_state(K, N)
    tau = np.array([0.2, 0.2, 0.2])
    gamma = np.array([0.1, 0.2, 5.0])   # last two >= tau
    _, g = extrinsic_u(np.zeros((K, N), dtype=complex), tau,
                       np.zeros((K, N), dtype=complex), gamma, st)
    np.testing.assert_allclose(g, [0.1, GAMMA_GUARD * 0.2, GAMMA_GUARD * 0.2])
    assert st.clamp_events["gamma"] == 2


def test_project_variance_and_damping():
    rng = np.random.default_rng(8)
    M, K, N = 6, 12, 2
    S = make_pilot(M, K, rng).S
    u = rng.standard_normal((K, N)) + 1j * rng.standard_normal((K, N))
    st = _blank_state(K, N, eps=0.5)
    st.v_tilde = np.array([3.0, 3.0])
    tau = np.array([1.0, 1.0])
    gamma = np.array([0.5, 0.25])
    u_t, v_t = project(S, u, gamma, tau, st)
    np.testing.assert_allclose(u_t, S @ u, rtol=1e-12)
    v_raw = gamma * tau / (tau - gamma)
    np.testing.assert_allclose(v_t, 0.5 * v_raw + 0.5 * 3.0, rtol=1e-12)


def test_update_slab_var_posterior_weighted():
    pi = np.array([[1.0], [0.0]])
    r = np.array([[2.0 + 0j], [5.0 + 0j]])
    tau = np.array([0.5])
    slab = np.array([1.5])
    new = update_slab_var(pi, r, tau, slab)
    shrink = 1.5 / 2.0
    expect = (0.5 * shrink + np.abs(shrink * 2.0) ** 2) / 1.0
    assert new[0] == pytest.approx(expect)


def test_update_slab_var_keeps_previous_when_empty():
    pi = np.zeros((4, 2))
    r = np.ones((4, 2), dtype=complex)
    out = update_slab_var(pi, r, np.array([0.3, 0.3]), np.array([1.0, 2.0]))
    np.testing.assert_allclose(out, [1.0, 2.0])


def test_update_slab_var_verbatim_uses_previous_tau():
    rng = np.random.default_rng(9)
    pi = rng.uniform(0.1, 0.9, size=(5, 1))
    r = rng.standard_normal((5, 1)) + 1j * rng.standard_normal((5, 1))
    tau = np.array([0.4])
    tau_prev = np.array([0.8])
    slab = np.array([1.2])
    out = update_slab_var(pi, r, tau, slab, verbatim=True, tau_prev=tau_prev)
    first = 5 * (tau_prev * slab) / (tau + slab)
    second = np.sum(np.abs(pi * r) ** 2 / (tau + slab) ** 2, axis=0)
    np.testing.assert_allclose(out, (first + second) / pi.sum(axis=0), rtol=1e-12)


def test_detection_columns_branches():
    # noisy regime (estimate above threshold): average over every column;
    # clean regime: trust only the high-resolution columns
    hi = np.array([2, 6])
    np.testing.assert_array_equal(detection_columns(1.0, 0.5, hi, 8), np.arange(8))
    np.testing.assert_array_equal(detection_columns(0.4, 0.5, hi, 8), hi)
    np.testing.assert_array_equal(
        detection_columns(0.4, 0.5, np.array([], dtype=int), 8), np.arange(8))


def test_sigma2_threshold_formula():
    rng = np.random.default_rng(10)
    Y = rng.standard_normal((5, 4)) + 1j * rng.standard_normal((5, 4))
    hi = np.array([1, 3])
    th = sigma2_threshold(Y, hi, M=5, snr_th=10.0)
    expect = np.mean(np.sum(np.abs(Y[:, hi]) ** 2, axis=0)) / (11.0 * 5)
    assert th == pytest.approx(expect)


def test_update_sparsity_common_averages_columns():
    pi = np.array([[0.2, 0.4, 0.9], [0.0, 1.0, 0.5]])
    lam = update_sparsity_common(pi, np.array([0, 1]))
    np.testing.assert_allclose(lam[:, 0], [0.3, 0.5])
    assert np.all(lam == lam[:, :1])
    assert lam.shape == pi.shape


def test_update_sigma2_residual_energy():
    rng = np.random.default_rng(11)
    M, K, N = 8, 16, 6
    S = make_pilot(M, K, rng).S
    mu = rng.standard_normal((K, N)) + 1j * rng.standard_normal((K, N))
    Y = rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N))
    gamma = rng.uniform(0.1, 0.5, size=N)
    hi = np.array([0, 5])
    out = update_sigma2(Y, S, mu, gamma, hi)
    resid = Y[:, hi] - S @ mu[:, hi]
    expect = np.mean(np.sum(np.abs(resid) ** 2, axis=0) / M + gamma[hi])
    assert out == pytest.approx(expect)
