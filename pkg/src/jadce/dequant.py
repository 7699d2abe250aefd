"""MMSE de-quantization of low-resolution columns.

Given a Gaussian prior on the noiseless entry and the quantizer bin implied by
an observed level, the posterior mean/variance of the noiseless entry follow
truncated-Gaussian moment formulas, evaluated per real dimension. Bins never
straddle zero for this quantizer family (a threshold always sits at 0), so the
moments can be written in a sign-folded form; both saturation bins use the
finite clamp edge in place of infinity.

The phi/Phi difference ratios are evaluated directly in the bulk and switch to
scaled-complementary-error-function (erfcx) forms once both standardized edges
are beyond +-6, where the direct differences underflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, ndtr

from .frontend import QuantizedFrame, QuantizerSpec, bin_index

_SQRT_HALF = np.sqrt(0.5)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
_TAIL = 6.0
VAR_FLOOR = 1e-12
EXT_VAR_CEIL = 1e6


@dataclass
class PriorBelief:
    mean: np.ndarray  # (M, N) complex
    var: np.ndarray   # (N,) per-column complex variance


@dataclass
class DequantBelief:
    z_ext: np.ndarray   # (M, N) complex extrinsic pseudo-observation
    nu_ext: np.ndarray  # (N,) extrinsic variance
    clamped: int        # count of nonpositive extrinsic precisions encountered


def _mills(x):
    """Q(x)/phi(x), stable for large positive x."""
    return np.sqrt(np.pi / 2.0) * erfcx(x * _SQRT_HALF)


def _phi(x):
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def folded_ratios(eta: np.ndarray, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ((phi(eta)-phi(xi))/(Phi(eta)-Phi(xi)),
               (eta phi(eta)-xi phi(xi))/(Phi(eta)-Phi(xi))) with eta > xi."""
    eta = np.asarray(eta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    r_phi = np.empty_like(eta)
    r_xphi = np.empty_like(eta)

    upper = xi > _TAIL          # both edges deep in the upper tail
    lower = eta < -_TAIL        # both edges deep in the lower tail
    mid = ~(upper | lower)

    if np.any(mid):
        e, x = eta[mid], xi[mid]
        den = np.maximum(ndtr(e) - ndtr(x), 1e-300)
        pe, px = _phi(e), _phi(x)
        r_phi[mid] = (pe - px) / den
        r_xphi[mid] = (e * pe - x * px) / den
    if np.any(upper):
        e, x = eta[upper], xi[upper]
        rho = np.exp(0.5 * (x * x - e * e))  # phi(eta)/phi(xi) <= 1
        den = _mills(x) - rho * _mills(e)
        r_phi[upper] = (rho - 1.0) / den
        r_xphi[upper] = (e * rho - x) / den
    if np.any(lower):
        e, x = eta[lower], xi[lower]
        rho = np.exp(0.5 * (e * e - x * x))  # phi(xi)/phi(eta) <= 1
        den = _mills(-e) - rho * _mills(-x)
        r_phi[lower] = (1.0 - rho) / den
        r_xphi[lower] = (e - x * rho) / den
    return r_phi, r_xphi


def quantized_gaussian_moments(u0, prior_var, noise_var, lo, hi):
    """Posterior mean/variance of a real Gaussian N(u0, prior_var) entry whose
    noisy version (noise variance noise_var) was observed to lie in (lo, hi].
    The bin must not straddle zero. Broadcasts over array inputs."""
    u0 = np.asarray(u0, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    prior_var = np.asarray(prior_var, dtype=float)
    s = np.sqrt(prior_var + noise_var)
    sgn = np.where(lo >= 0.0, 1.0, -1.0)
    near = np.minimum(np.abs(lo), np.abs(hi))
    far = np.maximum(np.abs(lo), np.abs(hi))
    eta = (sgn * u0 - near) / s
    xi = (sgn * u0 - far) / s
    r_phi, r_xphi = folded_ratios(eta, xi)
    mean = u0 + sgn * (prior_var / s) * r_phi
    var = prior_var - (prior_var ** 2 / (s * s)) * (r_xphi + r_phi ** 2)
    return mean, np.maximum(var, 0.0)


def _real_part_moments(y, u0, col_var, sigma2, qspec: QuantizerSpec):
    """Folded truncated-Gaussian update for one real dimension of a column
    block. y, u0: (M, N); col_var: (N,) complex variance split in half."""
    idx = bin_index(y, qspec.B)
    lo = qspec.thresholds[idx]
    hi = qspec.thresholds[idx + 1]
    s = np.sqrt((sigma2 + col_var) / 2.0)[None, :]
    sgn = np.sign(y)
    near = np.minimum(np.abs(lo), np.abs(hi))
    far = np.maximum(np.abs(lo), np.abs(hi))
    eta = (sgn * u0 - near) / s
    xi = (sgn * u0 - far) / s
    r_phi, r_xphi = folded_ratios(eta, xi)
    half = col_var[None, :] / 2.0
    mean = u0 + sgn * (half / s) * r_phi
    bracket = (r_xphi + r_phi ** 2).mean(axis=0)
    var = col_var / 2.0 - (col_var ** 2 / (2.0 * (sigma2 + col_var))) * bracket
    return mean, var


def mmse_dequantize(ytilde: np.ndarray, prior: PriorBelief, sigma2: float,
                    qspec: QuantizerSpec) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean (M, N) and per-column variance (N,) of the noiseless
    entries behind quantized observations ytilde."""
    if ytilde.ndim == 1:
        ytilde = ytilde[:, None]
        prior = PriorBelief(prior.mean.reshape(ytilde.shape), np.atleast_1d(prior.var))
        squeeze = True
    else:
        squeeze = False
    m_re, v_re = _real_part_moments(ytilde.real, prior.mean.real, prior.var, sigma2, qspec)
    m_im, v_im = _real_part_moments(ytilde.imag, prior.mean.imag, prior.var, sigma2, qspec)
    zhat = m_re + 1j * m_im
    nu = np.maximum(v_re + v_im, VAR_FLOOR)
    if squeeze:
        return zhat[:, 0], nu[0]
    return zhat, nu


def extrinsic_z(frame: QuantizedFrame, zhat_lo: np.ndarray | None,
                nu_lo: np.ndarray | None, prior: PriorBelief,
                sigma2: float) -> DequantBelief:
    """Extrinsic message out of the de-quantizer. zhat_lo/nu_lo are the
    posterior moments of the low-resolution columns (aligned with
    frame.lo_set); high-resolution columns pass the unquantized observation
    with the current noise-variance estimate."""
    M, N = frame.Ytilde.shape
    z_ext = np.empty((M, N), dtype=complex)
    nu_ext = np.empty(N)
    clamped = 0
    lo = frame.lo_set
    if len(lo):
        inv = 1.0 / nu_lo - 1.0 / prior.var[lo]
        bad = inv <= 0.0
        clamped = int(bad.sum())
        v_ext = np.where(bad, EXT_VAR_CEIL, 1.0 / np.maximum(inv, 1.0 / EXT_VAR_CEIL))
        v_ext = np.clip(v_ext, VAR_FLOOR, EXT_VAR_CEIL)
        z_ext[:, lo] = v_ext[None, :] * (zhat_lo / nu_lo[None, :]
                                         - prior.mean[:, lo] / prior.var[lo][None, :])
        nu_ext[lo] = v_ext
    hi = frame.hi_set
    if len(hi):
        z_ext[:, hi] = frame.Ytilde[:, hi]
        nu_ext[hi] = sigma2
    return DequantBelief(z_ext=z_ext, nu_ext=nu_ext, clamped=clamped)
