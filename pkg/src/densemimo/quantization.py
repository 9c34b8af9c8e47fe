"""
One-bit quantization of complex Gaussian vectors.

The quantizer keeps only the signs of the real and imaginary parts and
rescales element ``i`` so that its output power equals ``D_i``, the input
variance. For zero-mean Gaussian inputs the output covariance follows the
arcsine law and the input/output cross-covariance is ``sqrt(2/pi) C_in``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidCovarianceError

TWO_OVER_PI = 2.0 / np.pi
BUSSGANG_GAIN = np.sqrt(TWO_OVER_PI)
CLAMP_TOL = 1e-12


def _sign(v):
    # sign(0) := +1
    return np.where(v >= 0, 1.0, -1.0)


def _diag_of(C_in, D):
    if D is None:
        D = np.real(np.diagonal(C_in))
    else:
        D = np.asarray(D)
        if D.ndim == 2:
            D = np.diagonal(D)
        D = np.real(D).astype(float)
    if np.any(D <= 0):
        raise InvalidCovarianceError("quantizer input variances must be strictly positive")
    return D


def one_bit_quantize(x, D) -> np.ndarray:
    """
    Rescaled complex sign quantizer, ``sqrt(D_i / 2) (sign(Re x_i) + j sign(Im x_i))``.

    ``x`` may be a single ``M``-vector or a batch of shape ``(..., M)``.
    Exact zeros map to ``+1``.
    """
    x = np.asarray(x)
    scale = np.sqrt(_diag_of(None, D) / 2.0)
    return scale * (_sign(x.real) + 1j * _sign(x.imag))


def arcsine_covariance(C_in, D=None) -> np.ndarray:
    """
    Output covariance of the rescaled one-bit quantizer for input ``CN(0, C_in)``.

    The arcsine is applied separately to the normalized real and imaginary
    correlations. ``D`` defaults to the diagonal of ``C_in``.

    Raises
    ------
    InvalidCovarianceError
        If a normalized correlation exceeds 1 by more than ``1e-12``.
    """
    C_in = np.asarray(C_in)
    C_in = 0.5 * (C_in + C_in.conj().T)
    D = _diag_of(C_in, D)
    s = np.sqrt(D)
    norm = C_in / np.outer(s, s)
    re = np.real(norm)
    im = np.imag(norm)
    worst = max(np.abs(re).max(), np.abs(im).max())
    if worst > 1.0 + CLAMP_TOL:
        raise InvalidCovarianceError(
            f"normalized correlation {worst:.15g} exceeds 1; input is not a valid covariance"
        )
    re = np.clip(re, -1.0, 1.0)
    im = np.clip(im, -1.0, 1.0)
    out = TWO_OVER_PI * np.outer(s, s) * (np.arcsin(re) + 1j * np.arcsin(im))
    np.fill_diagonal(out, D)
    return out


def bussgang_split(C_in, D=None):
    """
    Split the quantizer output covariance into linear and distortion parts.

    Returns
    -------
    signal_cov : ndarray
        ``(2/pi) C_in``.
    distortion_cov : ndarray
        ``arcsine_covariance(C_in, D) - (2/pi) C_in``; its diagonal is
        ``(1 - 2/pi) D``.
    """
    C_in = np.asarray(C_in)
    signal = TWO_OVER_PI * C_in
    return signal, arcsine_covariance(C_in, D) - signal


def uqn_distortion(D) -> np.ndarray:
    """Diagonal (uncorrelated-noise) approximation of the distortion covariance."""
    return (1.0 - TWO_OVER_PI) * np.diag(_diag_of(None, D))


@dataclass(frozen=True)
class QuantizedLinkStats:
    C_in: np.ndarray
    D: np.ndarray
    C_out: np.ndarray
    C_cross: np.ndarray
    bussgang_gain: float = BUSSGANG_GAIN

    @property
    def distortion(self) -> np.ndarray:
        return self.C_out - TWO_OVER_PI * self.C_in

    @property
    def uqn_gap(self) -> float:
        """Frobenius distance between the exact and the diagonal distortion covariance."""
        return float(np.linalg.norm(self.distortion - uqn_distortion(self.D)))


def link_stats(C_in) -> QuantizedLinkStats:
    C_in = np.asarray(C_in)
    D = _diag_of(C_in, None)
    return QuantizedLinkStats(C_in, D, arcsine_covariance(C_in, D), BUSSGANG_GAIN * C_in)


def psd_sqrt(C) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (C + np.conj(C).T))
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T


@dataclass(frozen=True)
class MonteCarloStats:
    """Sample moments of quantized Gaussian draws with per-entry standard errors.

    ``out_cov`` estimates ``E[y_Q y_Q^H]`` and ``cross_cov`` estimates
    ``E[y_Q y^H]``. Standard errors are given separately for the real and
    imaginary part of every entry.
    """

    out_cov: np.ndarray
    out_stderr: np.ndarray
    cross_cov: np.ndarray
    cross_stderr: np.ndarray
    n_samples: int


class _MomentAccumulator:
    def __init__(self, M):
        self.sum = np.zeros((M, M), complex)
        self.sq = np.zeros((M, M), complex)

    def add(self, P):
        self.sum += P.sum(axis=0)
        self.sq += (P.real ** 2).sum(axis=0) + 1j * (P.imag ** 2).sum(axis=0)

    def finish(self, n):
        mean = self.sum / n
        var_re = np.clip(self.sq.real / n - mean.real ** 2, 0.0, None)
        var_im = np.clip(self.sq.imag / n - mean.imag ** 2, 0.0, None)
        se = np.sqrt(var_re / (n - 1)) + 1j * np.sqrt(var_im / (n - 1))
        return mean, se


def quantizer_monte_carlo(C, n_samples: int = 1_000_000, rng=None, chunk: int = 50_000) -> MonteCarloStats:
    """Estimate quantizer output moments by direct simulation of ``CN(0, C)`` inputs."""
    rng = np.random.default_rng(rng)
    C = np.asarray(C)
    M = C.shape[0]
    L = psd_sqrt(C)
    D = np.real(np.diagonal(C))
    out_acc = _MomentAccumulator(M)
    cross_acc = _MomentAccumulator(M)
    done = 0
    while done < n_samples:
        n = min(chunk, n_samples - done)
        s = (rng.standard_normal((n, M)) + 1j * rng.standard_normal((n, M))) * np.sqrt(0.5)
        x = s @ L.T
        y = one_bit_quantize(x, D)
        out_acc.add(y[:, :, None] * y.conj()[:, None, :])
        cross_acc.add(y[:, :, None] * x.conj()[:, None, :])
        done += n
    out_cov, out_se = out_acc.finish(n_samples)
    cross_cov, cross_se = cross_acc.finish(n_samples)
    return MonteCarloStats(out_cov, out_se, cross_cov, cross_se, n_samples)


def within_stderr(estimate, expected, stderr, k: float = 3.0) -> np.ndarray:
    """Entrywise test ``|estimate - expected| <= k * stderr`` on real and imaginary parts.

    Entries with zero standard error must match up to summation roundoff.
    """
    diff = np.asarray(estimate) - np.asarray(expected)
    stderr = np.asarray(stderr)
    scale = 1e-9 * max(1.0, np.abs(expected).max())
    ok_re = np.abs(diff.real) <= k * stderr.real + scale
    ok_im = np.abs(diff.imag) <= k * stderr.imag + scale
    return ok_re & ok_im
