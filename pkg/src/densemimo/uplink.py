"""
Uplink achievable rates with a zero-forcing receiver.

Powers are expressed relative to the noise density ``n0`` (1 by default).
The per-user rate of a zero-forcing receiver is
``log2(1 + eps_k / [(H^H C^-1 H)^-1]_kk)`` with ``C`` the effective noise
covariance; the one-bit variants differ only in which ``C`` is used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

from .array_model import CouplingLike, as_coupling
from .exceptions import DegenerateCovarianceError, RankDeficiencyError
from .quantization import TWO_OVER_PI, arcsine_covariance


@dataclass(frozen=True)
class UplinkConfig:
    user_powers: Sequence[float]
    noise_figure: float = 2.0
    n0: float = 1.0

    def __post_init__(self):
        if any(not p > 0 for p in self.user_powers):
            raise ValueError(f"user powers must be positive, got {list(self.user_powers)}")
        if not self.noise_figure >= 1:
            raise ValueError(f"noise figure must be >= 1, got {self.noise_figure}")
        if not self.n0 > 0:
            raise ValueError(f"n0 must be positive, got {self.n0}")

    @property
    def powers(self) -> np.ndarray:
        return np.asarray(self.user_powers, dtype=float)


@dataclass(frozen=True)
class RateReport:
    """Per-user rates in bit/s/Hz for each model variant."""

    ideal: np.ndarray
    one_bit_exact: np.ndarray
    one_bit_uqn: np.ndarray
    metadata: dict = field(default_factory=dict)


def total_noise_covariance(B: CouplingLike, cfg: UplinkConfig) -> np.ndarray:
    """Extrinsic plus device noise, ``n0 B + (N_F - 1) n0 I``."""
    B = np.asarray(B)
    return cfg.n0 * B + (cfg.noise_figure - 1.0) * cfg.n0 * np.eye(B.shape[0])


def _whitened_gram(H, C, what):
    try:
        factor = linalg.cho_factor(C, lower=True)
    except linalg.LinAlgError:
        raise DegenerateCovarianceError(f"{what} is not positive definite") from None
    return H.conj().T @ linalg.cho_solve(factor, H)


def _zf_error_diagonal(G) -> np.ndarray:
    """Diagonal of ``G^-1`` for a Hermitian Gram matrix ``G``."""
    G = 0.5 * (G + G.conj().T)
    try:
        factor = linalg.cho_factor(G, lower=True)
    except linalg.LinAlgError:
        raise RankDeficiencyError("zero-forcing Gram matrix is singular") from None
    inv = linalg.cho_solve(factor, np.eye(G.shape[0]))
    return np.real(np.diagonal(inv))


def _rates(powers, err_diag):
    return np.log2(1.0 + powers / err_diag)


def uplink_ideal_rates(H, B: CouplingLike, cfg: UplinkConfig) -> np.ndarray:
    """Per-user ZF rates with infinite-resolution ADCs."""
    H = np.asarray(H)
    G = _whitened_gram(H, total_noise_covariance(B, cfg), "noise covariance")
    return _rates(cfg.powers, _zf_error_diagonal(G))


def received_covariance(H, B: CouplingLike, cfg: UplinkConfig) -> np.ndarray:
    H = np.asarray(H)
    return (H * cfg.powers) @ H.conj().T + total_noise_covariance(B, cfg)


def uplink_one_bit_rates(H, B: CouplingLike, cfg: UplinkConfig, mode: str = "exact") -> np.ndarray:
    """
    Per-user lower bound on the rate with one-bit ADCs and a ZF receiver.

    Parameters
    ----------
    mode : {"exact", "uqn"}
        ``"exact"`` treats the arcsine-law distortion covariance as noise.
        ``"uqn"`` replaces it by its diagonal approximation, giving the
        effective noise ``C_n + (pi/2 - 1) D``.
    """
    H = np.asarray(H)
    Cy = received_covariance(H, B, cfg)
    D = np.real(np.diagonal(Cy))
    if mode == "exact":
        signal = (H * cfg.powers) @ H.conj().T
        C_eff = arcsine_covariance(Cy, D) - TWO_OVER_PI * signal
        G = TWO_OVER_PI * _whitened_gram(H, C_eff, "effective one-bit noise covariance")
    elif mode == "uqn":
        C_eff = total_noise_covariance(B, cfg) + (np.pi / 2 - 1.0) * np.diag(D)
        G = _whitened_gram(H, C_eff, "effective one-bit noise covariance")
    else:
        raise ValueError(f"mode must be 'exact' or 'uqn', got {mode!r}")
    return _rates(cfg.powers, _zf_error_diagonal(G))


def uplink_uqn_rates_isotropic(S, B: CouplingLike, cfg: UplinkConfig, a_over_lambda=None, gamma=np.pi):
    """
    UQN rate with the quantizer scaling replaced by its many-user average.

    Uses ``D ~ ((n0 + sum eps) (a/lambda)^2 gamma + n0 (N_F - 1)) I`` so that the
    bound depends on the channel only through ``S`` and ``B``. Diagnostic
    only; the sweeps use the exact diagonal.
    """
    B = as_coupling(B)
    if a_over_lambda is None:
        if B.geom is None:
            raise ValueError("a_over_lambda is required when B carries no geometry")
        a_over_lambda = B.geom.spacing_over_lambda
    snr = cfg.powers / cfg.n0
    c = (np.pi / 2) * (cfg.noise_figure - 1.0) + (np.pi / 2 - 1.0) * a_over_lambda ** 2 * gamma * (
        1.0 + snr.sum()
    )
    root = B.sqrt
    X = root @ np.asarray(S)
    G = _whitened_gram(X, np.asarray(B) + c * np.eye(B.n_elements), "B + cI")
    return _rates(snr, _zf_error_diagonal(G))


def uplink_asymptotic_loss(noise_figure: float) -> float:
    """SNR loss factor of one-bit ADCs in the infinitely dense limit."""
    if not noise_figure >= 1:
        raise ValueError(f"noise figure must be >= 1, got {noise_figure}")
    if np.isinf(noise_figure):
        return TWO_OVER_PI
    return noise_figure / (1.0 + (np.pi / 2) * (noise_figure - 1.0))


def uplink_rate_report(H, B: CouplingLike, cfg: UplinkConfig, **metadata) -> RateReport:
    return RateReport(
        ideal=uplink_ideal_rates(H, B, cfg),
        one_bit_exact=uplink_one_bit_rates(H, B, cfg, "exact"),
        one_bit_uqn=uplink_one_bit_rates(H, B, cfg, "uqn"),
        metadata=metadata,
    )
