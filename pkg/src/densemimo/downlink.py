"""
Downlink zero-forcing precoding with one-bit DACs and non-radiating dither.

The downlink channel ``H`` is ``K x M`` (one row per user). Powers are in
units of ``n0``. The one-bit transmitter quantizes the dithered excitation
``z = F x + U v / ||U||_F`` and rescales it by ``sqrt(alpha)`` so that it
radiates the same power as the ideal transmitter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .array_model import CouplingLike, as_coupling, gamma_constant, null_space_leakage, null_space_projector
from .exceptions import DegenerateRadiationError, NoNullSpaceError, RankDeficiencyError
from .quantization import TWO_OVER_PI, arcsine_covariance


@dataclass(frozen=True)
class DownlinkConfig:
    total_power: float
    noise_figure: float = 2.0
    dither_power: float = 0.0
    delta: float = 0.01
    n0: float = 1.0

    def __post_init__(self):
        if not self.total_power > 0:
            raise ValueError(f"total power must be positive, got {self.total_power}")
        if not self.noise_figure >= 1:
            raise ValueError(f"noise figure must be >= 1, got {self.noise_figure}")
        if not self.dither_power >= 0:
            raise ValueError(f"dither power must be non-negative, got {self.dither_power}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    @property
    def noise_floor(self) -> float:
        return self.n0 * self.noise_figure


def dither_power_rule(total_power: float, a_over_lambda: float, ratio: float = 1.0 / 3.0) -> float:
    """Dither variance growing like ``lambda / a``: ``ratio * eps / (a/lambda)``."""
    return ratio * total_power / a_over_lambda


@dataclass(frozen=True)
class PrecoderState:
    F: np.ndarray
    zf_trace: float
    U: Optional[np.ndarray] = None
    alpha: Optional[float] = None
    P_R: Optional[float] = None


def zf_precoder(H, total_power: float) -> PrecoderState:
    """
    Zero-forcing precoder ``F = sqrt(eps / tr((HH^H)^-1)) H^H (HH^H)^-1``.

    ``||F||_F^2 = eps`` and ``H F`` is a multiple of the identity.
    """
    H = np.asarray(H)
    G = H @ H.conj().T
    G = 0.5 * (G + G.conj().T)
    try:
        factor = linalg.cho_factor(G, lower=True)
    except linalg.LinAlgError:
        raise RankDeficiencyError("H H^H is singular; zero-forcing is undefined") from None
    G_inv = linalg.cho_solve(factor, np.eye(G.shape[0]))
    trace = float(np.real(np.trace(G_inv)))
    F = np.sqrt(total_power / trace) * (H.conj().T @ G_inv)
    return PrecoderState(F, trace)


def radiated_power(C_z, B: CouplingLike) -> float:
    """Radiated power ``tr(C_z B)`` of an excitation with covariance ``C_z``."""
    return float(np.real(np.sum(np.asarray(C_z) * np.asarray(B).T)))


def precoder_radiated_power(F, B: CouplingLike) -> float:
    F = np.asarray(F)
    return radiated_power(F @ F.conj().T, B)


def downlink_ideal_rate(H, cfg: DownlinkConfig) -> float:
    """Rate of every user under ZF with infinite-resolution DACs."""
    trace = zf_precoder(H, cfg.total_power).zf_trace
    return float(np.log2(1.0 + cfg.total_power / cfg.noise_floor / trace))


def dithered_transmit_covariance(F, U, sigma_d2: float):
    """
    Covariance of the dithered excitation and its diagonal.

    Returns
    -------
    C_z : ndarray
        ``F F^H + sigma_d2 U U^H / ||U||_F^2``.
    D : ndarray
        Diagonal of ``C_z`` as a real vector.
    """
    F = np.asarray(F)
    C_z = F @ F.conj().T
    if sigma_d2 > 0:
        U = np.asarray(U)
        norm2 = float(np.real(np.vdot(U, U)))
        if norm2 <= np.finfo(float).tiny:
            raise NoNullSpaceError("dither requested but the null-space projector is zero")
        C_z = C_z + (sigma_d2 / norm2) * (U @ U.conj().T)
    C_z = 0.5 * (C_z + C_z.conj().T)
    return C_z, np.real(np.diagonal(C_z)).copy()


def large_k_diagonal_deviation(D, total_power: float, sigma_d2: float) -> float:
    """Largest relative deviation of ``D`` from ``(eps + sigma_d2) / M``."""
    D = np.asarray(D)
    ref = (total_power + sigma_d2) / D.size
    return float(np.max(np.abs(D - ref)) / ref)


def _spacing(B, a_over_lambda):
    if a_over_lambda is not None:
        return a_over_lambda
    if B.geom is None:
        raise ValueError("a_over_lambda is required when B carries no geometry")
    return B.geom.spacing_over_lambda


def alpha_exact(C_z, B: CouplingLike, P_R: float, D=None) -> float:
    """Scaling that makes the quantized excitation radiate exactly ``P_R``."""
    quantized = radiated_power(arcsine_covariance(C_z, D), B)
    if not quantized > 0:
        raise DegenerateRadiationError("quantized excitation radiates no power")
    return P_R / quantized


def alpha_uqn(P_R: float, a_over_lambda: float, total_power: float, sigma_d2: float, gamma: float = np.pi) -> float:
    """Power-equalizing scale under the uncorrelated-distortion approximation."""
    den = TWO_OVER_PI * P_R + (1.0 - TWO_OVER_PI) * a_over_lambda ** 2 * (total_power + sigma_d2) * gamma
    if not den > 0:
        raise DegenerateRadiationError("zero radiated power in the alpha denominator")
    return P_R / den


def alpha_power_equalizer(C_z, D, B: CouplingLike, P_R: float, mode: str = "exact", *,
                          a_over_lambda=None, total_power=None, sigma_d2=0.0, gamma=None) -> float:
    if not P_R > 0:
        raise DegenerateRadiationError(f"ideal radiated power must be positive, got {P_R}")
    if mode == "exact":
        return alpha_exact(C_z, B, P_R, D)
    if mode != "uqn":
        raise ValueError(f"mode must be 'exact' or 'uqn', got {mode!r}")
    B = as_coupling(B)
    a_over_lambda = _spacing(B, a_over_lambda)
    if total_power is None:
        total_power = float(np.real(np.trace(C_z))) - sigma_d2
    if gamma is None:
        gamma = gamma_constant(B.geom.pattern if B.geom is not None else "cosine")
    return alpha_uqn(P_R, a_over_lambda, total_power, sigma_d2, gamma)


@dataclass(frozen=True)
class DownlinkReport:
    """Per-realization downlink quantities.

    ``one_bit_exact_noleak`` drops the dither that leaks through the channel
    from the user noise; ``one_bit_exact`` keeps it.
    """

    ideal: float
    one_bit_exact: np.ndarray
    one_bit_exact_noleak: np.ndarray
    one_bit_uqn: float
    P_R: float
    alpha_exact: float
    alpha_uqn: float
    sigma_d2: float
    leakage: Optional[float]
    D: np.ndarray
    total_power: float

    @property
    def ideal_power_ratio(self) -> float:
        return self.P_R / self.total_power

    @property
    def one_bit_power_ratio(self) -> float:
        return self.P_R / (self.alpha_exact * (self.total_power + self.sigma_d2))


def _uqn_rate(trace, P_R, a_over_lambda, cfg, gamma):
    snr = cfg.total_power / trace / cfg.noise_floor
    penalty = (1.0 / P_R + 1.0 / cfg.noise_floor) * (np.pi / 2 - 1.0) * a_over_lambda ** 2 * (
        cfg.total_power + cfg.dither_power
    ) * gamma
    return float(np.log2(1.0 + snr / (1.0 + penalty)))


def downlink_rate_report(H, B: CouplingLike, cfg: DownlinkConfig, U=None, a_over_lambda=None) -> DownlinkReport:
    """Evaluate every downlink variant for one channel realization."""
    H = np.asarray(H)
    B = as_coupling(B)
    a_over_lambda = _spacing(B, a_over_lambda)
    gamma = gamma_constant(B.geom.pattern if B.geom is not None else "cosine")
    state = zf_precoder(H, cfg.total_power)
    F = state.F
    P_R = precoder_radiated_power(F, B)
    leakage = None
    if cfg.dither_power > 0:
        if U is None:
            U = null_space_projector(B, cfg.delta)
        leakage = null_space_leakage(B, U)
    C_z, D = dithered_transmit_covariance(F, U, cfg.dither_power)
    C_q = arcsine_covariance(C_z, D)
    q_radiated = radiated_power(C_q, B)
    if not q_radiated > 0:
        raise DegenerateRadiationError("quantized excitation radiates no power")
    a_ex = P_R / q_radiated
    signal = TWO_OVER_PI * a_ex * cfg.total_power / state.zf_trace
    with_leak = C_q - TWO_OVER_PI * (F @ F.conj().T)
    no_leak = C_q - TWO_OVER_PI * C_z
    noise = cfg.noise_floor + a_ex * np.real(np.einsum("km,mn,kn->k", H, with_leak, H.conj()))
    noise_nl = cfg.noise_floor + a_ex * np.real(np.einsum("km,mn,kn->k", H, no_leak, H.conj()))
    return DownlinkReport(
        ideal=float(np.log2(1.0 + cfg.total_power / cfg.noise_floor / state.zf_trace)),
        one_bit_exact=np.log2(1.0 + signal / noise),
        one_bit_exact_noleak=np.log2(1.0 + signal / noise_nl),
        one_bit_uqn=_uqn_rate(state.zf_trace, P_R, a_over_lambda, cfg, gamma),
        P_R=P_R,
        alpha_exact=a_ex,
        alpha_uqn=alpha_uqn(P_R, a_over_lambda, cfg.total_power, cfg.dither_power, gamma),
        sigma_d2=cfg.dither_power,
        leakage=leakage,
        D=D,
        total_power=cfg.total_power,
    )


def downlink_one_bit_rate(H, B: CouplingLike, cfg: DownlinkConfig, mode: str = "exact", U=None,
                          a_over_lambda=None, include_leakage: bool = True):
    """
    Lower bound on the per-user rate with one-bit DACs.

    ``"exact"`` returns one rate per user, treating the arcsine-law
    distortion received through ``H`` as noise. ``"uqn"`` returns the common
    closed-form rate of the uncorrelated-distortion approximation.
    """
    report = downlink_rate_report(H, B, cfg, U=U, a_over_lambda=a_over_lambda)
    if mode == "exact":
        return report.one_bit_exact if include_leakage else report.one_bit_exact_noleak
    if mode == "uqn":
        return report.one_bit_uqn
    raise ValueError(f"mode must be 'exact' or 'uqn', got {mode!r}")


def downlink_asymptotic_loss() -> float:
    """SNR loss factor of one-bit DACs in the infinitely dense limit (none)."""
    return 1.0


def power_ratio_diagnostic(P_R: float, alpha: float, total_power: float, sigma_d2: float):
    """Radiated over excitation power for the ideal and the one-bit transmitter."""
    return P_R / total_power, P_R / (alpha * (total_power + sigma_d2))
