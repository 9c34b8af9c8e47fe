"""User channel generation consistent with the coupling model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .array_model import (
    ArrayGeometry,
    CouplingLike,
    Direction,
    as_coupling,
    element_effective_area,
    steering_matrix,
)


def substream(seed, *keys) -> np.random.Generator:
    """Independent generator for the work item identified by ``keys``.

    Streams for distinct keys are statistically independent, so sweeps can
    be split across workers without changing any draw.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys)))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """IID CN(0, 1) samples: real and imaginary parts each N(0, 1/2)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)


@dataclass(frozen=True)
class ChannelSet:
    """``H = B^1/2 S`` for ``K`` users; ``H`` and ``S`` are ``M x K``."""

    H: np.ndarray
    S: np.ndarray
    seed: object = None
    geom: Optional[ArrayGeometry] = None

    @property
    def n_users(self) -> int:
        return self.H.shape[1]


def rayleigh_channels(B: CouplingLike, K: int, seed=None) -> ChannelSet:
    """Draw ``K`` isotropic Rayleigh channels with covariance ``B``.

    ``seed`` may be anything accepted by :func:`numpy.random.default_rng`,
    including an existing Generator (used as-is).
    """
    if K < 1:
        raise ValueError(f"need at least one user, got K={K}")
    B = as_coupling(B)
    rng = np.random.default_rng(seed)
    S = complex_normal(rng, (B.n_elements, K))
    return ChannelSet(B.sqrt @ S, S, seed, B.geom)


@dataclass(frozen=True)
class MultipathSpec:
    gains: np.ndarray
    directions: Sequence[Direction]

    def __post_init__(self):
        if len(self.directions) < 1:
            raise ValueError("a multipath channel needs at least one path")
        if len(self.gains) != len(self.directions):
            raise ValueError(
                f"{len(self.gains)} gains given for {len(self.directions)} directions"
            )

    @property
    def n_paths(self) -> int:
        return len(self.directions)


def multipath_channel(geom: ArrayGeometry, spec: MultipathSpec) -> np.ndarray:
    """Superposition of plane waves, each weighted by ``(a/lambda) sqrt(A_e / a**2)``."""
    theta = np.array([d.theta for d in spec.directions])
    phi = np.array([d.phi for d in spec.directions])
    return multipath_channel_arrays(geom, np.asarray(spec.gains), theta, phi)


def multipath_channel_arrays(geom: ArrayGeometry, gains, theta, phi) -> np.ndarray:
    """Vectorized form of :func:`multipath_channel` taking plain arrays."""
    amp = geom.spacing_over_lambda * np.sqrt(element_effective_area(geom.pattern, theta, phi))
    A = steering_matrix(geom, theta, phi)
    return A @ (np.asarray(gains) * amp)
