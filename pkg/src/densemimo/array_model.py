"""
Planar array model with mutual coupling.

All quantities depend on the element spacing only through the ratio
``a / lambda``; no absolute frequency is carried around. Elements of a
``side x side`` array are indexed linearly as ``k + side * l`` where ``k``
runs along the x axis (the ``cos(phi)`` direction) and ``l`` along the
y axis (the ``sin(phi)`` direction).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.special import j1

from .exceptions import (
    ModelInconsistencyError,
    NonPassiveImpedanceError,
    NoNullSpaceError,
    SingularNetworkError,
    UnsupportedPatternError,
)

EIG_TOL = 1e-9
DEFAULT_QUAD_POINTS = (512, 1024)

_PATTERNS = {
    "cosine": lambda theta, phi: np.cos(theta),
}
_PATTERN_GAMMA = {
    "cosine": np.pi,
}


@dataclass(frozen=True)
class ArrayGeometry:
    """Square planar array of ``side**2`` elements with spacing ``spacing_over_lambda``."""

    spacing_over_lambda: float
    side: int
    pattern: str = "cosine"

    def __post_init__(self):
        if int(self.side) != self.side or self.side < 1:
            raise ValueError(f"side must be a positive integer, got {self.side!r}")
        if not self.spacing_over_lambda > 0:
            raise ValueError(
                f"spacing_over_lambda must be positive, got {self.spacing_over_lambda!r}"
            )
        if self.pattern not in _PATTERNS:
            raise UnsupportedPatternError(f"unknown element pattern {self.pattern!r}")

    @property
    def n_elements(self) -> int:
        return self.side * self.side

    @classmethod
    def fixed_aperture(cls, aperture_lambda: float, n_elements: int, pattern: str = "cosine"):
        """Geometry with ``n_elements`` (a perfect square) spread over a fixed aperture."""
        side = int(round(np.sqrt(n_elements)))
        if side * side != n_elements:
            raise ValueError(f"element count {n_elements} is not a perfect square")
        return cls(aperture_lambda / side, side, pattern)

    def element_indices(self) -> Tuple[np.ndarray, np.ndarray]:
        """Return ``(kx, ly)`` integer grid positions of every element."""
        idx = np.arange(self.n_elements)
        return idx % self.side, idx // self.side


@dataclass(frozen=True)
class Direction:
    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= np.pi / 2):
            raise ValueError(f"theta must lie in [0, pi/2], got {self.theta}")
        if not (-np.pi <= self.phi <= np.pi):
            raise ValueError(f"phi must lie in [-pi, pi], got {self.phi}")


def steering_matrix(geom: ArrayGeometry, theta, phi) -> np.ndarray:
    """Steering vectors for many directions at once, shape ``(M, N)``.

    ``theta`` and ``phi`` broadcast against each other and are flattened.
    """
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    theta = theta.ravel()
    phi = phi.ravel()
    kx, ly = geom.element_indices()
    u = np.sin(theta) * np.cos(phi)
    v = np.sin(theta) * np.sin(phi)
    phase = -2j * np.pi * geom.spacing_over_lambda * (np.outer(kx, u) + np.outer(ly, v))
    return np.exp(phase)


def steering_vector(geom: ArrayGeometry, direction: Direction) -> np.ndarray:
    """
    Far-field steering vector of the planar array.

    This is the Kronecker product of the y-axis (``sin(phi)``) progression
    with the x-axis (``cos(phi)``) progression, so entry 0 is always 1 and
    every entry has unit modulus.
    """
    side = geom.side
    n = np.arange(side)
    s = np.sin(direction.theta)
    ay = np.exp(-2j * np.pi * geom.spacing_over_lambda * n * s * np.sin(direction.phi))
    ax = np.exp(-2j * np.pi * geom.spacing_over_lambda * n * s * np.cos(direction.phi))
    return np.kron(ay, ax)


def element_effective_area(pattern: str, theta, phi=0.0):
    """Element effective area in units of ``a**2`` (``cos(theta)`` for the cosine pattern)."""
    try:
        fn = _PATTERNS[pattern]
    except KeyError:
        raise UnsupportedPatternError(f"unknown element pattern {pattern!r}") from None
    return fn(np.asarray(theta, float), np.asarray(phi, float))


@dataclass(frozen=True)
class CouplingMatrix:
    """
    Hermitian coupling matrix together with its eigendecomposition.

    Instances are immutable. Build them with :meth:`from_entries`, which
    checks the passivity and PSD invariants.

    Attributes
    ----------
    entries : ndarray, shape (M, M)
    eigvals : ndarray, shape (M,)
        Ascending eigenvalues.
    eigvecs : ndarray, shape (M, M)
        Orthonormal eigenvectors as columns.
    geom : ArrayGeometry, optional
        The geometry the matrix was derived from, when known.
    """

    entries: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    geom: Optional[ArrayGeometry] = field(default=None, compare=False)

    @classmethod
    def from_entries(cls, entries, geom=None, check=True, tol=EIG_TOL) -> "CouplingMatrix":
        entries = np.array(entries, copy=True)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"coupling matrix must be square, got shape {entries.shape}")
        if not np.array_equal(entries, entries.conj().T):
            raise ModelInconsistencyError("coupling matrix is not exactly Hermitian")
        if not np.iscomplexobj(entries) or not np.any(entries.imag):
            entries = entries.real.astype(float)
        w, V = linalg.eigh(entries)
        if check:
            if w[-1] > 1.0 + tol:
                raise ModelInconsistencyError(
                    f"passivity violated: max eigenvalue {w[-1]:.12g} > 1 + {tol:g}"
                )
            if w[0] < -tol:
                raise ModelInconsistencyError(
                    f"coupling matrix not PSD: min eigenvalue {w[0]:.3g}"
                )
        for arr in (entries, w, V):
            arr.setflags(write=False)
        return cls(entries, w, V, geom)

    @property
    def n_elements(self) -> int:
        return self.entries.shape[0]

    @property
    def max_eigenvalue(self) -> float:
        return float(self.eigvals[-1])

    @cached_property
    def sqrt(self) -> np.ndarray:
        """PSD square root; tiny negative eigenvalues are clamped to zero."""
        root = np.sqrt(np.clip(self.eigvals, 0.0, None))
        out = (self.eigvecs * root) @ self.eigvecs.conj().T
        out = 0.5 * (out + out.conj().T)
        out.setflags(write=False)
        return out

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


CouplingLike = Union[CouplingMatrix, np.ndarray]


def as_coupling(B: CouplingLike, check: bool = True) -> CouplingMatrix:
    """Wrap a plain array as a :class:`CouplingMatrix` (no-op for existing instances)."""
    if isinstance(B, CouplingMatrix):
        return B
    B = np.asarray(B)
    return CouplingMatrix.from_entries(0.5 * (B + B.conj().T), check=check)


def _element_distances(geom: ArrayGeometry) -> np.ndarray:
    kx, ly = geom.element_indices()
    return np.hypot(kx[:, None] - kx[None, :], ly[:, None] - ly[None, :])


def coupling_matrix_closed_form(geom: ArrayGeometry) -> CouplingMatrix:
    """
    Coupling matrix of the cosine-pattern array in closed form.

    Off-diagonal entries are ``r * J1(2 pi r d) / d`` with ``r = a/lambda``
    and ``d`` the element distance in units of the spacing; diagonal entries
    are ``pi r**2``.
    """
    if geom.pattern != "cosine":
        raise UnsupportedPatternError(
            f"closed-form coupling is only known for the cosine pattern, not {geom.pattern!r}"
        )
    r = geom.spacing_over_lambda
    d = _element_distances(geom)
    off = d > 0
    B = np.full(d.shape, np.pi * r * r)
    B[off] = r * j1(2 * np.pi * r * d[off]) / d[off]
    return CouplingMatrix.from_entries(B, geom=geom)


def _quad_sizes(quad_points) -> Tuple[int, int]:
    if quad_points is None:
        return DEFAULT_QUAD_POINTS
    if np.isscalar(quad_points):
        n = int(quad_points)
        return n, 2 * n
    n_theta, n_phi = quad_points
    return int(n_theta), int(n_phi)


def hemisphere_grid(quad_points=None, rule: str = "gauss"):
    """
    Quadrature nodes and weights on ``theta in [0, pi/2] x phi in [-pi, pi]``.

    The weights already include the ``sin(theta)`` Jacobian. ``phi`` always
    uses the midpoint rule (spectrally accurate for periodic integrands);
    ``theta`` uses Gauss-Legendre (``rule="gauss"``) or midpoint.

    Returns
    -------
    theta, phi_nodes, theta_weights, phi_weight
    """
    n_theta, n_phi = _quad_sizes(quad_points)
    if rule == "gauss":
        x, w = np.polynomial.legendre.leggauss(n_theta)
        theta = (x + 1.0) * np.pi / 4
        w_theta = w * np.pi / 4
    elif rule == "midpoint":
        h = (np.pi / 2) / n_theta
        theta = (np.arange(n_theta) + 0.5) * h
        w_theta = np.full(n_theta, h)
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    h_phi = 2 * np.pi / n_phi
    phi = -np.pi + (np.arange(n_phi) + 0.5) * h_phi
    return theta, phi, w_theta * np.sin(theta), h_phi


def coupling_matrix_integral_oracle(
    geom: ArrayGeometry, quad_points=None, rule: str = "gauss", check: bool = False
) -> CouplingMatrix:
    """Coupling matrix by direct numerical integration over the hemisphere.

    Independent of the Bessel closed form; used to validate it. Coarse grids
    can produce slightly non-passive results, so invariants are only
    enforced when ``check`` is set.
    """
    theta, phi, w_theta, h_phi = hemisphere_grid(quad_points, rule)
    M = geom.n_elements
    r2 = geom.spacing_over_lambda ** 2
    acc = np.zeros((M, M), dtype=complex)
    # a few theta rows per block keeps the steering block around a few MB
    rows = max(1, 65536 // (M * len(phi)))
    for start in range(0, len(theta), rows):
        th = theta[start:start + rows]
        wt = w_theta[start:start + rows] * element_effective_area(geom.pattern, th) * r2 * h_phi
        A = steering_matrix(geom, th[:, None], phi[None, :])
        weights = np.repeat(wt, len(phi))
        acc += (A * weights) @ A.conj().T
    acc = 0.5 * (acc + acc.conj().T)
    return CouplingMatrix.from_entries(acc, geom=geom, check=check)


def gamma_constant(pattern: str = "cosine") -> float:
    """Solid-angle integral of the normalized element pattern (``pi`` for cosine)."""
    try:
        return _PATTERN_GAMMA[pattern]
    except KeyError:
        raise UnsupportedPatternError(f"unknown element pattern {pattern!r}") from None


def gamma_quadrature(pattern: str = "cosine", quad_points=None, rule: str = "gauss") -> float:
    theta, phi, w_theta, h_phi = hemisphere_grid(quad_points, rule)
    area = np.broadcast_to(
        element_effective_area(pattern, theta[:, None], phi[None, :]), (len(theta), len(phi))
    )
    return float(np.sum(area * w_theta[:, None]) * h_phi)


def coupling_from_impedance(Z, R0: float) -> CouplingMatrix:
    """
    Coupling matrix of an array with impedance matrix ``Z`` terminated in
    resistive loads ``R0``: ``(R0 I + Z)^-1 4 R0 Re{Z} (R0 I + Z)^-H``.

    ``Re{Z}`` is taken as the Hermitian part ``(Z + Z^H) / 2``, which is the
    elementwise real part for reciprocal (symmetric) networks.
    """
    Z = np.asarray(Z, dtype=complex)
    if not R0 > 0:
        raise ValueError(f"R0 must be positive, got {R0}")
    M = Z.shape[0]
    herm = 0.5 * (Z + Z.conj().T)
    scale = max(1.0, np.abs(herm).max())
    if linalg.eigvalsh(herm)[0] < -1e-12 * scale:
        raise NonPassiveImpedanceError("impedance matrix has an indefinite resistive part")
    A = R0 * np.eye(M) + Z
    if np.linalg.cond(A) > 1.0 / np.finfo(float).eps:
        raise SingularNetworkError("R0*I + Z is singular")
    Y = linalg.solve(A, 4.0 * R0 * herm)
    B = linalg.solve(A, Y.conj().T).conj().T
    B = 0.5 * (B + B.conj().T)
    return CouplingMatrix.from_entries(B)


def null_space_projector(B: CouplingLike, delta: float) -> np.ndarray:
    """
    Projector onto the approximate null space of ``B``,
    ``I - (1 + delta) B^1/2 (B + delta I)^-1 B^1/2``.

    Each eigenvalue ``mu`` of ``B`` maps to ``delta (1 - mu) / (mu + delta)``:
    close to 1 for ``mu << delta`` and at most ``delta`` in magnitude for
    ``mu >> delta``.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    B = as_coupling(B)
    mu = np.clip(B.eigvals, 0.0, None)
    mapped = delta * (1.0 - mu) / (mu + delta)
    U = (B.eigvecs * mapped) @ B.eigvecs.conj().T
    return 0.5 * (U + U.conj().T)


def null_space_leakage(B: CouplingLike, U) -> float:
    """Fraction of dither power that radiates: ``tr(U^H B U) / tr(U^H U)``."""
    B = np.asarray(B)
    U = np.asarray(U)
    den = np.real(np.vdot(U, U))
    if den <= np.finfo(float).tiny:
        raise NoNullSpaceError("projector is zero; B has no approximate null space")
    return float(np.real(np.trace(U.conj().T @ B @ U)) / den)


def effective_rank(B: CouplingLike, rel: float = 0.01) -> int:
    """Number of eigenvalues above ``rel`` times the largest."""
    w = as_coupling(B).eigvals
    return int(np.count_nonzero(w > rel * w[-1]))


def parseval_margin(B: CouplingLike, n_vectors: int = 1000, rng=None) -> float:
    """Largest ``f^T B f* - ||f||^2`` over random complex excitations (<= 0 if passive)."""
    rng = np.random.default_rng(rng)
    B = np.asarray(B)
    M = B.shape[0]
    f = rng.standard_normal((n_vectors, M)) + 1j * rng.standard_normal((n_vectors, M))
    quad = np.real(np.einsum("ni,ij,nj->n", f, B, f.conj()))
    return float(np.max(quad - np.sum(np.abs(f) ** 2, axis=1)))
