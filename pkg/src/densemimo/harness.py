"""
Fixed-aperture Monte Carlo sweeps over the element count.

Every channel realization draws from its own random substream keyed by
``(seed, scenario, M, realization, attempt)``, so results do not depend
on how work is split across processes. Per-realization values are reduced
in a fixed order (mean over users, then mean and standard error over
realizations).
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from functools import lru_cache, partial
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .array_model import (
    ArrayGeometry,
    DEFAULT_QUAD_POINTS,
    coupling_from_impedance,
    coupling_matrix_closed_form,
    coupling_matrix_integral_oracle,
    effective_rank,
    gamma_constant,
    gamma_quadrature,
    null_space_leakage,
    null_space_projector,
    parseval_margin,
)
from .channel import complex_normal, rayleigh_channels, substream
from .downlink import DownlinkConfig, alpha_uqn, dither_power_rule, downlink_rate_report
from .exceptions import ConfigError, NumericalFailure
from .quantization import BUSSGANG_GAIN, arcsine_covariance, quantizer_monte_carlo, within_stderr
from .uplink import UplinkConfig, uplink_rate_report

log = logging.getLogger(__name__)

UPLINK, DOWNLINK = 0, 1
MAX_ATTEMPTS = 20
CSV_COLUMNS = (
    "scenario", "variant", "M", "a_over_lambda", "mean_rate", "stderr",
    "alpha", "sigma_d2", "p_r_ratio", "leakage",
)


@dataclass(frozen=True)
class SweepConfig:
    """Sweep parameters.

    ``snr`` is ``eps_k / N0`` per user in the uplink and ``eps / (N0 N_F)``
    in the downlink. ``dither_ratio`` sets ``sigma_d^2 / eps`` in units of
    ``lambda / a``.
    """

    aperture_lambda: float = 2.5
    element_counts: Tuple[int, ...] = (25, 49, 100, 196, 400)
    users: int = 2
    snr: float = 2.0
    noise_figure: float = 2.0
    realizations: int = 100
    seed: int = 0
    delta: float = 0.01
    dither_ratio: float = 1.0 / 3.0
    dither: bool = True
    quad_points: Tuple[int, int] = DEFAULT_QUAD_POINTS
    workers: int = 1
    output_path: Optional[str] = None

    def validate(self) -> "SweepConfig":
        if not self.element_counts:
            raise ConfigError("at least one element count is required")
        if len(set(self.element_counts)) != len(self.element_counts):
            raise ConfigError(f"duplicate element counts in {list(self.element_counts)}")
        for M in self.element_counts:
            side = math.isqrt(M) if M > 0 else 0
            if M < 1 or side * side != M:
                raise ConfigError(f"element count {M} is not a perfect square (use e.g. 25, 49, 100)")
            if self.users > M:
                raise ConfigError(f"{self.users} users cannot be served by {M} elements (need K <= M)")
        if self.users < 1:
            raise ConfigError(f"need at least one user, got {self.users}")
        if not self.noise_figure >= 1:
            raise ConfigError(f"noise figure must be >= 1, got {self.noise_figure}")
        if not self.delta > 0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if not self.aperture_lambda > 0:
            raise ConfigError(f"aperture must be positive, got {self.aperture_lambda}")
        if not self.snr > 0:
            raise ConfigError(f"snr must be positive, got {self.snr}")
        if self.realizations < 1:
            raise ConfigError(f"need at least one realization, got {self.realizations}")
        if not self.dither_ratio >= 0:
            raise ConfigError(f"dither ratio must be non-negative, got {self.dither_ratio}")
        if self.workers < 1:
            raise ConfigError(f"worker count must be positive, got {self.workers}")
        return self


@dataclass
class SweepRow:
    scenario: str
    variant: str
    M: int
    a_over_lambda: float
    mean_rate: float
    stderr: float
    alpha: Optional[float] = None
    sigma_d2: Optional[float] = None
    p_r_ratio: Optional[float] = None
    leakage: Optional[float] = None


@lru_cache(maxsize=32)
def _coupling(aperture_lambda: float, M: int):
    return coupling_matrix_closed_form(ArrayGeometry.fixed_aperture(aperture_lambda, M))


@lru_cache(maxsize=32)
def _projector(aperture_lambda: float, M: int, delta: float):
    U = null_space_projector(_coupling(aperture_lambda, M), delta)
    U.setflags(write=False)
    return U


def _with_resampling(cfg, scenario, M, r, evaluate):
    B = _coupling(cfg.aperture_lambda, M)
    for attempt in range(MAX_ATTEMPTS):
        rng = substream(cfg.seed, scenario, M, r, attempt)
        channels = rayleigh_channels(B, cfg.users, rng)
        try:
            return evaluate(channels.H, B), attempt
        except np.linalg.LinAlgError as exc:
            log.warning("M=%d realization %d attempt %d failed (%s); resampling", M, r, attempt, exc)
    raise NumericalFailure(f"M={M} realization {r}: {MAX_ATTEMPTS} consecutive failures")


def _uplink_item(cfg: SweepConfig, M: int, r: int):
    ul = UplinkConfig([cfg.snr] * cfg.users, cfg.noise_figure)

    def evaluate(H, B):
        rep = uplink_rate_report(H, B, ul)
        return rep.ideal.mean(), rep.one_bit_exact.mean(), rep.one_bit_uqn.mean()

    return _with_resampling(cfg, UPLINK, M, r, evaluate)


def _downlink_item(cfg: SweepConfig, M: int, r: int):
    eps = cfg.snr * cfg.noise_figure
    a = cfg.aperture_lambda / math.isqrt(M)
    nodither = DownlinkConfig(eps, cfg.noise_figure, 0.0, cfg.delta)
    sigma_d2 = dither_power_rule(eps, a, cfg.dither_ratio) if cfg.dither else 0.0
    dithered = DownlinkConfig(eps, cfg.noise_figure, sigma_d2, cfg.delta)

    def evaluate(H_ul, B):
        H = H_ul.conj().T
        out = {}
        nd = downlink_rate_report(H, B, nodither)
        out["ideal"] = nd.ideal
        out["ideal_ratio"] = nd.ideal_power_ratio
        out["nodither"] = nd.one_bit_exact.mean()
        out["nodither_alpha"] = nd.alpha_exact
        out["nodither_ratio"] = nd.one_bit_power_ratio
        if cfg.dither and sigma_d2 > 0:
            U = _projector(cfg.aperture_lambda, M, cfg.delta)
            d = downlink_rate_report(H, B, dithered, U=U)
            out["exact"] = d.one_bit_exact.mean()
            out["noleak"] = d.one_bit_exact_noleak.mean()
            out["uqn"] = d.one_bit_uqn
            out["alpha"] = d.alpha_exact
            out["alpha_uqn"] = d.alpha_uqn
            out["ratio"] = d.one_bit_power_ratio
            out["ratio_uqn"] = d.P_R / (d.alpha_uqn * (eps + sigma_d2))
            out["leakage"] = d.leakage
        return out

    return _with_resampling(cfg, DOWNLINK, M, r, evaluate)


def _run(cfg: SweepConfig, item_fn):
    items = [(M, r) for M in cfg.element_counts for r in range(cfg.realizations)]
    fn = partial(_call_item, item_fn, cfg)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * cfg.workers))))
    else:
        results = [fn(item) for item in items]
    failures = sum(attempts for _, attempts in results)
    total = len(items)
    if failures:
        log.info("%d of %d realizations were resampled", failures, total)
    if failures > 0.01 * total:
        raise NumericalFailure(f"{failures} of {total} realizations failed (more than 1%)")
    by_m = {}
    for (M, _), (value, _) in zip(items, results):
        by_m.setdefault(M, []).append(value)
    return by_m


def _call_item(item_fn, cfg, item):
    return item_fn(cfg, *item)


def _mean_stderr(values) -> Tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return float(v.mean()), 0.0
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size))


def run_uplink_sweep(cfg: SweepConfig) -> List[SweepRow]:
    """Ideal, exact one-bit and UQN one-bit uplink rates for every element count."""
    cfg.validate()
    rows = []
    for M, values in _run(cfg, _uplink_item).items():
        a = cfg.aperture_lambda / math.isqrt(M)
        cols = np.asarray(values)
        for j, variant in enumerate(("ideal", "onebit_exact", "onebit_uqn")):
            mean, se = _mean_stderr(cols[:, j])
            rows.append(SweepRow("uplink", variant, M, a, mean, se))
    return rows


def run_downlink_sweep(cfg: SweepConfig) -> List[SweepRow]:
    """
    Downlink rates, power ratios and dither diagnostics for every element count.

    Variants: ``ideal``, ``onebit_exact`` (dither leaking through the channel
    counted as noise), ``onebit_exact_noleak``, ``onebit_uqn`` and
    ``onebit_nodither``. The dithered variants are omitted when
    ``cfg.dither`` is false.
    """
    cfg.validate()
    eps = cfg.snr * cfg.noise_figure
    rows = []
    for M, values in _run(cfg, _downlink_item).items():
        a = cfg.aperture_lambda / math.isqrt(M)

        def col(key):
            return [v[key] for v in values]

        def avg(key):
            return float(np.mean(col(key)))

        rows.append(SweepRow("downlink", "ideal", M, a, *_mean_stderr(col("ideal")),
                             p_r_ratio=avg("ideal_ratio")))
        if cfg.dither and "exact" in values[0]:
            sigma_d2 = dither_power_rule(eps, a, cfg.dither_ratio)
            leak = avg("leakage")
            rows.append(SweepRow("downlink", "onebit_exact", M, a, *_mean_stderr(col("exact")),
                                 alpha=avg("alpha"), sigma_d2=sigma_d2, p_r_ratio=avg("ratio"), leakage=leak))
            rows.append(SweepRow("downlink", "onebit_exact_noleak", M, a, *_mean_stderr(col("noleak")),
                                 alpha=avg("alpha"), sigma_d2=sigma_d2, p_r_ratio=avg("ratio"), leakage=leak))
            rows.append(SweepRow("downlink", "onebit_uqn", M, a, *_mean_stderr(col("uqn")),
                                 alpha=avg("alpha_uqn"), sigma_d2=sigma_d2, p_r_ratio=avg("ratio_uqn"),
                                 leakage=leak))
        rows.append(SweepRow("downlink", "onebit_nodither", M, a, *_mean_stderr(col("nodither")),
                             alpha=avg("nodither_alpha"), sigma_d2=0.0, p_r_ratio=avg("nodither_ratio")))
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.9g}"


def _write_rows(fh, rows):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(getattr(row, name)) for name in CSV_COLUMNS])


def emit_csv(rows: Sequence[SweepRow], path) -> None:
    """Write sweep rows as CSV with a fixed column order and 9 significant digits.

    ``path`` may also be an open text stream.
    """
    if hasattr(path, "write"):
        _write_rows(path, rows)
        return
    try:
        with open(path, "w", newline="") as fh:
            _write_rows(fh, rows)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write sweep CSV to {path}: {exc.strerror}") from exc


def read_csv(path) -> List[SweepRow]:
    types = {f.name: f.type for f in fields(SweepRow)}
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            kwargs = {}
            for name, text in rec.items():
                if text == "":
                    kwargs[name] = None
                elif name in ("scenario", "variant"):
                    kwargs[name] = text
                elif name == "M":
                    kwargs[name] = int(text)
                else:
                    kwargs[name] = float(text)
            rows.append(SweepRow(**kwargs))
    return rows


# ---------------------------------------------------------------- validation


@dataclass
class CheckResult:
    name: str
    passed: bool
    observed: object
    expected: str

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: observed {self.observed}, expected {self.expected}"


@dataclass
class ValidationReport:
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def add(self, name, passed, observed, expected):
        self.checks.append(CheckResult(name, bool(passed), observed, expected))

    def __str__(self):
        return "\n".join(str(c) for c in self.checks)


def oracle_tolerance(n_theta: int) -> float:
    """Closed-form vs quadrature tolerance for a Gauss-Legendre grid of ``n_theta`` nodes.

    Calibrated for apertures up to 2.5 wavelengths (element distances up to
    about 3.5 wavelengths); the theta integrand is entire, so error falls
    off super-exponentially once the grid resolves its oscillation.
    """
    if n_theta >= 32:
        return 1e-6
    if n_theta >= 16:
        return 1e-4
    if n_theta >= 8:
        return 1e-2
    return 0.3


def validate_model(cfg: Optional[SweepConfig] = None, coupling_scale: float = 1.0,
                   mc_samples: int = 200_000, rng_seed: int = 12345) -> ValidationReport:
    """
    Run the model property suite at reduced sizes.

    ``coupling_scale`` multiplies every coupling matrix before the passivity
    checks; values above 1 inject a fault that must be reported. Monte
    Carlo checks use a 4.5 standard-error band so that the whole family of
    entrywise comparisons has a false-alarm rate well below 1%.
    """
    cfg = (cfg or SweepConfig()).validate()
    report = ValidationReport()
    rng = np.random.default_rng(rng_seed)
    n_theta = cfg.quad_points[0]
    tol = oracle_tolerance(n_theta)

    worst = 0.0
    for r in (1 / 8, 1 / 2):
        for side in (1, 2, 3):
            g = ArrayGeometry(r, side)
            closed = coupling_matrix_closed_form(g).entries
            oracle = coupling_matrix_integral_oracle(g, cfg.quad_points).entries
            worst = max(worst, float(np.abs(closed - oracle).max()))
    report.add("oracle_equivalence", worst < tol, f"{worst:.3g}", f"< {tol:g} at {n_theta} theta nodes")

    diag_err = 0.0
    max_eig = 0.0
    parseval = -np.inf
    for M in cfg.element_counts:
        B = _coupling(cfg.aperture_lambda, M)
        r = B.geom.spacing_over_lambda
        diag_err = max(diag_err, float(np.abs(np.diagonal(B.entries) - np.pi * r * r).max()))
        scaled = coupling_scale * B.entries
        max_eig = max(max_eig, float(np.linalg.eigvalsh(scaled)[-1]))
        parseval = max(parseval, parseval_margin(scaled, 1000, rng))
    report.add("diagonal_identity", diag_err == 0.0, f"{diag_err:.3g}", "0 (exact)")
    report.add("passivity", max_eig <= 1 + 1e-9, f"{max_eig:.12g}", "<= 1 + 1e-9")
    report.add("parseval_bound", parseval <= 1e-9, f"{parseval:.3g}", "<= 1e-9")

    g_quad = gamma_quadrature("cosine", cfg.quad_points)
    report.add("gamma_quadrature", abs(g_quad - gamma_constant("cosine")) < 1e-9,
               f"{g_quad:.15g}", "pi within 1e-9")

    worst_imp = 0.0
    for _ in range(20):
        M = 6
        A = complex_normal(rng, (M, M))
        X = rng.standard_normal((M, M))
        Z = A @ A.conj().T + 1j * (X + X.T)
        worst_imp = max(worst_imp, coupling_from_impedance(Z, 1.0 + rng.random()).max_eigenvalue)
    report.add("impedance_passivity", worst_imp <= 1 + 1e-9, f"{worst_imp:.12g}", "<= 1 + 1e-9")

    ok_out = ok_cross = True
    for _ in range(2):
        A = complex_normal(rng, (6, 6))
        C = A @ A.conj().T / 6
        st = quantizer_monte_carlo(C, mc_samples, rng)
        ok_out &= bool(within_stderr(st.out_cov, arcsine_covariance(C), st.out_stderr, 4.5).all())
        ok_cross &= bool(within_stderr(st.cross_cov, BUSSGANG_GAIN * C, st.cross_stderr, 4.5).all())
    report.add("arcsine_monte_carlo", ok_out, ok_out, f"all entries within 4.5 s.e. ({mc_samples} draws)")
    report.add("bussgang_cross_covariance", ok_cross, ok_cross, "all entries within 4.5 s.e.")

    ranks = {}
    for M in cfg.element_counts:
        B = _coupling(cfg.aperture_lambda, M)
        ranks[M] = effective_rank(B)
    target = 4 * cfg.aperture_lambda ** 2
    report.add("effective_rank", all(target / 2 <= k <= 2 * target for k in ranks.values()),
               ranks, f"within factor 2 of {target:g}")

    M_dense = max(cfg.element_counts)
    B = _coupling(cfg.aperture_lambda, M_dense)
    leak = null_space_leakage(B, null_space_projector(B, cfg.delta))
    report.add("null_space_leakage", leak < 0.02, f"{leak:.3g}", f"< 0.02 at M={M_dense}")

    ul = UplinkConfig([cfg.snr] * cfg.users, cfg.noise_figure)
    B = _coupling(cfg.aperture_lambda, min(cfg.element_counts))
    order_ok = True
    for r in range(5):
        H = rayleigh_channels(B, cfg.users, substream(rng_seed, UPLINK, B.n_elements, r, 0)).H
        rep = uplink_rate_report(H, B, ul)
        order_ok &= bool(np.all(rep.one_bit_exact <= rep.ideal + 1e-9))
        order_ok &= bool(np.all(rep.one_bit_uqn <= rep.ideal + 1e-9))
    report.add("uplink_one_bit_below_ideal", order_ok, order_ok, "one-bit <= ideal for every user")

    a_tiny = alpha_uqn(1.0, 1e-3, 4.0, dither_power_rule(4.0, 1e-3))
    report.add("alpha_uqn_dense_limit", abs(a_tiny / (np.pi / 2) - 1) < 0.01, f"{a_tiny:.6g}",
               "pi/2 within 1% at a/lambda = 1e-3")
    return report
