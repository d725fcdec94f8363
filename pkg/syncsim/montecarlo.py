"""
Coincidence counting and the dip estimator that recovers the clock offset.

Each scan point draws from its own Philox stream keyed by (seed, point
index), so a scan does not depend on the order in which its points are
simulated.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
import pandas as pd
from scipy.optimize import least_squares

from .exceptions import EdgeDip, InsufficientPlateau, NoConvergence, Underdetermined
from .interferometer import dip_profile
from .protocol import Scenario, run_scenario
from .spacetime import SPEED_OF_LIGHT
from .utils import atomic_write

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 5
FIT_TOLERANCE = 1e-12
MAX_FIT_EVALUATIONS = 200
PLATEAU_WIDTHS = 4.0
MIN_PLATEAU_POINTS = 2
FEW_PLATEAU_POINTS = 10
MIN_REPEATS = 10
SEED_LIMIT = 2**64


class Provenance(str, Enum):
    SIMULATED = "simulated"
    ANALYTIC = "analytic"


@dataclass(frozen=True)
class CountingConfig:
    """Detector statistics of one scan: N pairs per point, efficiency, accidentals and seed."""

    pairs_per_point: int
    efficiency: float = 1.0
    background: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if int(self.pairs_per_point) != self.pairs_per_point or self.pairs_per_point < 1:
            raise ValueError("pairs_per_point must be an integer >= 1.")
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must lie in (0, 1].")
        if not self.background >= 0:
            raise ValueError("background must be non-negative.")
        if self.efficiency + self.background > 1:
            raise ValueError("efficiency + background must not exceed 1.")
        if int(self.seed) != self.seed or not 0 <= self.seed < SEED_LIMIT:
            raise ValueError("seed must be an integer in [0, 2**64).")
        object.__setattr__(self, "pairs_per_point", int(self.pairs_per_point))
        object.__setattr__(self, "seed", int(self.seed))

    def detection_probability(self, p_c):
        return np.clip(self.efficiency * np.asarray(p_c, dtype=float) + self.background, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class CoincidenceScan:
    """
    Counted coincidences along the delay scan.

    Simulated scans hold integer counts; analytic scans hold the expected
    counts trials * probability, which need not be integers.
    """

    delta_l_m: np.ndarray
    counts: np.ndarray
    trials: np.ndarray
    provenance: Provenance = Provenance.SIMULATED
    seed: int | None = None

    def __post_init__(self):
        delta_l = np.atleast_1d(np.asarray(self.delta_l_m, dtype=float))
        counts = np.atleast_1d(np.asarray(self.counts, dtype=float))
        trials = np.atleast_1d(np.asarray(self.trials, dtype=np.int64))
        if not delta_l.shape == counts.shape == trials.shape:
            raise ValueError("delta_l_m, counts and trials must have equal length.")
        if np.any(trials < 0):
            raise ValueError("trials must be non-negative.")
        if np.any(counts < 0) or np.any(counts > trials):
            raise ValueError("counts must lie in [0, trials] at every point.")
        object.__setattr__(self, "delta_l_m", delta_l)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "trials", trials)
        object.__setattr__(self, "provenance", Provenance(self.provenance))

    def __len__(self):
        return self.delta_l_m.size

    @property
    def rates(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.trials > 0, self.counts / np.maximum(self.trials, 1), np.nan)

    def to_frame(self) -> pd.DataFrame:
        counts = self.counts if self.provenance is Provenance.ANALYTIC else self.counts.astype(np.int64)
        return pd.DataFrame({"delta_l_m": self.delta_l_m, "counts": counts, "trials": self.trials})

    def csv_text(self) -> str:
        seed = "" if self.seed is None else f" seed={self.seed}"
        header = f"# provenance={self.provenance.value}{seed}\n"
        return header + self.to_frame().to_csv(index=False, float_format="%.17g")

    def to_csv(self, path) -> None:
        atomic_write(path, self.csv_text())

    @classmethod
    def from_csv(cls, path) -> "CoincidenceScan":
        provenance, seed = Provenance.SIMULATED, None
        with open(path) as handle:
            first = handle.readline()
        if first.startswith("#"):
            for token in first[1:].split():
                key, _, value = token.partition("=")
                if key == "provenance":
                    provenance = Provenance(value)
                elif key == "seed":
                    seed = int(value)
        frame = pd.read_csv(path, comment="#", float_precision="round_trip")
        missing = {"delta_l_m", "counts", "trials"} - set(frame.columns)
        if missing:
            raise ValueError(f"{path}: missing columns {', '.join(sorted(missing))}")
        return cls(
            frame["delta_l_m"].to_numpy(dtype=float),
            frame["counts"].to_numpy(dtype=float),
            frame["trials"].to_numpy(dtype=np.int64),
            provenance,
            seed,
        )


@dataclass(frozen=True)
class EstimateResult:
    """Fitted dip and the clock offset it implies."""

    dip_center_m: float
    dip_center_stderr_m: float
    dtau_hat_s: float
    dtau_stderr_s: float
    fit_residual: float
    converged: bool
    amplitude: float
    background: float
    sigma_hz: float
    evaluations: int
    message: str = ""


@dataclass(frozen=True)
class CurvatureDetection:
    """Plateau comparison between a flat and a curved scan."""

    delta_p_hat: float
    z_score: float
    plateau_points_flat: int
    plateau_points_curved: int


def point_stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for scan point `index` of a run seeded with `seed`."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _expected_rates(scenario: Scenario, rates):
    if rates is None:
        _, scan = run_scenario(scenario)
        return scan.p_c
    rates = np.asarray(rates, dtype=float)
    if rates.shape != scenario.protocol.scan_m.shape:
        raise ValueError("rates must match the scenario's delay scan.")
    return rates


def simulate_scan(scenario: Scenario, cc: CountingConfig, rates=None) -> CoincidenceScan:
    """
    Draw binomial coincidence counts at every delay of the scenario's scan.

    The success probability at a delay is efficiency * P_c + background.
    `rates` lets callers pass a precomputed P_c scan.
    """
    probability = cc.detection_probability(_expected_rates(scenario, rates))
    counts = np.array(
        [point_stream(cc.seed, index).binomial(cc.pairs_per_point, p) for index, p in enumerate(probability)],
        dtype=np.int64,
    )
    trials = np.full(counts.shape, cc.pairs_per_point, dtype=np.int64)
    logger.debug("simulated %d points for %s with seed %d", counts.size, scenario.label, cc.seed)
    return CoincidenceScan(scenario.protocol.scan_m, counts, trials, Provenance.SIMULATED, cc.seed)


def analytic_scan(scenario: Scenario, cc: CountingConfig, rates=None) -> CoincidenceScan:
    """Noise-free scan holding the expected counts N * (efficiency * P_c + background)."""
    probability = cc.detection_probability(_expected_rates(scenario, rates))
    trials = np.full(probability.shape, cc.pairs_per_point, dtype=np.int64)
    return CoincidenceScan(scenario.protocol.scan_m, trials * probability, trials, Provenance.ANALYTIC)


def _weights(counts, trials):
    variance = np.maximum(counts * (1.0 - counts / trials), 1.0) / trials.astype(float) ** 2
    return 1.0 / np.sqrt(variance)


def fit_dip(scan: CoincidenceScan, sigma_hz: float, v_mps: float, beta=None, fit_sigma=False, strict=False):
    """
    Fit A * (1 - exp(-2 s^2 (dl - mu)^2 / c^2)) + B to a coincidence scan.

    Parameters are (A, m, B), plus s / sigma_hz when `fit_sigma` is set, with
    mu = mu0 + m c / sigma_hz and mu0 the delay of the minimum-count bin.
    Residuals are weighted by the binomial variance
    max(k (1 - k/N), 1) / N^2; the standard errors come from the inverse of
    the weighted normal matrix.

    Args:
        scan (CoincidenceScan): Counts along the delay scan.
        sigma_hz (float): Known source bandwidth.
        v_mps (float): Mirror speed assumed by the estimator.
        beta (float, optional): v/c used in the offset conversion; defaults to v_mps / c.
        fit_sigma (bool): Fit the bandwidth as a fourth parameter.
        strict (bool): Raise NoConvergence instead of returning converged=False.

    Returns:
        EstimateResult: dtau_hat = (1 + beta) mu / (4 v).

    Raises:
        Underdetermined: Too few usable points, or no coincidences at all.
        EdgeDip: The minimum-count bin is the first or last usable point.
        NoConvergence: Only when `strict` is set.
    """
    if not sigma_hz > 0 or not v_mps > 0:
        raise ValueError("sigma_hz and v_mps must be positive.")
    if beta is None:
        beta = v_mps / SPEED_OF_LIGHT

    usable = scan.trials > 0
    order = np.argsort(scan.delta_l_m[usable])
    delta_l = scan.delta_l_m[usable][order]
    counts = scan.counts[usable][order]
    trials = scan.trials[usable][order]
    n_params = 4 if fit_sigma else 3
    if delta_l.size < max(MIN_FIT_POINTS, n_params + 1):
        raise Underdetermined(f"{delta_l.size} usable points; the fit needs at least {MIN_FIT_POINTS}.")
    if not np.any(counts > 0):
        raise Underdetermined("the scan holds no coincidences.")

    rates = counts / trials
    lowest = int(np.argmin(rates))
    if lowest in (0, delta_l.size - 1):
        raise EdgeDip(f"minimum-count bin at the scan edge (delta_l = {delta_l[lowest]:.6g} m).")

    scale = SPEED_OF_LIGHT / sigma_hz
    mu0 = delta_l[lowest]
    weights = _weights(counts, trials)

    def unpack(x):
        ratio = x[3] if fit_sigma else 1.0
        return x[0], mu0 + x[1] * scale, x[2], ratio

    def residuals(x):
        amplitude, mu, background, ratio = unpack(x)
        return (amplitude * dip_profile(delta_l, mu, sigma_hz * ratio) + background - rates) * weights

    def jacobian(x):
        amplitude, mu, _, ratio = unpack(x)
        u = ratio * (delta_l - mu) / scale
        envelope = np.exp(-2.0 * u * u)
        columns = [
            -np.expm1(-2.0 * u * u),
            -4.0 * amplitude * ratio * u * envelope,
            np.ones_like(u),
        ]
        if fit_sigma:
            columns.append(4.0 * amplitude * u * u * envelope / ratio)
        return np.column_stack(columns) * weights[:, None]

    x0 = [float(np.max(rates)), 0.0, 0.0] + ([1.0] if fit_sigma else [])
    result = least_squares(
        residuals,
        x0,
        jac=jacobian,
        method="lm",
        xtol=FIT_TOLERANCE,
        ftol=FIT_TOLERANCE,
        max_nfev=MAX_FIT_EVALUATIONS,
    )
    logger.debug("dip fit: status=%d nfev=%d cost=%g", result.status, result.nfev, result.cost)

    converged = bool(result.success) and bool(np.all(np.isfinite(result.x)))
    if not converged:
        message = f"least squares stalled: {result.message}"
        if strict:
            raise NoConvergence(message)
        logger.warning(message)

    covariance = np.linalg.pinv(result.jac.T @ result.jac)
    amplitude, mu, background, ratio = unpack(result.x)
    mu_stderr = math.sqrt(max(covariance[1, 1], 0.0)) * scale
    conversion = (1.0 + beta) / (4.0 * v_mps)
    return EstimateResult(
        dip_center_m=float(mu),
        dip_center_stderr_m=mu_stderr,
        dtau_hat_s=float(mu * conversion),
        dtau_stderr_s=mu_stderr * conversion,
        fit_residual=float(2.0 * result.cost / max(delta_l.size - n_params, 1)),
        converged=converged,
        amplitude=float(amplitude),
        background=float(background),
        sigma_hz=float(sigma_hz * ratio),
        evaluations=int(result.nfev),
        message=str(result.message),
    )


def estimate(scenario: Scenario, cc: CountingConfig, analytic=False, fit_sigma=False, strict=True):
    """Simulate (or compute) a scenario's scan and fit it with the scenario's own source and mirror."""
    scan = analytic_scan(scenario, cc) if analytic else simulate_scan(scenario, cc)
    result = fit_dip(
        scan, scenario.source.sigma_hz, scenario.protocol.mirror_speed_mps, fit_sigma=fit_sigma, strict=strict
    )
    return scan, result


def repeat_seed(seed: int, *key: int) -> int:
    """Derive a child seed for repeat `key` of a study seeded with `seed`."""
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1, np.uint64)[0])


def precision_curve(scenario: Scenario, cc: CountingConfig, n_repeats: int, pairs_grid=None):
    """
    Empirical spread of the offset estimate against the number of pairs per point.

    Every (grid point, repeat) pair gets its own derived seed. The default
    grid is N, 2N, 4N, 8N with N = cc.pairs_per_point.

    Returns:
        list[tuple[int, float]]: (pairs_per_point, sample std of dtau_hat).
    """
    if n_repeats < MIN_REPEATS:
        raise ValueError(f"n_repeats must be at least {MIN_REPEATS}.")
    if pairs_grid is None:
        pairs_grid = [cc.pairs_per_point * 2**k for k in range(4)]
    _, rate_scan = run_scenario(scenario)
    curve = []
    for grid_index, pairs in enumerate(pairs_grid):
        estimates = []
        for repeat in range(n_repeats):
            trial_cc = replace(cc, pairs_per_point=int(pairs), seed=repeat_seed(cc.seed, grid_index, repeat))
            scan = simulate_scan(scenario, trial_cc, rates=rate_scan.p_c)
            result = fit_dip(scan, scenario.source.sigma_hz, scenario.protocol.mirror_speed_mps)
            estimates.append(result.dtau_hat_s)
        curve.append((int(pairs), float(np.std(estimates, ddof=1))))
        logger.info("precision curve: N=%d std=%g s", pairs, curve[-1][1])
    return curve


def scaling_slope(curve) -> float:
    """Slope of log(std) against log(N); about -1/2 under shot noise."""
    pairs = np.array([point[0] for point in curve], dtype=float)
    spread = np.array([point[1] for point in curve], dtype=float)
    if pairs.size < 2:
        raise ValueError("a slope needs at least two points.")
    if np.any(pairs <= 0) or np.any(spread <= 0):
        raise ValueError("pairs and spreads must be positive.")
    return float(np.polyfit(np.log(pairs), np.log(spread), 1)[0])


def _plateau(scan: CoincidenceScan, sigma_hz, dip_center_m, background):
    mask = (np.abs(scan.delta_l_m - dip_center_m) > PLATEAU_WIDTHS * SPEED_OF_LIGHT / sigma_hz) & (scan.trials > 0)
    points = int(np.count_nonzero(mask))
    if points < MIN_PLATEAU_POINTS:
        raise InsufficientPlateau(
            f"{points} points lie beyond {PLATEAU_WIDTHS:g} c/sigma of the dip; at least {MIN_PLATEAU_POINTS} needed."
        )
    if points < FEW_PLATEAU_POINTS:
        logger.warning("plateau estimated from only %d points", points)
    trials = float(np.sum(scan.trials[mask]))
    rate = float(np.sum(scan.counts[mask])) / trials
    return rate - background, rate * (1.0 - rate) / trials, points


def detect_curvature(scan_flat, scan_curved, sigma_hz, dip_center_m=0.0, background=0.0) -> CurvatureDetection:
    """
    Estimate dp = 1 - plateau_curved / plateau_flat with a binomial z-score.

    Plateau points are those farther than 4 c/sigma from the dip centre; the
    accidental rate `background` is subtracted before the ratio is formed.

    Raises:
        InsufficientPlateau: If either scan lacks plateau points.
    """
    flat, flat_var, flat_points = _plateau(scan_flat, sigma_hz, dip_center_m, background)
    curved, curved_var, curved_points = _plateau(scan_curved, sigma_hz, dip_center_m, background)
    if not flat > 0:
        raise InsufficientPlateau("the flat plateau holds no signal above background.")
    ratio = curved / flat
    delta_p_hat = 1.0 - ratio
    stderr = math.sqrt(curved_var / flat**2 + ratio**2 * flat_var / flat**2)
    if stderr > 0:
        z_score = delta_p_hat / stderr
    else:
        z_score = 0.0 if delta_p_hat == 0 else math.copysign(math.inf, delta_p_hat)
    return CurvatureDetection(delta_p_hat, z_score, flat_points, curved_points)
