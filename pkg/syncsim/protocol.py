"""
End-to-end synchronization scenarios and the curvature disturbance metric.

The disturbance of the coincidence rate is

    dp = (P_flat - P_curved) / P_flat = 1 - (Theta1 Theta2)^2,

which the small-shift approximation turns into 1 - (1 - theta^2 w0^2 / 8 sigma^2)^4.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import interferometer
from .interferometer import DispersionModel, ProtocolConfig, RateScan
from .spacetime import DEFAULT_SCHWARZSCHILD_RADIUS_M, EARTH_RADIUS_M, SPEED_OF_LIGHT, SpacetimeConfig, theta
from .wavepacket import (
    Link,
    PhotonPairState,
    channel_decomposition,
    distort,
    log_overlap_gaussian,
    overlap_approx_deficit,
    overlap_numeric,
    regime_ok,
)

logger = logging.getLogger(__name__)

FIGURE2_OMEGA0_HZ = 700e12
FIGURE2_SIGMA_HZ = 100e6
LEO_RADIUS_M = 6.771e6


class DeltaPMode(str, Enum):
    APPROX = "approx"
    EXACT = "exact"


@dataclass(frozen=True)
class Scenario:
    """One ground-to-satellite synchronization setup."""

    spacetime: SpacetimeConfig
    source: PhotonPairState
    protocol: ProtocolConfig
    dispersion: DispersionModel = field(default_factory=DispersionModel)
    label: str = "custom"

    @property
    def theta(self) -> float:
        return theta(self.spacetime)

    @property
    def regime_ok(self) -> bool:
        return regime_ok(self.theta, self.source.pump_half_frequency_hz, self.source.sigma_hz)


@dataclass(frozen=True)
class DisturbanceReport:
    """Curvature effect on one scenario's coincidence scan."""

    label: str
    theta: float
    overlap1: float
    overlap2: float
    delta_p: float
    dip_center_m: float
    regime_ok: bool
    orthogonal_weight: float

    @property
    def plateau(self) -> float:
        return (self.overlap1 * self.overlap2) ** 2


@dataclass(frozen=True)
class VelocitySensitivity:
    """Effect of a mirror-speed error dv on the dip and on the recovered clock offset."""

    dv_mps: float
    dip_shift_m: float
    dtau_relative_error: float
    first_order_error: float
    max_rate_change: float
    delta_p: float


def delta_p(theta_value: float, peak_hz: float, sigma_hz: float, mode: DeltaPMode = DeltaPMode.EXACT) -> float:
    """
    Relative disturbance of the coincidence rate caused by curvature.

    Args:
        theta_value (float): Curvature parameter theta.
        peak_hz (float): Source peak frequency w0.
        sigma_hz (float): Source bandwidth sigma.
        mode (DeltaPMode): APPROX uses 1 - (1 - theta^2 w0^2 / 8 sigma^2)^4,
            EXACT uses 1 - (Theta1 Theta2)^2 with the closed-form overlaps.

    Returns:
        float: A value in [0, 1); zero exactly when theta is zero.

    Raises:
        ValueError: If the arguments are out of range, or the approximation
            is asked for a deficit of one or more.
    """
    mode = DeltaPMode(mode)
    if mode is DeltaPMode.APPROX:
        deficit = overlap_approx_deficit(theta_value, peak_hz, sigma_hz)
        if deficit >= 1:
            raise ValueError("the small-shift approximation breaks down (deficit >= 1).")
        return -math.expm1(4.0 * math.log1p(-deficit))
    log_theta = log_overlap_gaussian(theta_value, peak_hz, sigma_hz, Link.UP) + log_overlap_gaussian(
        theta_value, peak_hz, sigma_hz, Link.DOWN
    )
    return -math.expm1(2.0 * log_theta)


def _overlaps(scenario: Scenario):
    theta_value = scenario.theta
    if theta_value == 0:
        return 1.0, 1.0
    source = scenario.source
    if source.is_gaussian:
        peak, sigma = source.detuning_amplitude.peak_hz, source.detuning_amplitude.sigma_hz
        return (
            math.exp(log_overlap_gaussian(theta_value, peak, sigma, Link.UP)),
            math.exp(log_overlap_gaussian(theta_value, peak, sigma, Link.DOWN)),
        )
    packet = source.detuning_amplitude
    return (
        overlap_numeric(distort(packet, scenario.spacetime, Link.UP), packet),
        overlap_numeric(distort(packet, scenario.spacetime, Link.DOWN), packet),
    )


def run_scenario(scenario: Scenario, method: str = "auto") -> tuple[DisturbanceReport, RateScan]:
    """
    Assemble overlaps, disturbance and the coincidence scan for a scenario.

    Gaussian sources get closed-form overlaps and, when the dispersion
    cancels, the closed-form scan; anything else goes through quadrature.
    """
    overlap1, overlap2 = _overlaps(scenario)
    source = scenario.source
    if scenario.theta == 0:
        disturbance = 0.0
    elif source.is_gaussian:
        amplitude = source.detuning_amplitude
        disturbance = delta_p(scenario.theta, amplitude.peak_hz, amplitude.sigma_hz, DeltaPMode.EXACT)
    elif overlap1 == 0 or overlap2 == 0:
        # received and reference spectra no longer share any support
        disturbance = 1.0
    else:
        disturbance = -math.expm1(2.0 * (math.log(overlap1) + math.log(overlap2)))

    scan = interferometer.scan_rates(source, overlap1, overlap2, scenario.protocol, scenario.dispersion, method)
    report = DisturbanceReport(
        label=scenario.label,
        theta=scenario.theta,
        overlap1=overlap1,
        overlap2=overlap2,
        delta_p=disturbance,
        dip_center_m=scenario.protocol.dip_center_m,
        regime_ok=scenario.regime_ok,
        orthogonal_weight=channel_decomposition(overlap1, overlap2).orthogonal,
    )
    if not report.regime_ok:
        logger.warning("scenario %s: small-shift regime does not hold (theta=%g)", scenario.label, report.theta)
    logger.info("scenario %s: theta=%.6g delta_p=%.6g", scenario.label, report.theta, report.delta_p)
    return report, scan


def figure2_sweep(
    r_b_values,
    omega0_hz: float = FIGURE2_OMEGA0_HZ,
    sigma_hz: float = FIGURE2_SIGMA_HZ,
    r_a: float = EARTH_RADIUS_M,
    schwarzschild_radius_m: float = DEFAULT_SCHWARZSCHILD_RADIUS_M,
    mode: DeltaPMode = DeltaPMode.EXACT,
) -> list[tuple[float, float]]:
    """
    Disturbance as a function of the satellite radius for a fixed source.

    Raises:
        ValueError: If the grid is empty or a radius lies below the ground station.
    """
    r_b_values = [float(r) for r in np.atleast_1d(r_b_values)]
    if not r_b_values:
        raise ValueError("r_b grid is empty.")
    if min(r_b_values) < r_a:
        raise ValueError("every r_b must be at or above r_a.")
    rows = []
    for r_b in r_b_values:
        cfg = SpacetimeConfig(r_a=r_a, r_b=r_b, schwarzschild_radius_m=schwarzschild_radius_m)
        rows.append((r_b, delta_p(theta(cfg), omega0_hz, sigma_hz, mode)))
    return rows


def figure3_sweep(
    omega0_grid,
    sigma_grid,
    r_b: float = LEO_RADIUS_M,
    r_a: float = EARTH_RADIUS_M,
    schwarzschild_radius_m: float = DEFAULT_SCHWARZSCHILD_RADIUS_M,
    mode: DeltaPMode = DeltaPMode.EXACT,
) -> np.ndarray:
    """
    Disturbance over a grid of source parameters at fixed altitude.

    Returns:
        np.ndarray: Shape (len(sigma_grid), len(omega0_grid)); row i holds
        sigma_grid[i] against every omega0.
    """
    omega0_grid = np.atleast_1d(np.asarray(omega0_grid, dtype=float))
    sigma_grid = np.atleast_1d(np.asarray(sigma_grid, dtype=float))
    if omega0_grid.size == 0 or sigma_grid.size == 0:
        raise ValueError("source grids must not be empty.")
    theta_value = theta(SpacetimeConfig(r_a=r_a, r_b=r_b, schwarzschild_radius_m=schwarzschild_radius_m))
    return np.array(
        [[delta_p(theta_value, omega0, sigma, mode) for omega0 in omega0_grid] for sigma in sigma_grid]
    )


def mirror_velocity_sensitivity(scenario: Scenario, dv_mps: float) -> VelocitySensitivity:
    """
    Propagate a mirror-speed error into the dip position and the clock offset.

    The true dip sits at 4 (v + dv) dtau / (1 + beta'); an estimator that
    assumes the nominal v therefore returns dtau (v + dv)(1 + beta) / (v (1 + beta')),
    a relative error of |dv| / (v (1 + beta')), i.e. |dv|/v to first order.
    The plateau level (and hence the curvature disturbance) is untouched;
    `max_rate_change` is the largest pointwise change of the scan.
    """
    cfg = scenario.protocol
    v = cfg.mirror_speed_mps
    if not abs(dv_mps) < v:
        raise ValueError("|dv_mps| must be smaller than the mirror speed.")
    beta = cfg.beta
    beta_true = (v + dv_mps) / SPEED_OF_LIGHT
    report, scan = run_scenario(scenario)
    dip_shift = 4.0 * cfg.dtau_s * dv_mps / ((1.0 + beta) * (1.0 + beta_true))

    if scenario.source.is_gaussian and dv_mps != 0:
        perturbed = interferometer.coincidence_rate_gaussian(
            report.overlap1, report.overlap2, scenario.source.sigma_hz, scan.delta_l_m, v + dv_mps, cfg.dtau_s
        )
        max_rate_change = float(np.max(np.abs(perturbed - scan.p_c)))
    else:
        max_rate_change = 0.0

    return VelocitySensitivity(
        dv_mps=dv_mps,
        dip_shift_m=dip_shift,
        dtau_relative_error=abs(dv_mps) / (v * (1.0 + beta_true)),
        first_order_error=abs(dv_mps) / v,
        max_rate_change=max_rate_change,
        delta_p=report.delta_p,
    )
