"""
Schwarzschild scalar factors for a ground station and a satellite.

Only the metric function f(r) = 1 - r_s/r and quantities derived from it
are modelled; both stations sit on the same radial line.

Frequencies throughout the package are ordinary frequencies in hertz. The
formulas only ever combine them as ratios (omega/sigma) or as products with
a time or with a length divided by c, so the hertz convention is
self-consistent as long as it is used everywhere.

Small quantities are computed as deficits: r_s/r instead of 1 - f, and
log1p/expm1 for ratios that sit within 1e-9 of one.
"""

import math
from dataclasses import dataclass, replace

from scipy import constants

from .exceptions import SpacetimeDomainError

SPEED_OF_LIGHT = constants.c
EARTH_MASS_KG = 5.9722e24
DEFAULT_SCHWARZSCHILD_RADIUS_M = 9e-3
EARTH_RADIUS_M = 6.371e6


def schwarzschild_radius(mass_kg: float) -> float:
    """Return r_s = 2GM/c^2 in meters for a mass in kilograms."""
    if mass_kg <= 0:
        raise ValueError("mass_kg must be positive.")
    return 2.0 * constants.G * mass_kg / SPEED_OF_LIGHT**2


@dataclass(frozen=True)
class SpacetimeConfig:
    """
    Schwarzschild radius of the central mass and the radii of both labs.

    `r_a` is the ground station (Alice) and `r_b` the satellite (Bob).
    Either ordering is accepted; `theta` carries the sign.
    """

    r_a: float = EARTH_RADIUS_M
    r_b: float = EARTH_RADIUS_M
    schwarzschild_radius_m: float = DEFAULT_SCHWARZSCHILD_RADIUS_M

    def __post_init__(self):
        if not self.schwarzschild_radius_m > 0:
            raise SpacetimeDomainError("schwarzschild_radius_m must be positive.")
        for name in ("r_a", "r_b"):
            _check_radius(getattr(self, name), self.schwarzschild_radius_m, name)

    def swapped(self) -> "SpacetimeConfig":
        """Return the same geometry seen from the satellite (r_a and r_b exchanged)."""
        return replace(self, r_a=self.r_b, r_b=self.r_a)


def _check_radius(r: float, r_s: float, name: str = "r") -> None:
    if not r > 0:
        raise SpacetimeDomainError(f"{name} must be positive, got {r!r}.")
    if not r > r_s:
        raise SpacetimeDomainError(
            f"{name}={r!r} m lies at or inside the Schwarzschild radius {r_s!r} m."
        )


def metric_deficit(r: float, cfg: SpacetimeConfig) -> float:
    """Return 1 - f(r) = r_s/r without forming f first."""
    _check_radius(r, cfg.schwarzschild_radius_m)
    return cfg.schwarzschild_radius_m / r


def metric_f(r: float, cfg: SpacetimeConfig) -> float:
    """
    Evaluate the Schwarzschild metric function f(r) = 1 - r_s/r.

    Args:
        r (float): Radial coordinate in meters.
        cfg (SpacetimeConfig): Supplies the Schwarzschild radius.

    Returns:
        float: A value strictly inside (0, 1).

    Raises:
        SpacetimeDomainError: If r <= 0 or r <= r_s.
    """
    return 1.0 - metric_deficit(r, cfg)


def theta(cfg: SpacetimeConfig) -> float:
    """
    Return the curvature parameter sqrt(f(r_a)/f(r_b)) - 1.

    Negative when the ground station is below the satellite. Evaluated as
    expm1(log1p(q)/2) with q = f(r_a)/f(r_b) - 1 = (d_b - d_a)/(1 - d_b),
    where d = r_s/r, so no digits are lost near zero.
    """
    d_a = metric_deficit(cfg.r_a, cfg)
    d_b = metric_deficit(cfg.r_b, cfg)
    q = (d_b - d_a) / (1.0 - d_b)
    return math.expm1(0.5 * math.log1p(q))


def theta_first_order(cfg: SpacetimeConfig) -> float:
    """
    First-order expansion (r_s/r_a - r_s/r_b) * -1/2 of `theta`.

    Its magnitude is the familiar shift |r_s/r_b - r_s/r_a|/2; the sign
    follows `theta` (negative for an uplink).
    """
    d_a = metric_deficit(cfg.r_a, cfg)
    d_b = metric_deficit(cfg.r_b, cfg)
    return 0.5 * (d_b - d_a)


def redshift_ratio(cfg: SpacetimeConfig) -> float:
    """
    Return sqrt(f(r_a)/f(r_b)), the frequency ratio omega_b/omega_a.

    Below one for an uplink (r_a < r_b). The downlink factor is
    `redshift_ratio(cfg.swapped())` and multiplies back to one.
    """
    return 1.0 + theta(cfg)


def proper_time_dilation(t_coord: float, r: float, cfg: SpacetimeConfig) -> float:
    """Return the proper time sqrt(f(r)) * t_coord elapsed at radius r."""
    return math.sqrt(metric_f(r, cfg)) * t_coord


def proper_time_deficit(t_coord: float, r: float, cfg: SpacetimeConfig) -> float:
    """Return t_coord - proper time at radius r, computed without cancellation."""
    return -math.expm1(0.5 * math.log1p(-metric_deficit(r, cfg))) * t_coord
