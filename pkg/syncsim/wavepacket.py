"""
Photon spectral amplitudes and their gravitational distortion.

Conventions:

- A Gaussian packet has amplitude
  F(w) = (2 pi sigma^2)^(-1/4) exp(-(w - w0)^2 / (4 sigma^2)), so |F|^2 is a
  normalised Gaussian of variance sigma^2. Integrating the coincidence
  integrand against this density gives exactly the closed-form dip
  1 - exp(-2 sigma^2 (dl - dl*)^2 / c^2).
- Every amplitude is evaluated at `centre + offsets`; the large centre is
  subtracted from the packet peak once, so offsets of order sigma keep full
  precision even at optical carrier frequencies.
- A received packet is the sent one stretched in frequency by the
  red/blue-shift ratio s: F'(w) = F(w / s) / sqrt(s). Peak and width both
  scale by s and the squared norm is preserved.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
import pandas as pd
from django.conf import settings
from scipy.interpolate import CubicSpline

from .quadrature import integrate
from .spacetime import SpacetimeConfig, redshift_ratio

logger = logging.getLogger(__name__)

SUPPORT_HALF_WIDTH = 10.0
MIN_PEAK_TO_SIGMA = 8.0
NORM_TOLERANCE = 1e-9
REGIME_MARGIN = 0.1


class Link(str, Enum):
    """Propagation direction of a packet between the two labs."""

    UP = "uplink"
    DOWN = "downlink"


@dataclass(frozen=True)
class GaussianAmplitude:
    """Gaussian spectral amplitude peaked at `peak_hz` with density width `sigma_hz`."""

    peak_hz: float
    sigma_hz: float

    def __post_init__(self):
        if not self.sigma_hz > 0:
            raise ValueError("sigma_hz must be positive.")
        if not self.peak_hz > 0:
            raise ValueError("peak_hz must be positive.")
        if self.peak_hz < MIN_PEAK_TO_SIGMA * self.sigma_hz:
            raise ValueError(
                f"peak_hz must be at least {MIN_PEAK_TO_SIGMA:g} sigma_hz "
                "so the negative-frequency tail is negligible."
            )

    @property
    def centre_hz(self) -> float:
        return self.peak_hz

    def support(self):
        half = SUPPORT_HALF_WIDTH * self.sigma_hz
        return max(0.0, self.peak_hz - half), self.peak_hz + half

    def evaluate(self, centre_hz, offsets_hz):
        u = (centre_hz - self.peak_hz) + np.asarray(offsets_hz, dtype=float)
        norm = (2.0 * math.pi * self.sigma_hz**2) ** -0.25
        return norm * np.exp(-(u**2) / (4.0 * self.sigma_hz**2))

    def stretched(self, factor: float) -> "GaussianAmplitude":
        return GaussianAmplitude(self.peak_hz * factor, self.sigma_hz * factor)


@dataclass(frozen=True, eq=False)
class TabulatedAmplitude:
    """
    Spectral amplitude sampled on a strictly increasing frequency grid.

    Values between samples come from a cubic spline; outside the grid the
    amplitude is zero. Construction checks that the squared norm is one
    within 1e-9; use `from_samples(..., normalize=True)` to rescale raw data.
    """

    grid_hz: np.ndarray
    amplitude: np.ndarray
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        grid = np.asarray(self.grid_hz, dtype=float)
        amplitude = np.asarray(self.amplitude, dtype=complex)
        if grid.ndim != 1 or grid.shape != amplitude.shape:
            raise ValueError("grid_hz and amplitude must be 1-D arrays of equal length.")
        if grid.size < 4:
            raise ValueError("a tabulated amplitude needs at least 4 samples.")
        if not (np.all(np.isfinite(grid)) and np.all(np.isfinite(amplitude))):
            raise ValueError("grid_hz and amplitude must be finite.")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid_hz must be strictly increasing.")
        if grid[0] < 0:
            raise ValueError("grid_hz must not contain negative frequencies.")
        object.__setattr__(self, "grid_hz", grid)
        object.__setattr__(self, "amplitude", amplitude)
        object.__setattr__(self, "_spline", CubicSpline(grid - grid[0], amplitude))
        norm = self.squared_norm
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"squared norm is {norm:.12g}, expected 1 within {NORM_TOLERANCE:g}.")

    @classmethod
    def from_samples(cls, grid_hz, amplitude, normalize=True) -> "TabulatedAmplitude":
        grid = np.asarray(grid_hz, dtype=float)
        amplitude = np.asarray(amplitude, dtype=complex)
        if normalize:
            raw = CubicSpline(grid - grid[0], amplitude)
            norm = integrate(lambda x: np.abs(raw(x)) ** 2, 0.0, grid[-1] - grid[0])
            if not norm > 0:
                raise ValueError("amplitude samples are identically zero.")
            amplitude = amplitude / math.sqrt(norm)
        return cls(grid, amplitude)

    @classmethod
    def from_csv(cls, path, normalize=True) -> "TabulatedAmplitude":
        """
        Load a packet from CSV with columns (frequency_hz, amplitude) or
        (frequency_hz, re, im).
        """
        frame = pd.read_csv(path, comment="#", float_precision="round_trip")
        if list(frame.columns) == ["frequency_hz", "amplitude"]:
            values = frame["amplitude"].to_numpy(dtype=float).astype(complex)
        elif list(frame.columns) == ["frequency_hz", "re", "im"]:
            values = frame["re"].to_numpy(dtype=float) + 1j * frame["im"].to_numpy(dtype=float)
        else:
            raise ValueError(
                f"{path}: expected columns frequency_hz,amplitude or frequency_hz,re,im; "
                f"got {','.join(map(str, frame.columns))}"
            )
        return cls.from_samples(frame["frequency_hz"].to_numpy(dtype=float), values, normalize)

    def to_csv(self, path) -> None:
        pd.DataFrame(
            {"frequency_hz": self.grid_hz, "re": self.amplitude.real, "im": self.amplitude.imag}
        ).to_csv(path, index=False, float_format="%.17g")

    @property
    def centre_hz(self) -> float:
        return self.grid_hz[0]

    @cached_property
    def squared_norm(self) -> float:
        return float(integrate(lambda x: np.abs(self._spline(x)) ** 2, 0.0, self._span))

    @property
    def _span(self) -> float:
        return self.grid_hz[-1] - self.grid_hz[0]

    def support(self):
        return self.grid_hz[0], self.grid_hz[-1]

    def evaluate(self, centre_hz, offsets_hz):
        x = (centre_hz - self.grid_hz[0]) + np.asarray(offsets_hz, dtype=float)
        inside = (x >= 0.0) & (x <= self._span)
        return np.where(inside, self._spline(np.clip(x, 0.0, self._span)), 0.0)

    def stretched(self, factor: float) -> "TabulatedAmplitude":
        return TabulatedAmplitude(self.grid_hz * factor, self.amplitude / math.sqrt(factor))


SpectralAmplitude = GaussianAmplitude | TabulatedAmplitude


@dataclass(frozen=True)
class PhotonPairState:
    """
    Frequency-entangled pair from a monochromatic pump at 2 * omega0.

    `detuning_amplitude` is parameterised on absolute frequency and centred
    near omega0; the idler carries omega0 + w and the signal omega0 - w, so
    the two always sum to 2 * omega0.
    """

    pump_half_frequency_hz: float
    detuning_amplitude: SpectralAmplitude

    def __post_init__(self):
        if not self.pump_half_frequency_hz > 0:
            raise ValueError("pump_half_frequency_hz must be positive.")

    @classmethod
    def gaussian(cls, omega0_hz: float, sigma_hz: float) -> "PhotonPairState":
        return cls(omega0_hz, GaussianAmplitude(omega0_hz, sigma_hz))

    @property
    def is_gaussian(self) -> bool:
        return isinstance(self.detuning_amplitude, GaussianAmplitude)

    @property
    def sigma_hz(self) -> float:
        """Density width; for tabulated spectra the standard deviation of |F|^2."""
        if self.is_gaussian:
            return self.detuning_amplitude.sigma_hz
        lo, hi = self.detuning_support()
        density = self.spectral_density
        norm = integrate(density, lo, hi)
        # The first moment vanishes for a symmetric spectrum; settle it on the support scale.
        atol = settings.SYNCSIM_QUAD_RTOL * max(abs(lo), abs(hi)) * norm
        mean = integrate(lambda w: w * density(w), lo, hi, atol=atol) / norm
        second = integrate(lambda w: (w - mean) ** 2 * density(w), lo, hi)
        return math.sqrt(second / norm)

    def idler_frequency(self, detuning_hz):
        return self.pump_half_frequency_hz + detuning_hz

    def signal_frequency(self, detuning_hz):
        return self.pump_half_frequency_hz - detuning_hz

    def detuning_support(self):
        lo, hi = self.detuning_amplitude.support()
        return lo - self.pump_half_frequency_hz, hi - self.pump_half_frequency_hz

    def spectral_density(self, detuning_hz):
        """|F(omega0 + w)|^2 at detuning w."""
        values = self.detuning_amplitude.evaluate(self.pump_half_frequency_hz, detuning_hz)
        return np.abs(values) ** 2


@dataclass(frozen=True)
class ChannelWeights:
    """Weights of the prepared mode and of the orthogonal remainder after a round trip."""

    direct: float
    orthogonal: float


def rescale(packet: SpectralAmplitude, factor: float) -> SpectralAmplitude:
    """Stretch a packet in frequency by `factor`, preserving its squared norm."""
    if not factor > 0:
        raise ValueError("factor must be positive.")
    if factor == 1.0:
        return packet
    return packet.stretched(factor)


def distort(packet: SpectralAmplitude, cfg: SpacetimeConfig, direction: Link) -> SpectralAmplitude:
    """
    Return the packet as received after propagating between the two radii.

    An uplink packet (ground to satellite) is stretched by
    sqrt(f(r_a)/f(r_b)); a downlink packet by the inverse factor. In flat
    spacetime the input object is returned unchanged.

    Raises:
        SpacetimeDomainError: Propagated from the radius checks.
    """
    geometry = cfg if Link(direction) is Link.UP else cfg.swapped()
    return rescale(packet, redshift_ratio(geometry))


def overlap_numeric(received: SpectralAmplitude, reference: SpectralAmplitude) -> float:
    """
    Compute the channel fidelity |integral conj(F_ref) F_rec dw| by quadrature.

    The integral runs over the intersection of the two supports. The
    magnitude is reported, so a global phase between the packets drops out;
    the result is clipped to [0, 1] against rounding above one.

    Raises:
        QuadratureError: If the relative tolerance is not reached.
    """
    lo = max(received.support()[0], reference.support()[0])
    hi = min(received.support()[1], reference.support()[1])
    if hi <= lo:
        return 0.0
    centre = reference.centre_hz

    def integrand(offsets):
        return np.conj(reference.evaluate(centre, offsets)) * received.evaluate(centre, offsets)

    value = integrate(integrand, lo - centre, hi - centre)
    return min(abs(value), 1.0)


def _check_overlap_args(theta, peak_hz, sigma_hz):
    if not abs(theta) < 1:
        raise ValueError("|theta| must be below 1.")
    if not (peak_hz > 0 and sigma_hz > 0):
        raise ValueError("peak_hz and sigma_hz must be positive.")


def log_overlap_gaussian(theta: float, peak_hz: float, sigma_hz: float, ordering: Link) -> float:
    """
    Natural log of the Gaussian channel overlap.

    With D = 1 + theta for an uplink and 1 - theta for a downlink,
    log(Theta) = log(2D / (1 + D^2)) / 2 - theta^2 w0^2 / (4 sigma^2 (1 + D^2)),
    and 2D / (1 + D^2) = 1 - theta^2 / (1 + D^2) is fed to log1p.
    """
    _check_overlap_args(theta, peak_hz, sigma_hz)
    delta = 1.0 + theta if Link(ordering) is Link.UP else 1.0 - theta
    spread = 1.0 + delta * delta
    shape = 0.5 * math.log1p(-(theta * theta) / spread)
    shift = (theta * peak_hz / sigma_hz) ** 2 / (4.0 * spread)
    return shape - shift


def overlap_gaussian(theta: float, peak_hz: float, sigma_hz: float, ordering: Link) -> float:
    """
    Closed-form overlap of a Gaussian packet with its red/blue-shifted copy.

    Args:
        theta (float): Curvature parameter, |theta| < 1.
        peak_hz (float): Packet peak frequency.
        sigma_hz (float): Packet density width.
        ordering (Link): UP for the ground-to-satellite leg, DOWN for the return.

    Returns:
        float: Theta in (0, 1]; exactly 1 when theta is 0.
    """
    return math.exp(log_overlap_gaussian(theta, peak_hz, sigma_hz, ordering))


def regime_ok(theta: float, peak_hz: float, sigma_hz: float, margin: float = REGIME_MARGIN) -> bool:
    """
    Check theta << (theta w0 / sigma)^2 << 1, reading "<<" as "at most `margin` times".

    Flat spacetime (theta == 0) always qualifies.
    """
    if theta == 0:
        return True
    spread = (theta * peak_hz / sigma_hz) ** 2
    return abs(theta) <= margin * spread and spread <= margin


def overlap_approx_deficit(theta: float, peak_hz: float, sigma_hz: float) -> float:
    """
    Return theta^2 w0^2 / (8 sigma^2), the deficit of the small-shift overlap.

    Logs a warning when the validity regime does not hold; the value is
    returned regardless.
    """
    _check_overlap_args(theta, peak_hz, sigma_hz)
    if not regime_ok(theta, peak_hz, sigma_hz):
        logger.warning(
            "overlap approximation outside its regime: theta=%g, w0=%g Hz, sigma=%g Hz",
            theta,
            peak_hz,
            sigma_hz,
        )
    return (theta * peak_hz / sigma_hz) ** 2 / 8.0


def overlap_approx(theta: float, peak_hz: float, sigma_hz: float) -> float:
    """Small-shift overlap 1 - theta^2 w0^2 / (8 sigma^2)."""
    return 1.0 - overlap_approx_deficit(theta, peak_hz, sigma_hz)


def channel_decomposition(overlap1: float, overlap2: float) -> ChannelWeights:
    """
    Split a round trip into the surviving prepared mode and the orthogonal rest.

    The direct weight is Theta1 * Theta2; the orthogonal weight is
    Theta2 * sqrt(1 - Theta1^2) + sqrt(1 - Theta2^2).
    """
    for value in (overlap1, overlap2):
        if not 0 <= value <= 1:
            raise ValueError("overlaps must lie in [0, 1].")
    orthogonal = overlap2 * math.sqrt(1.0 - overlap1**2) + math.sqrt(1.0 - overlap2**2)
    return ChannelWeights(direct=overlap1 * overlap2, orthogonal=orthogonal)
