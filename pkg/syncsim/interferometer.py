"""
Hong-Ou-Mandel coincidence engine for the moving-mirror protocol.

The coincidence probability is normalised to a flat-spacetime plateau of 1:

    P_c(dl) = (Theta1 Theta2)^2 * integral |F(w0 + w)|^2 (1 - cos phi(w)) dw
    phi(w)  = 2 w Upsilon4 - dkappa(w0 + w)

with w the detuning from w0 and Upsilon4 = (dl* - dl)/c, dl* = 4 v dtau/(1 + beta).
For a Gaussian source without net dispersion this integrates to
(Theta1 Theta2)^2 * (1 - exp(-2 sigma^2 (dl - dl*)^2 / c^2)).
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd
from numpy.polynomial import polynomial

from .quadrature import integrate
from .spacetime import SPEED_OF_LIGHT
from .utils import atomic_write
from .wavepacket import PhotonPairState

logger = logging.getLogger(__name__)

MAX_MIRROR_BETA = 1e-3
MAX_DISPERSION_ORDER = 4


class MirrorRole(Enum):
    """Which beam a moving mirror acts on, and in whose lab."""

    IDLER_ALICE = "idler_alice"
    IDLER_BOB = "idler_bob"
    SIGNAL_ALICE = "signal_alice"
    SIGNAL_BOB = "signal_bob"

    @property
    def sign(self) -> int:
        return 1 if self in (MirrorRole.IDLER_ALICE, MirrorRole.SIGNAL_BOB) else -1


@dataclass(frozen=True)
class ProtocolConfig:
    """
    Mirror schedule, link geometry and the delay scan of one synchronization run.

    Clock start times are proper times on each lab's own clock; only their
    difference `dtau_s` enters the coincidence rate.
    """

    mirror_speed_mps: float
    scan: tuple
    tau0_a_s: float = 0.0
    tau0_b_s: float = 0.0
    x0_m: float = 0.0
    link_distance_m: float = 0.0
    bs_distance_m: float = 0.0

    def __post_init__(self):
        if not 0 < self.mirror_speed_mps <= MAX_MIRROR_BETA * SPEED_OF_LIGHT:
            raise ValueError(
                f"mirror_speed_mps must lie in (0, {MAX_MIRROR_BETA:g} c], got {self.mirror_speed_mps!r}."
            )
        scan = tuple(float(x) for x in np.atleast_1d(np.asarray(self.scan, dtype=float)))
        if not scan:
            raise ValueError("scan must contain at least one delay.")
        if not all(np.isfinite(scan)):
            raise ValueError("scan delays must be finite.")
        if np.any(np.diff(scan) <= 0):
            raise ValueError("scan delays must be strictly increasing.")
        object.__setattr__(self, "scan", scan)

    @property
    def beta(self) -> float:
        return self.mirror_speed_mps / SPEED_OF_LIGHT

    @property
    def chi(self) -> float:
        """Doppler factor (1 + beta)/(1 - beta) of a mirror moving at v."""
        return (1.0 + self.beta) / (1.0 - self.beta)

    @property
    def dtau_s(self) -> float:
        return self.tau0_b_s - self.tau0_a_s

    @property
    def dip_center_m(self) -> float:
        return dip_center(self.mirror_speed_mps, self.dtau_s)

    @property
    def scan_m(self) -> np.ndarray:
        return np.asarray(self.scan)


@dataclass(frozen=True)
class PhaseBundle:
    """Composite delays of the round trip, all in seconds."""

    upsilon1_s: float
    upsilon2_s: float
    upsilon3_s: float
    upsilon4_s: float


_SEGMENTS = ("signal_to", "signal_from", "idler_to", "idler_from")


def _trim(coefficients) -> tuple:
    values = [float(k) for k in coefficients]
    while values and values[-1] == 0.0:
        values.pop()
    return tuple(values)


@dataclass(frozen=True)
class DispersionModel:
    """
    Atmospheric phase kappa_s(w) = sum k_n (w - w0)^n for each path segment.

    Coefficients are listed from order 0 upwards (rad, rad/Hz, rad/Hz^2, ...),
    up to order 4. "to" is the ground-to-satellite leg, "from" the return.
    """

    signal_to: tuple = ()
    signal_from: tuple = ()
    idler_to: tuple = ()
    idler_from: tuple = ()

    def __post_init__(self):
        for name in _SEGMENTS:
            coefficients = _trim(getattr(self, name))
            if len(coefficients) > MAX_DISPERSION_ORDER + 1:
                raise ValueError(f"{name}: dispersion orders above {MAX_DISPERSION_ORDER} are not supported.")
            if not all(math.isfinite(k) for k in coefficients):
                raise ValueError(f"{name}: coefficients must be finite.")
            object.__setattr__(self, name, coefficients)

    @classmethod
    def matched(cls, signal_to=(), signal_from=()) -> "DispersionModel":
        """Build paths where each idler leg shares the atmosphere of the opposite signal leg."""
        return cls(signal_to=signal_to, signal_from=signal_from, idler_to=signal_from, idler_from=signal_to)

    @property
    def is_matched(self) -> bool:
        return self.signal_to == self.idler_from and self.signal_from == self.idler_to

    @property
    def is_null(self) -> bool:
        """True when the net phase vanishes for every frequency and mirror speed."""
        return self.is_matched and len(self.idler_to) <= 1

    def evaluate(self, segment: str, offsets_hz):
        """kappa of one segment at frequency offsets (w - w0)."""
        coefficients = getattr(self, segment)
        if not coefficients:
            return np.zeros_like(np.asarray(offsets_hz, dtype=float))
        return polynomial.polyval(offsets_hz, coefficients)


def dip_center(v_mps: float, dtau_s: float) -> float:
    """Delay 4 v dtau / (1 + beta) at which coincidences vanish."""
    beta = v_mps / SPEED_OF_LIGHT
    return 4.0 * v_mps * dtau_s / (1.0 + beta)


def dip_profile(delta_l_m, center_m, sigma_hz):
    """Flat-spacetime dip 1 - exp(-2 sigma^2 (dl - dl*)^2 / c^2)."""
    z = sigma_hz * (np.asarray(delta_l_m, dtype=float) - center_m) / SPEED_OF_LIGHT
    return -np.expm1(-2.0 * z * z)


def opd(t: float, tau0: float, v: float, role: MirrorRole) -> float:
    """
    Optical path difference added by one moving mirror at detection time t.

    Alice adds to the idler and subtracts from the signal; Bob does the
    opposite.
    """
    if not v > 0:
        raise ValueError("v must be positive.")
    return MirrorRole(role).sign * v * (t - tau0)


def net_opd(t: float, cfg: ProtocolConfig, beam: str = "idler") -> float:
    """Sum of Alice's and Bob's OPD on one beam; depends on the clock offset only."""
    v = cfg.mirror_speed_mps
    if beam == "idler":
        roles = (MirrorRole.IDLER_ALICE, MirrorRole.IDLER_BOB)
    elif beam == "signal":
        roles = (MirrorRole.SIGNAL_ALICE, MirrorRole.SIGNAL_BOB)
    else:
        raise ValueError(f"unknown beam {beam!r}")
    return opd(t, cfg.tau0_a_s, v, roles[0]) + opd(t, cfg.tau0_b_s, v, roles[1])


def phase_bundle(cfg: ProtocolConfig, delta_l_m: float) -> PhaseBundle:
    """
    Compute the delays Upsilon1..Upsilon4 for a delay setting `delta_l_m`.

    Upsilon1 is the uplink leg, Upsilon2/Upsilon3 the signal/idler round
    trips up to the beam splitter and Upsilon4 the relative delay seen by the
    two-photon interference term.
    """
    c = SPEED_OF_LIGHT
    beta = cfg.beta
    x0 = cfg.x0_m / c
    legs = (cfg.link_distance_m / cfg.chi + cfg.bs_distance_m) / c
    doppler = 2.0 * beta / (1.0 + beta)
    return PhaseBundle(
        upsilon1_s=2.0 * beta / (1.0 - beta) * (cfg.tau0_b_s - x0) - cfg.link_distance_m / c,
        upsilon2_s=doppler * (cfg.tau0_a_s - cfg.tau0_b_s + x0) + legs,
        upsilon3_s=doppler * (cfg.tau0_a_s - cfg.tau0_b_s - x0) - legs,
        upsilon4_s=(cfg.dip_center_m - delta_l_m) / c,
    )


def _delta_kappa_detuning(model: DispersionModel, detuning_hz, omega0_hz: float, chi: float):
    detuning = np.asarray(detuning_hz, dtype=float)
    if model.is_null:
        return np.zeros_like(detuning)
    mirrored = -detuning
    doppler = (detuning - omega0_hz * (chi - 1.0)) / chi
    return (
        (model.evaluate("signal_to", detuning) - model.evaluate("idler_from", detuning))
        + (model.evaluate("idler_from", mirrored) - model.evaluate("signal_to", mirrored))
        + (model.evaluate("idler_to", mirrored) - model.evaluate("idler_to", doppler))
    )


def delta_kappa(model: DispersionModel, omega_hz, omega0_hz: float, chi: float):
    """
    Net dispersion phase of the four atmospheric passes at frequency omega.

    dkappa(w) = kS_t(w) - kI_f(w) + kI_f(w') - kS_t(w') + kI_t(w')
                - kS_f(w/chi) + kS_f(w/chi) - kI_t(w/chi),   w' = 2 w0 - w.

    The two signal-from terms cancel identically. With kS_t = kI_f and
    kS_f = kI_t the first four terms cancel too, and for chi = 1 what
    remains is kI_t(w') - kI_t(w): zero for even polynomials about w0, and
    -2 k1 (w - w0) (a rigid dip shift) for a linear term. Offsets from w0
    are formed directly so no precision is lost at optical frequencies.
    """
    omega = np.asarray(omega_hz, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega_hz must be positive.")
    return _delta_kappa_detuning(model, omega - omega0_hz, omega0_hz, chi)


def _check_overlaps(theta1, theta2, allow_zero=False):
    for value in (theta1, theta2):
        if not (0 <= value <= 1 and (allow_zero or value > 0)):
            raise ValueError("overlaps must lie in [0, 1]." if allow_zero else "overlaps must lie in (0, 1].")


def coincidence_rate_gaussian(theta1, theta2, sigma_hz, delta_l_m, v_mps, dtau_s):
    """
    Closed-form coincidence probability for a Gaussian source.

    Returns (Theta1 Theta2)^2 * (1 - exp(-2 sigma^2 (dl - dl*)^2 / c^2)),
    which is zero at the dip centre and tends to (Theta1 Theta2)^2 far from it.
    Accepts a scalar or an array of delays.
    """
    _check_overlaps(theta1, theta2)
    if not sigma_hz > 0:
        raise ValueError("sigma_hz must be positive.")
    rate = (theta1 * theta2) ** 2 * dip_profile(delta_l_m, dip_center(v_mps, dtau_s), sigma_hz)
    return float(rate) if np.ndim(rate) == 0 else rate


def matrix_element_sq(detuning_hz, pair: PhotonPairState, theta1, theta2, upsilon4_s, delta_kappa_rad):
    """
    Squared two-photon amplitude per unit detuning.

    Equal to (Theta1 Theta2)^2 |F(w0 + w)|^2 |1 - exp(i phi)|^2 / 2 with
    phi = 2 w Upsilon4 - dkappa, so that integrating over the detuning gives
    the coincidence probability with plateau (Theta1 Theta2)^2. The factor
    |1 - exp(i phi)|^2 / 2 is evaluated as 2 sin^2(phi / 2).
    """
    detuning = np.asarray(detuning_hz, dtype=float)
    phi = 2.0 * detuning * upsilon4_s - delta_kappa_rad
    interference = 2.0 * np.sin(0.5 * phi) ** 2
    return (theta1 * theta2) ** 2 * pair.spectral_density(detuning) * interference


def coincidence_rate_quadrature(pair: PhotonPairState, theta1, theta2, cfg: ProtocolConfig, delta_l_m, dispersion):
    """
    Coincidence probability at one delay by quadrature over the detuning.

    Works for any spectral amplitude and dispersion model. A zero overlap
    (spectra with disjoint supports) gives a zero rate.

    Raises:
        QuadratureError: If the relative tolerance is not reached.
    """
    _check_overlaps(theta1, theta2, allow_zero=True)
    upsilon4 = phase_bundle(cfg, delta_l_m).upsilon4_s
    omega0 = pair.pump_half_frequency_hz
    chi = cfg.chi

    def integrand(detuning):
        dk = _delta_kappa_detuning(dispersion, detuning, omega0, chi)
        return matrix_element_sq(detuning, pair, theta1, theta2, upsilon4, dk)

    lo, hi = pair.detuning_support()
    return float(integrate(integrand, lo, hi))


@dataclass(frozen=True, eq=False)
class RateScan:
    """Coincidence probability sampled along the delay scan."""

    delta_l_m: np.ndarray
    p_c: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"delta_l_m": self.delta_l_m, "p_c": self.p_c})

    def csv_text(self) -> str:
        return self.to_frame().to_csv(index=False, float_format="%.17g")

    def to_csv(self, path) -> None:
        atomic_write(path, self.csv_text())

    @classmethod
    def from_csv(cls, path) -> "RateScan":
        frame = pd.read_csv(path, float_precision="round_trip")
        return cls(frame["delta_l_m"].to_numpy(dtype=float), frame["p_c"].to_numpy(dtype=float))


def scan_rates(pair: PhotonPairState, theta1, theta2, cfg: ProtocolConfig, dispersion, method: str = "auto") -> RateScan:
    """
    Evaluate the coincidence probability at every delay of `cfg.scan`.

    `method` is "closed_form", "quadrature" or "auto"; auto picks the closed
    form for a Gaussian source whose dispersion cancels identically.
    """
    if method == "auto":
        method = "closed_form" if pair.is_gaussian and dispersion.is_null else "quadrature"
    delays = cfg.scan_m
    if method == "closed_form":
        if not pair.is_gaussian:
            raise ValueError("the closed form needs a Gaussian source.")
        rates = coincidence_rate_gaussian(
            theta1, theta2, pair.sigma_hz, delays, cfg.mirror_speed_mps, cfg.dtau_s
        )
    elif method == "quadrature":
        rates = np.array(
            [coincidence_rate_quadrature(pair, theta1, theta2, cfg, dl, dispersion) for dl in delays]
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    logger.debug("scan of %d delays evaluated by %s", delays.size, method)
    return RateScan(delays, np.atleast_1d(rates))
