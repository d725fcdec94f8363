"""
Composite Gauss-Legendre quadrature with panel doubling.

Integrands are vectorised callables of a 1-D node array; complex values
are allowed. Integration variables are offsets from a caller-chosen
centre, never absolute optical frequencies.
"""

import logging
from functools import lru_cache

import numpy as np
from django.conf import settings
from numpy.polynomial.legendre import leggauss

from .exceptions import QuadratureError

logger = logging.getLogger(__name__)

NODES_PER_PANEL = 20
INITIAL_PANELS = 8


@lru_cache(maxsize=8)
def _reference_rule(order: int):
    return leggauss(order)


def panel_mesh(lo: float, hi: float, panels: int, order: int = NODES_PER_PANEL):
    """
    Build nodes and weights of an `order`-point rule on `panels` equal panels.

    Returns:
        tuple[np.ndarray, np.ndarray]: Nodes in [lo, hi] and their weights.
    """
    y, w = _reference_rule(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * y[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate(func, lo, hi, rtol=None, atol=0.0, panels=INITIAL_PANELS, max_panels=None):
    """
    Integrate `func` over [lo, hi], doubling panels until the estimate settles.

    Convergence is declared when two successive estimates differ by at most
    rtol * |estimate| + atol.

    Raises:
        QuadratureError: If `max_panels` is exceeded first.
    """
    if rtol is None:
        rtol = settings.SYNCSIM_QUAD_RTOL
    if max_panels is None:
        max_panels = settings.SYNCSIM_MAX_PANELS
    if hi == lo:
        return 0.0

    previous = None
    while panels <= max_panels:
        nodes, weights = panel_mesh(lo, hi, panels)
        estimate = np.dot(weights, func(nodes))
        if previous is not None and abs(estimate - previous) <= rtol * abs(estimate) + atol:
            return estimate
        logger.debug("quadrature on [%g, %g]: %d panels -> %r", lo, hi, panels, estimate)
        previous = estimate
        panels *= 2

    raise QuadratureError(
        f"relative tolerance {rtol:g} not reached with {max_panels} panels "
        f"on [{lo:g}, {hi:g}]"
    )
