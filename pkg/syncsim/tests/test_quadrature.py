import math

import numpy as np
from django.test import SimpleTestCase

from syncsim.exceptions import QuadratureError
from syncsim.quadrature import integrate, panel_mesh


class PanelMeshTests(SimpleTestCase):
    def test_weights_sum_to_interval_length(self):
        nodes, weights = panel_mesh(-2.0, 3.0, panels=4)
        self.assertEqual(nodes.size, 80)
        self.assertAlmostEqual(weights.sum(), 5.0, places=13)
        self.assertTrue(np.all((nodes > -2.0) & (nodes < 3.0)))


class IntegrateTests(SimpleTestCase):
    def test_cosine(self):
        self.assertAlmostEqual(integrate(np.cos, 0.0, math.pi / 2), 1.0, places=13)

    def test_normal_density(self):
        """A unit Gaussian integrates to one over +-10 sigma."""
        sigma = 3.0e8

        def density(x):
            return np.exp(-(x**2) / (2 * sigma**2)) / math.sqrt(2 * math.pi * sigma**2)

        self.assertAlmostEqual(integrate(density, -10 * sigma, 10 * sigma), 1.0, places=12)

    def test_oscillatory_complex_integrand(self):
        """The Fourier transform of a Gaussian is recovered to 1e-12."""
        k = 2.5

        def integrand(x):
            return np.exp(1j * k * x) * np.exp(-(x**2) / 2) / math.sqrt(2 * math.pi)

        value = integrate(integrand, -12.0, 12.0)
        self.assertAlmostEqual(abs(value - math.exp(-(k**2) / 2)), 0.0, places=12)

    def test_empty_interval(self):
        self.assertEqual(integrate(np.cos, 1.0, 1.0), 0.0)

    def test_panel_cap_raises(self):
        """A single allowed refinement level cannot confirm convergence."""
        with self.assertRaises(QuadratureError):
            integrate(np.cos, 0.0, 1.0, max_panels=8)

    def test_tolerance_comes_from_settings(self):
        with self.settings(SYNCSIM_MAX_PANELS=8):
            with self.assertRaisesRegex(QuadratureError, "8 panels"):
                integrate(np.sin, 0.0, 1.0)
