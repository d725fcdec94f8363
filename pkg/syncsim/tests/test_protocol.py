import numpy as np
from django.test import SimpleTestCase

from syncsim.interferometer import ProtocolConfig, dip_profile
from syncsim.protocol import (
    DeltaPMode,
    Scenario,
    delta_p,
    figure2_sweep,
    figure3_sweep,
    mirror_velocity_sensitivity,
    run_scenario,
)
from syncsim.spacetime import SPEED_OF_LIGHT, SpacetimeConfig, theta
from syncsim.wavepacket import PhotonPairState, TabulatedAmplitude

OMEGA0 = 812e12
SIGMA = 1e8
LEO = SpacetimeConfig(r_b=6.771e6)
GEO = SpacetimeConfig(r_b=42.371e6)


def make_scenario(spacetime=LEO, sigma_hz=SIGMA, points=41, source=None, label="test"):
    width = SPEED_OF_LIGHT / sigma_hz
    protocol = ProtocolConfig(
        mirror_speed_mps=0.1,
        scan=np.linspace(-5 * width, 5 * width, points),
        tau0_b_s=1e-9,
    )
    source = source or PhotonPairState.gaussian(OMEGA0, sigma_hz)
    return Scenario(spacetime=spacetime, source=source, protocol=protocol, label=label)


class DeltaPTests(SimpleTestCase):
    def test_leo_golden_value(self):
        """A LEO link at 812 THz and 100 MHz is disturbed by about 5.74e-8."""
        value = delta_p(theta(LEO), OMEGA0, SIGMA)
        self.assertAlmostEqual(value / 5.73992e-8, 1.0, delta=1e-4)

    def test_geo_golden_value(self):
        value = delta_p(theta(GEO), OMEGA0, SIGMA)
        self.assertAlmostEqual(value / 1.187297e-5, 1.0, delta=1e-4)

    def test_approximation_at_quoted_theta(self):
        self.assertAlmostEqual(delta_p(4.17e-11, OMEGA0, SIGMA, DeltaPMode.APPROX) / 5.73264e-8, 1.0, delta=1e-4)
        self.assertAlmostEqual(delta_p(6e-10, OMEGA0, SIGMA, "approx") / 1.186814e-5, 1.0, delta=1e-4)

    def test_approx_and_exact_agree_in_regime(self):
        for cfg in (LEO, GEO):
            value = theta(cfg)
            exact = delta_p(value, OMEGA0, SIGMA, DeltaPMode.EXACT)
            approx = delta_p(value, OMEGA0, SIGMA, DeltaPMode.APPROX)
            self.assertAlmostEqual(approx / exact, 1.0, delta=1e-3)

    def test_flat_spacetime_gives_zero(self):
        for mode in DeltaPMode:
            self.assertEqual(delta_p(0.0, OMEGA0, SIGMA, mode), 0.0)

    def test_depends_on_peak_to_width_ratio_only(self):
        value = theta(LEO)
        self.assertAlmostEqual(
            delta_p(value, 2 * OMEGA0, 2 * SIGMA) / delta_p(value, OMEGA0, SIGMA), 1.0, delta=1e-12
        )

    def test_approximation_breakdown_raises(self):
        with self.assertRaisesRegex(ValueError, "breaks down"):
            delta_p(0.5, OMEGA0, SIGMA, DeltaPMode.APPROX)

    def test_unknown_mode(self):
        with self.assertRaises(ValueError):
            delta_p(theta(LEO), OMEGA0, SIGMA, "series")


class SweepTests(SimpleTestCase):
    def test_figure2_reference_points(self):
        """700 THz and 100 MHz: 4.27e-8 at 400 km and 8.82e-6 at geostationary height."""
        rows = figure2_sweep([6.771e6, 42.371e6])
        self.assertAlmostEqual(rows[0][1] / 4.2657e-8, 1.0, delta=1e-3)
        self.assertAlmostEqual(rows[1][1] / 8.8236e-6, 1.0, delta=1e-3)

    def test_figure2_starts_at_zero_and_increases(self):
        rows = figure2_sweep(np.linspace(6.371e6, 42.371e6, 50))
        values = [value for _, value in rows]
        self.assertEqual(values[0], 0.0)
        self.assertTrue(all(b > a for a, b in zip(values, values[1:])))

    def test_figure2_rejects_bad_grids(self):
        with self.assertRaisesRegex(ValueError, "empty"):
            figure2_sweep([])
        with self.assertRaisesRegex(ValueError, "r_a"):
            figure2_sweep([6.0e6])

    def test_figure3_layout(self):
        omega0 = [400e12, 812e12, 1000e12]
        sigma = [1e8, 5e8]
        grid = figure3_sweep(omega0, sigma)
        self.assertEqual(grid.shape, (2, 3))
        self.assertEqual(grid[0, 1], delta_p(theta(LEO), OMEGA0, SIGMA))

    def test_figure3_monotonic_in_source(self):
        """Larger w0 disturbs more; larger sigma disturbs less."""
        grid = figure3_sweep(np.linspace(400e12, 1000e12, 7), np.linspace(50e6, 500e6, 5))
        self.assertTrue(np.all(np.diff(grid, axis=1) > 0))
        self.assertTrue(np.all(np.diff(grid, axis=0) < 0))

    def test_figure3_rejects_empty_grid(self):
        with self.assertRaises(ValueError):
            figure3_sweep([], [1e8])


class RunScenarioTests(SimpleTestCase):
    def test_leo_report(self):
        report, scan = run_scenario(make_scenario())
        self.assertAlmostEqual(report.delta_p / 5.73992e-8, 1.0, delta=1e-4)
        self.assertAlmostEqual(report.plateau, 1.0 - report.delta_p, delta=1e-15)
        self.assertAlmostEqual(report.dip_center_m, 4e-10, delta=1e-18)
        self.assertTrue(report.regime_ok)
        self.assertLess(report.orthogonal_weight, 1e-3)
        self.assertAlmostEqual(scan.p_c[0], report.plateau, delta=1e-15)

    def test_flat_scenario_is_the_bare_dip(self):
        report, scan = run_scenario(make_scenario(spacetime=SpacetimeConfig()))
        self.assertEqual(report.delta_p, 0.0)
        self.assertEqual((report.overlap1, report.overlap2), (1.0, 1.0))
        np.testing.assert_array_equal(scan.p_c, dip_profile(scan.delta_l_m, report.dip_center_m, SIGMA))

    def test_curvature_lowers_the_plateau_only(self):
        flat, flat_scan = run_scenario(make_scenario(spacetime=SpacetimeConfig()))
        curved, curved_scan = run_scenario(make_scenario(spacetime=GEO))
        np.testing.assert_allclose(curved_scan.p_c, curved.plateau * flat_scan.p_c, rtol=1e-14, atol=0)
        self.assertEqual(curved.dip_center_m, flat.dip_center_m)

    def test_plateau_ratio_is_squared_overlap_product(self):
        flat, flat_scan = run_scenario(make_scenario(spacetime=SpacetimeConfig()))
        curved, curved_scan = run_scenario(make_scenario(spacetime=GEO))
        ratio = curved_scan.p_c[0] / flat_scan.p_c[0]
        self.assertAlmostEqual(ratio / (curved.overlap1 * curved.overlap2) ** 2, 1.0, delta=1e-12)
        self.assertAlmostEqual(1.0 - ratio, curved.delta_p, delta=1e-12)

    def test_disjoint_spectra_lose_the_whole_rate(self):
        """A packet shifted clear of its reference leaves no coincidences."""
        offsets = np.linspace(-10 * SIGMA, 10 * SIGMA, 201)
        packet = TabulatedAmplitude.from_samples(OMEGA0 + offsets, np.exp(-(offsets**2) / (4 * SIGMA**2)))
        near_horizon = SpacetimeConfig(r_a=0.012, r_b=6.371e6)
        scenario = make_scenario(spacetime=near_horizon, points=3, source=PhotonPairState(OMEGA0, packet))
        with self.assertLogs("syncsim.protocol", level="WARNING"):
            report, scan = run_scenario(scenario)
        self.assertEqual((report.overlap1, report.overlap2), (0.0, 0.0))
        self.assertEqual(report.delta_p, 1.0)
        self.assertEqual(report.orthogonal_weight, 1.0)
        np.testing.assert_array_equal(scan.p_c, np.zeros(3))

    def test_broadband_source_warns(self):
        with self.assertLogs("syncsim.protocol", level="WARNING") as logs:
            report, _ = run_scenario(make_scenario(sigma_hz=5e12))
        self.assertFalse(report.regime_ok)
        self.assertIn("regime", logs.output[0])

    def test_tabulated_source_matches_gaussian(self):
        """A sampled Gaussian spectrum reproduces the closed-form disturbance to 1%."""
        offsets = np.linspace(-10 * SIGMA, 10 * SIGMA, 401)
        packet = TabulatedAmplitude.from_samples(OMEGA0 + offsets, np.exp(-(offsets**2) / (4 * SIGMA**2)))
        scenario = make_scenario(spacetime=GEO, points=3, source=PhotonPairState(OMEGA0, packet))
        report, scan = run_scenario(scenario)
        self.assertAlmostEqual(report.delta_p / delta_p(theta(GEO), OMEGA0, SIGMA), 1.0, delta=1e-2)
        self.assertEqual(scan.p_c.size, 3)


class MirrorVelocityTests(SimpleTestCase):
    def setUp(self):
        self.scenario = make_scenario()

    def test_no_error_no_shift(self):
        result = mirror_velocity_sensitivity(self.scenario, 0.0)
        self.assertEqual(result.dip_shift_m, 0.0)
        self.assertEqual(result.dtau_relative_error, 0.0)
        self.assertEqual(result.max_rate_change, 0.0)

    def test_relative_error_is_dv_over_v(self):
        """A 1 mm/s error on 0.1 m/s biases the clock offset by 1%."""
        result = mirror_velocity_sensitivity(self.scenario, 1e-3)
        self.assertEqual(result.first_order_error, 1e-3 / 0.1)
        self.assertAlmostEqual(result.dtau_relative_error, 0.01, delta=1e-10)
        self.assertAlmostEqual(result.dip_shift_m, 4e-12, delta=1e-20)
        self.assertGreater(result.max_rate_change, 0.0)
        self.assertAlmostEqual(result.delta_p / 5.73992e-8, 1.0, delta=1e-4)

    def test_rejects_error_larger_than_speed(self):
        with self.assertRaises(ValueError):
            mirror_velocity_sensitivity(self.scenario, -0.1)
