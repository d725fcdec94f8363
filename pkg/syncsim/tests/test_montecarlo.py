import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from syncsim.exceptions import EdgeDip, InsufficientPlateau, Underdetermined
from syncsim.interferometer import ProtocolConfig, dip_center
from syncsim.montecarlo import (
    CoincidenceScan,
    CountingConfig,
    Provenance,
    analytic_scan,
    detect_curvature,
    estimate,
    fit_dip,
    point_stream,
    precision_curve,
    repeat_seed,
    scaling_slope,
    simulate_scan,
)
from syncsim.services import ScenarioService
from syncsim.spacetime import SPEED_OF_LIGHT


def preset(name):
    return ScenarioService.load(name)[0]


def with_scan(scenario, scan, v_mps=None):
    protocol = ProtocolConfig(
        mirror_speed_mps=v_mps or scenario.protocol.mirror_speed_mps,
        scan=scan,
        tau0_a_s=scenario.protocol.tau0_a_s,
        tau0_b_s=scenario.protocol.tau0_b_s,
    )
    return replace(scenario, protocol=protocol)


class CountingConfigTests(SimpleTestCase):
    def test_rejects_invalid_fields(self):
        cases = [
            {"pairs_per_point": 0},
            {"pairs_per_point": 1.5},
            {"pairs_per_point": 10, "efficiency": 0.0},
            {"pairs_per_point": 10, "efficiency": 1.1},
            {"pairs_per_point": 10, "background": -0.1},
            {"pairs_per_point": 10, "efficiency": 0.95, "background": 0.1},
            {"pairs_per_point": 10, "seed": -1},
            {"pairs_per_point": 10, "seed": 2**64},
        ]
        for kwargs in cases:
            with self.subTest(**kwargs):
                with self.assertRaises(ValueError):
                    CountingConfig(**kwargs)

    def test_float_counts_are_coerced(self):
        cc = CountingConfig(pairs_per_point=1e5, seed=7.0)
        self.assertEqual(cc.pairs_per_point, 100_000)
        self.assertIsInstance(cc.pairs_per_point, int)

    def test_detection_probability(self):
        cc = CountingConfig(pairs_per_point=10, efficiency=0.5, background=0.1)
        np.testing.assert_allclose(cc.detection_probability([0.0, 1.0]), [0.1, 0.6])


class CoincidenceScanTests(SimpleTestCase):
    def test_rejects_inconsistent_arrays(self):
        with self.assertRaisesRegex(ValueError, "equal length"):
            CoincidenceScan([0.0, 1.0], [1], [2, 2])
        with self.assertRaisesRegex(ValueError, "counts"):
            CoincidenceScan([0.0], [3], [2])

    def test_rates_skip_empty_points(self):
        scan = CoincidenceScan([0.0, 1.0], [1, 0], [4, 0])
        self.assertEqual(scan.rates[0], 0.25)
        self.assertTrue(np.isnan(scan.rates[1]))
        self.assertEqual(len(scan), 2)

    def test_csv_keeps_provenance_and_seed(self):
        scenario = preset("leo")
        simulated = simulate_scan(scenario, CountingConfig(pairs_per_point=1000, seed=11))
        analytic = analytic_scan(scenario, CountingConfig(pairs_per_point=1000, efficiency=0.3))
        with tempfile.TemporaryDirectory() as tmp:
            for name, scan in (("simulated.csv", simulated), ("analytic.csv", analytic)):
                path = Path(tmp) / name
                scan.to_csv(path)
                loaded = CoincidenceScan.from_csv(path)
                self.assertEqual(loaded.provenance, scan.provenance)
                self.assertEqual(loaded.seed, scan.seed)
                np.testing.assert_array_equal(loaded.counts, scan.counts)
            self.assertTrue((Path(tmp) / "simulated.csv").read_text().startswith("# provenance=simulated seed=11\n"))
        self.assertEqual(analytic.provenance, Provenance.ANALYTIC)
        self.assertFalse(np.all(analytic.counts == np.round(analytic.counts)))

    def test_from_csv_requires_columns(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "scan.csv"
            path.write_text("delta_l_m,counts\n0.0,1\n")
            with self.assertRaisesRegex(ValueError, "trials"):
                CoincidenceScan.from_csv(path)


class SimulationTests(SimpleTestCase):
    def setUp(self):
        self.scenario = preset("leo")

    def test_same_seed_same_counts(self):
        cc = CountingConfig(pairs_per_point=100_000, seed=3)
        first, second = simulate_scan(self.scenario, cc), simulate_scan(self.scenario, cc)
        np.testing.assert_array_equal(first.counts, second.counts)
        other = simulate_scan(self.scenario, replace(cc, seed=4))
        self.assertFalse(np.array_equal(first.counts, other.counts))

    def test_points_are_independent_of_order(self):
        """Each point draws from its own stream, whatever order points are visited in."""
        cc = CountingConfig(pairs_per_point=50_000, efficiency=0.8, seed=5)
        scan = simulate_scan(self.scenario, cc)
        probability = cc.detection_probability(analytic_scan(self.scenario, CountingConfig(1)).counts)
        for index in reversed(range(len(scan))):
            expected = point_stream(cc.seed, index).binomial(cc.pairs_per_point, probability[index])
            self.assertEqual(scan.counts[index], expected)

    def test_plateau_mean_within_five_sigma(self):
        n_points = len(self.scenario.protocol.scan)
        cc = CountingConfig(pairs_per_point=1_000_000, seed=8)
        scan = simulate_scan(self.scenario, cc, rates=np.full(n_points, 0.5))
        sigma = np.sqrt(0.25 / (cc.pairs_per_point * n_points))
        self.assertLess(abs(scan.rates.mean() - 0.5), 5 * sigma)

    def test_rates_must_match_scan(self):
        with self.assertRaises(ValueError):
            simulate_scan(self.scenario, CountingConfig(10), rates=[0.5, 0.5])

    def test_zero_probability_gives_no_counts(self):
        n_points = len(self.scenario.protocol.scan)
        scan = simulate_scan(self.scenario, CountingConfig(1000), rates=np.zeros(n_points))
        self.assertEqual(scan.counts.sum(), 0)
        with self.assertRaisesRegex(Underdetermined, "no coincidences"):
            fit_dip(scan, 1e8, 0.1)

    def test_repeat_seed_is_deterministic(self):
        self.assertEqual(repeat_seed(42, 0, 1), repeat_seed(42, 0, 1))
        self.assertNotEqual(repeat_seed(42, 0, 1), repeat_seed(42, 1, 0))
        CountingConfig(10, seed=repeat_seed(42, 3, 9))


class FitDipTests(SimpleTestCase):
    def setUp(self):
        self.broadband = preset("broadband")
        self.cc = CountingConfig(pairs_per_point=1_000_000, efficiency=0.5)

    def test_noise_free_recovery(self):
        """Expected counts give back the clock offset to 1e-9."""
        scan, result = estimate(self.broadband, self.cc, analytic=True)
        self.assertTrue(result.converged)
        self.assertAlmostEqual(result.dtau_hat_s / 1e-9, 1.0, delta=1e-9)
        self.assertAlmostEqual(result.amplitude, 0.5, delta=1e-6)
        self.assertEqual(scan.provenance, Provenance.ANALYTIC)

    def test_background_and_bandwidth_fit(self):
        cc = replace(self.cc, background=0.01)
        _, result = estimate(self.broadband, cc, analytic=True, fit_sigma=True)
        self.assertAlmostEqual(result.background, 0.01, delta=1e-9)
        self.assertAlmostEqual(result.sigma_hz / 5e12, 1.0, delta=1e-8)
        self.assertAlmostEqual(result.dtau_hat_s / 1e-9, 1.0, delta=1e-8)

    def test_relativistic_conversion_at_fast_mirror(self):
        """At v = 1e-3 c the (1 + beta) factor is needed to recover dtau."""
        v = 1e-3 * SPEED_OF_LIGHT
        width = SPEED_OF_LIGHT / 5e12
        center = dip_center(v, 1e-9)
        scenario = with_scan(self.broadband, center + np.linspace(-5 * width, 5 * width, 201), v_mps=v)
        scan, result = estimate(scenario, self.cc, analytic=True)
        self.assertAlmostEqual(result.dtau_hat_s / 1e-9, 1.0, delta=1e-9)
        naive = fit_dip(scan, 5e12, v, beta=0.0)
        self.assertAlmostEqual(naive.dtau_hat_s / result.dtau_hat_s, 1.0 / (1.0 + 1e-3), delta=1e-9)

    def test_shifting_the_scan_shifts_the_dip(self):
        scan = analytic_scan(self.broadband, self.cc)
        shift = 1e-5
        moved = CoincidenceScan(scan.delta_l_m + shift, scan.counts, scan.trials, Provenance.ANALYTIC)
        base = fit_dip(scan, 5e12, 0.1)
        shifted = fit_dip(moved, 5e12, 0.1)
        self.assertAlmostEqual(shifted.dip_center_m - base.dip_center_m, shift, delta=1e-15)

    def test_dip_at_scan_edge(self):
        width = SPEED_OF_LIGHT / 5e12
        scenario = with_scan(self.broadband, np.linspace(0.0, 5 * width, 51))
        with self.assertRaises(EdgeDip) as ctx:
            estimate(scenario, self.cc, analytic=True)
        self.assertEqual(ctx.exception.code, "EdgeDip")

    def test_too_few_points(self):
        width = SPEED_OF_LIGHT / 5e12
        scenario = with_scan(self.broadband, np.linspace(-width, width, 4))
        with self.assertRaises(Underdetermined):
            estimate(scenario, self.cc, analytic=True)

    def test_rejects_bad_parameters(self):
        scan = analytic_scan(self.broadband, self.cc)
        with self.assertRaises(ValueError):
            fit_dip(scan, 0.0, 0.1)

    def test_simulated_leo_estimate(self):
        """Seed 42 on the LEO preset lands within four standard errors."""
        _, result = estimate(preset("leo"), CountingConfig(pairs_per_point=100_000, seed=42))
        self.assertTrue(result.converged)
        self.assertGreater(result.dtau_stderr_s, 0.0)
        self.assertLess(abs(result.dtau_hat_s - 1e-9), 4 * result.dtau_stderr_s)
        self.assertGreater(result.fit_residual, 0.0)


class PrecisionTests(SimpleTestCase):
    def test_requires_enough_repeats(self):
        with self.assertRaisesRegex(ValueError, "n_repeats"):
            precision_curve(preset("leo"), CountingConfig(1000), n_repeats=1)

    def test_default_grid_doubles(self):
        curve = precision_curve(preset("broadband"), CountingConfig(10_000, seed=1), n_repeats=10)
        self.assertEqual([pairs for pairs, _ in curve], [10_000, 20_000, 40_000, 80_000])
        self.assertTrue(all(spread > 0 for _, spread in curve))

    def test_shot_noise_scaling(self):
        """The spread of the estimate falls as N^-1/2."""
        curve = precision_curve(
            preset("leo"), CountingConfig(10_000, seed=2), n_repeats=30, pairs_grid=[10**4, 10**5, 10**6, 10**7]
        )
        self.assertTrue(-0.6 <= scaling_slope(curve) <= -0.4)

    def test_flat_and_leo_reach_the_same_precision(self):
        """A disturbance of 6e-8 leaves the offset precision unchanged."""
        cc = CountingConfig(10_000, seed=4)
        grid = [10**4, 10**5]
        flat = precision_curve(preset("flat"), cc, n_repeats=10, pairs_grid=grid)
        leo = precision_curve(preset("leo"), cc, n_repeats=10, pairs_grid=grid)
        np.testing.assert_allclose([spread for _, spread in leo], [spread for _, spread in flat], rtol=0.05)

    def test_scaling_slope(self):
        self.assertAlmostEqual(scaling_slope([(100, 1.0), (10_000, 0.1)]), -0.5, places=12)
        with self.assertRaises(ValueError):
            scaling_slope([(100, 1.0)])
        with self.assertRaises(ValueError):
            scaling_slope([(100, 1.0), (1000, 0.0)])


class DetectCurvatureTests(SimpleTestCase):
    def setUp(self):
        self.flat = preset("flat")

    def test_identical_scans(self):
        scan = simulate_scan(self.flat, CountingConfig(10_000, seed=1))
        detection = detect_curvature(scan, scan, 1e8, dip_center_m=4e-10)
        self.assertEqual(detection.delta_p_hat, 0.0)
        self.assertEqual(detection.z_score, 0.0)
        self.assertEqual(detection.plateau_points_flat, detection.plateau_points_curved)

    def test_geo_disturbance_is_resolved(self):
        """With enough pairs the GEO plateau drop matches 1.19e-5."""
        cc = CountingConfig(pairs_per_point=10**12)
        flat = analytic_scan(self.flat, cc)
        curved = analytic_scan(preset("geo"), cc)
        detection = detect_curvature(flat, curved, 1e8, dip_center_m=4e-10)
        self.assertAlmostEqual(detection.delta_p_hat / 1.187297e-5, 1.0, delta=0.1)
        self.assertGreater(detection.z_score, 5.0)

    def test_leo_disturbance_is_invisible_at_a_million_pairs(self):
        cc = CountingConfig(pairs_per_point=1_000_000, seed=9)
        flat = simulate_scan(self.flat, cc)
        curved = simulate_scan(preset("leo"), cc)
        detection = detect_curvature(flat, curved, 1e8, dip_center_m=4e-10)
        self.assertLess(abs(detection.z_score), 3.0)

    def test_insufficient_plateau(self):
        scan = CoincidenceScan(np.linspace(-1.0, 1.0, 11), np.full(11, 5), np.full(11, 10))
        with self.assertRaises(InsufficientPlateau):
            detect_curvature(scan, scan, 1e8)

    def test_few_plateau_points_warn(self):
        delays = np.concatenate([np.linspace(-1.0, 1.0, 11), [20.0, 21.0, 22.0]])
        scan = CoincidenceScan(delays, np.full(14, 5), np.full(14, 10))
        with self.assertLogs("syncsim.montecarlo", level="WARNING") as logs:
            detection = detect_curvature(scan, scan, 1e8)
        self.assertEqual(detection.plateau_points_flat, 3)
        self.assertIn("only 3 points", logs.output[0])
