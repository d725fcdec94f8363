import logging
from dataclasses import asdict, replace

import pandas as pd
from rest_framework import serializers

from syncsim import montecarlo
from syncsim.exceptions import EstimationError, SyncSimError
from syncsim.serializers import CountingSerializer, CurvatureSerializer, EstimateSerializer
from syncsim.spacetime import SpacetimeConfig

from ._base import SyncSimCommand

logger = logging.getLogger("syncsim.commands")


class Command(SyncSimCommand):
    help = (
        "Simulate a coincidence scan and recover the clock offset from its dip. "
        "Prints the estimate as JSON and writes <label>_counts.csv "
        "(delta_l_m, counts, trials) and <label>_estimate.json."
    )

    def add_arguments(self, parser):
        self.add_scenario_arguments(parser)
        parser.add_argument("--pairs-per-point", type=int, default=100_000)
        parser.add_argument("--efficiency", type=float, default=1.0)
        parser.add_argument("--background", type=float, default=0.0)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--analytic", action="store_true", help="Use expected counts instead of sampling.")
        parser.add_argument("--fit-sigma", action="store_true", help="Fit the bandwidth as a fourth parameter.")
        parser.add_argument(
            "--precision-repeats",
            type=int,
            default=0,
            help="Also write <label>_precision.csv (pairs_per_point, dtau_std_s) from this many repeats.",
        )
        parser.add_argument(
            "--detect-curvature",
            action="store_true",
            help="Compare the plateau against a flat twin scan and report the estimated disturbance.",
        )
        self.add_output_arguments(parser)

    def counting(self, options):
        data = {key: options[key] for key in ("pairs_per_point", "efficiency", "background", "seed")}
        counting = CountingSerializer(data=data)
        try:
            counting.is_valid(raise_exception=True)
        except serializers.ValidationError as exc:
            raise self.config_error(exc) from exc
        return counting.save()

    def handle(self, *args, **options):
        scenario, document = self.load_scenario(options)
        cc = self.counting(options)
        runs = self.run_service(options, {**document, "counting": asdict(cc)}, seed=cc.seed)

        try:
            scan, result = montecarlo.estimate(scenario, cc, analytic=options["analytic"], fit_sigma=options["fit_sigma"])
        except EstimationError as exc:
            raise self.estimation_error(exc) from exc
        except (ValueError, SyncSimError) as exc:
            raise self.config_error(exc) from exc

        payload = dict(EstimateSerializer(result).data)
        runs.write_text(f"{scenario.label}_counts.csv", scan.csv_text())

        if options["detect_curvature"]:
            payload["curvature"] = self.detect(scenario, cc, scan, options["analytic"])
        if options["precision_repeats"]:
            payload["precision_slope"] = self.precision(scenario, cc, options["precision_repeats"], runs)

        runs.write_json(f"{scenario.label}_estimate.json", payload)
        logger.info("%s: dtau = %.6e +/- %.2e s", scenario.label, result.dtau_hat_s, result.dtau_stderr_s)
        self.emit(payload)

    def detect(self, scenario, cc, scan, analytic):
        flat_geometry = SpacetimeConfig(
            r_a=scenario.spacetime.r_a,
            r_b=scenario.spacetime.r_a,
            schwarzschild_radius_m=scenario.spacetime.schwarzschild_radius_m,
        )
        flat = replace(scenario, spacetime=flat_geometry, label=f"{scenario.label}_flat")
        try:
            flat_scan = montecarlo.analytic_scan(flat, cc) if analytic else montecarlo.simulate_scan(flat, cc)
            detection = montecarlo.detect_curvature(
                flat_scan,
                scan,
                scenario.source.sigma_hz,
                dip_center_m=scenario.protocol.dip_center_m,
                background=cc.background,
            )
        except EstimationError as exc:
            raise self.estimation_error(exc) from exc
        except (ValueError, SyncSimError) as exc:
            raise self.config_error(exc) from exc
        return CurvatureSerializer(detection).data

    def precision(self, scenario, cc, repeats, runs):
        try:
            curve = montecarlo.precision_curve(scenario, cc, repeats)
            slope = montecarlo.scaling_slope(curve)
        except EstimationError as exc:
            raise self.estimation_error(exc) from exc
        except (ValueError, SyncSimError) as exc:
            raise self.config_error(exc) from exc
        frame = pd.DataFrame(curve, columns=["pairs_per_point", "dtau_std_s"])
        runs.write_text(f"{scenario.label}_precision.csv", frame.to_csv(index=False, float_format="%.17g"))
        return slope
