import json
import logging
import sys

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers

from syncsim.exceptions import ConfigurationError, EstimationError
from syncsim.services import RunService, ScenarioService

logger = logging.getLogger("syncsim.commands")

CONFIG_ERROR = 2
ESTIMATION_ERROR = 3

# flag -> scenario document key
SCENARIO_OVERRIDES = {
    "label": "label",
    "rs_m": "schwarzschild_radius_m",
    "ra_m": "r_a_m",
    "rb_m": "r_b_m",
    "omega0_hz": "omega0_hz",
    "sigma_hz": "sigma_hz",
    "v_mps": "mirror_speed_mps",
    "scan_start_m": "scan_start_m",
    "scan_stop_m": "scan_stop_m",
    "scan_points": "scan_points",
}


class SyncSimCommand(BaseCommand):
    """
    Shared plumbing of the simulator commands.

    Configuration problems leave with exit code 2 and estimator failures
    with exit code 3; results are printed as JSON and written under
    `--out-dir` with a manifest beside every file.
    """

    def add_output_arguments(self, parser):
        parser.add_argument(
            "--out-dir",
            default=None,
            help="Directory for written files (default: SYNCSIM_OUTPUT_DIR).",
        )

    def add_scenario_arguments(self, parser):
        parser.add_argument("scenario", help=f"Preset name ({', '.join(ScenarioService.presets())}) or JSON file.")
        parser.add_argument("--label", help="Label used in output file names.")
        parser.add_argument("--rs-m", type=float, help="Schwarzschild radius of the central mass.")
        parser.add_argument("--ra-m", type=float, help="Radius of the ground station.")
        parser.add_argument("--rb-m", type=float, help="Radius of the satellite.")
        parser.add_argument("--omega0-hz", type=float, help="Source peak frequency.")
        parser.add_argument("--sigma-hz", type=float, help="Source bandwidth.")
        parser.add_argument("--v-mps", type=float, help="Mirror speed.")
        parser.add_argument("--dtau-s", type=float, help="Clock offset tau0_b - tau0_a (sets tau0_a_s to 0).")
        parser.add_argument("--scan-start-m", type=float, help="First delay of the scan.")
        parser.add_argument("--scan-stop-m", type=float, help="Last delay of the scan.")
        parser.add_argument("--scan-points", type=int, help="Number of delays in the scan.")

    def load_scenario(self, options):
        overrides = {key: options.get(flag) for flag, key in SCENARIO_OVERRIDES.items()}
        if options.get("dtau_s") is not None:
            overrides.update(tau0_a_s=0.0, tau0_b_s=options["dtau_s"])
        try:
            scenario, document = ScenarioService.load(options["scenario"], overrides)
        except ConfigurationError as exc:
            raise CommandError(str(exc), returncode=CONFIG_ERROR) from exc
        return scenario, document

    def run_service(self, options, config, seed=None) -> RunService:
        out_dir = options.get("out_dir") or settings.SYNCSIM_OUTPUT_DIR
        return RunService(self.command_name, sys.argv, out_dir, config, seed)

    @property
    def command_name(self) -> str:
        return self.__module__.rsplit(".", 1)[-1]

    def emit(self, payload) -> None:
        self.stdout.write(json.dumps(payload, indent=2))

    def config_error(self, exc) -> CommandError:
        if isinstance(exc, serializers.ValidationError):
            message = json.dumps(exc.detail, default=str)
        else:
            message = str(exc)
        return CommandError(message, returncode=CONFIG_ERROR)

    def estimation_error(self, exc: EstimationError) -> CommandError:
        logger.warning("estimation failed: %s", exc)
        return CommandError(f"{exc.code}: {exc}", returncode=ESTIMATION_ERROR)
