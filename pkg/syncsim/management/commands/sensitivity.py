from syncsim.protocol import mirror_velocity_sensitivity
from syncsim.serializers import SensitivitySerializer

from ._base import SyncSimCommand


class Command(SyncSimCommand):
    help = "Mirror-speed error study: dip shift and clock-offset bias for a speed error --dv-mps."

    def add_arguments(self, parser):
        self.add_scenario_arguments(parser)
        parser.add_argument("--dv-mps", type=float, default=1e-3, help="Mirror speed error.")
        self.add_output_arguments(parser)

    def handle(self, *args, **options):
        scenario, document = self.load_scenario(options)
        try:
            result = mirror_velocity_sensitivity(scenario, options["dv_mps"])
        except ValueError as exc:
            raise self.config_error(exc) from exc

        payload = SensitivitySerializer(result).data
        config = {**document, "dv_mps": options["dv_mps"]}
        self.run_service(options, config).write_json(f"{scenario.label}_sensitivity.json", payload)
        self.emit(payload)
