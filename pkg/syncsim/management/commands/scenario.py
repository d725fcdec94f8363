from syncsim.exceptions import SyncSimError
from syncsim.protocol import run_scenario
from syncsim.serializers import DisturbanceReportSerializer

from ._base import SyncSimCommand


class Command(SyncSimCommand):
    help = (
        "Run one scenario: print its disturbance report as JSON and write "
        "<label>_scan.csv (delta_l_m, p_c) and <label>_report.json."
    )

    def add_arguments(self, parser):
        self.add_scenario_arguments(parser)
        parser.add_argument(
            "--method",
            choices=["auto", "closed_form", "quadrature"],
            default="auto",
            help="How the coincidence scan is evaluated.",
        )
        self.add_output_arguments(parser)

    def handle(self, *args, **options):
        scenario, document = self.load_scenario(options)
        try:
            report, scan = run_scenario(scenario, method=options["method"])
        except (ValueError, SyncSimError) as exc:
            raise self.config_error(exc) from exc

        payload = DisturbanceReportSerializer(report).data
        runs = self.run_service(options, document)
        runs.write_text(f"{scenario.label}_scan.csv", scan.csv_text())
        runs.write_json(f"{scenario.label}_report.json", payload)
        self.emit(payload)
