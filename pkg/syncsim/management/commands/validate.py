import pandas as pd
from django.core.management.base import CommandError

from syncsim import validation
from syncsim.serializers import ValidationCheckSerializer

from ._base import SyncSimCommand

FAILED_CHECK = 1


class Command(SyncSimCommand):
    help = (
        "Run the oracle cross-checks (reference disturbance values, closed form "
        "against quadrature, overlaps, dispersion cancellation, estimator recovery, "
        "mirror-speed error, monotonicity) and write validation.csv. Exits 1 if any check fails."
    )

    def add_arguments(self, parser):
        parser.add_argument(
            "--seeds",
            type=int,
            default=validation.CALIBRATION_SEEDS,
            help="Seeds in the estimator calibration study.",
        )
        self.add_output_arguments(parser)

    def handle(self, *args, **options):
        if options["seeds"] < 1:
            raise self.config_error(ValueError("--seeds must be at least 1."))
        checks = validation.run_checks(seeds=options["seeds"])
        rows = ValidationCheckSerializer(checks, many=True).data
        frame = pd.DataFrame(rows)
        self.run_service(options, {"seeds": options["seeds"]}).write_text(
            "validation.csv", frame.to_csv(index=False, float_format="%.17g")
        )
        for check in checks:
            style = self.style.SUCCESS if check.passed else self.style.ERROR
            self.stdout.write(f"{'PASS' if check.passed else 'FAIL'} {check.name}: {check.detail}", style)

        failed = [check.name for check in checks if not check.passed]
        if failed:
            raise CommandError(f"failed checks: {', '.join(failed)}", returncode=FAILED_CHECK)
