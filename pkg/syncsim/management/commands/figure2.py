import numpy as np
import pandas as pd

from syncsim.protocol import FIGURE2_OMEGA0_HZ, FIGURE2_SIGMA_HZ, DeltaPMode, figure2_sweep
from syncsim.spacetime import DEFAULT_SCHWARZSCHILD_RADIUS_M, EARTH_RADIUS_M

from ._base import SyncSimCommand

GEO_RADIUS_M = 42.371e6


class Command(SyncSimCommand):
    help = (
        "Disturbance against satellite radius for a fixed source. Writes "
        "figure2.csv with columns r_b_m, delta_p."
    )

    def add_arguments(self, parser):
        parser.add_argument("--rb-start-m", type=float, default=EARTH_RADIUS_M)
        parser.add_argument("--rb-stop-m", type=float, default=GEO_RADIUS_M)
        parser.add_argument("--rb-points", type=int, default=200)
        parser.add_argument("--rb-m", type=float, nargs="*", help="Explicit radii; replaces the linear grid.")
        parser.add_argument("--ra-m", type=float, default=EARTH_RADIUS_M)
        parser.add_argument("--rs-m", type=float, default=DEFAULT_SCHWARZSCHILD_RADIUS_M)
        parser.add_argument("--omega0-hz", type=float, default=FIGURE2_OMEGA0_HZ)
        parser.add_argument("--sigma-hz", type=float, default=FIGURE2_SIGMA_HZ)
        parser.add_argument("--mode", choices=[mode.value for mode in DeltaPMode], default=DeltaPMode.EXACT.value)
        self.add_output_arguments(parser)

    def handle(self, *args, **options):
        if options["rb_m"] is not None:
            radii = options["rb_m"]
        else:
            radii = np.linspace(options["rb_start_m"], options["rb_stop_m"], max(options["rb_points"], 0))
        try:
            rows = figure2_sweep(
                radii,
                omega0_hz=options["omega0_hz"],
                sigma_hz=options["sigma_hz"],
                r_a=options["ra_m"],
                schwarzschild_radius_m=options["rs_m"],
                mode=options["mode"],
            )
        except ValueError as exc:
            raise self.config_error(exc) from exc

        frame = pd.DataFrame(rows, columns=["r_b_m", "delta_p"])
        config = {key: options[key] for key in ("ra_m", "rs_m", "omega0_hz", "sigma_hz", "mode")}
        config["r_b_m"] = [row[0] for row in rows]
        path = self.run_service(options, config).write_text(
            "figure2.csv", frame.to_csv(index=False, float_format="%.17g")
        )
        self.emit({"output": str(path), "points": len(rows), "delta_p_max": float(frame["delta_p"].max())})
