import numpy as np
import pandas as pd

from syncsim.protocol import LEO_RADIUS_M, DeltaPMode, figure3_sweep
from syncsim.spacetime import DEFAULT_SCHWARZSCHILD_RADIUS_M, EARTH_RADIUS_M

from ._base import SyncSimCommand


def _grid(start, stop, points):
    if points < 1:
        raise ValueError("grid needs at least one point.")
    return np.linspace(start, stop, points)


class Command(SyncSimCommand):
    help = (
        "Disturbance over source peak frequency and bandwidth at fixed radius. "
        "Writes figure3.csv in long form with columns omega0_hz, sigma_hz, delta_p."
    )

    def add_arguments(self, parser):
        parser.add_argument("--omega0-start-hz", type=float, default=400e12)
        parser.add_argument("--omega0-stop-hz", type=float, default=1000e12)
        parser.add_argument("--omega0-points", type=int, default=151)
        parser.add_argument("--sigma-start-hz", type=float, default=50e6)
        parser.add_argument("--sigma-stop-hz", type=float, default=500e6)
        parser.add_argument("--sigma-points", type=int, default=10)
        parser.add_argument("--rb-m", type=float, default=LEO_RADIUS_M)
        parser.add_argument("--ra-m", type=float, default=EARTH_RADIUS_M)
        parser.add_argument("--rs-m", type=float, default=DEFAULT_SCHWARZSCHILD_RADIUS_M)
        parser.add_argument("--mode", choices=[mode.value for mode in DeltaPMode], default=DeltaPMode.EXACT.value)
        self.add_output_arguments(parser)

    def handle(self, *args, **options):
        try:
            omega0 = _grid(options["omega0_start_hz"], options["omega0_stop_hz"], options["omega0_points"])
            sigma = _grid(options["sigma_start_hz"], options["sigma_stop_hz"], options["sigma_points"])
            grid = figure3_sweep(
                omega0,
                sigma,
                r_b=options["rb_m"],
                r_a=options["ra_m"],
                schwarzschild_radius_m=options["rs_m"],
                mode=options["mode"],
            )
        except ValueError as exc:
            raise self.config_error(exc) from exc

        sigma_mesh, omega0_mesh = np.meshgrid(sigma, omega0, indexing="ij")
        frame = pd.DataFrame(
            {"omega0_hz": omega0_mesh.ravel(), "sigma_hz": sigma_mesh.ravel(), "delta_p": grid.ravel()}
        )
        config = {key: value for key, value in options.items() if key.endswith(("_hz", "_points", "_m", "mode"))}
        path = self.run_service(options, config).write_text(
            "figure3.csv", frame.to_csv(index=False, float_format="%.17g")
        )
        self.emit({"output": str(path), "shape": list(grid.shape)})
