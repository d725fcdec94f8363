from pathlib import Path

import numpy as np
from django.conf import settings
from rest_framework import serializers

from .exceptions import SpacetimeDomainError, SyncSimError
from .interferometer import MAX_DISPERSION_ORDER, DispersionModel, ProtocolConfig
from .montecarlo import CountingConfig
from .protocol import Scenario
from .spacetime import EARTH_RADIUS_M, SpacetimeConfig
from .wavepacket import PhotonPairState, TabulatedAmplitude

DISPERSION_FIELDS = (
    "dispersion_signal_to",
    "dispersion_signal_from",
    "dispersion_idler_to",
    "dispersion_idler_from",
)


def _coefficients():
    return serializers.ListField(
        child=serializers.FloatField(),
        max_length=MAX_DISPERSION_ORDER + 1,
        required=False,
        default=list,
    )


class ScenarioSerializer(serializers.Serializer):
    """
    Validates a flat scenario document and builds the immutable `Scenario`.

    Lengths are in meters, frequencies in hertz and times in seconds. The
    scan is `scan_start_m`, `scan_stop_m` and `scan_points` when all three
    are present, otherwise the explicit `scan_m` list. A relative
    `spectrum_csv` is resolved against the `base_dir` context entry. Keys
    that name no field are rejected rather than ignored.
    """

    label = serializers.CharField(default="custom")
    schwarzschild_radius_m = serializers.FloatField(required=False)
    r_a_m = serializers.FloatField(default=EARTH_RADIUS_M)
    r_b_m = serializers.FloatField()
    omega0_hz = serializers.FloatField()
    sigma_hz = serializers.FloatField(required=False)
    spectrum_csv = serializers.CharField(required=False)
    mirror_speed_mps = serializers.FloatField()
    tau0_a_s = serializers.FloatField(default=0.0)
    tau0_b_s = serializers.FloatField(default=0.0)
    x0_m = serializers.FloatField(default=0.0)
    link_distance_m = serializers.FloatField(default=0.0, min_value=0.0)
    bs_distance_m = serializers.FloatField(default=0.0, min_value=0.0)
    scan_start_m = serializers.FloatField(required=False)
    scan_stop_m = serializers.FloatField(required=False)
    scan_points = serializers.IntegerField(required=False, min_value=1)
    scan_m = serializers.ListField(child=serializers.FloatField(), required=False, allow_empty=False)
    dispersion_signal_to = _coefficients()
    dispersion_signal_from = _coefficients()
    dispersion_idler_to = _coefficients()
    dispersion_idler_from = _coefficients()

    def to_internal_value(self, data):
        unknown = sorted(set(data) - set(self.fields)) if isinstance(data, dict) else []
        if unknown:
            raise serializers.ValidationError({key: ["unknown field."] for key in unknown})
        return super().to_internal_value(data)

    def _spacetime(self, attrs):
        rs = attrs.get("schwarzschild_radius_m", settings.SYNCSIM_SCHWARZSCHILD_RADIUS_M)
        try:
            return SpacetimeConfig(r_a=attrs["r_a_m"], r_b=attrs["r_b_m"], schwarzschild_radius_m=rs)
        except SpacetimeDomainError as exc:
            message = str(exc)
            field = "schwarzschild_radius_m"
            if message.startswith(("r_a", "r_b")):
                field = message[:3] + "_m"
            raise serializers.ValidationError({field: message})

    def _source(self, attrs):
        omega0 = attrs["omega0_hz"]
        if "spectrum_csv" in attrs:
            path = Path(attrs["spectrum_csv"])
            if not path.is_absolute():
                path = Path(self.context.get("base_dir", ".")) / path
            try:
                return PhotonPairState(omega0, TabulatedAmplitude.from_csv(path))
            except (OSError, ValueError, KeyError, SyncSimError) as exc:
                raise serializers.ValidationError({"spectrum_csv": str(exc)})
        if "sigma_hz" not in attrs:
            raise serializers.ValidationError({"sigma_hz": "required unless spectrum_csv is given."})
        try:
            return PhotonPairState.gaussian(omega0, attrs["sigma_hz"])
        except ValueError as exc:
            field = "sigma_hz" if str(exc).startswith("sigma") else "omega0_hz"
            raise serializers.ValidationError({field: str(exc)})

    def _scan(self, attrs):
        ranged = ("scan_start_m", "scan_stop_m", "scan_points")
        missing = [key for key in ranged if key not in attrs]
        if missing and "scan_m" in attrs:
            return attrs["scan_m"]
        if missing:
            raise serializers.ValidationError(
                {"scan_m": f"give scan_m or all of scan_start_m, scan_stop_m, scan_points (missing {', '.join(missing)})."}
            )
        return np.linspace(attrs["scan_start_m"], attrs["scan_stop_m"], attrs["scan_points"])

    def _protocol(self, attrs, scan):
        try:
            return ProtocolConfig(
                mirror_speed_mps=attrs["mirror_speed_mps"],
                scan=scan,
                tau0_a_s=attrs["tau0_a_s"],
                tau0_b_s=attrs["tau0_b_s"],
                x0_m=attrs["x0_m"],
                link_distance_m=attrs["link_distance_m"],
                bs_distance_m=attrs["bs_distance_m"],
            )
        except ValueError as exc:
            field = "mirror_speed_mps" if str(exc).startswith("mirror") else "scan_m"
            raise serializers.ValidationError({field: str(exc)})

    def _dispersion(self, attrs):
        try:
            return DispersionModel(*(attrs[name] for name in DISPERSION_FIELDS))
        except ValueError as exc:
            segment = str(exc).split(":", 1)[0]
            raise serializers.ValidationError({f"dispersion_{segment}": str(exc)})

    def validate(self, attrs):
        attrs["scenario"] = Scenario(
            spacetime=self._spacetime(attrs),
            source=self._source(attrs),
            protocol=self._protocol(attrs, self._scan(attrs)),
            dispersion=self._dispersion(attrs),
            label=attrs["label"],
        )
        return attrs

    def create(self, validated_data):
        return validated_data["scenario"]


class CountingSerializer(serializers.Serializer):
    pairs_per_point = serializers.IntegerField(min_value=1)
    efficiency = serializers.FloatField(default=1.0)
    background = serializers.FloatField(default=0.0)
    seed = serializers.IntegerField(default=0, min_value=0)

    def validate(self, attrs):
        try:
            attrs["config"] = CountingConfig(**attrs)
        except ValueError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs

    def create(self, validated_data):
        return validated_data["config"]


class DisturbanceReportSerializer(serializers.Serializer):
    label = serializers.CharField()
    theta = serializers.FloatField()
    overlap1 = serializers.FloatField()
    overlap2 = serializers.FloatField()
    delta_p = serializers.FloatField()
    plateau = serializers.FloatField()
    dip_center_m = serializers.FloatField()
    regime_ok = serializers.BooleanField()
    orthogonal_weight = serializers.FloatField()


class EstimateSerializer(serializers.Serializer):
    dip_center_m = serializers.FloatField()
    dip_center_stderr_m = serializers.FloatField()
    dtau_hat_s = serializers.FloatField()
    dtau_stderr_s = serializers.FloatField()
    fit_residual = serializers.FloatField()
    converged = serializers.BooleanField()
    amplitude = serializers.FloatField()
    background = serializers.FloatField()
    sigma_hz = serializers.FloatField()
    evaluations = serializers.IntegerField()
    message = serializers.CharField(allow_blank=True)


class SensitivitySerializer(serializers.Serializer):
    dv_mps = serializers.FloatField()
    dip_shift_m = serializers.FloatField()
    dtau_relative_error = serializers.FloatField()
    first_order_error = serializers.FloatField()
    max_rate_change = serializers.FloatField()
    delta_p = serializers.FloatField()


class CurvatureSerializer(serializers.Serializer):
    delta_p_hat = serializers.FloatField()
    z_score = serializers.FloatField()
    plateau_points_flat = serializers.IntegerField()
    plateau_points_curved = serializers.IntegerField()


class RunManifestSerializer(serializers.Serializer):
    """Provenance record written next to every output file."""

    command = serializers.CharField()
    argv = serializers.ListField(child=serializers.CharField())
    config_hash = serializers.CharField()
    seed = serializers.IntegerField(allow_null=True)
    version = serializers.CharField()
    timestamp = serializers.CharField()
    output = serializers.CharField()


class ValidationCheckSerializer(serializers.Serializer):
    name = serializers.CharField()
    passed = serializers.BooleanField()
    value = serializers.FloatField()
    expected = serializers.FloatField()
    tolerance = serializers.FloatField()
    detail = serializers.CharField(allow_blank=True)
