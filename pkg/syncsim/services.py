import json
import logging
from pathlib import Path

from . import __version__
from .exceptions import ConfigurationError
from .protocol import Scenario
from .serializers import RunManifestSerializer, ScenarioSerializer
from .utils import atomic_write, config_hash, key_line, utc_timestamp

logger = logging.getLogger(__name__)


class ScenarioService:
    """
    Loads scenario presets and scenario files into validated `Scenario` objects.

    Presets are the JSON documents shipped in `syncsim/scenarios/`; any
    other argument is read as a path. Errors carry the file name and, where
    it can be found, the line of the offending key.
    """

    PRESET_DIR = Path(__file__).resolve().parent / "scenarios"

    @classmethod
    def presets(cls) -> list[str]:
        return sorted(path.stem for path in cls.PRESET_DIR.glob("*.json"))

    @classmethod
    def resolve(cls, name_or_path) -> Path:
        preset = cls.PRESET_DIR / f"{name_or_path}.json"
        if preset.is_file():
            return preset
        path = Path(name_or_path)
        if path.is_file():
            return path
        raise ConfigurationError(
            f"unknown scenario {name_or_path!r}: not a preset ({', '.join(cls.presets())}) or a readable file."
        )

    @classmethod
    def load(cls, name_or_path, overrides=None) -> tuple[Scenario, dict]:
        """
        Read, override and validate a scenario.

        Args:
            name_or_path (str | Path): Preset name or path to a JSON document.
            overrides (dict, optional): Keys replacing those of the document;
                entries whose value is None are ignored.

        Returns:
            tuple[Scenario, dict]: The scenario and the merged document it was built from.

        Raises:
            ConfigurationError: On unreadable files, JSON syntax errors and
                invalid fields, with a `path:line:` prefix where possible.
        """
        path = cls.resolve(name_or_path)
        text = path.read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}:{exc.lineno}: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}:1: a scenario must be a JSON object.")
        return cls.build(data, overrides, source=path, text=text)

    @classmethod
    def build(cls, data: dict, overrides=None, source="<scenario>", text="") -> tuple[Scenario, dict]:
        overrides = {key: value for key, value in (overrides or {}).items() if value is not None}
        merged = {**data, **overrides}
        base_dir = Path(source).parent if text else Path(".")
        serializer = ScenarioSerializer(data=merged, context={"base_dir": base_dir})
        if not serializer.is_valid():
            raise ConfigurationError(cls._format_errors(source, text, serializer.errors, overrides))
        return serializer.save(), merged

    @staticmethod
    def _format_errors(source, text, errors, overrides) -> str:
        lines = []
        for field, messages in errors.items():
            detail = "; ".join(str(message) for message in messages)
            if field in overrides:
                lines.append(f"{source}: {field} (override): {detail}")
                continue
            number = key_line(text, field) if text else None
            where = f"{source}:{number}" if number else str(source)
            lines.append(f"{where}: {field}: {detail}")
        return "\n".join(lines)


class RunService:
    """
    Writes the outputs of one command, each with a `<name>.manifest.json` sibling.

    Every file is written atomically. The manifest records the command
    line, a hash of the configuration, the seed, the package version and
    the UTC time of the run.
    """

    def __init__(self, command: str, argv, out_dir, config: dict, seed=None):
        self.command = command
        self.argv = [str(arg) for arg in argv]
        self.out_dir = Path(out_dir)
        self.config = config
        self.seed = seed
        self.outputs: list[Path] = []

    def manifest(self, output: Path) -> dict:
        return RunManifestSerializer(
            {
                "command": self.command,
                "argv": self.argv,
                "config_hash": config_hash(self.config),
                "seed": self.seed,
                "version": __version__,
                "timestamp": utc_timestamp(),
                "output": output.name,
            }
        ).data

    def write_text(self, name: str, text: str) -> Path:
        path = atomic_write(self.out_dir / name, text)
        atomic_write(self.out_dir / f"{name}.manifest.json", json.dumps(self.manifest(path), indent=2) + "\n")
        self.outputs.append(path)
        logger.info("wrote %s", path)
        return path

    def write_json(self, name: str, payload) -> Path:
        return self.write_text(name, json.dumps(payload, indent=2) + "\n")
