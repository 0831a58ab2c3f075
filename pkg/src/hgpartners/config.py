"""Run configuration.

Defaults come from ``HGPARTNERS_*`` environment variables through
``HgPartnersSettings``; a key=value file and command-line flags override
them, in that order.
"""

from __future__ import annotations

import dataclasses
import math
import pathlib
from typing import Any

from pydantic import TypeAdapter
from pydantic import ValidationError
from pydantic_settings import BaseSettings
from pydantic_settings import SettingsConfigDict

from hgpartners.exceptions import ConfigurationError
from hgpartners.moebius import PRECISIONS

MAX_CROSSING_DT = 0.05


class HgPartnersSettings(BaseSettings):
    """Environment-based configuration.

    Environment variables:
        HGPARTNERS_GROUP: "octagon" or a group JSON file (default: octagon)
        HGPARTNERS_BALL_RADIUS: Word length of the element ball (default: 5)
        HGPARTNERS_MAX_WORD_LEN: Enumeration word length cap (default: 6)
        HGPARTNERS_EPS: Encounter radius (default: 0.25)
        HGPARTNERS_DT: Encounter scan step (default: 0.0625)
        HGPARTNERS_CROSSING_DT: Crossing scan step (default: 0.02)
        HGPARTNERS_METRIC_FACTOR: Distance threshold factor (default: sqrt 2)
        HGPARTNERS_PRECISION: "double" or "extended" (default: double)
        HGPARTNERS_SEED: Sampling seed (default: 0)
        HGPARTNERS_OUTPUT_DIR: Report directory (default: hgpartners-out)
        HGPARTNERS_JOBS: Worker count (default: 1)
        HGPARTNERS_LOG_LEVEL: Logging level (default: WARNING)
        HGPARTNERS_EPS_STAR: Expansivity constant (default: sigma0 / 4)
    """

    model_config = SettingsConfigDict(env_prefix="HGPARTNERS_")

    group: str = "octagon"
    ball_radius: int = 5
    max_word_len: int = 6
    eps: float = 0.25
    dt: float = 0.0625
    crossing_dt: float = 0.02
    metric_factor: float = math.sqrt(2.0)
    precision: str = "double"
    seed: int = 0
    output_dir: str = "hgpartners-out"
    jobs: int = 1
    log_level: str = "WARNING"
    eps_star: float | None = None


def _get_env_settings() -> HgPartnersSettings:
    """Lazy-load environment settings.

    Raises:
        ConfigurationError: If an environment value does not parse.
    """
    try:
        return HgPartnersSettings()
    except ValidationError as exc:
        msg = f"Invalid HGPARTNERS_* environment: {exc}"
        raise ConfigurationError(msg) from exc


def _env_default(name: str) -> Any:
    return dataclasses.field(
        default_factory=lambda: getattr(_get_env_settings(), name)
    )


@dataclasses.dataclass
class RunConfig:
    """Configuration of one CLI run.

    Every field is echoed into the reports the run writes.
    """

    group: str = _env_default("group")
    ball_radius: int = _env_default("ball_radius")
    max_word_len: int = _env_default("max_word_len")
    eps: float = _env_default("eps")
    dt: float = _env_default("dt")
    crossing_dt: float = _env_default("crossing_dt")
    metric_factor: float = _env_default("metric_factor")
    precision: str = _env_default("precision")
    seed: int = _env_default("seed")
    output_dir: str = _env_default("output_dir")
    jobs: int = _env_default("jobs")
    log_level: str = _env_default("log_level")
    eps_star: float | None = _env_default("eps_star")

    @classmethod
    def from_file(
        cls,
        path: pathlib.Path | None = None,
        overrides: dict[str, Any] | None = None,
    ) -> RunConfig:
        """Create from a key=value file plus overrides.

        Lines starting with ``#`` and blank lines are ignored. Keys may
        use dashes or underscores. Overrides with value None are skipped.

        Args:
            path: Optional configuration file.
            overrides: Values that win over the file (CLI flags).

        Returns:
            RunConfig with environment defaults for unset fields.

        Raises:
            ConfigurationError: On unknown keys, malformed lines or values
                of the wrong type.
        """
        values: dict[str, Any] = {}
        if path is not None:
            values.update(_read_key_values(pathlib.Path(path)))
        for key, value in (overrides or {}).items():
            if value is not None:
                values[key.replace("-", "_")] = value
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - set(known))
        if unknown:
            msg = f"Unknown configuration keys: {', '.join(unknown)}"
            raise ConfigurationError(msg)
        env_settings = _get_env_settings()
        kwargs = {}
        for name in known:
            default = getattr(env_settings, name)
            kwargs[name] = _coerce(name, values.get(name, default))
        return cls(**kwargs)

    def resolved_eps_star(self, sigma0: float) -> float:
        return self.eps_star if self.eps_star is not None else sigma0 / 4

    def validate(self, sigma0: float) -> None:
        """Check the run parameters against the group constant sigma0.

        Raises:
            ConfigurationError: If a parameter is out of range.
        """
        problems = []
        if not 0 < self.eps < sigma0 / 8:
            problems.append(
                f"eps={self.eps} must lie in (0, sigma0/8={sigma0 / 8:.6g})"
            )
        if not 0 < self.dt <= self.eps / 4:
            problems.append(f"dt={self.dt} must lie in (0, eps/4]")
        if not 0 < self.crossing_dt <= MAX_CROSSING_DT:
            problems.append(
                f"crossing_dt={self.crossing_dt} must lie in "
                f"(0, {MAX_CROSSING_DT}]"
            )
        if self.ball_radius < 1:
            problems.append(f"ball_radius={self.ball_radius} must be >= 1")
        if self.max_word_len < 1:
            problems.append(f"max_word_len={self.max_word_len} must be >= 1")
        if self.jobs < 1:
            problems.append(f"jobs={self.jobs} must be >= 1")
        if self.metric_factor <= 0:
            problems.append("metric_factor must be positive")
        if self.precision not in PRECISIONS:
            problems.append(
                f"precision={self.precision!r} must be one of "
                f"{', '.join(sorted(PRECISIONS))}"
            )
        if problems:
            msg = "Invalid configuration: " + "; ".join(problems)
            raise ConfigurationError(msg)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def _read_key_values(path: pathlib.Path) -> dict[str, str]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        msg = f"Cannot read configuration file {path}: {exc}"
        raise ConfigurationError(msg) from exc
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            msg = f"{path}:{lineno}: expected key=value, got {raw!r}"
            raise ConfigurationError(msg)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _coerce(name: str, value: Any) -> Any:
    if isinstance(value, str) and name == "eps_star":
        if value.lower() in ("", "none"):
            return None
    field = HgPartnersSettings.model_fields[name]
    try:
        return TypeAdapter(field.annotation).validate_python(value)
    except ValidationError:
        msg = f"Configuration key {name}: cannot parse {value!r}"
        raise ConfigurationError(msg) from None
