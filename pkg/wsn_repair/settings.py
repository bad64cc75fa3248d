from __future__ import annotations

import dataclasses
import decimal
import enum
import inspect
from collections.abc import Mapping, MutableMapping
from typing import Any, Self

from wsn_repair import log

MICROSECONDS = 1_000_000


class InvalidSetting(ValueError):
    pass


class Metric(enum.StrEnum):
    HOP = "hop"
    LOCATION = "location"


def seconds_to_us(value: str | float | decimal.Decimal) -> int:
    """
    Parse a duration in seconds ("0.5", "2", "1e-3") into integer
    microseconds, without going through floats.
    """
    try:
        seconds = decimal.Decimal(str(value))
    except decimal.InvalidOperation as exc:
        raise InvalidSetting(f"{value!r} is not a number of seconds") from exc
    if not seconds.is_finite():
        raise InvalidSetting(f"{value!r} is not a finite duration")
    return int((seconds * MICROSECONDS).to_integral_value(decimal.ROUND_HALF_EVEN))


def positive_duration(value: str) -> int:
    duration = seconds_to_us(value)
    if duration <= 0:
        raise InvalidSetting(f"duration must be > 0, got {value}")
    return duration


def non_negative_duration(value: str) -> int:
    duration = seconds_to_us(value)
    if duration < 0:
        raise InvalidSetting(f"duration must be >= 0, got {value}")
    return duration


def positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError as exc:
        raise InvalidSetting(f"{value!r} is not an integer") from exc
    if number < 1:
        raise InvalidSetting(f"value must be >= 1, got {value}")
    return number


class _FromMapping:
    """
    Shared constructor for the settings dataclasses: keeps the keys that
    name a field, runs each value through `clean_<key>` and reports unknown
    or invalid keys by name.
    """

    @classmethod
    def field_names(cls) -> list[str]:
        return [e for e in inspect.signature(cls).parameters]

    @classmethod
    def from_mapping(cls, values: Mapping[str, str], strict: bool = True) -> Self:
        possible = cls.field_names()
        unknown = set(values) - set(possible)
        if strict and unknown:
            raise InvalidSetting(f"unknown setting(s): {', '.join(sorted(unknown))}")
        config: dict[str, Any] = {k: v for k, v in values.items() if k in possible}
        for key, value in list(config.items()):
            if func := getattr(cls, f"clean_{key.lower()}", None):
                try:
                    config[key] = func(value)
                except ValueError as exc:
                    raise InvalidSetting(f"{key}: {exc!s}") from exc

        return cls(**config)


@dataclasses.dataclass(kw_only=True, frozen=True)
class ProtocolConfig(_FromMapping):
    """Parameters of the route repair protocol. Durations are microseconds."""

    timeout_ppt: int = 500_000
    probe_interval: int = 2 * MICROSECONDS
    request_resend_timeout: int = 2 * MICROSECONDS
    backn_backoff_base: int = 1 * MICROSECONDS
    pending_forward_delay: int = 5_000
    max_hops: int = 16
    metric: Metric = Metric.HOP
    location_penalty: float = 4.0
    location_cone_degrees: float = 60.0
    data_buffer_capacity: int = 8

    def __post_init__(self):
        for name in (
            "timeout_ppt",
            "probe_interval",
            "request_resend_timeout",
            "backn_backoff_base",
            "pending_forward_delay",
        ):
            if getattr(self, name) <= 0:
                raise InvalidSetting(f"{name} must be > 0")
        if self.max_hops < 1:
            raise InvalidSetting("max_hops must be >= 1")

    # Clean methods
    @classmethod
    def clean_timeout_ppt(cls, value: str) -> int:
        return positive_duration(value)

    @classmethod
    def clean_probe_interval(cls, value: str) -> int:
        return positive_duration(value)

    @classmethod
    def clean_request_resend_timeout(cls, value: str) -> int:
        return positive_duration(value)

    @classmethod
    def clean_backn_backoff_base(cls, value: str) -> int:
        return positive_duration(value)

    @classmethod
    def clean_pending_forward_delay(cls, value: str) -> int:
        return positive_duration(value)

    @classmethod
    def clean_max_hops(cls, value: str) -> int:
        return positive_int(value)

    @classmethod
    def clean_data_buffer_capacity(cls, value: str) -> int:
        return positive_int(value)

    @classmethod
    def clean_metric(cls, value: str) -> Metric:
        try:
            return Metric(value.lower())
        except ValueError:
            raise InvalidSetting(
                f"The metric {value} is not valid. Please choose from hop or location"
            )

    @classmethod
    def clean_location_penalty(cls, value: str) -> float:
        penalty = float(value)
        if penalty < 0:
            raise InvalidSetting("location_penalty must be >= 0")
        return penalty

    @classmethod
    def clean_location_cone_degrees(cls, value: str) -> float:
        degrees = float(value)
        if not 0 < degrees <= 180:
            raise InvalidSetting("location_cone_degrees must be in (0, 180]")
        return degrees


@dataclasses.dataclass(kw_only=True, frozen=True)
class SimulationConfig(_FromMapping):
    """
    Engine-side settings: the delay model plus sampling and data cadence.
    `sample_interval` and `settle_window` default to values derived from the
    protocol probe interval (see `resolve`).
    """

    base_latency: int = 10_000
    jitter: int = 0
    loss_probability: float = 0.0
    sample_interval: int | None = None
    settle_window: int | None = None
    data_interval: int = 5 * MICROSECONDS
    data_cutoff: int = 1 * MICROSECONDS

    def __post_init__(self):
        if self.base_latency <= 0:
            raise InvalidSetting("base_latency must be > 0")
        if not 0 <= self.loss_probability < 1:
            raise InvalidSetting("loss_probability must be in [0, 1)")

    # Clean methods
    @classmethod
    def clean_base_latency(cls, value: str) -> int:
        return positive_duration(value)

    @classmethod
    def clean_jitter(cls, value: str) -> int:
        return non_negative_duration(value)

    @classmethod
    def clean_sample_interval(cls, value: str) -> int:
        return positive_duration(value)

    @classmethod
    def clean_settle_window(cls, value: str) -> int:
        return positive_duration(value)

    @classmethod
    def clean_data_interval(cls, value: str) -> int:
        return non_negative_duration(value)

    @classmethod
    def clean_data_cutoff(cls, value: str) -> int:
        return non_negative_duration(value)

    @classmethod
    def clean_loss_probability(cls, value: str) -> float:
        probability = float(value)
        if not 0 <= probability < 1:
            raise InvalidSetting("loss_probability must be in [0, 1)")
        return probability

    def resolve(self, protocol: ProtocolConfig) -> SimulationConfig:
        return dataclasses.replace(
            self,
            sample_interval=self.sample_interval or protocol.probe_interval,
            settle_window=self.settle_window or 3 * protocol.probe_interval,
        )


@dataclasses.dataclass(kw_only=True)
class CliConfig:
    """This object defines the environment variables"""

    WSN_REPAIR_LOG_LEVEL: str = "WARNING"

    @classmethod
    def clean_wsn_repair_log_level(cls, value: str) -> str:
        level = value.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            log.warning(f"Unknown log level {value}, using WARNING")
            return "WARNING"
        return level

    # environ is a MutableMapping because that's what os.environ is
    @classmethod
    def from_environ(cls, environ: MutableMapping[str, str]) -> CliConfig:
        possible_variables = [e for e in inspect.signature(cls).parameters]
        config: dict[str, Any] = {
            k: v for k, v in environ.items() if k in possible_variables
        }
        for key, value in list(config.items()):
            if func := getattr(cls, f"clean_{key.lower()}", None):
                config[key] = func(value)
        return cls(**config)
