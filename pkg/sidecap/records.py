"""Command-line records: channel configuration input and versioned output."""

import json
import math
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from config import config
from sidecap import __version__
from sidecap.model import CORRELATION_FIELDS, VARIANCE_FIELDS, ChannelParams, validate

SCHEMA_VERSION = "1"
INF_TOKEN = "inf"

Unit = Literal["nats", "bits"]


def number_token(value: Optional[float]) -> Union[float, str, None]:
    """Finite floats pass through, +inf becomes "inf"; NaN is a bug and raises"""
    if value is None:
        return None
    value = float(value)
    if math.isnan(value):
        raise ValueError("NaN must never reach output")
    if value == math.inf:
        return INF_TOKEN
    if value == -math.inf:
        return "-" + INF_TOKEN
    return value


class ChannelConfig(BaseModel):
    """Channel definition as read from a JSON config file plus command-line overrides"""

    model_config = ConfigDict(extra="forbid")

    p: float
    q1: float
    q2: float
    n: float
    rho_xs1: float = 0.0
    rho_s2z: float = 0.0
    unit: Unit = Field(default_factory=lambda: config.DEFAULT_UNIT)
    label: Optional[str] = None

    def to_params(self) -> ChannelParams:
        return validate(self.model_dump(include=set(VARIANCE_FIELDS + CORRELATION_FIELDS)))

    @classmethod
    def load(cls, path: Optional[Union[str, Path]] = None, **overrides: Any) -> "ChannelConfig":
        """
        Read a config file (optional) and apply overrides; None overrides are ignored.

        The numeric fields are checked with the channel validator first so that a
        bad value surfaces as NonPositiveVariance / CorrelationOutOfRange.
        """
        raw: Dict[str, Any] = {}
        if path:
            with open(path, "r", encoding="utf-8") as f:
                raw = json.load(f)
            if not isinstance(raw, dict):
                raise ValueError(f"Config file {path} must hold a JSON object")
        raw.update({key: value for key, value in overrides.items() if value is not None})

        validate(raw)
        return cls(**raw)


class OutputRecord(BaseModel):
    """One command's result: every number is finite or the token "inf" """

    model_config = ConfigDict(extra="forbid")

    schema_version: str = SCHEMA_VERSION
    command: str
    inputs: Dict[str, Union[int, float, str, None]]
    results: Dict[str, Any]
    unit: Unit
    version: str = __version__

    @field_validator("results")
    @classmethod
    def no_bare_non_finite(cls, results: Dict[str, Any]) -> Dict[str, Any]:
        def walk(value):
            if isinstance(value, float) and not math.isfinite(value):
                raise ValueError(f"Non-finite number {value} must be emitted as a token")
            if isinstance(value, dict):
                for item in value.values():
                    walk(item)
            if isinstance(value, list):
                for item in value:
                    walk(item)
        walk(results)
        return results


def schema_for(which: str) -> Dict[str, Any]:
    """JSON Schema of the config ("config") or output ("output") record"""
    models = {"config": ChannelConfig, "output": OutputRecord}
    if which not in models:
        raise ValueError(f"Unknown schema {which!r}; expected one of {sorted(models)}")
    return models[which].model_json_schema()
