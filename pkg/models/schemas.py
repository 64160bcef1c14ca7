import configparser
import io
import uuid
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError, field_validator

from utils.errors import ConfigError


class Command(str, Enum):
    BOUND = "bound"
    VERIFY = "verify"
    RATE = "rate"
    SELFTEST = "selftest"


class Provenance(str, Enum):
    EXACT = "exact"
    GRID_APPROXIMATE = "grid-approximate"
    MONTE_CARLO = "monte-carlo"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class BoundVariant(str, Enum):
    R0 = "r0"
    R1 = "r1"
    R2 = "r2"
    GAMMA0 = "gamma0"
    SECOND_R1 = "2nd_R1"
    SECOND_R2 = "2nd_R2"
    SECOND_W = "2nd_W"
    FOURTH = "fourth"
    ALL = "all"


# section of the config file each key lives in
SECTIONS = {
    "experiment": ("command", "variant", "n_grid", "p_law", "regime", "eps", "samples", "seed",
                   "refine", "threads", "filter", "constant"),
    "model": ("model", "n", "p", "d", "kappa", "alpha", "pattern"),
    "output": ("out", "format"),
}


def _split(value):
    if isinstance(value, str):
        return tuple(part.strip() for part in value.split(",") if part.strip())
    return value


class ExperimentConfig(BaseModel):
    """One CLI invocation; flags and config-file keys share these names"""
    command: Command
    model: Optional[str] = None
    n: Optional[int] = None
    p: Optional[float] = None
    d: int = 0
    kappa: int = 1
    alpha: Optional[Tuple[float, ...]] = None
    pattern: Optional[str] = None
    variant: BoundVariant = BoundVariant.ALL
    n_grid: Optional[Tuple[int, ...]] = None
    p_law: Optional[str] = None
    regime: Optional[str] = None
    eps: Optional[float] = None
    samples: Optional[int] = None
    seed: Optional[int] = None
    refine: Optional[int] = None
    threads: Optional[int] = None
    out: Optional[str] = None
    format: OutputFormat = OutputFormat.CSV
    filter: Optional[str] = None
    constant: Optional[float] = None

    @field_validator("alpha", "n_grid", mode="before")
    @classmethod
    def comma_list(cls, value):
        return _split(value)

    @field_validator("model")
    @classmethod
    def known_model(cls, value):
        if value is not None and value not in ("two_runs", "subgraph", "degree", "complex", "hypercube"):
            raise ConfigError("model", f"unknown model {value!r}")
        return value

    @field_validator("n", "samples", "refine", "threads")
    @classmethod
    def positive(cls, value, info):
        if value is not None and value < 1:
            raise ConfigError(info.field_name, f"must be at least 1, got {value}")
        return value

    @field_validator("regime")
    @classmethod
    def known_regime(cls, value):
        if value is not None and value not in ("dense", "sparse"):
            raise ConfigError("regime", f"expected dense or sparse, got {value!r}")
        return value

    @classmethod
    def build(cls, **values) -> "ExperimentConfig":
        """Construct, reporting type errors as ConfigError on the first offending field"""
        try:
            return cls(**values)
        except ValidationError as exc:
            error = exc.errors()[0]
            field = ".".join(str(part) for part in error["loc"]) or "config"
            raise ConfigError(field, error["msg"])

    def to_ini(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        for section, keys in SECTIONS.items():
            parser[section] = {}
            for key in keys:
                value = getattr(self, key)
                if value is None:
                    continue
                if isinstance(value, Enum):
                    value = value.value
                elif isinstance(value, tuple):
                    value = ",".join(repr(v) for v in value)
                elif isinstance(value, float):
                    value = repr(value)
                parser[section][key] = str(value)
        buffer = io.StringIO()
        parser.write(buffer)
        return buffer.getvalue()

    @classmethod
    def read_ini(cls, text: str) -> Dict[str, Any]:
        """Flat key/value mapping of a config file, unknown keys rejected"""
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError("config", str(exc).splitlines()[0])
        values = {}
        for section in parser.sections():
            if section not in SECTIONS:
                raise ConfigError(section, "unknown config section")
            for key, value in parser[section].items():
                if key not in SECTIONS[section]:
                    raise ConfigError(key, f"not a key of [{section}]")
                values[key] = value
        return values

    @classmethod
    def from_ini(cls, text: str, **overrides) -> "ExperimentConfig":
        values = cls.read_ini(text)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.build(**values)

    def experiment_id(self) -> str:
        return str(uuid.uuid5(uuid.NAMESPACE_URL, self.to_ini()))


class OutputRow(BaseModel):
    model: str
    n: int
    p: float
    d: Optional[int] = None
    kappa_dim: Optional[int] = None
    variant: str
    value: float
    provenance: Provenance


class CheckFailure(BaseModel):
    check: str
    inequality: str
    margin: float
    detail: str = ""


class VerifyReport(BaseModel):
    suites: List[str]
    checks_run: int = 0
    failures: List[CheckFailure] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


class ResultRecord(BaseModel):
    experiment_id: str
    command: Command
    inputs: Dict[str, Any]
    rows: List[Dict[str, Any]] = Field(default_factory=list)
    summary: Dict[str, Any] = Field(default_factory=dict)
    failures: List[CheckFailure] = Field(default_factory=list)
    wall_time: float = 0.0
    version: str
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
