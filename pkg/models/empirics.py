import re
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from models.applications import (
    ComplexConfig,
    DegreeCountConfig,
    DegreeRegime,
    HypercubeConfig,
    ModelInstance,
    SubgraphConfig,
    SubgraphPattern,
    TwoRunsConfig,
)
from utils.errors import BadProbability, ConfigError, EmptyBatch

_NUMBER = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_RATIO = re.compile(rf"^\s*(?P<c>{_NUMBER})\s*/\s*n\s*$")
_POWER = re.compile(rf"^\s*(?:(?P<c>{_NUMBER})\s*\*\s*)?n\s*\^\s*(?P<e>{_NUMBER})\s*$")
_CONSTANT = re.compile(rf"^\s*(?P<c>{_NUMBER})\s*$")


class PLaw(BaseModel):
    """p(n) = coefficient * n^exponent"""
    coefficient: float = 1.0
    exponent: float = 0.0
    text: str = ""

    model_config = ConfigDict(frozen=True)

    @classmethod
    def parse(cls, text: str) -> "PLaw":
        """Accepts "c/n", "n^e", "c*n^e" and constants"""
        match = _RATIO.match(text)
        if match:
            return cls(coefficient=float(match["c"]), exponent=-1.0, text=text.strip())
        match = _POWER.match(text)
        if match:
            c = float(match["c"]) if match["c"] is not None else 1.0
            return cls(coefficient=c, exponent=float(match["e"]), text=text.strip())
        match = _CONSTANT.match(text)
        if match:
            return cls(coefficient=float(match["c"]), exponent=0.0, text=text.strip())
        raise ConfigError("p_law", f"cannot parse {text!r}; expected c/n, n^e, c*n^e or a constant")

    def __call__(self, n: int) -> float:
        p = self.coefficient * float(n) ** self.exponent
        if not 0.0 < p < 1.0:
            raise BadProbability(f"p_law {self.text or self.coefficient} gives p={p} at n={n}")
        return p


class ModelFamily(BaseModel):
    """A model kind with fixed shape parameters, instantiated along a grid of n"""
    kind: str
    p_law: Optional[PLaw] = None
    d: int = 0
    kappa: int = 1
    pattern: Optional[SubgraphPattern] = None
    regime: Optional[DegreeRegime] = None
    eps: Optional[float] = None

    model_config = ConfigDict(frozen=True)

    @field_validator("kind")
    @classmethod
    def known_kind(cls, value):
        if value not in ("two_runs", "subgraph", "degree", "complex", "hypercube"):
            raise ConfigError("model", f"unknown model {value!r}")
        return value

    def at(self, n: int) -> ModelInstance:
        if self.kind == "two_runs":
            return TwoRunsConfig(alpha=(1.0,) * n)
        if self.p_law is None:
            raise ConfigError("p_law", f"the {self.kind} family needs a p-law")
        p = self.p_law(n)
        if self.kind == "subgraph":
            if self.pattern is None:
                raise ConfigError("pattern", "the subgraph family needs a pattern")
            return SubgraphConfig(n=n, p=p, pattern=self.pattern)
        if self.kind == "degree":
            return DegreeCountConfig(n=n, p=p, d=self.d)
        if self.kind == "complex":
            return ComplexConfig(n=n, kappa=self.kappa, p=p)
        return HypercubeConfig(n=n, p=p, d=self.d)


class SampleBatch(BaseModel):
    values: np.ndarray
    model: ModelInstance
    seed: int
    standardized: bool = True

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("values", mode="before")
    @classmethod
    def check_values(cls, value):
        values = np.asarray(value, dtype=np.float64).reshape(-1)
        if values.shape[0] == 0:
            raise EmptyBatch("a batch needs at least one sample")
        if not np.all(np.isfinite(values)):
            raise ConfigError("values", "batch values must be finite")
        values.setflags(write=False)
        return values

    @property
    def count(self) -> int:
        return int(self.values.shape[0])


class RatePoint(BaseModel):
    n: int
    dk: float = Field(ge=0.0, le=1.0)
    mc_sd: float
    prediction: float
    provenance: str = "monte-carlo"


class RateFit(BaseModel):
    """Least squares on (log n, log dk)"""
    slope: float
    intercept: float
    r_squared: float = Field(ge=0.0, le=1.0)
    points: int
