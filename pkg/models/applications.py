from enum import Enum
from typing import Annotated, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from utils.errors import BadProbability, ConfigError


def _check_probability(p: float) -> float:
    p = float(p)
    if not (0.0 < p < 1.0):
        raise BadProbability(f"p = {p} is not in (0,1)")
    return p


class DegreeRegime(str, Enum):
    """Asymptotic branch of the fixed-degree rate for d >= 1"""
    DENSE = "dense"    # liminf np > 0
    SPARSE = "sparse"  # np -> 0


class SubgraphPattern(BaseModel):
    """
    A fixed graph Gamma on vertices 0..vertex_count-1. Isolated vertices are
    dropped and the rest relabelled in order, so vertex_count counts only
    vertices that carry an edge.
    """
    vertex_count: int
    edges: Tuple[Tuple[int, int], ...]
    name: str = "custom"

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="before")
    @classmethod
    def reduce(cls, data):
        if not isinstance(data, dict):
            return data
        edges = data.get("edges") or ()
        if not edges:
            raise ConfigError("pattern", "a pattern needs at least one edge")
        normalized = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ConfigError("pattern", f"loop at vertex {u}")
            edge = (min(u, v), max(u, v))
            if edge in normalized:
                raise ConfigError("pattern", f"duplicate edge {edge}")
            normalized.add(edge)
        used = sorted({v for e in normalized for v in e})
        label = {v: i for i, v in enumerate(used)}
        data = dict(data)
        data["edges"] = tuple(sorted((label[u], label[v]) for u, v in normalized))
        data["vertex_count"] = len(used)
        return data

    @property
    def edge_count(self) -> int:
        return len(self.edges)


PATTERNS = {
    "edge": SubgraphPattern(vertex_count=2, edges=((0, 1),), name="edge"),
    "path2": SubgraphPattern(vertex_count=3, edges=((0, 1), (1, 2)), name="path2"),
    "triangle": SubgraphPattern(vertex_count=3, edges=((0, 1), (1, 2), (0, 2)), name="triangle"),
    "star3": SubgraphPattern(vertex_count=4, edges=((0, 1), (0, 2), (0, 3)), name="star3"),
    "cycle4": SubgraphPattern(vertex_count=4, edges=((0, 1), (1, 2), (2, 3), (0, 3)), name="cycle4"),
}


def parse_pattern(text: str, name: str = "custom") -> SubgraphPattern:
    """Edge-list text, one "u v" pair per line with 1-based labels; '#' starts a comment"""
    edges = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError("pattern", f"line {lineno}: expected two vertex labels, got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ConfigError("pattern", f"line {lineno}: labels must be integers")
        if u < 1 or v < 1:
            raise ConfigError("pattern", f"line {lineno}: labels are 1-based")
        edges.append((u - 1, v - 1))
    return SubgraphPattern(vertex_count=0, edges=tuple(edges), name=name)


def resolve_pattern(value: str) -> SubgraphPattern:
    """A named pattern, or the path of an edge-list file"""
    if value in PATTERNS:
        return PATTERNS[value]
    try:
        with open(value, "r", encoding="utf-8") as handle:
            return parse_pattern(handle.read(), name=value)
    except OSError as exc:
        raise ConfigError("pattern", f"unknown pattern {value!r} ({exc.strerror})")


class TwoRunsConfig(BaseModel):
    """G = sum_i alpha_i xi_i xi_{i+1} on |alpha|+1 symmetric coordinates"""
    kind: Literal["two_runs"] = "two_runs"
    alpha: Tuple[float, ...]

    model_config = ConfigDict(frozen=True)

    @field_validator("alpha")
    @classmethod
    def non_empty(cls, value):
        if not value:
            raise ConfigError("alpha", "at least one weight is required")
        if not all(np.isfinite(value)):
            raise ConfigError("alpha", "weights must be finite")
        return value

    @property
    def p(self) -> float:
        return 0.5


class SubgraphConfig(BaseModel):
    kind: Literal["subgraph"] = "subgraph"
    n: int
    p: float
    pattern: SubgraphPattern

    model_config = ConfigDict(frozen=True)

    @field_validator("p")
    @classmethod
    def check_p(cls, value):
        return _check_probability(value)

    @model_validator(mode="after")
    def fits_pattern(self):
        if self.n < self.pattern.vertex_count:
            raise ConfigError("n", f"n={self.n} is smaller than the pattern's {self.pattern.vertex_count} vertices")
        return self


class DegreeCountConfig(BaseModel):
    kind: Literal["degree"] = "degree"
    n: int
    p: float
    d: int = 0

    model_config = ConfigDict(frozen=True)

    @field_validator("p")
    @classmethod
    def check_p(cls, value):
        return _check_probability(value)

    @model_validator(mode="after")
    def degree_range(self):
        if self.n < 2:
            raise ConfigError("n", "at least two vertices are required")
        if not 0 <= self.d < self.n:
            raise ConfigError("d", f"degree {self.d} outside 0..{self.n - 1}")
        return self


class ComplexConfig(BaseModel):
    kind: Literal["complex"] = "complex"
    n: int
    kappa: int
    p: float

    model_config = ConfigDict(frozen=True)

    @field_validator("p")
    @classmethod
    def check_p(cls, value):
        return _check_probability(value)

    @model_validator(mode="after")
    def dimension_range(self):
        if self.kappa < 1:
            raise ConfigError("kappa", "complex dimension must be at least 1")
        if self.kappa + 1 > self.n:
            raise ConfigError("kappa", f"a {self.kappa}-face needs {self.kappa + 1} of the {self.n} vertices")
        return self


class HypercubeConfig(BaseModel):
    kind: Literal["hypercube"] = "hypercube"
    n: int
    p: float
    d: int = 0

    model_config = ConfigDict(frozen=True)

    @field_validator("p")
    @classmethod
    def check_p(cls, value):
        return _check_probability(value)

    @model_validator(mode="after")
    def degree_range(self):
        if self.n < 1:
            raise ConfigError("n", "hypercube dimension must be at least 1")
        if not 0 <= self.d <= self.n:
            raise ConfigError("d", f"degree {self.d} outside 0..{self.n}")
        return self


ModelInstance = Annotated[
    Union[TwoRunsConfig, SubgraphConfig, DegreeCountConfig, ComplexConfig, HypercubeConfig],
    Field(discriminator="kind"),
]


class GradientBounds(BaseModel):
    """
    Pointwise bounds |D_k F| <= first and |D_l D_k F| <= second * adjacency[k, l]
    for a standardized model functional.
    """
    first: float
    second: float
    adjacency: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)
