from typing import Dict, Iterable, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from models.space import BiasedSpace
from utils.combinatorics import mask_of
from utils.errors import DimensionMismatch, SpaceMismatch


def _frozen_table(value) -> np.ndarray:
    table = np.array(value, dtype=np.float64, copy=True).reshape(-1)
    table.setflags(write=False)
    return table


class Functional(BaseModel):
    """A real function of the m coordinates, stored as a dense table over the 2^m state masks"""
    space: BiasedSpace
    values: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("values", mode="before")
    @classmethod
    def freeze(cls, value):
        table = _frozen_table(value)
        if not np.all(np.isfinite(table)):
            raise DimensionMismatch("functional values must be finite")
        return table

    @model_validator(mode="after")
    def check_length(self):
        if self.values.shape[0] != self.space.size:
            raise DimensionMismatch(
                f"table has {self.values.shape[0]} entries, space needs {self.space.size}"
            )
        return self

    @classmethod
    def constant(cls, space: BiasedSpace, c: float) -> "Functional":
        return cls(space=space, values=np.full(space.size, float(c)))

    @classmethod
    def coordinate_x(cls, space: BiasedSpace, k: int) -> "Functional":
        space.check_index(k)
        bit = (np.arange(space.size) >> k) & 1
        return cls(space=space, values=2.0 * bit - 1.0)

    @classmethod
    def coordinate_y(cls, space: BiasedSpace, k: int) -> "Functional":
        y_minus, y_plus = space.y_values(k)
        bit = (np.arange(space.size) >> k) & 1
        return cls(space=space, values=np.where(bit == 1, y_plus, y_minus))

    @classmethod
    def monomial(cls, space: BiasedSpace, subset: Iterable[int]) -> "Functional":
        """Y_A = prod_{k in A} Y_k"""
        values = np.ones(space.size)
        for k in subset:
            values = values * cls.coordinate_y(space, k).values
        return cls(space=space, values=values)

    def like(self, values) -> "Functional":
        return Functional(space=self.space, values=values)

    def _other(self, other) -> Union[np.ndarray, float]:
        if isinstance(other, Functional):
            if not self.space.same_as(other.space):
                raise SpaceMismatch("functionals live on different spaces")
            return other.values
        return float(other)

    def __add__(self, other):
        return self.like(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.like(self.values - self._other(other))

    def __rsub__(self, other):
        return self.like(self._other(other) - self.values)

    def __mul__(self, other):
        return self.like(self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.like(self.values / self._other(other))

    def __neg__(self):
        return self.like(-self.values)

    def __abs__(self):
        return self.like(np.abs(self.values))

    def __pow__(self, r):
        return self.like(self.values ** r)


class ChaosExpansion(BaseModel):
    """
    Coefficients c_A of F = sum_A c_A Y_A, indexed by subset mask A.
    The symmetric kernel of order p is f_p(i_1..i_p) = c_{i_1..i_p} / p! off the diagonals.
    """
    space: BiasedSpace
    coeffs: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("coeffs", mode="before")
    @classmethod
    def freeze(cls, value):
        return _frozen_table(value)

    @model_validator(mode="after")
    def check_length(self):
        if self.coeffs.shape[0] != self.space.size:
            raise DimensionMismatch(
                f"expansion has {self.coeffs.shape[0]} coefficients, space needs {self.space.size}"
            )
        return self

    @classmethod
    def from_mapping(cls, space: BiasedSpace, coeffs: Dict[frozenset, float]) -> "ChaosExpansion":
        table = np.zeros(space.size)
        for subset, c in coeffs.items():
            for k in subset:
                space.check_index(k)
            table[mask_of(subset)] += float(c)
        return cls(space=space, coeffs=table)

    def coefficient(self, subset: Iterable[int]) -> float:
        return float(self.coeffs[mask_of(subset)])

    @property
    def mean(self) -> float:
        return float(self.coeffs[0])

    def variance(self) -> float:
        return float(np.dot(self.coeffs[1:], self.coeffs[1:]))

    def level_mass(self) -> np.ndarray:
        """Sum of c_A^2 per chaos level |A| = 0..m"""
        return np.bincount(self.space.levels, weights=self.coeffs ** 2, minlength=self.space.m + 1)
