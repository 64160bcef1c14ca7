from functools import cached_property
from typing import Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from config import HARD_CAP, get_settings
from utils.combinatorics import subset_sizes
from utils.errors import BadProbability, CapExceeded, IndexOutOfRange


class BiasedSpace(BaseModel):
    """
    Product measure on {-1,+1}^m with P(X_k = +1) = p_k.
    States are m-bit masks: bit k set means X_k = +1.
    """
    probs: Tuple[float, ...]

    model_config = ConfigDict(frozen=True)

    @field_validator("probs", mode="before")
    @classmethod
    def check_probs(cls, value):
        probs = tuple(float(p) for p in value)
        if not probs:
            raise CapExceeded("a space needs at least one coordinate")
        cap = min(HARD_CAP, get_settings().CAP)
        if len(probs) > cap:
            raise CapExceeded(f"{len(probs)} coordinates exceed the cap", hint=f"max m={cap}")
        for k, p in enumerate(probs):
            if not (0.0 < p < 1.0) or not np.isfinite(p):
                raise BadProbability(f"p_{k} = {p} is not in (0,1)")
        return probs

    @property
    def m(self) -> int:
        return len(self.probs)

    @property
    def size(self) -> int:
        return 1 << self.m

    @cached_property
    def p(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=np.float64)

    @cached_property
    def q(self) -> np.ndarray:
        return 1.0 - self.p

    @cached_property
    def pq(self) -> np.ndarray:
        return self.p * self.q

    @cached_property
    def weights(self) -> np.ndarray:
        """pi(x) for every state mask x"""
        w = np.ones(1, dtype=np.float64)
        for p_k in self.probs:
            # coordinate k becomes the highest bit so far
            w = np.concatenate([w * (1.0 - p_k), w * p_k])
        w.setflags(write=False)
        return w

    @cached_property
    def levels(self) -> np.ndarray:
        return subset_sizes(self.m)

    def y_values(self, k: int) -> Tuple[float, float]:
        """(Y_k on X_k=-1, Y_k on X_k=+1)"""
        self.check_index(k)
        p, q = self.probs[k], 1.0 - self.probs[k]
        return -np.sqrt(p / q), np.sqrt(q / p)

    def check_index(self, k: int) -> int:
        if not 0 <= k < self.m:
            raise IndexOutOfRange(f"coordinate {k} outside 0..{self.m - 1}")
        return k

    def state(self, signs: Sequence[int]) -> int:
        """StateMask for a sequence of +1/-1 values"""
        if len(signs) != self.m:
            raise IndexOutOfRange(f"expected {self.m} signs, got {len(signs)}")
        return sum(1 << k for k, s in enumerate(signs) if s > 0)

    def same_as(self, other: "BiasedSpace") -> bool:
        return self is other or self.probs == other.probs


def make_space(probs: Sequence[float]) -> BiasedSpace:
    return BiasedSpace(probs=tuple(probs))


def symmetric_space(m: int, p: float = 0.5) -> BiasedSpace:
    return BiasedSpace(probs=(p,) * m)
