from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class SecondOrderVariant(str, Enum):
    R1 = "R1"
    R2 = "R2"


class BoundTerms(BaseModel):
    """Second-order Poincare quantities B1..B5, kappa = sum p_k q_k and A3"""
    b1: float = Field(ge=0)
    b2: float = Field(ge=0)
    b3: float = Field(ge=0)
    b4: float = Field(ge=0)
    b5: float = Field(ge=0)
    kappa: float = Field(ge=0)
    a3: float = Field(ge=0)

    model_config = ConfigDict(frozen=True)


class FourthMomentReport(BaseModel):
    m: int
    fourth_moment: float
    max_influence: float = Field(ge=0)
    gamma_m: float
    bound: float


class KolmogorovR0Result(BaseModel):
    """kol_r0 evaluated on a finite z-grid; approximate by construction"""
    value: float
    first_term: float
    sup_term: float
    argmax_z: float
    grid_size: int
    refine: int
    approximate: bool = True


class ConsistencyReport(BaseModel):
    """Both sides of the two inequalities linking the exact terms to B1..B5"""
    inner_gap: float
    inner_bound: float
    divergence_term: float
    divergence_bound: float

    @property
    def holds(self) -> bool:
        return self.inner_gap <= self.inner_bound + 1e-9 and self.divergence_term <= self.divergence_bound + 1e-9
