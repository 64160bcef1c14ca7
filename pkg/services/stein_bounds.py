# Normal approximation bounds for functionals of finitely many Rademacher coordinates.

import logging
import math
from typing import Optional

import numpy as np
from scipy import special

from config import get_settings
from models.bounds import (
    BoundTerms,
    ConsistencyReport,
    FourthMomentReport,
    KolmogorovR0Result,
    SecondOrderVariant,
)
from models.functional import Functional
from services.malliavin import RademacherCalculus, difference, normalize_kernel
from services.normal import NormalDistribution
from utils.errors import NotPureChaos, NotStandardized

logger = logging.getLogger(__name__)

SQRT_2PI = math.sqrt(2.0 * math.pi)
TAIL = 10.0


def _check_standardized(F: Functional) -> None:
    tol = get_settings().STANDARDIZATION_TOL
    mean = RademacherCalculus.expectation(F)
    var = RademacherCalculus.variance(F)
    if abs(mean) > tol or abs(var - 1.0) > tol:
        raise NotStandardized(f"expected mean 0 and variance 1, got mean={mean:.3e} var={var:.12f}")


def _mean(F: Functional, table: np.ndarray) -> np.ndarray:
    return table @ F.space.weights


class SteinBounds:
    @staticmethod
    def bound_terms(F: Functional) -> BoundTerms:
        """
        B1..B5, kappa and A3 by exact enumeration. The triple sums run one l at a
        time: for fixed l the (j, k) expectations form a weighted Gram matrix.
        """
        space = F.space
        m, w, pq = space.m, space.weights, space.pq
        if m > get_settings().SOFT_TERMS_LIMIT:
            logger.warning("bound_terms on %d coordinates costs O(m^3 2^m); expect a long run", m)

        grads = RademacherCalculus.gradient_table(F)
        sq = grads ** 2
        first = (sq * w) @ sq.T
        fourth = np.diag(first).copy()

        b1 = b2 = b4 = b5 = 0.0
        for l in range(m):
            second = difference(grads, l, math.sqrt(pq[l]))
            sq2 = second ** 2
            cross = (sq2 * w) @ sq2.T
            b1 += float(np.sum(np.sqrt(np.clip(first, 0.0, None)) * np.sqrt(np.clip(cross, 0.0, None))))
            b2 += float(cross.sum()) / pq[l]
            fourth_l = np.diag(cross)
            b4 += float(np.sum(np.sqrt(fourth) * np.sqrt(fourth_l) / pq))
            b5 += float(np.sum(fourth_l / pq)) / pq[l]

        b3 = float(np.sum(fourth / pq))
        a3 = float(np.sum(_mean(F, np.abs(grads) ** 3) / np.sqrt(pq)))
        return BoundTerms(b1=b1, b2=b2, b3=b3, b4=b4, b5=b5, kappa=float(pq.sum()), a3=a3)

    @staticmethod
    def second_order_kolmogorov(t: BoundTerms, variant: SecondOrderVariant) -> float:
        head = math.sqrt(15) / 2 * math.sqrt(t.b1) + math.sqrt(3) / 2 * math.sqrt(t.b2)
        if SecondOrderVariant(variant) is SecondOrderVariant.R1:
            return (
                head
                + 2 * math.sqrt(t.b3)
                + 2 * math.sqrt(6) * math.sqrt(t.b4)
                + 2 * math.sqrt(3) * math.sqrt(t.b5)
            )
        return head + 4 * math.sqrt(t.kappa) * math.sqrt(t.b3)

    @staticmethod
    def second_order_wasserstein(t: BoundTerms) -> float:
        return (
            math.sqrt(15 / (2 * math.pi)) * math.sqrt(t.b1)
            + math.sqrt(3 / (2 * math.pi)) * math.sqrt(t.b2)
            + t.a3
        )

    @staticmethod
    def inner_gap(F: Functional) -> float:
        """E|1 - <DF, -DL^{-1}F>|"""
        inner = RademacherCalculus.malliavin_inner(F)
        return float(np.dot(F.space.weights, np.abs(1.0 - inner.values)))

    @staticmethod
    def kol_r2(F: Functional) -> float:
        _check_standardized(F)
        pq = F.space.pq
        fourth = _mean(F, RademacherCalculus.gradient_table(F) ** 4)
        b3 = float(np.sum(fourth / pq))
        return SteinBounds.inner_gap(F) + 4 * math.sqrt(pq.sum()) * math.sqrt(b3)

    @staticmethod
    def divergence_weights(F: Functional) -> np.ndarray:
        """Rows u_k = (p_k q_k)^{-1/2} D_kF |D_k L^{-1} F|"""
        pq = F.space.pq
        grads = RademacherCalculus.gradient_table(F)
        inv_grads = RademacherCalculus.gradient_table(RademacherCalculus.apply_L_inv(F))
        return grads / np.sqrt(pq)[:, None] * np.abs(inv_grads)

    @staticmethod
    def divergence_term(F: Functional) -> float:
        """E|delta(u)| for the u of divergence_weights"""
        u = [F.like(row) for row in SteinBounds.divergence_weights(F)]
        delta = RademacherCalculus.divergence(u)
        return float(np.dot(F.space.weights, np.abs(delta.values)))

    @staticmethod
    def kol_r1(F: Functional) -> float:
        _check_standardized(F)
        return SteinBounds.inner_gap(F) + 2 * SteinBounds.divergence_term(F)

    @staticmethod
    def stein_solution(z, x):
        """
        Bounded solution f_z of f'(x) - x f(x) = 1{x <= z} - Phi(z).
        e^{x^2/2} Phi(x) = erfcx(-x/sqrt2)/2, so no exponential is formed directly.
        """
        z = np.asarray(z, dtype=np.float64)
        x = np.asarray(x, dtype=np.float64)
        phi_z = special.ndtr(z)
        left = SQRT_2PI * 0.5 * special.erfcx(-x / math.sqrt(2.0)) * (1.0 - phi_z)
        right = SQRT_2PI * 0.5 * special.erfcx(x / math.sqrt(2.0)) * phi_z
        out = np.where(x <= z, left, right)
        return out if out.ndim else float(out)

    @staticmethod
    def z_grid(atoms: np.ndarray, refine: int) -> np.ndarray:
        """Atoms, `refine` interior points per gap between consecutive atoms, and tails at +-10"""
        pieces = [atoms, np.array([-TAIL, TAIL])]
        for a, b in zip(atoms[:-1], atoms[1:]):
            pieces.append(np.linspace(a, b, refine + 2)[1:-1])
        return np.unique(np.concatenate(pieces))

    @staticmethod
    def sup_term(F: Functional, z: float, weights: Optional[np.ndarray] = None) -> float:
        """E[sum_k D_k(F f_z(F) + 1{F>z}) (D_kF / sqrt(p_k q_k)) |D_k L^{-1} F|]"""
        space = F.space
        if weights is None:
            weights = SteinBounds.divergence_weights(F)
        h = F.values * SteinBounds.stein_solution(z, F.values) + (F.values > z)
        total = 0.0
        for k in range(space.m):
            dh = difference(h, k, math.sqrt(space.pq[k]))
            total += float(np.dot(space.weights, dh * weights[k]))
        return total

    @staticmethod
    def kol_r0(F: Functional, refine: Optional[int] = None) -> KolmogorovR0Result:
        _check_standardized(F)
        refine = get_settings().DEFAULT_REFINE if refine is None else int(refine)
        if refine < 1:
            raise ValueError("refine must be at least 1")
        atoms, _ = RademacherCalculus.law(F)
        grid = SteinBounds.z_grid(atoms, refine)
        weights = SteinBounds.divergence_weights(F)
        values = np.array([SteinBounds.sup_term(F, z, weights) for z in grid])
        best = int(np.argmax(values))
        first = SteinBounds.inner_gap(F)
        logger.debug("kol_r0 grid of %d points, sup at z=%.6f", grid.shape[0], grid[best])
        return KolmogorovR0Result(
            value=first + float(values[best]),
            first_term=first,
            sup_term=float(values[best]),
            argmax_z=float(grid[best]),
            grid_size=int(grid.shape[0]),
            refine=refine,
        )

    @staticmethod
    def gamma0_first_term(F: Functional) -> float:
        """E|1 - Gamma0(F, -L^{-1}F)|"""
        _check_standardized(F)
        g = RademacherCalculus.gamma0(F, -RademacherCalculus.apply_L_inv(F))
        return float(np.dot(F.space.weights, np.abs(1.0 - g.values)))

    @staticmethod
    def gamma_m(m: int) -> int:
        return 2 * math.factorial(2 * m - 1) * sum(
            math.factorial(r) * math.comb(m, r) ** 2 for r in range(1, m + 1)
        )

    @staticmethod
    def maximal_influence(kernel: np.ndarray) -> float:
        """sup_k of the sum of f^2(k, i_2, ..., i_m) over increasing i_2 < ... < i_m"""
        f = normalize_kernel(kernel)
        if f.ndim == 0:
            return 0.0
        order = f.ndim
        mass = (f ** 2).reshape(f.shape[0], -1).sum(axis=1) / math.factorial(order - 1)
        return float(mass.max()) if mass.size else 0.0

    @staticmethod
    def fourth_moment_bound(F: Functional, m: int, kernel: Optional[np.ndarray] = None) -> FourthMomentReport:
        """Fourth-moment / maximal-influence bound for F = J_m(f) with E[F^2] = 1"""
        C = RademacherCalculus.to_chaos(F)
        mass = C.level_mass()
        outside = float(mass.sum() - mass[m]) if m < mass.shape[0] else float(mass.sum())
        if outside > 1e-8:
            raise NotPureChaos(f"chaos mass {outside:.3e} outside level {m}")
        second = RademacherCalculus.expectation(F, 2)
        if abs(second - 1.0) > get_settings().STANDARDIZATION_TOL:
            raise NotStandardized(f"E[F^2] = {second:.12f}, expected 1")
        if kernel is None:
            kernel = RademacherCalculus.kernel(C, m)
        fourth = RademacherCalculus.expectation(F, 4)
        influence = SteinBounds.maximal_influence(kernel)
        gamma = SteinBounds.gamma_m(m)
        c1 = (2 * m - 1 + 4 * math.sqrt((8 * m * m - 7) * (4 * m - 3))) / (2 * m)
        c2 = (2 * m - 1 + 4 * math.sqrt((8 * m * m - 7) * (6 * m - 3) * gamma)) / (2 * m)
        bound = c1 * math.sqrt(abs(fourth - 3.0)) + c2 * math.sqrt(influence)
        return FourthMomentReport(
            m=m, fourth_moment=fourth, max_influence=influence, gamma_m=float(gamma), bound=bound
        )

    @staticmethod
    def wasserstein_exact(F: Functional) -> float:
        atoms, masses = RademacherCalculus.law(F)
        return NormalDistribution.wasserstein_to_atoms(atoms, masses)

    @staticmethod
    def bound_consistency(F: Functional, terms: Optional[BoundTerms] = None) -> ConsistencyReport:
        """The two inequalities through which the second-order bounds follow from the exact ones"""
        if terms is None:
            terms = SteinBounds.bound_terms(F)
        return ConsistencyReport(
            inner_gap=SteinBounds.inner_gap(F),
            inner_bound=math.sqrt(15) / 2 * math.sqrt(terms.b1) + math.sqrt(3) / 2 * math.sqrt(terms.b2),
            divergence_term=2 * SteinBounds.divergence_term(F),
            divergence_bound=2 * (
                2 * math.sqrt(terms.b3) + 2 * math.sqrt(6) * math.sqrt(terms.b4) + 2 * math.sqrt(3) * math.sqrt(terms.b5)
            ),
        )
