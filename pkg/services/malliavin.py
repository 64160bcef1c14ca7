# Exact discrete Malliavin calculus on dense truth tables.

import itertools
import math
import logging
from typing import Mapping, Sequence, Tuple, Union

import numpy as np

from config import get_settings
from models.functional import ChaosExpansion, Functional
from models.space import BiasedSpace
from services.normal import NormalDistribution
from utils.errors import (
    DimensionMismatch,
    IndexOutOfRange,
    NegativeTime,
    OrderExceedsDimension,
    SpaceMismatch,
    ZeroVariance,
)

logger = logging.getLogger(__name__)

Kernel = Union[np.ndarray, Mapping[Tuple[int, ...], float]]


def _pairs(table: np.ndarray, k: int) -> np.ndarray:
    """View of the last axis with bit k split out: (..., hi, 2, 2^k)"""
    return table.reshape(table.shape[:-1] + (-1, 2, 1 << k))


def difference(table: np.ndarray, k: int, scale: float) -> np.ndarray:
    """scale * (table with bit k on - table with bit k off), constant in bit k; works row-wise"""
    view = _pairs(table, k)
    diff = (view[..., 1, :] - view[..., 0, :]) * scale
    out = np.repeat(diff[..., None, :], 2, axis=-2)
    return out.reshape(table.shape)


def normalize_kernel(kernel: np.ndarray) -> np.ndarray:
    """Canonical symmetrization restricted to distinct indices"""
    f = np.asarray(kernel, dtype=np.float64)
    order = f.ndim
    if order == 0:
        return f.copy()
    if len(set(f.shape)) != 1:
        raise DimensionMismatch(f"kernel shape {f.shape} is not cubic")
    sym = np.zeros_like(f)
    perms = list(itertools.permutations(range(order)))
    for perm in perms:
        sym += np.transpose(f, perm)
    sym /= len(perms)
    if order > 1:
        idx = np.indices(f.shape)
        distinct = np.ones(f.shape, dtype=bool)
        for a in range(order):
            for b in range(a + 1, order):
                distinct &= idx[a] != idx[b]
        sym[~distinct] = 0.0
    return sym


class RademacherCalculus:
    @staticmethod
    def expectation(F: Functional, r: int = 1) -> float:
        return float(np.dot(F.space.weights, F.values ** r))

    @staticmethod
    def variance(F: Functional) -> float:
        centred = F.values - RademacherCalculus.expectation(F)
        var = float(np.dot(F.space.weights, centred * centred))
        return max(var, 0.0)

    @staticmethod
    def norm(F: Functional, q: float = 2.0) -> float:
        """L^q norm; q = inf gives the sup over states"""
        if np.isinf(q):
            return float(np.max(np.abs(F.values)))
        return float(np.dot(F.space.weights, np.abs(F.values) ** q) ** (1.0 / q))

    @staticmethod
    def standardize(F: Functional) -> Functional:
        """(F - E F) / sqrt(Var F)"""
        var = RademacherCalculus.variance(F)
        if var <= 1e-300:
            raise ZeroVariance("cannot standardize a functional with zero variance")
        return F.like((F.values - RademacherCalculus.expectation(F)) / np.sqrt(var))

    @staticmethod
    def gradient(F: Functional, k: int) -> Functional:
        """D_k F = sqrt(p_k q_k) (F_k^+ - F_k^-)"""
        F.space.check_index(k)
        return F.like(difference(F.values, k, np.sqrt(F.space.pq[k])))

    @staticmethod
    def gradient_table(F: Functional) -> np.ndarray:
        """(m, 2^m) array whose row k is D_k F"""
        space = F.space
        return np.stack([difference(F.values, k, np.sqrt(space.pq[k])) for k in range(space.m)])

    @staticmethod
    def iterated_gradient(F: Functional, k: int, l: int) -> Functional:
        return RademacherCalculus.gradient(RademacherCalculus.gradient(F, k), l)

    @staticmethod
    def influence(F: Functional, k: int) -> float:
        g = RademacherCalculus.gradient(F, k)
        return RademacherCalculus.expectation(g, 2)

    @staticmethod
    def dirichlet_energy(F: Functional) -> float:
        """E[sum_k (D_k F)^2], the right-hand side of the Poincare inequality"""
        grads = RademacherCalculus.gradient_table(F)
        return float(np.dot(grads ** 2, F.space.weights).sum())

    @staticmethod
    def to_chaos(F: Functional) -> ChaosExpansion:
        """
        Biased Walsh butterfly, O(m 2^m): along each coordinate the pair
        (f(-), f(+)) becomes (E over X_k, E[f Y_k]).
        """
        space = F.space
        c = np.array(F.values, dtype=np.float64, copy=True)
        for k in range(space.m):
            view = _pairs(c, k)
            p, q = space.probs[k], 1.0 - space.probs[k]
            lo = view[:, 0, :].copy()
            hi = view[:, 1, :].copy()
            view[:, 0, :] = q * lo + p * hi
            view[:, 1, :] = np.sqrt(p * q) * (hi - lo)
        return ChaosExpansion(space=space, coeffs=c)

    @staticmethod
    def from_chaos(C: ChaosExpansion) -> Functional:
        space = C.space
        v = np.array(C.coeffs, dtype=np.float64, copy=True)
        for k in range(space.m):
            view = _pairs(v, k)
            y_minus, y_plus = space.y_values(k)
            a = view[:, 0, :].copy()
            b = view[:, 1, :].copy()
            view[:, 0, :] = a + y_minus * b
            view[:, 1, :] = a + y_plus * b
        return Functional(space=space, values=v)

    @staticmethod
    def kernel(C: ChaosExpansion, p: int) -> np.ndarray:
        """Dense symmetric diagonal-free kernel f_p with f_p(i_1..i_p) = c_A / p!"""
        m = C.space.m
        if p > m:
            raise OrderExceedsDimension(f"order {p} exceeds {m} coordinates")
        f = np.zeros((m,) * p)
        scale = 1.0 / math.factorial(p) if p > 0 else 1.0
        for subset in itertools.combinations(range(m), p):
            c = C.coeffs[sum(1 << i for i in subset)]
            if c == 0.0:
                continue
            for perm in itertools.permutations(subset):
                f[perm] = c * scale
        return f

    @staticmethod
    def multiple_integral(space: BiasedSpace, p: int, kernel: Kernel) -> Functional:
        """
        J_p(f) = sum over distinct tuples of f(i_1..i_p) Y_{i_1}...Y_{i_p}.
        The kernel may be a dense (m,)*p array or a mapping from index tuples;
        entries on diagonals are ignored and c_A collects all orderings of A.
        """
        m = space.m
        if p > m:
            raise OrderExceedsDimension(f"order {p} exceeds {m} coordinates")
        if p < 1:
            raise OrderExceedsDimension("chaos order must be at least 1")
        if isinstance(kernel, Mapping):
            entries = kernel.items()
        else:
            f = np.asarray(kernel, dtype=np.float64)
            if f.shape != (m,) * p:
                raise DimensionMismatch(f"kernel shape {f.shape} does not match order {p} on {m} coordinates")
            entries = ((idx, f[idx]) for idx in zip(*np.nonzero(f)))
        coeffs = np.zeros(space.size)
        for idx, value in entries:
            idx = tuple(int(i) for i in idx)
            if len(idx) != p:
                raise DimensionMismatch(f"index {idx} has the wrong order")
            for i in idx:
                space.check_index(i)
            if len(set(idx)) < p:
                continue
            coeffs[sum(1 << i for i in idx)] += float(value)
        return RademacherCalculus.from_chaos(ChaosExpansion(space=space, coeffs=coeffs))

    @staticmethod
    def _scale_levels(F: Functional, factors: np.ndarray) -> Functional:
        C = RademacherCalculus.to_chaos(F)
        return RademacherCalculus.from_chaos(
            ChaosExpansion(space=F.space, coeffs=C.coeffs * factors[F.space.levels])
        )

    @staticmethod
    def apply_L(F: Functional) -> Functional:
        n = np.arange(F.space.m + 1, dtype=np.float64)
        return RademacherCalculus._scale_levels(F, -n)

    @staticmethod
    def apply_L_inv(F: Functional) -> Functional:
        n = np.arange(F.space.m + 1, dtype=np.float64)
        factors = np.zeros_like(n)
        factors[1:] = -1.0 / n[1:]
        return RademacherCalculus._scale_levels(F, factors)

    @staticmethod
    def apply_semigroup(F: Functional, t: float) -> Functional:
        if t < 0:
            raise NegativeTime(f"semigroup time {t} is negative")
        n = np.arange(F.space.m + 1, dtype=np.float64)
        return RademacherCalculus._scale_levels(F, np.exp(-n * t))

    @staticmethod
    def divergence(u: Sequence[Functional]) -> Functional:
        """delta(u): coefficient at B is sum_{k in B} of u_k's coefficient at B minus k"""
        if not u:
            raise DimensionMismatch("divergence needs one component per coordinate")
        space = u[0].space
        if len(u) != space.m:
            raise DimensionMismatch(f"expected {space.m} components, got {len(u)}")
        out = np.zeros(space.size)
        for k, u_k in enumerate(u):
            if not u_k.space.same_as(space):
                raise SpaceMismatch(f"component {k} lives on a different space")
            g = RademacherCalculus.to_chaos(u_k).coeffs
            out_view = _pairs(out, k)
            out_view[:, 1, :] += _pairs(g, k)[:, 0, :]
        return RademacherCalculus.from_chaos(ChaosExpansion(space=space, coeffs=out))

    @staticmethod
    def gamma0(F: Functional, G: Functional) -> Functional:
        if not F.space.same_as(G.space):
            raise SpaceMismatch("gamma0 needs functionals on the same space")
        space = F.space
        total = np.zeros(space.size)
        for k in range(space.m):
            y2 = RademacherCalculus._y_squared(space, k)
            total += (
                RademacherCalculus.gradient(F, k).values
                * RademacherCalculus.gradient(G, k).values
                * (1.0 + y2)
            )
        return F.like(0.5 * total)

    @staticmethod
    def _y_squared(space: BiasedSpace, k: int) -> np.ndarray:
        return Functional.coordinate_y(space, k).values ** 2

    @staticmethod
    def malliavin_inner(F: Functional) -> Functional:
        """<DF, -DL^{-1}F> evaluated state by state"""
        grads = RademacherCalculus.gradient_table(F)
        inv_grads = RademacherCalculus.gradient_table(-RademacherCalculus.apply_L_inv(F))
        return F.like(np.sum(grads * inv_grads, axis=0))

    @staticmethod
    def chaos_levels(F: Functional) -> np.ndarray:
        return RademacherCalculus.to_chaos(F).level_mass()

    @staticmethod
    def law(F: Functional) -> Tuple[np.ndarray, np.ndarray]:
        """Atoms (sorted) and their masses; values within IDENTITY_RTOL are one atom"""
        atoms, inverse = np.unique(F.values, return_inverse=True)
        masses = np.bincount(inverse.reshape(-1), weights=F.space.weights, minlength=atoms.shape[0])
        if atoms.shape[0] > 1:
            tol = get_settings().IDENTITY_RTOL
            starts = np.concatenate([[True], np.diff(atoms) > tol * np.maximum(1.0, np.abs(atoms[1:]))])
            masses = np.bincount(np.cumsum(starts) - 1, weights=masses)
            atoms = atoms[starts]
        return atoms, masses

    @staticmethod
    def kolmogorov_exact(F: Functional) -> float:
        atoms, masses = RademacherCalculus.law(F)
        return NormalDistribution.kolmogorov_to_atoms(atoms, masses)
