# The five application statistics: exact functionals at desk scale, closed-form
# moments for any size, rate predictions and pointwise gradient bounds.

import itertools
import logging
import math
from collections import Counter
from functools import lru_cache
from typing import Optional, Tuple

import networkx as nx
import numpy as np
from networkx.algorithms import isomorphism

from config import HARD_CAP, get_settings
from models.applications import (
    ComplexConfig,
    DegreeCountConfig,
    DegreeRegime,
    GradientBounds,
    HypercubeConfig,
    SubgraphConfig,
    SubgraphPattern,
    TwoRunsConfig,
)
from models.functional import Functional
from models.space import symmetric_space
from services.malliavin import RademacherCalculus, difference
from utils.combinatorics import (
    complete_graph_edges,
    coface_table,
    falling_factorial,
    hypercube_edges,
    simplex_faces,
)
from utils.errors import (
    BadEpsilon,
    CapExceeded,
    DimensionMismatch,
    NotStandardized,
    RegimeUnspecified,
    ZeroVariance,
)

logger = logging.getLogger(__name__)


def _cap() -> int:
    return min(HARD_CAP, get_settings().CAP)


def _bit(m: int, k: int) -> np.ndarray:
    return (np.arange(1 << m, dtype=np.int64) >> k) & 1


def _largest_n(coordinates, start: int) -> int:
    """Largest n >= start whose coordinate count fits the cap"""
    cap = _cap()
    n = start
    while coordinates(n + 1) <= cap:
        n += 1
    return n


def _count_degree(m: int, incident, d: int) -> np.ndarray:
    """Number of vertices with exactly d present incident coordinates, per state"""
    index = np.arange(1 << m, dtype=np.int64)
    count = np.zeros(1 << m, dtype=np.int64)
    for edges in incident:
        degree = np.zeros(1 << m, dtype=np.int64)
        for k in edges:
            degree += (index >> k) & 1
        count += degree == d
    return count


def _incident_lists(edges, vertex_count: int):
    incident = [[] for _ in range(vertex_count)]
    for k, (u, v) in enumerate(edges):
        incident[u].append(k)
        incident[v].append(k)
    return incident


def _edges_share_vertex(edges) -> np.ndarray:
    m = len(edges)
    adjacency = np.zeros((m, m), dtype=bool)
    for k, l in itertools.combinations(range(m), 2):
        if len(set(edges[k]) & set(edges[l])) == 1:
            adjacency[k, l] = adjacency[l, k] = True
    return adjacency


def contract11(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(a *_1^1 b)(i_2.., j_2..) = sum_i a(i, i_2..) b(i, j_2..); a scalar for two vectors"""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim < 1 or b.ndim < 1:
        raise DimensionMismatch("contraction needs kernels of order at least 1")
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"contracted axes differ: {a.shape[0]} vs {b.shape[0]}")
    out = np.tensordot(a, b, axes=([0], [0]))
    return out if out.ndim else float(out)


def j1j2_bound(f: np.ndarray, g: np.ndarray, constant: Optional[float] = None) -> float:
    """Kolmogorov bound for F = J_1(f) + J_2(g) with ||f||^2 + 2||g||^2 = 1"""
    if constant is None:
        constant = get_settings().J1J2_CONSTANT
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if g.shape != (f.shape[0], f.shape[0]):
        raise DimensionMismatch(f"kernel shapes {f.shape} and {g.shape} do not match")
    norm = float(np.sum(f ** 2) + 2.0 * np.sum(g ** 2))
    if abs(norm - 1.0) > 1e-8:
        raise NotStandardized(f"||f||^2 + 2||g||^2 = {norm:.12f}, expected 1")

    gg = np.array(contract11(g, g), copy=True)
    np.fill_diagonal(gg, 0.0)
    fg = np.asarray(contract11(f, g))
    row_mass = np.sum(g ** 2, axis=0)
    terms = (
        math.sqrt(float(np.sum(gg ** 2)))
        + float(np.sum(fg ** 2))
        + math.sqrt(float(np.sum(f ** 4)))
        + math.sqrt(float(np.sum(g ** 4)))
        + math.sqrt(float(np.sum((1.0 + f ** 2) * row_mass ** 2)))
    )
    return constant * terms


class TwoRunsModel:
    @staticmethod
    def variance(cfg: TwoRunsConfig) -> float:
        a = np.asarray(cfg.alpha, dtype=np.float64)
        return float(3.0 / 16.0 * np.sum(a ** 2) + 1.0 / 8.0 * np.sum(a[:-1] * a[1:]))

    @staticmethod
    def moments(cfg: TwoRunsConfig) -> Tuple[float, float]:
        return float(np.sum(cfg.alpha)) / 4.0, TwoRunsModel.variance(cfg)

    @staticmethod
    def kernels(cfg: TwoRunsConfig) -> Tuple[np.ndarray, np.ndarray]:
        """
        With xi = (1 + Y)/2 the centred statistic is
        1/4 sum_i alpha_i (Y_i + Y_{i+1}) + 1/4 sum_i alpha_i Y_i Y_{i+1}.
        """
        var = TwoRunsModel.variance(cfg)
        if var <= 0.0:
            raise ZeroVariance("all 2-run weights are zero")
        sigma = math.sqrt(var)
        a = np.asarray(cfg.alpha, dtype=np.float64)
        m = a.shape[0] + 1
        f = np.zeros(m)
        f[:-1] += a
        f[1:] += a
        f /= 4.0 * sigma
        g = np.zeros((m, m))
        idx = np.arange(m - 1)
        g[idx, idx + 1] = a / (8.0 * sigma)
        g[idx + 1, idx] = a / (8.0 * sigma)
        return f, g

    @staticmethod
    def raw_table(cfg: TwoRunsConfig) -> np.ndarray:
        m = len(cfg.alpha) + 1
        G = np.zeros(1 << m)
        for i, a in enumerate(cfg.alpha):
            G += a * (_bit(m, i) * _bit(m, i + 1))
        return G

    @staticmethod
    def coordinates(cfg: TwoRunsConfig) -> int:
        return len(cfg.alpha) + 1

    @staticmethod
    def functional(cfg: TwoRunsConfig) -> Functional:
        m = TwoRunsModel.coordinates(cfg)
        if m > _cap():
            raise CapExceeded(f"{len(cfg.alpha)} weights need {m} coordinates", hint=f"max |alpha|={_cap() - 1} for exact mode")
        f, g = TwoRunsModel.kernels(cfg)
        space = symmetric_space(m)
        return RademacherCalculus.multiple_integral(space, 1, f) + RademacherCalculus.multiple_integral(space, 2, g)

    @staticmethod
    def rate_bound(cfg: TwoRunsConfig) -> float:
        var = TwoRunsModel.variance(cfg)
        if var <= 0.0:
            raise ZeroVariance("all 2-run weights are zero")
        return math.sqrt(float(np.sum(np.asarray(cfg.alpha) ** 4))) / var

    @staticmethod
    def gradient_bounds(cfg: TwoRunsConfig) -> GradientBounds:
        sigma = math.sqrt(TwoRunsModel.variance(cfg))
        a = np.abs(np.asarray(cfg.alpha, dtype=np.float64))
        m = a.shape[0] + 1
        neighbours = np.zeros(m)
        neighbours[:-1] += a
        neighbours[1:] += a
        adjacency = np.abs(np.subtract.outer(np.arange(m), np.arange(m))) == 1
        return GradientBounds(
            first=0.5 * float(neighbours.max()) / sigma,
            second=0.25 * float(a.max()) / sigma,
            adjacency=adjacency,
        )


def _edge_id(u: int, v: int, n: int) -> int:
    """Position of {u, v} (u < v) in the lexicographic edge order of K_n"""
    return u * n - u * (u + 1) // 2 + (v - u - 1)


class SubgraphModel:
    @staticmethod
    @lru_cache(maxsize=32)
    def automorphisms(pattern: SubgraphPattern) -> int:
        graph = nx.Graph(list(pattern.edges))
        matcher = isomorphism.GraphMatcher(graph, graph)
        return sum(1 for _ in matcher.isomorphisms_iter())

    @staticmethod
    @lru_cache(maxsize=32)
    def copies(n: int, pattern: SubgraphPattern) -> np.ndarray:
        """(copies, e) edge ids of every edge set of K_n isomorphic to the pattern"""
        v = pattern.vertex_count
        found = set()
        for subset in itertools.combinations(range(n), v):
            for image in itertools.permutations(subset):
                ids = sorted(
                    _edge_id(min(image[a], image[b]), max(image[a], image[b]), n)
                    for a, b in pattern.edges
                )
                found.add(tuple(ids))
        table = np.asarray(sorted(found), dtype=np.int64).reshape(len(found), pattern.edge_count)
        table.setflags(write=False)
        logger.debug("%d copies of %s in K_%d", table.shape[0], pattern.name, n)
        return table

    @staticmethod
    @lru_cache(maxsize=32)
    def _overlap_profile(pattern: SubgraphPattern, n: int) -> Tuple[Tuple[int, int], ...]:
        """
        For a fixed copy on vertices 0..v-1, the number of injective maps of the
        pattern into K_n sharing exactly s >= 1 edges with it, as (s, maps) pairs.
        """
        v = pattern.vertex_count
        base = set(pattern.edges)
        counts = Counter()
        for j in range(2, v + 1):
            extensions = falling_factorial(n - v, v - j)
            if extensions == 0:
                continue
            for domain in itertools.combinations(range(v), j):
                for image in itertools.permutations(range(v), j):
                    phi = dict(zip(domain, image))
                    shared = 0
                    for a, b in pattern.edges:
                        if a in phi and b in phi:
                            x, y = phi[a], phi[b]
                            if (min(x, y), max(x, y)) in base:
                                shared += 1
                    if shared:
                        counts[shared] += extensions
        return tuple(sorted(counts.items()))

    @staticmethod
    def moments(n: int, p: float, pattern: SubgraphPattern) -> Tuple[float, float]:
        """Exact E S and Var S for the number S of copies in G(n, p)"""
        e = pattern.edge_count
        aut = SubgraphModel.automorphisms(pattern)
        total = falling_factorial(n, pattern.vertex_count) // aut
        mean = total * p ** e
        cov = 0.0
        for shared, maps in SubgraphModel._overlap_profile(pattern, n):
            cov += maps / aut * (p ** (2 * e - shared) - p ** (2 * e))
        return float(mean), float(total * cov)

    @staticmethod
    def psi(n: int, p: float, pattern: SubgraphPattern) -> float:
        """min of n^{v_H} p^{e_H} over non-empty edge subsets H, isolated vertices dropped"""
        best = math.inf
        edges = pattern.edges
        for size in range(1, len(edges) + 1):
            for subset in itertools.combinations(edges, size):
                vertices = len({x for e in subset for x in e})
                best = min(best, float(n) ** vertices * p ** size)
        return best

    @staticmethod
    def rate_prediction(n: int, p: float, pattern: SubgraphPattern) -> Tuple[float, float]:
        """((1-p) psi)^{-1/2}, plus the variance order q n^{2v} p^{2e} / psi"""
        q = 1.0 - p
        psi = SubgraphModel.psi(n, p, pattern)
        order = q * float(n) ** (2 * pattern.vertex_count) * p ** (2 * pattern.edge_count) / psi
        return (q * psi) ** -0.5, order

    @staticmethod
    def coordinates(cfg: SubgraphConfig) -> int:
        return math.comb(cfg.n, 2)

    @staticmethod
    def raw_table(cfg: SubgraphConfig) -> np.ndarray:
        m = SubgraphModel.coordinates(cfg)
        index = np.arange(1 << m, dtype=np.int64)
        S = np.zeros(1 << m, dtype=np.int64)
        for copy in SubgraphModel.copies(cfg.n, cfg.pattern):
            mask = int(np.bitwise_or.reduce(np.left_shift(1, copy)))
            S += (index & mask) == mask
        return S.astype(np.float64)

    @staticmethod
    def gradient_bounds(cfg: SubgraphConfig) -> GradientBounds:
        m = SubgraphModel.coordinates(cfg)
        _, var = SubgraphModel.moments(cfg.n, cfg.p, cfg.pattern)
        sigma = math.sqrt(var)
        copies = SubgraphModel.copies(cfg.n, cfg.pattern)
        together = np.zeros((m, m), dtype=np.int64)
        for copy in copies:
            together[np.ix_(copy, copy)] += 1
        per_edge = np.diag(together).copy()
        np.fill_diagonal(together, 0)
        pq = cfg.p * (1.0 - cfg.p)
        return GradientBounds(
            first=math.sqrt(pq) * float(per_edge.max()) / sigma,
            second=pq * float(together.max()) / sigma,
            adjacency=together > 0,
        )


class DegreeModel:
    @staticmethod
    def moments(cfg: DegreeCountConfig) -> Tuple[float, float]:
        """
        Mean and variance of the number of degree-d vertices in G(n, p); the
        variance holds for every d including 0.
        """
        n, d, p = cfg.n, cfg.d, cfg.p
        q = 1.0 - p
        c = math.comb(n - 1, d)
        mean = n * c * p ** d * q ** (n - d - 1)
        cross = n / (n - 1) * c ** 2 * ((n - 1) * p - d) ** 2 * p ** (2 * d - 1) * q ** (2 * n - 2 * d - 3)
        return mean, cross + mean - mean ** 2 / n

    @staticmethod
    def coordinates(cfg: DegreeCountConfig) -> int:
        return math.comb(cfg.n, 2)

    @staticmethod
    def raw_table(cfg: DegreeCountConfig) -> np.ndarray:
        edges = complete_graph_edges(cfg.n)
        incident = _incident_lists(edges, cfg.n)
        return _count_degree(len(edges), incident, cfg.d).astype(np.float64)

    @staticmethod
    def degree_differences(cfg: DegreeCountConfig) -> np.ndarray:
        """(m, 2^m) table of (V_d)_k^+ - (V_d)_k^-"""
        V = DegreeModel.raw_table(cfg)
        m = DegreeModel.coordinates(cfg)
        return np.stack([difference(V, k, 1.0) for k in range(m)]).round().astype(np.int64)

    @staticmethod
    def rate_prediction(cfg: DegreeCountConfig, regime: Optional[DegreeRegime] = None) -> float:
        n, d, p = cfg.n, cfg.d, cfg.p
        if d == 0:
            return 1.0 / (n * math.sqrt(p))
        if regime is None:
            raise RegimeUnspecified(f"degree d={d} needs --regime dense or sparse")
        if DegreeRegime(regime) is DegreeRegime.DENSE:
            return n ** -0.5
        return (n * p) ** (-d) * math.sqrt(p)

    @staticmethod
    def gradient_bounds(cfg: DegreeCountConfig) -> GradientBounds:
        _, var = DegreeModel.moments(cfg)
        sigma = math.sqrt(var)
        pq = cfg.p * (1.0 - cfg.p)
        return GradientBounds(
            first=2.0 * math.sqrt(pq) / sigma,
            second=4.0 * pq / sigma,
            adjacency=_edges_share_vertex(complete_graph_edges(cfg.n)),
        )


class ComplexModel:
    @staticmethod
    def moments(cfg: ComplexConfig) -> Tuple[float, float]:
        """Isolated (kappa-1)-faces; kappa = 1 is the isolated-vertex count of G(n, p)"""
        n, kappa, p = cfg.n, cfg.kappa, cfg.p
        if kappa == 1:
            return DegreeModel.moments(DegreeCountConfig(n=n, p=p, d=0))
        q = 1.0 - p
        free = q ** (n - kappa)
        mean = math.comb(n, kappa) * free
        pairs = 2 * math.comb(n, kappa - 1) * math.comb(n - kappa + 1, 2)
        var = mean * (1.0 - free) + pairs * p * q ** (2 * (n - kappa) - 1)
        return mean, var

    @staticmethod
    def coordinates(cfg: ComplexConfig) -> int:
        return math.comb(cfg.n, cfg.kappa + 1)

    @staticmethod
    def raw_table(cfg: ComplexConfig) -> np.ndarray:
        m = ComplexModel.coordinates(cfg)
        index = np.arange(1 << m, dtype=np.int64)
        I = np.zeros(1 << m, dtype=np.int64)
        for row in coface_table(cfg.n, cfg.kappa):
            mask = int(np.bitwise_or.reduce(np.left_shift(1, row)))
            I += (index & mask) == 0
        return I.astype(np.float64)

    @staticmethod
    def rate_prediction(cfg: ComplexConfig) -> float:
        return cfg.n ** (-(cfg.kappa + 1) / 2.0) * cfg.p ** -0.5

    @staticmethod
    def gradient_bounds(cfg: ComplexConfig) -> GradientBounds:
        _, var = ComplexModel.moments(cfg)
        sigma = math.sqrt(var)
        pq = cfg.p * (1.0 - cfg.p)
        faces = [set(f) for f in simplex_faces(cfg.n, cfg.kappa)]
        m = len(faces)
        adjacency = np.zeros((m, m), dtype=bool)
        for k, l in itertools.combinations(range(m), 2):
            if len(faces[k] & faces[l]) == cfg.kappa:
                adjacency[k, l] = adjacency[l, k] = True
        return GradientBounds(
            first=(cfg.kappa + 1) * math.sqrt(pq) / sigma,
            second=2.0 * (cfg.kappa + 1) * pq / sigma,
            adjacency=adjacency,
        )


class HypercubeModel:
    @staticmethod
    def moments(cfg: HypercubeConfig) -> Tuple[float, float]:
        """
        Vertices of degree d in H(n, p). d = n is V_0 of the complementary
        percolation, since retaining every edge is losing none of them.
        """
        n, d, p = cfg.n, cfg.d, cfg.p
        if d == n:
            return HypercubeModel.moments(HypercubeConfig(n=n, p=1.0 - p, d=0))
        q = 1.0 - p
        vertices = 2 ** n
        single = math.comb(n, d) * p ** d * q ** (n - d)
        c = math.comb(n - 1, d)
        bracket = d * d * q / (n - d) ** 2 + p - n * n * p * q / (n - d) ** 2
        cov = c * c * p ** (2 * d - 1) * q ** (2 * n - 2 * d - 1) * bracket
        return vertices * single, vertices * single * (1.0 - single) + vertices * n * cov

    @staticmethod
    def coordinates(cfg: HypercubeConfig) -> int:
        return cfg.n * 2 ** (cfg.n - 1)

    @staticmethod
    def raw_table(cfg: HypercubeConfig) -> np.ndarray:
        edges = hypercube_edges(cfg.n)
        incident = _incident_lists(edges, 2 ** cfg.n)
        return _count_degree(len(edges), incident, cfg.d).astype(np.float64)

    @staticmethod
    def rate_prediction(cfg: HypercubeConfig, eps: Optional[float] = None) -> float:
        if eps is None:
            eps = get_settings().HYPERCUBE_EPS
        if not 0.0 < eps < 1.0:
            raise BadEpsilon(f"eps = {eps} is not in (0,1)")
        return (2.0 - eps) ** (-cfg.n / 2.0)

    @staticmethod
    def gradient_bounds(cfg: HypercubeConfig) -> GradientBounds:
        _, var = HypercubeModel.moments(cfg)
        sigma = math.sqrt(var)
        pq = cfg.p * (1.0 - cfg.p)
        return GradientBounds(
            first=2.0 * math.sqrt(pq) / sigma,
            second=4.0 * pq / sigma,
            adjacency=_edges_share_vertex(hypercube_edges(cfg.n)),
        )


_MODELS = {
    "two_runs": TwoRunsModel,
    "subgraph": SubgraphModel,
    "degree": DegreeModel,
    "complex": ComplexModel,
    "hypercube": HypercubeModel,
}


class ModelCatalog:
    """Dispatch on the model kind"""

    @staticmethod
    def handler(model):
        return _MODELS[model.kind]

    @staticmethod
    def moments(model) -> Tuple[float, float]:
        if model.kind == "subgraph":
            return SubgraphModel.moments(model.n, model.p, model.pattern)
        return ModelCatalog.handler(model).moments(model)

    @staticmethod
    def coordinates(model) -> int:
        return ModelCatalog.handler(model).coordinates(model)

    @staticmethod
    def max_exact_n(model) -> int:
        if model.kind == "complex":
            return _largest_n(lambda n: math.comb(n, model.kappa + 1), model.kappa)
        if model.kind == "hypercube":
            return _largest_n(lambda n: n * 2 ** (n - 1), 0)
        return _largest_n(lambda n: math.comb(n, 2), 1)

    @staticmethod
    def check_exact(model) -> int:
        m = ModelCatalog.coordinates(model)
        if m > _cap():
            if model.kind == "two_runs":
                hint = f"max |alpha|={_cap() - 1} for exact mode"
            else:
                hint = f"max n={ModelCatalog.max_exact_n(model)} for exact mode"
            raise CapExceeded(f"{model.kind} model needs {m} coordinates", hint=hint)
        return m

    @staticmethod
    def space(model):
        return symmetric_space(ModelCatalog.check_exact(model), model.p)

    @staticmethod
    def raw_functional(model) -> Functional:
        space = ModelCatalog.space(model)
        return Functional(space=space, values=ModelCatalog.handler(model).raw_table(model))

    @staticmethod
    def functional(model) -> Functional:
        """The standardized statistic on its exact coordinate space"""
        if model.kind == "two_runs":
            return TwoRunsModel.functional(model)
        raw = ModelCatalog.raw_functional(model)
        logger.debug("built %s statistic on %d coordinates", model.kind, raw.space.m)
        return RademacherCalculus.standardize(raw)

    @staticmethod
    def rate_prediction(model, regime: Optional[DegreeRegime] = None, eps: Optional[float] = None) -> float:
        if model.kind == "two_runs":
            return TwoRunsModel.rate_bound(model)
        if model.kind == "subgraph":
            return SubgraphModel.rate_prediction(model.n, model.p, model.pattern)[0]
        if model.kind == "degree":
            return DegreeModel.rate_prediction(model, regime)
        if model.kind == "hypercube":
            return HypercubeModel.rate_prediction(model, eps)
        return ComplexModel.rate_prediction(model)

    @staticmethod
    def gradient_bounds(model) -> GradientBounds:
        ModelCatalog.check_exact(model)
        return ModelCatalog.handler(model).gradient_bounds(model)
