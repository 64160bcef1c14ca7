# Vectorized simulation of the raw (unstandardized) model statistics.

import logging
import math
from typing import Tuple

import numpy as np

from models.applications import (
    ComplexConfig,
    DegreeCountConfig,
    HypercubeConfig,
    SubgraphConfig,
    TwoRunsConfig,
)
from services.applications import SubgraphModel
from utils.combinatorics import (
    coface_table,
    complete_graph_edges,
    edge_endpoints,
    hypercube_edges,
)

logger = logging.getLogger(__name__)

# elements touched per chunk of rows
CHUNK_BUDGET = 1 << 22


def success_positions(rng: np.random.Generator, total: int, p: float) -> np.ndarray:
    """
    Sorted indices of the successes among `total` Bernoulli(p) trials, drawn by
    geometric skipping: the cost follows the number of successes, not `total`.
    """
    expected = total * p
    chunk = int(expected + 6.0 * math.sqrt(expected + 1.0)) + 16
    found = []
    start = 0
    while start < total:
        positions = start - 1 + np.cumsum(rng.geometric(p, size=chunk))
        kept = positions[positions < total]
        found.append(kept)
        if kept.shape[0] < chunk:
            break
        start = int(positions[-1]) + 1
    if not found:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(found).astype(np.int64, copy=False)


def sparse_edges(rng: np.random.Generator, rows: int, m: int, p: float) -> Tuple[np.ndarray, np.ndarray, bool]:
    """
    (sample, coordinate) pairs over rows independent p-percolations of m
    coordinates. For p > 1/2 the complement is drawn and the flag is set.
    """
    flip = p > 0.5
    positions = success_positions(rng, rows * m, 1.0 - p if flip else p)
    return positions // m, positions % m, flip


def coordinate_members(table: np.ndarray, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Inverse of a (groups, size) table of coordinate ids in CSR form: the groups
    containing coordinate c are members[indptr[c]:indptr[c + 1]].
    """
    flat = table.reshape(-1)
    order = np.argsort(flat, kind="stable")
    members = (order // table.shape[1]).astype(np.int64)
    indptr = np.searchsorted(flat[order], np.arange(m + 1))
    return indptr, members


def expand_members(sample: np.ndarray, coordinate: np.ndarray, indptr: np.ndarray, members: np.ndarray):
    """(sample, group) for every group touched by every drawn (sample, coordinate)"""
    counts = indptr[coordinate + 1] - indptr[coordinate]
    total = int(counts.sum())
    offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    return np.repeat(sample, counts), members[np.repeat(indptr[coordinate], counts) + offsets]


def _chunks(size: int, rows_per_chunk: int):
    rows_per_chunk = max(1, rows_per_chunk)
    for start in range(0, size, rows_per_chunk):
        yield min(rows_per_chunk, size - start)


def _degree_counts(rng, size, edges, vertex_count, full_degree, p, d) -> np.ndarray:
    tail, head = edge_endpoints(edges)
    m = len(edges)
    per_row = vertex_count + int(m * min(p, 1.0 - p)) + 1
    out = []
    for rows in _chunks(size, CHUNK_BUDGET // per_row):
        sample, coordinate, flip = sparse_edges(rng, rows, m, p)
        base = sample * vertex_count
        degree = np.bincount(base + tail[coordinate], minlength=rows * vertex_count)
        degree += np.bincount(base + head[coordinate], minlength=rows * vertex_count)
        degree = degree.reshape(rows, vertex_count)
        if flip:
            degree = full_degree - degree
        out.append((degree == d).sum(axis=1))
    return np.concatenate(out).astype(np.float64)


class ModelSampler:
    @staticmethod
    def two_runs(cfg: TwoRunsConfig, rng: np.random.Generator, size: int) -> np.ndarray:
        alpha = np.asarray(cfg.alpha, dtype=np.float64)
        m = alpha.shape[0] + 1
        out = []
        for rows in _chunks(size, CHUNK_BUDGET // m):
            xi = rng.integers(0, 2, size=(rows, m), dtype=np.int8)
            out.append((xi[:, :-1] * xi[:, 1:]).astype(np.float64) @ alpha)
        return np.concatenate(out)

    @staticmethod
    def degree(cfg: DegreeCountConfig, rng: np.random.Generator, size: int) -> np.ndarray:
        edges = complete_graph_edges(cfg.n)
        return _degree_counts(rng, size, edges, cfg.n, cfg.n - 1, cfg.p, cfg.d)

    @staticmethod
    def hypercube(cfg: HypercubeConfig, rng: np.random.Generator, size: int) -> np.ndarray:
        edges = hypercube_edges(cfg.n)
        return _degree_counts(rng, size, edges, 1 << cfg.n, cfg.n, cfg.p, cfg.d)

    @staticmethod
    def subgraph(cfg: SubgraphConfig, rng: np.random.Generator, size: int) -> np.ndarray:
        """
        Copies touched by the drawn edges are tallied per (sample, copy). A copy
        is present when all of its edges were drawn, or, for complement draws,
        when none was.
        """
        copies = SubgraphModel.copies(cfg.n, cfg.pattern)
        total, e = copies.shape
        if total == 0:
            return np.zeros(size)
        m = math.comb(cfg.n, 2)
        indptr, members = coordinate_members(copies, m)
        per_row = int(total * e * min(cfg.p, 1.0 - cfg.p)) + 1
        out = []
        for rows in _chunks(size, CHUNK_BUDGET // per_row):
            sample, coordinate, flip = sparse_edges(rng, rows, m, cfg.p)
            hit_sample, hit_copy = expand_members(sample, coordinate, indptr, members)
            keys, counts = np.unique(hit_sample * total + hit_copy, return_counts=True)
            if flip:
                out.append(total - np.bincount(keys // total, minlength=rows))
            else:
                out.append(np.bincount(keys[counts == e] // total, minlength=rows))
        return np.concatenate(out).astype(np.float64)

    @staticmethod
    def complex(cfg: ComplexConfig, rng: np.random.Generator, size: int) -> np.ndarray:
        # each drawn kappa-face touches its kappa+1 boundary faces
        cofaces = coface_table(cfg.n, cfg.kappa)
        faces, full = cofaces.shape
        m = math.comb(cfg.n, cfg.kappa + 1)
        indptr, members = coordinate_members(cofaces, m)
        per_row = faces + int(m * (cfg.kappa + 1) * min(cfg.p, 1.0 - cfg.p)) + 1
        out = []
        for rows in _chunks(size, CHUNK_BUDGET // per_row):
            sample, coordinate, flip = sparse_edges(rng, rows, m, cfg.p)
            hit_sample, hit_face = expand_members(sample, coordinate, indptr, members)
            hits = np.bincount(hit_sample * faces + hit_face, minlength=rows * faces).reshape(rows, faces)
            isolated = hits == full if flip else hits == 0
            out.append(isolated.sum(axis=1))
        return np.concatenate(out).astype(np.float64)

    @staticmethod
    def raw(model, rng: np.random.Generator, size: int) -> np.ndarray:
        if size <= 0:
            return np.empty(0, dtype=np.float64)
        return getattr(ModelSampler, model.kind)(model, rng, size)
