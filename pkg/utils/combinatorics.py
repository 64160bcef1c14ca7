import itertools
from functools import lru_cache
from typing import List, Tuple

import numpy as np


@lru_cache(maxsize=8)
def subset_sizes(m: int) -> np.ndarray:
    """|A| for every subset mask A of {0..m-1}"""
    sizes = np.zeros(1 << m, dtype=np.int64)
    index = np.arange(1 << m, dtype=np.int64)
    for k in range(m):
        sizes += (index >> k) & 1
    sizes.setflags(write=False)
    return sizes


def mask_of(indices) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << int(i)
    return mask


def complete_graph_edges(n: int) -> List[Tuple[int, int]]:
    """Edges of K_n in lexicographic order; the list position is the coordinate index"""
    return list(itertools.combinations(range(n), 2))


def edge_endpoints(edges: List[Tuple[int, int]]) -> Tuple[np.ndarray, np.ndarray]:
    tail = np.fromiter((e[0] for e in edges), dtype=np.int64, count=len(edges))
    head = np.fromiter((e[1] for e in edges), dtype=np.int64, count=len(edges))
    return tail, head


def hypercube_edges(n: int) -> List[Tuple[int, int]]:
    """Edges of the n-cube 1-skeleton; vertices are n-bit integers, edges sorted lexicographically"""
    edges = []
    for v in range(1 << n):
        for i in range(n):
            w = v ^ (1 << i)
            if v < w:
                edges.append((v, w))
    edges.sort()
    return edges


def simplex_faces(n: int, dimension: int) -> List[Tuple[int, ...]]:
    """All dimension-faces of the (n-1)-simplex, as sorted vertex tuples"""
    return list(itertools.combinations(range(n), dimension + 1))


def coface_table(n: int, kappa: int) -> np.ndarray:
    """Row f lists the indices of the kappa-faces containing the (kappa-1)-face f"""
    top = simplex_faces(n, kappa)
    position = {face: i for i, face in enumerate(top)}
    rows = []
    for face in simplex_faces(n, kappa - 1):
        members = set(face)
        row = [position[tuple(sorted(face + (v,)))] for v in range(n) if v not in members]
        rows.append(row)
    return np.asarray(rows, dtype=np.int64).reshape(len(rows), n - kappa)


def falling_factorial(n: int, k: int) -> int:
    if k < 0 or k > n:
        return 0
    out = 1
    for i in range(k):
        out *= n - i
    return out
