"""Instance generators, balanceability analysis and cycle-bound formulas.

All generators take explicit seeds and are reproducible.  The diameter
computation is deliberately naive (BFS from every vertex, O(n*m)); at
the desk scale this toolkit targets that is acceptable and doubles as a
reference for tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BalancingError, SparseNonnegMatrix, build_matrix


@dataclass(frozen=True)
class InstanceStats:
    n: int
    m: int
    kappa: float
    diameter: float        # math.inf when not strongly connected
    strongly_connected: bool
    max_degree: int        # distinct undirected-support neighbors


@dataclass(frozen=True)
class CycleBound:
    """Worst-case cycle counts for a target accuracy.

    ``explicit`` carries a concrete constant and is safe to assert
    against; ``asymptotic_shape`` is the tighter diameter-aware form
    whose constant is unknown, for reporting only.
    """
    explicit: int
    asymptotic_shape: float


def _positive_uniform(rng, size):
    """Uniform in (0, 1): exact-zero draws are rejected and redrawn."""
    x = rng.random(size)
    while True:
        zero = x == 0.0
        if not zero.any():
            return x
        x[zero] = rng.random(int(zero.sum()))


def gen_salient(n, s, lo=0.001, hi=1.0, seed=0):
    """Dense off-diagonal matrix whose last s rows and columns (union)
    carry entries uniform in (0, hi); all other entries are uniform in
    (0, lo)."""
    if s >= n:
        raise ValueError("s must be smaller than n")
    rng = np.random.default_rng(seed)
    vals = _positive_uniform(rng, (n, n))
    bound = np.full((n, n), lo)
    bound[n - s:, :] = hi
    bound[:, n - s:] = hi
    vals *= bound
    rows, cols = np.nonzero(~np.eye(n, dtype=bool))
    return SparseNonnegMatrix(n, rows, cols, vals[rows, cols])


def gen_kalantari(k):
    """Hard bidirectional-cycle instance on n = 2k + 1 vertices: unit
    entries one way around the cycle and 0.01 the other way."""
    if k < 1:
        raise ValueError("k must be at least 1")
    n = 2 * k + 1
    triplets = []
    for i in range(1, k + 1):  # 1-based formulas, shifted on insertion
        triplets.append((i, i + 1, 1.0))
        triplets.append((2 * k + 2 - i, 2 * k + 1 - i, 1.0))
        triplets.append((i + 1, i, 0.01))
        triplets.append((2 * k + 1 - i, 2 * k + 2 - i, 0.01))
    triplets.append((n, 1, 1.0))
    triplets.append((1, n, 1.0))
    return build_matrix(n, [(i - 1, j - 1, v) for i, j, v in triplets])


def gen_random_sparse(n, p, value_lo=0.0, value_hi=1.0, seed=0):
    """Each off-diagonal position present independently with probability
    p, with value uniform in (value_lo, value_hi)."""
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    vals = value_lo + _positive_uniform(rng, (n, n)) * (value_hi - value_lo)
    rows, cols = np.nonzero(mask)
    return SparseNonnegMatrix(n, rows, cols, vals[rows, cols])


def _bfs_ecc(adj, source, n):
    """Eccentricity of source over directed adjacency; -1 if not all
    vertices are reachable."""
    dist = np.full(n, -1, dtype=np.intp)
    dist[source] = 0
    frontier = [source]
    d = 0
    seen = 1
    while frontier:
        d += 1
        nxt = []
        for v in frontier:
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = d
                    nxt.append(int(w))
        seen += len(nxt)
        frontier = nxt
    if seen < n:
        return -1
    return int(dist.max())


def stats(A):
    """Conditioning, diameter, connectivity and degree of the support."""
    if A.m == 0:
        raise BalancingError("stats of an empty matrix are undefined")
    kappa = float(A.coo_vals.sum()) / float(A.coo_vals.min())
    max_degree = max(len(A.neighbors(j)) for j in range(A.n))

    fwd = A.row_index
    rev = A.col_index
    if _bfs_ecc(fwd, 0, A.n) < 0 or _bfs_ecc(rev, 0, A.n) < 0:
        return InstanceStats(A.n, A.m, kappa, math.inf, False, max_degree)
    diameter = max(_bfs_ecc(fwd, v, A.n) for v in range(A.n))
    return InstanceStats(A.n, A.m, kappa, float(diameter), True, max_degree)


def scc_decompose(A):
    """Strongly connected components of the support in topological order.

    Returns (blocks, cross_entries): blocks is a list of (vertex list,
    induced submatrix) pairs; cross-component entries are reported
    separately and are not balanced by any per-block scaling choice.
    """
    n = A.n
    adj = A.row_index
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack = []
    comp_of = [-1] * n
    comps = []
    counter = 0

    for root in range(n):
        if index[root] >= 0:
            continue
        work = [(root, 0)]
        while work:
            v, ei = work[-1]
            if ei == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            if ei < len(adj[v]):
                work[-1] = (v, ei + 1)
                w = int(adj[v][ei])
                if index[w] < 0:
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[v])
                if low[v] == index[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        comp_of[w] = len(comps)
                        comp.append(w)
                        if w == v:
                            break
                    comps.append(sorted(comp))

    comps.reverse()  # Tarjan emits sinks first; flip to topological order
    order = {}
    for ci, comp in enumerate(comps):
        for pos, v in enumerate(comp):
            order[v] = (ci, pos)

    blocks = []
    cross = []
    per_block = [[] for _ in comps]
    for i, j, v in A.entries():
        ci, pi = order[i]
        cj, pj = order[j]
        if ci == cj:
            per_block[ci].append((pi, pj, v))
        else:
            cross.append((i, j, v))
    for comp, triplets in zip(comps, per_block):
        blocks.append((comp, build_matrix(len(comp), triplets)))
    return blocks, cross


def lp_reduce(A, p):
    """Raise entries to the power p; balancing the result in the sum
    norm and dividing the exponents by p yields an l_p balancing of A."""
    if p <= 0:
        raise ValueError("p must be positive")
    return SparseNonnegMatrix(A.n, A.coo_rows.copy(), A.coo_cols.copy(),
                              A.coo_vals ** p)


def theoretical_cycle_bound(st, eps):
    """Worst-case cycle counts for reaching normalized imbalance eps."""
    if not st.strongly_connected:
        raise BalancingError("cycle bound requires strong connectivity")
    explicit = math.ceil(80 * math.ceil(math.log2(st.kappa)) / eps ** 2)
    shape = (math.log(st.kappa) / eps) * min(1.0 / eps, st.diameter)
    return CycleBound(explicit, shape)
