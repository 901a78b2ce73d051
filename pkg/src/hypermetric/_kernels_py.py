"""Pure-Python versions of the hot loops.

Same signatures and results as the compiled ``_kernels`` module; selected by
:mod:`hypermetric.kernels` when the extension is missing or disabled.
"""
import heapq

import numpy as np


def l1_rows(P, out, r0, r1):
    """Fill rows ``r0:r1`` (upper triangle) of the L1 distance matrix of ``P``."""
    n = P.shape[0]
    for i in range(r0, r1):
        out[i, i] = 0
        if i + 1 < n:
            row = np.abs(P[i + 1:] - P[i]).sum(axis=1)
            out[i, i + 1:] = row
            out[i + 1:, i] = row


def _tri_index(i, j, k):
    # combinatorial number system for a > b > c
    a, b, c = sorted((i, j, k), reverse=True)
    return a * (a - 1) * (a - 2) // 6 + b * (b - 1) // 2 + c


def sorted_edges(R, threshold):
    """Edges ``(i, j)`` with ``i > j`` and ``R[i, j] <= threshold`` in filtration order."""
    n = R.shape[0]
    ii, jj = np.tril_indices(n, -1)
    d = R[ii, jj]
    keep = d <= threshold
    ii, jj, d = ii[keep], jj[keep], d[keep]
    eidx = ii * (ii - 1) // 2 + jj
    order = np.lexsort((eidx, d))
    return ii[order], jj[order], d[order]


def rips_pairs(R, threshold, max_dim):
    """Vietoris-Rips persistence pairs on a rank-valued distance matrix.

    Returns ``(h0_deaths, h1_pairs, h1_essential)`` in rank units.  Dimension 0
    comes from Kruskal's algorithm; dimension 1 from reducing the coboundary
    matrix of the non-tree edges (tree edges are cleared).
    """
    R = np.asarray(R, dtype=np.int64)
    n = R.shape[0]
    ei, ej, ed = sorted_edges(R, threshold)
    ei, ej, ed = ei.tolist(), ej.tolist(), ed.tolist()

    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    h0 = []
    tree = [False] * len(ei)
    for pos, (i, j) in enumerate(zip(ei, ej)):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
            h0.append(ed[pos])
            tree[pos] = True

    h1, essential = [], []
    if max_dim < 1 or n < 3:
        return h0, h1, essential

    T = n * (n - 1) * (n - 2) // 6
    Rl = R.tolist()

    def push_coboundary(heap, i, j):
        dij = Rl[i][j]
        ri, rj = Rl[i], Rl[j]
        for k in range(n):
            if k == i or k == j:
                continue
            d = max(dij, ri[k], rj[k])
            if d <= threshold:
                heapq.heappush(heap, d * T + _tri_index(i, j, k))

    def pop_pivot(heap):
        while heap:
            top = heapq.heappop(heap)
            if heap and heap[0] == top:
                heapq.heappop(heap)
            else:
                heapq.heappush(heap, top)
                return top
        return None

    owner = {}
    columns = []
    for pos in range(len(ei) - 1, -1, -1):
        if tree[pos]:
            continue
        i, j = ei[pos], ej[pos]
        heap = []
        work = [(i, j)]
        push_coboundary(heap, i, j)
        pivot = pop_pivot(heap)
        while pivot is not None and pivot in owner:
            for f in columns[owner[pivot]]:
                push_coboundary(heap, *f)
                work.append(f)
            pivot = pop_pivot(heap)
        if pivot is None:
            essential.append(ed[pos])
            continue
        parity = {}
        for f in work:
            parity[f] = parity.get(f, 0) ^ 1
        owner[pivot] = len(columns)
        columns.append([f for f, odd in parity.items() if odd])
        h1.append((ed[pos], pivot // T))
    return h0, h1, essential
