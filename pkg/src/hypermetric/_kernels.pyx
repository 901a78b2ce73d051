# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled hot loops: pairwise L1 distances over count tables and
Vietoris-Rips persistence pairs (dimensions 0 and 1).

Mirrors ``_kernels_py`` exactly; see that module for the reference logic.
"""
from libc.stdint cimport int64_t
from libcpp.algorithm cimport sort as cpp_sort
from libcpp.queue cimport priority_queue
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector
from cython.operator cimport dereference as deref

import numpy as np

from hypermetric._kernels_py import sorted_edges


cdef inline int64_t l1_pair(const int64_t* a, const int64_t* b, Py_ssize_t K) noexcept nogil:
    cdef int64_t s = 0, d, m
    cdef Py_ssize_t c
    for c in range(K):
        d = a[c] - b[c]
        m = d >> 63  # branchless abs vectorises on plain SSE2
        s += (d ^ m) - m
    return s


def l1_rows(const int64_t[:, ::1] P, int64_t[:, ::1] out, Py_ssize_t r0, Py_ssize_t r1):
    cdef Py_ssize_t i, j, jb, j_end
    cdef Py_ssize_t n = P.shape[0]
    cdef Py_ssize_t K = P.shape[1]
    cdef Py_ssize_t B = 64
    cdef const int64_t* base
    cdef int64_t* orow
    if n == 0:
        return
    base = &P[0, 0]
    with nogil:
        for i in range(r0, r1):
            orow = &out[i, 0]
            orow[i] = 0
            for j in range(i + 1, n):
                orow[j] = l1_pair(base + i * K, base + j * K, K)
        # mirror in column blocks so the strided writes stay in cache
        jb = r0 + 1
        while jb < n:
            j_end = jb + B if jb + B < n else n
            for i in range(r0, r1):
                for j in range(jb if jb > i + 1 else i + 1, j_end):
                    out[j, i] = out[i, j]
            jb += B


cdef inline int64_t tri_index(int64_t i, int64_t j, int64_t k) noexcept nogil:
    cdef int64_t t
    if i < j:
        t = i; i = j; j = t
    if j < k:
        t = j; j = k; k = t
    if i < j:
        t = i; i = j; j = t
    return i * (i - 1) * (i - 2) // 6 + j * (j - 1) // 2 + k


cdef inline void push_coboundary(priority_queue[int64_t]& heap, const int64_t[:, ::1] R,
                                 int64_t i, int64_t j, int64_t n, int64_t threshold,
                                 int64_t T) noexcept nogil:
    # keys are negated: priority_queue is a max-heap
    cdef int64_t k, d, dij = R[i, j]
    for k in range(n):
        if k == i or k == j:
            continue
        d = dij
        if R[i, k] > d:
            d = R[i, k]
        if R[j, k] > d:
            d = R[j, k]
        if d <= threshold:
            heap.push(-(d * T + tri_index(i, j, k)))


cdef inline int64_t pop_pivot(priority_queue[int64_t]& heap) noexcept nogil:
    cdef int64_t top
    while not heap.empty():
        top = heap.top()
        heap.pop()
        if not heap.empty() and heap.top() == top:
            heap.pop()
        else:
            heap.push(top)
            return -top
    return -1


def rips_pairs(R_in, int64_t threshold, int max_dim):
    cdef const int64_t[:, ::1] R = np.ascontiguousarray(R_in, dtype=np.int64)
    cdef int64_t n = R.shape[0]
    ei_a, ej_a, ed_a = sorted_edges(np.asarray(R), threshold)
    cdef const int64_t[::1] ei = np.ascontiguousarray(ei_a, dtype=np.int64)
    cdef const int64_t[::1] ej = np.ascontiguousarray(ej_a, dtype=np.int64)
    cdef const int64_t[::1] ed = np.ascontiguousarray(ed_a, dtype=np.int64)
    cdef Py_ssize_t E = ei.shape[0]

    cdef vector[int64_t] parent
    cdef vector[char] tree
    cdef vector[int64_t] h0
    cdef Py_ssize_t pos
    cdef int64_t x, ri, rj, v
    parent.resize(n)
    tree.resize(E, 0)
    for v in range(n):
        parent[v] = v
    with nogil:
        for pos in range(E):
            x = ei[pos]
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            ri = x
            x = ej[pos]
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            rj = x
            if ri != rj:
                if ri < rj:
                    parent[rj] = ri
                else:
                    parent[ri] = rj
                h0.push_back(ed[pos])
                tree[pos] = 1

    cdef vector[int64_t] h1_birth, h1_death, essential
    if max_dim < 1 or n < 3:
        return list(h0), [], []

    cdef int64_t T = n * (n - 1) * (n - 2) // 6
    if T > 0 and (threshold + 1) > (<int64_t>9000000000000000000) // T:
        raise OverflowError("filtration too large for 64-bit simplex keys")

    cdef priority_queue[int64_t] heap
    cdef unordered_map[int64_t, int64_t] owner
    cdef unordered_map[int64_t, int64_t].iterator it
    cdef vector[vector[int64_t]] columns
    cdef vector[int64_t] work, reduced
    cdef int64_t pivot, f, slot
    cdef Py_ssize_t q, m, w
    with nogil:
        for pos in range(E - 1, -1, -1):
            if tree[pos]:
                continue
            while not heap.empty():
                heap.pop()
            work.clear()
            work.push_back(ei[pos] * n + ej[pos])
            push_coboundary(heap, R, ei[pos], ej[pos], n, threshold, T)
            pivot = pop_pivot(heap)
            while pivot != -1:
                it = owner.find(pivot)
                if it == owner.end():
                    break
                slot = deref(it).second
                m = columns[slot].size()
                for q in range(m):
                    f = columns[slot][q]
                    push_coboundary(heap, R, f // n, f % n, n, threshold, T)
                    work.push_back(f)
                pivot = pop_pivot(heap)
            if pivot == -1:
                essential.push_back(ed[pos])
                continue
            cpp_sort(work.begin(), work.end())
            reduced.clear()
            w = 0
            m = work.size()
            while w < m:
                q = w
                while q < m and work[q] == work[w]:
                    q += 1
                if (q - w) % 2 == 1:
                    reduced.push_back(work[w])
                w = q
            owner[pivot] = columns.size()
            columns.push_back(reduced)
            h1_birth.push_back(ed[pos])
            h1_death.push_back(pivot // T)

    h1 = [(h1_birth[q], h1_death[q]) for q in range(h1_birth.size())]
    return list(h0), h1, list(essential)
