"""Communities read off a distance matrix: zero sets and zero-distance classes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from hypermetric.core import DistanceMatrix


@dataclass(frozen=True)
class ZeroSet:
    anchor: int
    members: tuple[int, ...]


@dataclass(frozen=True)
class CommunityPartition:
    representatives: tuple[int, ...]
    class_of: dict

    def classes(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {r: [] for r in self.representatives}
        for v, r in self.class_of.items():
            out[r].append(v)
        return {r: sorted(vs) for r, vs in out.items()}

    def sizes(self) -> dict[int, int]:
        return {r: len(vs) for r, vs in self.classes().items()}


def zero_set(M: DistanceMatrix, i: int) -> ZeroSet:
    row = M.entries[M.position(i)]
    hits = [M.vertex_index[j] for j in np.flatnonzero(row == 0) if M.vertex_index[j] != i]
    return ZeroSet(i, tuple(sorted(hits)))


def partition(M: DistanceMatrix) -> CommunityPartition:
    """Union-find over the zero off-diagonal entries; each class is named by
    its least vertex id."""
    n = M.order
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    ii, jj = np.nonzero(np.triu(M.entries == 0, 1))
    for i, j in zip(ii.tolist(), jj.tolist()):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    least: dict[int, int] = {}
    for pos, v in enumerate(M.vertex_index):
        root = find(pos)
        least[root] = min(least.get(root, v), v)
    class_of = {v: least[find(pos)] for pos, v in enumerate(M.vertex_index)}
    return CommunityPartition(tuple(sorted(least.values())), class_of)


Predicate = tuple[str, Callable[[int], bool]]

# residue patterns shared by the zero set of vertex 1 in the first example
ZERO_SET_PATTERNS: list[Predicate] = [
    ("j != 0 (mod 3)", lambda j: j % 3 != 0),
    ("j != 2 (mod 5)", lambda j: j % 5 != 2),
    ("j = +-1 (mod 4)", lambda j: j % 4 in (1, 3)),
    ("j = 1 (mod 7)", lambda j: j % 7 == 1),
]


def check_patterns(members: Sequence[int], predicates: Sequence[Predicate] = ZERO_SET_PATTERNS) -> dict[str, bool]:
    """For each named predicate, whether it holds for every member."""
    if not members:
        raise ValueError("empty member list")
    return {name: all(pred(int(j)) for j in members) for name, pred in predicates}
