"""Property-labelled hypergraphs, neighborhoods, count profiles and the
metric modulo profile equivalence.

A hyperedge ``e`` with label ``P`` counts towards the profile of vertex ``a``
when ``e`` lies entirely inside the neighborhood of ``a``.  Two vertices are
equivalent when their profiles agree, and the metric is the L1 distance
between profiles.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Hashable, Iterable, Sequence

import numpy as np

from hypermetric import kernels

Label = Hashable


class VertexNotFound(ValueError):
    """Raised when a vertex id is not part of the hypergraph or matrix."""

    def __init__(self, vertex):
        super().__init__(f"vertex not in hypergraph: {vertex}")
        self.vertex = vertex


class HypergraphFormatError(ValueError):
    pass


def _label_key(label):
    # mixed int/str label sets still sort deterministically
    return (isinstance(label, str), label)


@dataclass(frozen=True)
class ExplicitHypergraph:
    """A finite hypergraph whose every hyperedge carries one property label.

    Build instances with :meth:`from_edges`, which validates the input.
    """

    vertices: tuple[int, ...]
    edges: tuple[tuple[frozenset, Label], ...]
    property_set: tuple[Label, ...]
    max_edge_size: int

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[Iterable[int], Label]],
        vertices: Iterable[int] | None = None,
        property_set: Iterable[Label] | None = None,
        max_edge_size: int | None = None,
    ) -> "ExplicitHypergraph":
        seen: dict[frozenset, Label] = {}
        checked = []
        for members, label in edges:
            members = [int(v) for v in members]
            if not members:
                raise HypergraphFormatError("hyperedge must contain at least one vertex")
            if any(v < 0 for v in members):
                raise HypergraphFormatError(f"vertex ids must be nonnegative: {members}")
            e = frozenset(members)
            if len(e) != len(members):
                raise HypergraphFormatError(f"hyperedge repeats a vertex: {members}")
            if e in seen:
                raise HypergraphFormatError(f"duplicate hyperedge: {sorted(e)}")
            seen[e] = label
            checked.append((e, label))

        in_edges = set().union(*(e for e, _ in checked)) if checked else set()
        if vertices is None:
            vset = in_edges
        else:
            vset = {int(v) for v in vertices}
            missing = in_edges - vset
            if missing:
                raise HypergraphFormatError(
                    f"hyperedge vertices not declared: {sorted(missing)[:10]}"
                )
            if any(v < 0 for v in vset):
                raise HypergraphFormatError("vertex ids must be nonnegative")

        labels = {lab for _, lab in checked}
        if property_set is None:
            props = labels
        else:
            props = set(property_set)
            unknown = labels - props
            if unknown:
                raise HypergraphFormatError(f"labels outside the property set: {sorted(unknown, key=_label_key)}")
        if not props:
            props = {0}

        largest = max((len(e) for e, _ in checked), default=1)
        if max_edge_size is None:
            max_edge_size = largest
        elif max_edge_size < largest:
            raise HypergraphFormatError(
                f"hyperedge of size {largest} exceeds max_edge_size={max_edge_size}"
            )
        return cls(
            vertices=tuple(sorted(vset)),
            edges=tuple(checked),
            property_set=tuple(sorted(props, key=_label_key)),
            max_edge_size=int(max_edge_size),
        )

    @cached_property
    def _incidence(self) -> dict[int, list[int]]:
        inc: dict[int, list[int]] = {v: [] for v in self.vertices}
        for idx, (e, _) in enumerate(self.edges):
            for v in e:
                inc[v].append(idx)
        return inc

    @cached_property
    def _vertex_set(self) -> frozenset:
        return frozenset(self.vertices)

    def __contains__(self, vertex) -> bool:
        return vertex in self._vertex_set

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class CountProfile:
    """Exact counts of ``m``-hyperedges with label ``P`` inside a neighborhood.

    ``counts`` is sparse: absent ``(m, P)`` keys mean zero.  Zero entries
    passed in are dropped so that equal profiles compare equal.
    """

    owner: int
    max_edge_size: int
    property_set: tuple[Label, ...]
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (m, P), c in self.counts.items():
            c = int(c)
            if c < 0:
                raise ValueError(f"negative count for {(m, P)}: {c}")
            if c:
                clean[(int(m), P)] = c
        object.__setattr__(self, "counts", clean)

    def __getitem__(self, key) -> int:
        return self.counts.get(key, 0)

    def total(self) -> int:
        return sum(self.counts.values())


def neighborhood(H: ExplicitHypergraph, a: int) -> frozenset:
    """``a`` together with every vertex sharing a hyperedge with it."""
    if a not in H:
        raise VertexNotFound(a)
    out = {a}
    for idx in H._incidence[a]:
        out |= H.edges[idx][0]
    return frozenset(out)


def count_profile(H: ExplicitHypergraph, a: int) -> CountProfile:
    N = neighborhood(H, a)
    # an edge inside N meets N, so scanning edges incident to N is enough
    candidates = set()
    for v in N:
        candidates.update(H._incidence[v])
    counts: dict = {}
    for idx in candidates:
        e, label = H.edges[idx]
        if e <= N:
            key = (len(e), label)
            counts[key] = counts.get(key, 0) + 1
    return CountProfile(a, H.max_edge_size, H.property_set, counts)


def profiles_equivalent(p: CountProfile, q: CountProfile) -> bool:
    return p.counts == q.counts


def _check_compatible(p: CountProfile, q: CountProfile):
    if set(p.property_set) != set(q.property_set):
        raise ValueError(
            f"mismatched property sets: {p.property_set} vs {q.property_set}"
        )


def metric_d(p: CountProfile, q: CountProfile) -> int:
    """Sum over sizes and labels of the absolute count differences."""
    _check_compatible(p, q)
    keys = p.counts.keys() | q.counts.keys()
    return sum(abs(p[k] - q[k]) for k in keys)


@dataclass(frozen=True)
class ProfileTable:
    """Dense view of many profiles: one row per vertex, one column per ``(m, P)``.

    ``values`` is int64 when every count fits, otherwise an object array of
    Python integers.
    """

    vertices: tuple[int, ...]
    columns: tuple[tuple[int, Label], ...]
    values: np.ndarray
    max_edge_size: int
    property_set: tuple[Label, ...]

    @staticmethod
    def column_keys(max_edge_size, property_set):
        return tuple((m, P) for m in range(1, max_edge_size + 1) for P in property_set)

    @classmethod
    def from_profiles(cls, profiles: Sequence[CountProfile]) -> "ProfileTable":
        if not profiles:
            raise ValueError("no profiles")
        first = profiles[0]
        ell = max(p.max_edge_size for p in profiles)
        for p in profiles[1:]:
            _check_compatible(first, p)
        extra = {k for p in profiles for k in p.counts}
        cols = list(cls.column_keys(ell, first.property_set))
        cols += sorted(extra - set(cols), key=lambda k: (k[0], _label_key(k[1])))
        rows = [[p[k] for k in cols] for p in profiles]
        return cls(
            vertices=tuple(p.owner for p in profiles),
            columns=tuple(cols),
            values=as_exact_array(rows, len(cols)),
            max_edge_size=ell,
            property_set=first.property_set,
        )

    @cached_property
    def index(self) -> dict[int, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    def profile(self, vertex: int) -> CountProfile:
        try:
            row = self.values[self.index[vertex]]
        except KeyError:
            raise VertexNotFound(vertex) from None
        counts = {k: int(c) for k, c in zip(self.columns, row)}
        return CountProfile(vertex, self.max_edge_size, self.property_set, counts)

    def profiles(self) -> list[CountProfile]:
        return [self.profile(v) for v in self.vertices]

    def restrict(self, vertices: Sequence[int]) -> "ProfileTable":
        idx = [self.index[v] for v in vertices]
        return ProfileTable(tuple(vertices), self.columns, self.values[idx],
                            self.max_edge_size, self.property_set)

    def distinct_count(self) -> int:
        return len({tuple(int(c) for c in row) for row in self.values})

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("vertex,m,property,count\n")
            for v, row in zip(self.vertices, self.values):
                for (m, P), c in zip(self.columns, row):
                    fh.write(f"{v},{m},{P},{int(c)}\n")


def as_exact_array(rows, width: int) -> np.ndarray:
    """Integer table as int64 when safe, else as Python-int objects."""
    arr = np.empty((len(rows), width), dtype=object)
    for i, row in enumerate(rows):
        arr[i, :] = row
    if arr.size == 0 or max(int(v) for v in arr.ravel()) < 2**63:
        return arr.astype(np.int64)
    return arr


def profile_table(H: ExplicitHypergraph) -> ProfileTable:
    profiles = [count_profile(H, a) for a in H.vertices]
    return ProfileTable.from_profiles(profiles)


@dataclass(frozen=True)
class DistanceMatrix:
    vertex_index: tuple[int, ...]
    entries: np.ndarray

    @property
    def order(self) -> int:
        return len(self.vertex_index)

    @cached_property
    def index(self) -> dict[int, int]:
        return {v: i for i, v in enumerate(self.vertex_index)}

    def position(self, vertex: int) -> int:
        try:
            return self.index[vertex]
        except KeyError:
            raise VertexNotFound(vertex) from None

    def value(self, u: int, v: int) -> int:
        return int(self.entries[self.position(u), self.position(v)])

    def restrict(self, vertices: Sequence[int]) -> "DistanceMatrix":
        idx = [self.position(v) for v in vertices]
        return DistanceMatrix(tuple(vertices), self.entries[np.ix_(idx, idx)])

    def check(self) -> None:
        """Raise ``ValueError`` unless the matrix is a pseudo-metric."""
        M = self.entries
        if (M != M.T).any():
            raise ValueError("distance matrix is not symmetric")
        if (np.diagonal(M) != 0).any():
            raise ValueError("distance matrix has a nonzero diagonal")
        if (M < 0).any():
            raise ValueError("distance matrix has negative entries")
        for k in range(self.order):
            if (M > M[:, [k]] + M[[k], :]).any():
                raise ValueError(f"triangle inequality fails through {self.vertex_index[k]}")

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            write_matrix_csv(self, fh)


def write_matrix_csv(M: DistanceMatrix, fh) -> None:
    fh.write(",".join(str(v) for v in M.vertex_index) + "\n")
    if M.entries.dtype != object:
        np.savetxt(fh, M.entries, fmt="%d", delimiter=",")
        return
    for row in M.entries:
        fh.write(",".join(str(int(x)) for x in row) + "\n")


def _unique_rows(values: np.ndarray):
    if values.dtype != object:
        uniq, back = np.unique(values, axis=0, return_inverse=True)
        return uniq, back.ravel()
    seen: dict = {}
    back = np.array([seen.setdefault(tuple(r), len(seen)) for r in values.tolist()], dtype=np.intp)
    uniq = np.empty((len(seen), values.shape[1]), dtype=object)
    for r, i in seen.items():
        uniq[i, :] = r
    return uniq, back


def distance_matrix_from_table(table: ProfileTable, jobs: int = 1) -> DistanceMatrix:
    # equivalent vertices share a row, so distances run over distinct profiles only
    if table.values.shape[0] == 0:
        return DistanceMatrix(table.vertices, np.zeros((0, 0), dtype=np.int64))
    uniq, back = _unique_rows(table.values)
    D = kernels.l1_distance_matrix(uniq, jobs=jobs)
    return DistanceMatrix(table.vertices, D[np.ix_(back, back)])


def distance_matrix(profiles: Sequence[CountProfile], jobs: int = 1) -> DistanceMatrix:
    if not profiles:
        raise ValueError("no profiles")
    return distance_matrix_from_table(ProfileTable.from_profiles(profiles), jobs=jobs)


# -- text format -------------------------------------------------------------

def _parse_label(token: str):
    try:
        return int(token)
    except ValueError:
        return token


def parse_hypergraph(text: str) -> ExplicitHypergraph:
    """Parse the line format ``edge <label> <v1> ... <vk>``.

    Optional records: ``vertices <v1> ...`` declares (possibly isolated)
    vertices and ``properties <p1> ...`` declares the property set.  Lines
    starting with ``#`` are comments.
    """
    vertices: list[int] = []
    props = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, *rest = line.split()
        try:
            if head == "edge":
                if len(rest) < 2:
                    raise HypergraphFormatError("edge needs a label and at least one vertex")
                edges.append(([int(t) for t in rest[1:]], _parse_label(rest[0])))
            elif head == "vertices":
                vertices.extend(int(t) for t in rest)
            elif head == "properties":
                props = (props or []) + [_parse_label(t) for t in rest]
            else:
                raise HypergraphFormatError(f"unknown record {head!r}")
        except ValueError as exc:
            raise HypergraphFormatError(f"line {lineno}: {exc}") from None
    declared = set(vertices) | {v for e, _ in edges for v in e}
    return ExplicitHypergraph.from_edges(edges, vertices=declared, property_set=props)


def read_hypergraph(path) -> ExplicitHypergraph:
    return parse_hypergraph(Path(path).read_text())


def format_hypergraph(H: ExplicitHypergraph) -> str:
    buf = io.StringIO()
    buf.write("properties " + " ".join(str(p) for p in H.property_set) + "\n")
    buf.write("vertices " + " ".join(str(v) for v in H.vertices) + "\n")
    for e, label in sorted(H.edges, key=lambda el: (len(el[0]), sorted(el[0]))):
        buf.write(f"edge {label} " + " ".join(str(v) for v in sorted(e)) + "\n")
    return buf.getvalue()


def write_hypergraph(H: ExplicitHypergraph, path) -> None:
    Path(path).write_text(format_hypergraph(H))
