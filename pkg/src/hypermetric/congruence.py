"""Congruence hypergraphs kept implicit.

Every hyperedge family used here has a closed form.  A *pool* family of size
``m`` makes every ``m``-subset of one residue class an edge; a *bin* family of
size ``m`` makes every choice of one eligible vertex per bin an edge.  Counting
inside a neighborhood therefore reduces to binomials and products of
intersection sizes, which is what makes the thousand-vertex examples with
~10^11 edges per neighborhood tractable.  :func:`enumerate_hypergraph`
materialises small instances for cross-checking.
"""
from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Union

import numpy as np

from hypermetric.core import (
    CountProfile,
    ExplicitHypergraph,
    ProfileTable,
    VertexNotFound,
    as_exact_array,
)


class SpecError(ValueError):
    pass


class EnumerationInfeasible(RuntimeError):
    def __init__(self, count: int, cap: int):
        super().__init__(f"enumeration infeasible: {count} edges > {cap}")
        self.count = count
        self.cap = cap


# -- specs -------------------------------------------------------------------

@dataclass(frozen=True)
class CongruenceBlock:
    """One block ``V_i`` of the general family.

    ``moduli[k - 2]`` and ``residues[k - 2]`` drive the ``k``-hyperedges for
    ``k = 2 .. max_size``: a ``k``-subset is an edge when all its members are
    congruent modulo ``p_k`` and their common residue lies in ``S_k``.
    """

    vertices: tuple[int, ...]
    max_size: int
    moduli: tuple[int, ...]
    residues: tuple[frozenset, ...]

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(int(v) for v in self.vertices))
        object.__setattr__(self, "moduli", tuple(int(p) for p in self.moduli))
        object.__setattr__(self, "residues", tuple(frozenset(int(r) for r in S) for S in self.residues))
        if len(set(self.vertices)) != len(self.vertices):
            raise SpecError("block vertices must be distinct")
        if any(v < 0 for v in self.vertices):
            raise SpecError("vertex ids must be nonnegative")
        if not 2 <= self.max_size <= len(self.vertices):
            raise SpecError(
                f"max size must satisfy 2 <= s <= |V| (s={self.max_size}, |V|={len(self.vertices)})"
            )
        if len(self.moduli) != self.max_size - 1 or len(self.residues) != self.max_size - 1:
            raise SpecError("need one modulus and one residue set for each size 2..s")
        if any(p < 2 for p in self.moduli):
            raise SpecError("moduli must be >= 2")


@dataclass(frozen=True)
class LabelRule:
    """Label 1 when every vertex of the edge has a residue in ``residues``
    modulo ``modulus``; label 0 otherwise."""

    modulus: int
    residues: frozenset

    def __post_init__(self):
        if self.modulus < 1:
            raise SpecError("label modulus must be positive")
        object.__setattr__(self, "residues", frozenset(int(r) % self.modulus for r in self.residues))


@dataclass(frozen=True)
class GeneralCongruenceSpec:
    blocks: tuple[CongruenceBlock, ...]
    label_rule: LabelRule | None = None

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        seen: set[int] = set()
        for b in self.blocks:
            overlap = seen.intersection(b.vertices)
            if overlap:
                raise SpecError(f"blocks are not disjoint: {sorted(overlap)[:5]}")
            seen.update(b.vertices)


@dataclass(frozen=True)
class Example1Spec:
    """Vertices ``1..n``; same-parity pairs; ``k``-edges (``3 <= k <= 9``) on
    the class ``k mod 3`` modulo ``k``; label 1 iff all members are divisible
    by ``divisor_property_modulus``."""

    n_vertices: int = 1000
    divisor_property_modulus: int = 11

    def __post_init__(self):
        if self.n_vertices < 9:
            raise SpecError("example1 needs n_vertices >= 9")
        if self.divisor_property_modulus < 1:
            raise SpecError("divisor_property_modulus must be positive")

    def to_general(self) -> GeneralCongruenceSpec:
        moduli = [2] + list(range(3, 10))
        residues = [{0, 1}] + [{k % 3} for k in range(3, 10)]
        block = CongruenceBlock(tuple(range(1, self.n_vertices + 1)), 9, tuple(moduli), tuple(residues))
        return GeneralCongruenceSpec((block,), LabelRule(self.divisor_property_modulus, frozenset({0})))


def _is_small_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, math.isqrt(p) + 1))


@dataclass(frozen=True)
class Example2Spec:
    """A seeded random sample of ``{1..universe_max}``; the ``m``-edges pick
    one vertex ``= 1 (mod alphas[m-2])`` from each of ``m`` quantile bins.
    Label -1 iff every member's symmetric residue modulo ``beta`` is <= 0."""

    universe_max: int = 8000
    sample_size: int = 5000
    alphas: tuple[int, ...] = (3, 4, 5, 7, 11, 13, 17, 19)
    beta: int = 23
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(int(a) for a in self.alphas))
        if len(self.alphas) != 8:
            raise SpecError("example2 needs exactly 8 moduli (sizes 2..9)")
        if any(a < 2 for a in self.alphas):
            raise SpecError("moduli must be >= 2")
        for x, y in itertools.combinations(self.alphas, 2):
            if math.gcd(x, y) != 1:
                raise SpecError(f"moduli not pairwise coprime: gcd({x}, {y}) = {math.gcd(x, y)}")
        if self.beta % 2 == 0 or not _is_small_prime(self.beta):
            raise SpecError(f"beta must be an odd prime, got {self.beta}")
        if any(a % self.beta == 0 for a in self.alphas):
            raise SpecError("beta must not divide any modulus")
        if not 9 <= self.sample_size <= self.universe_max:
            raise SpecError("need 9 <= sample_size <= universe_max")


Spec = Union[GeneralCongruenceSpec, Example1Spec, Example2Spec]


# -- implicit hypergraph -----------------------------------------------------

@dataclass(frozen=True)
class PoolFamily:
    size: int
    members: np.ndarray  # bool over vertex positions


@dataclass(frozen=True)
class BinFamily:
    size: int
    bins: np.ndarray  # (size, n) bool: eligible vertices of each bin


@dataclass
class ImplicitHypergraph:
    spec: Spec
    vertices: np.ndarray
    families: list
    special_mask: np.ndarray
    special_label: object
    default_label: object
    property_set: tuple
    max_edge_size: int
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {int(v): i for i, v in enumerate(self.vertices)}

    def __len__(self):
        return len(self.vertices)

    def position(self, a: int) -> int:
        try:
            return self.index[int(a)]
        except KeyError:
            raise VertexNotFound(a) from None

    def label_of(self, members) -> object:
        if self.special_label is not None and all(self.special_mask[self.position(v)] for v in members):
            return self.special_label
        return self.default_label

    def pools(self, size: int) -> list[frozenset]:
        """Vertex sets of the pool families of one size (general / example 1)."""
        return [frozenset(self.vertices[f.members].tolist())
                for f in self.families if isinstance(f, PoolFamily) and f.size == size]

    def _units(self):
        # (who belongs, what they see) for every family that admits an edge
        units = []
        for f in self.families:
            if isinstance(f, PoolFamily):
                if f.members.sum() >= f.size:
                    units.append((f.members, f.members))
            elif f.bins.any(axis=1).all():
                everyone = f.bins.any(axis=0)
                for j in range(f.size):
                    units.append((f.bins[j], everyone & ~f.bins[j]))
        return units


def _build_general(spec: GeneralCongruenceSpec, source) -> ImplicitHypergraph:
    vertices = np.array(sorted(v for b in spec.blocks for v in b.vertices), dtype=np.int64)
    families = []
    for b in spec.blocks:
        in_block = np.isin(vertices, np.array(b.vertices, dtype=np.int64))
        for k in range(2, b.max_size + 1):
            p = b.moduli[k - 2]
            for r in sorted({s % p for s in b.residues[k - 2]}):
                families.append(PoolFamily(k, in_block & (vertices % p == r)))
    rule = spec.label_rule
    if rule is None:
        special = np.zeros(len(vertices), dtype=bool)
        special_label, default_label, props = None, 0, (0,)
    else:
        special = np.isin(vertices % rule.modulus, sorted(rule.residues))
        special_label, default_label, props = 1, 0, (0, 1)
    ell = max((b.max_size for b in spec.blocks), default=1)
    return ImplicitHypergraph(source, vertices, families, special, special_label,
                              default_label, props, ell)


def quantile_bins(n: int, parts: int) -> list[tuple[int, int]]:
    """Slices of a sorted list of ``n`` distinct values into ``parts`` bins.

    Bin ``j`` holds the values above the nearest-rank ``(j-1)/parts``
    quantile and at most the ``j/parts`` quantile.
    """
    cuts = [-(-j * n // parts) for j in range(parts + 1)]
    return [(cuts[j], cuts[j + 1]) for j in range(parts)]


def sample_vertices(spec: Example2Spec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    picked = rng.choice(spec.universe_max, size=spec.sample_size, replace=False) + 1
    return np.sort(picked).astype(np.int64)


def symmetric_residue(a, beta: int):
    r = np.asarray(a) % beta
    return np.where(r > (beta - 1) // 2, r - beta, r)


def _build_example2(spec: Example2Spec) -> ImplicitHypergraph:
    vertices = sample_vertices(spec)
    n = len(vertices)
    families = []
    for m, alpha in zip(range(2, 10), spec.alphas):
        eligible = vertices % alpha == 1
        bins = np.zeros((m, n), dtype=bool)
        for j, (lo, hi) in enumerate(quantile_bins(n, m)):
            bins[j, lo:hi] = eligible[lo:hi]
        families.append(BinFamily(m, bins))
    negative = symmetric_residue(vertices, spec.beta) <= 0
    return ImplicitHypergraph(spec, vertices, families, negative, -1, 1, (-1, 1), 9)


def build(spec: Spec) -> ImplicitHypergraph:
    if isinstance(spec, Example1Spec):
        return _build_general(spec.to_general(), spec)
    if isinstance(spec, Example2Spec):
        return _build_example2(spec)
    if isinstance(spec, GeneralCongruenceSpec):
        return _build_general(spec, spec)
    raise TypeError(f"not a congruence spec: {type(spec).__name__}")


# -- counting ----------------------------------------------------------------

@lru_cache(maxsize=None)
def _comb(n: int, k: int) -> int:
    return math.comb(n, k)


@dataclass(frozen=True)
class EdgeCounts:
    total: int
    breakdown: dict  # (size, label) -> exact count

    def by_size(self) -> dict:
        out: dict = {}
        for (m, _), c in self.breakdown.items():
            out[m] = out.get(m, 0) + c
        return out


def _family_counts(f, inside, special_inside):
    """(all, special) edge counts of one family restricted to a vertex mask."""
    if isinstance(f, PoolFamily):
        q = int((f.members & inside).sum())
        s = int((f.members & special_inside).sum())
        return _comb(q, f.size), _comb(s, f.size)
    tot = math.prod(int(x) for x in (f.bins & inside).sum(axis=1))
    spc = math.prod(int(x) for x in (f.bins & special_inside).sum(axis=1))
    return tot, spc


def _to_counts(ih: ImplicitHypergraph, per_family) -> dict:
    counts: dict = {}
    for f, (tot, spc) in zip(ih.families, per_family):
        if ih.special_label is None:
            spc = 0
        if spc:
            key = (f.size, ih.special_label)
            counts[key] = counts.get(key, 0) + spc
        if tot - spc:
            key = (f.size, ih.default_label)
            counts[key] = counts.get(key, 0) + tot - spc
    return counts


def hyperedge_count_total(ih: ImplicitHypergraph) -> EdgeCounts:
    everyone = np.ones(len(ih.vertices), dtype=bool)
    counts = _to_counts(ih, [_family_counts(f, everyone, ih.special_mask) for f in ih.families])
    return EdgeCounts(sum(counts.values()), counts)


def _neighborhood_mask(ih: ImplicitHypergraph, pos: int) -> np.ndarray:
    mask = np.zeros(len(ih.vertices), dtype=bool)
    mask[pos] = True
    for member, sees in ih._units():
        if member[pos]:
            mask |= sees
    return mask


def analytic_neighborhood(ih: ImplicitHypergraph, a: int) -> frozenset:
    mask = _neighborhood_mask(ih, ih.position(a))
    return frozenset(ih.vertices[mask].tolist())


def analytic_count_profile(ih: ImplicitHypergraph, a: int) -> CountProfile:
    mask = _neighborhood_mask(ih, ih.position(a))
    per_family = [_family_counts(f, mask, mask & ih.special_mask) for f in ih.families]
    return CountProfile(int(a), ih.max_edge_size, ih.property_set, _to_counts(ih, per_family))


def _count_masks(ih: ImplicitHypergraph) -> tuple[np.ndarray, list]:
    rows, layout = [], []
    for f in ih.families:
        base = f.members[None, :] if isinstance(f, PoolFamily) else f.bins
        start = len(rows)
        rows.extend(base)
        rows.extend(base & ih.special_mask)
        layout.append((start, len(base)))
    if not rows:
        return np.zeros((0, len(ih.vertices)), dtype=bool), layout
    return np.array(rows, dtype=bool), layout


def neighborhood_intersections(ih: ImplicitHypergraph, jobs: int = 1, chunk: int = 256) -> np.ndarray:
    """``|X ∩ N(a)|`` for every vertex ``a`` (rows) and count mask ``X`` (columns).

    Vertices that belong to the same families share one neighborhood up to
    themselves, so the heavy products run once per membership signature.
    """
    n = len(ih.vertices)
    X, _ = _count_masks(ih)
    units = ih._units()
    if not units or X.shape[0] == 0:
        return X.T.astype(np.int64)
    member = np.array([u[0] for u in units]).T  # n x U
    sees = np.array([u[1] for u in units], dtype=np.float64)  # U x n
    sigs, sig_of = np.unique(member, axis=0, return_inverse=True)
    sig_of = sig_of.ravel()
    Xf = X.T.astype(np.float64)
    # counts stay far below 2**53, so float products are exact
    per_sig = np.zeros((len(sigs), X.shape[0]), dtype=np.int64)
    own = np.zeros(n, dtype=bool)

    def work(lo):
        hi = min(lo + chunk, len(sigs))
        base = (sigs[lo:hi].astype(np.float64) @ sees) > 0
        per_sig[lo:hi] = np.rint(base.astype(np.float64) @ Xf).astype(np.int64)
        rows = np.flatnonzero((sig_of >= lo) & (sig_of < hi))
        own[rows] = base[sig_of[rows] - lo, rows]

    starts = range(0, len(sigs), chunk)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(work, starts))
    else:
        for lo in starts:
            work(lo)
    return per_sig[sig_of] + (~own)[:, None] * X.T.astype(np.int64)


def analytic_profile_table(ih: ImplicitHypergraph, jobs: int = 1) -> ProfileTable:
    """Count profiles of every vertex, exact, as a :class:`ProfileTable`."""
    inter = neighborhood_intersections(ih, jobs=jobs)
    _, layout = _count_masks(ih)
    cols = ProfileTable.column_keys(ih.max_edge_size, ih.property_set)
    col_of = {k: i for i, k in enumerate(cols)}
    uniq, back = np.unique(inter, axis=0, return_inverse=True)
    rows = []
    for r in uniq:
        per_family = []
        for f, (start, width) in zip(ih.families, layout):
            q = r[start:start + width]
            s = r[start + width:start + 2 * width]
            if isinstance(f, PoolFamily):
                per_family.append((_comb(int(q[0]), f.size), _comb(int(s[0]), f.size)))
            else:
                per_family.append((math.prod(int(x) for x in q), math.prod(int(x) for x in s)))
        row = [0] * len(cols)
        for key, c in _to_counts(ih, per_family).items():
            row[col_of[key]] += c
        rows.append(row)
    values = as_exact_array(rows, len(cols))[back.ravel()] if rows else np.zeros((len(ih.vertices), len(cols)), np.int64)
    return ProfileTable(tuple(int(v) for v in ih.vertices), cols, values,
                        ih.max_edge_size, ih.property_set)


# -- enumeration -------------------------------------------------------------

def iter_edges(ih: ImplicitHypergraph):
    verts = ih.vertices
    for f in ih.families:
        if isinstance(f, PoolFamily):
            for combo in itertools.combinations(verts[f.members].tolist(), f.size):
                yield combo
        else:
            for combo in itertools.product(*(verts[b].tolist() for b in f.bins)):
                yield combo


def enumerate_hypergraph(ih: ImplicitHypergraph, cap: int = 10**6) -> ExplicitHypergraph:
    """Materialise every hyperedge with its label; refuses beyond ``cap`` edges."""
    total = hyperedge_count_total(ih).total
    if total > cap:
        raise EnumerationInfeasible(total, cap)
    edges = [(combo, ih.label_of(combo)) for combo in iter_edges(ih)]
    return ExplicitHypergraph.from_edges(
        edges,
        vertices=ih.vertices.tolist(),
        property_set=ih.property_set,
        max_edge_size=ih.max_edge_size,
    )


# -- JSON --------------------------------------------------------------------

def spec_from_dict(data: dict) -> Spec:
    if not isinstance(data, dict) or "kind" not in data:
        raise SpecError('spec must be a JSON object with a "kind" field')
    kind = data["kind"]
    body = {k: v for k, v in data.items() if k != "kind"}
    try:
        if kind == "example1":
            return Example1Spec(**body)
        if kind == "example2":
            if "alphas" in body:
                body["alphas"] = tuple(body["alphas"])
            return Example2Spec(**body)
        if kind == "general":
            blocks = tuple(
                CongruenceBlock(
                    vertices=tuple(b["vertices"]),
                    max_size=int(b["max_size"]),
                    moduli=tuple(b["moduli"]),
                    residues=tuple(frozenset(S) for S in b["residues"]),
                )
                for b in body.get("blocks", [])
            )
            rule = body.get("label_rule")
            if rule is not None:
                rule = LabelRule(int(rule["modulus"]), frozenset(rule["residues"]))
            return GeneralCongruenceSpec(blocks, rule)
    except (TypeError, KeyError) as exc:
        raise SpecError(f"bad {kind} spec: {exc}") from None
    raise SpecError(f"unknown spec kind: {kind!r}")


def spec_to_dict(spec: Spec) -> dict:
    if isinstance(spec, Example1Spec):
        return {"kind": "example1", "n_vertices": spec.n_vertices,
                "divisor_property_modulus": spec.divisor_property_modulus}
    if isinstance(spec, Example2Spec):
        return {"kind": "example2", "universe_max": spec.universe_max,
                "sample_size": spec.sample_size, "alphas": list(spec.alphas),
                "beta": spec.beta, "seed": spec.seed}
    out = {"kind": "general", "blocks": [
        {"vertices": list(b.vertices), "max_size": b.max_size, "moduli": list(b.moduli),
         "residues": [sorted(S) for S in b.residues]}
        for b in spec.blocks
    ]}
    if spec.label_rule is not None:
        out["label_rule"] = {"modulus": spec.label_rule.modulus,
                             "residues": sorted(spec.label_rule.residues)}
    return out


def load_spec(path) -> Spec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON ({exc})") from None
    return spec_from_dict(data)
