"""Vietoris-Rips persistent homology (dimensions 0 and 1) of the metric on
neighborhoods, and the nested-prefix experiment.

Barcodes are computed on the quotient by zero distance: equal points only
add zero-length bars, which are dropped anyway, so the positive part of the
barcode is unchanged while the point count falls to the number of classes.
The filtration runs over the exact distinct distance values; internally the
distances are replaced by their ranks, so arbitrarily large integers work.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from hypermetric import kernels
from hypermetric.community import partition
from hypermetric.core import DistanceMatrix
from hypermetric.pipeline import distance_matrix_of

INF = math.inf


@dataclass(frozen=True)
class QuotientSpace:
    classes: tuple[int, ...]
    multiplicity: dict
    reduced_matrix: np.ndarray


def quotient(M: DistanceMatrix) -> QuotientSpace:
    part = partition(M)
    idx = [M.position(r) for r in part.representatives]
    return QuotientSpace(
        part.representatives,
        part.sizes(),
        M.entries[np.ix_(idx, idx)],
    )


@dataclass(frozen=True)
class Barcode:
    """Persistence intervals ``(dimension, birth, death)``; ``death`` may be ``inf``."""

    intervals: tuple[tuple[int, object, object], ...]

    def of_dim(self, dim: int) -> list[tuple[object, object]]:
        return [(b, d) for k, b, d in self.intervals if k == dim]

    def max_finite_death(self):
        finite = [d for _, _, d in self.intervals if d != INF]
        return max(finite, default=0)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("dimension,birth,death\n")
            for k, b, d in self.intervals:
                fh.write(f"{k},{b},{'inf' if d == INF else d}\n")


def _canonical(intervals) -> tuple:
    return tuple(sorted(intervals, key=lambda t: (t[0], t[1], t[2])))


def persistence_of_matrix(entries, max_dim: int = 1, impl=None) -> Barcode:
    """Barcode of the Vietoris-Rips filtration of a square distance array.

    Zero-length intervals are discarded.  Dimension 0 always carries one
    infinite interval; dimension 1 has none, because the complex is a cone
    (hence contractible) once the scale reaches the enclosing radius, which
    is where the filtration is truncated.
    """
    entries = np.asarray(entries)
    n = entries.shape[0]
    if n == 0:
        raise ValueError("empty space")
    if max_dim not in (0, 1):
        raise ValueError("max_dim must be 0 or 1")
    values, ranks = np.unique(entries, return_inverse=True)
    ranks = ranks.reshape(n, n).astype(np.int64)
    threshold = int(ranks.max(axis=1).min())
    h0, h1, essential = kernels.rips_pairs(ranks, threshold, max_dim, impl=impl)
    val = [int(v) for v in values]
    out = [(0, 0, INF)]
    out += [(0, 0, val[d]) for d in h0 if val[d] > 0]
    out += [(1, val[b], val[d]) for b, d in h1 if b != d]
    out += [(1, val[b], INF) for b in essential]
    return Barcode(_canonical(out))


def vr_persistence(space, max_dim: int = 1, impl=None) -> Barcode:
    if isinstance(space, QuotientSpace):
        entries = space.reduced_matrix
    elif isinstance(space, DistanceMatrix):
        entries = space.entries
    else:
        entries = space
    return persistence_of_matrix(entries, max_dim=max_dim, impl=impl)


@dataclass(frozen=True)
class FiltrationSpec:
    """Nested prefixes ``X_1 ⊂ ... ⊂ X_h`` given by their sizes."""

    cutoffs: tuple[int, ...]

    def __post_init__(self):
        c = tuple(int(x) for x in self.cutoffs)
        object.__setattr__(self, "cutoffs", c)
        if not c:
            raise ValueError("filtration needs at least one cutoff")
        if c[0] < 1 or any(b <= a for a, b in zip(c, c[1:])):
            raise ValueError(f"cutoffs must be positive and strictly increasing: {c}")

    @classmethod
    def parse(cls, text: str) -> "FiltrationSpec":
        try:
            return cls(tuple(int(t) for t in text.split(",") if t.strip()))
        except ValueError as exc:
            raise ValueError(f"bad filtration {text!r}: {exc}") from None


def filtration_barcodes(source, F: FiltrationSpec, max_dim: int = 1, jobs: int = 1) -> list[tuple[int, Barcode]]:
    """One barcode per prefix of the source's vertex order.

    The metric is computed once on the whole source and restricted to each
    prefix, so every ``X_k`` carries the same metric.
    """
    M = distance_matrix_of(source, jobs=jobs)
    if F.cutoffs[-1] > M.order:
        raise ValueError(f"cutoff {F.cutoffs[-1]} exceeds the {M.order} available vertices")

    def step(nk):
        sub = M.restrict(M.vertex_index[:nk])
        return nk, vr_persistence(quotient(sub), max_dim=max_dim)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(step, F.cutoffs))
    return [step(nk) for nk in F.cutoffs]


def bar_count(b: Barcode, dim: int, min_persistence: float = 0.0, include_infinite: bool = True) -> int:
    """Intervals of ``dim`` living strictly longer than ``min_persistence``.

    Infinite intervals are counted unless ``include_infinite`` is false; the
    latter matches plots that leave the never-dying bar out.
    """
    if min_persistence < 0:
        raise ValueError("min_persistence must be >= 0")
    n = 0
    for birth, death in b.of_dim(dim):
        if death == INF:
            n += include_infinite
        elif death - birth > min_persistence:
            n += 1
    return n


def important_threshold(b: Barcode, fraction: float = 0.05) -> float:
    """Default cut for "important" bars: a fraction of the largest finite death."""
    return fraction * b.max_finite_death()


_COLORS = {0: "#1f4e9c", 1: "#c0392b"}


def barcode_svg(b: Barcode, title: str = "", width: int = 640) -> str:
    bars = list(b.intervals)
    top = b.max_finite_death() or 1
    span = top * 1.1
    row_h, pad_l, pad_t = 6, 40, 24
    height = pad_t + row_h * max(len(bars), 1) + 24
    plot_w = width - pad_l - 20

    def x(v):
        return pad_l + plot_w * (min(v, span) / span)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{pad_l}" y="16" font-family="sans-serif" font-size="12">{title}</text>',
    ]
    for i, (k, birth, death) in enumerate(bars):
        y = pad_t + i * row_h
        x0, x1 = x(birth), x(span if death == INF else death)
        parts.append(
            f'<rect x="{x0:.2f}" y="{y}" width="{max(x1 - x0, 0.5):.2f}" height="{row_h - 2}" '
            f'fill="{_COLORS.get(k, "#555")}"><title>H{k} [{birth}, {death})</title></rect>'
        )
    axis_y = height - 18
    parts.append(f'<line x1="{pad_l}" y1="{axis_y}" x2="{pad_l + plot_w}" y2="{axis_y}" stroke="black"/>')
    parts.append(f'<text x="{pad_l}" y="{axis_y + 14}" font-family="sans-serif" font-size="10">0</text>')
    parts.append(
        f'<text x="{x(top):.2f}" y="{axis_y + 14}" font-family="sans-serif" font-size="10">{top}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_barcode_svg(b: Barcode, path, title: str = "") -> None:
    with open(path, "w") as fh:
        fh.write(barcode_svg(b, title=title))


def summarize(steps: Sequence[tuple[int, Barcode]], min_persistence: float | None = None) -> list[dict]:
    rows = []
    for nk, b in steps:
        cut = important_threshold(b) if min_persistence is None else min_persistence
        rows.append({
            "n": nk,
            "dim0_bars": bar_count(b, 0),
            "dim0_finite_bars": bar_count(b, 0, include_infinite=False),
            "dim1_bars": bar_count(b, 1),
            "dim1_threshold": cut,
            "dim1_important": bar_count(b, 1, min_persistence=cut),
        })
    return rows
