"""Nearest-neighbor sign prediction over a precomputed distance matrix.

Two neighbor rules:

* ``knn1`` takes exactly ``k`` training vertices, ordering equal distances by
  a random permutation.
* ``knnall`` takes every training vertex no farther than the ``k``-th nearest.

The prediction is ``sign`` of the summed neighbor labels, with ``sign(0) = 1``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Callable, Mapping, Sequence

import numpy as np

from hypermetric.core import DistanceMatrix

METHODS = ("knn1", "knnall")


def objective_sign(a: int) -> int:
    return -1 if a % 3 == 2 else 1


def sign_fn(x) -> int:
    return 1 if x >= 0 else -1


def round_half_up(x: float) -> int:
    return int(Decimal(repr(x)).to_integral_value(rounding=ROUND_HALF_UP))


def _train_distances(M: DistanceMatrix, train: Sequence[int], a: int) -> np.ndarray:
    row = M.entries[M.position(a)]
    return row[[M.position(t) for t in train]]


def _check(train, a, k):
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(train) < k:
        raise ValueError(f"training set has {len(train)} vertices, fewer than k={k}")
    if a in set(train):
        raise ValueError(f"vertex {a} is in the training set")


def knn1_neighbors(M: DistanceMatrix, train: Sequence[int], a: int, k: int,
                   rng: np.random.Generator | None = None, tiebreak=None) -> list[int]:
    """Exactly ``k`` nearest training vertices; ties broken by a random order.

    ``tiebreak`` (a permutation rank per training vertex) overrides ``rng``.
    """
    _check(train, a, k)
    d = _train_distances(M, train, a)
    if tiebreak is None:
        rng = rng if rng is not None else np.random.default_rng()
        tiebreak = rng.permutation(len(train))
    order = np.lexsort((np.asarray(tiebreak), d))
    return [train[i] for i in order[:k]]


def knnall_neighbors(M: DistanceMatrix, train: Sequence[int], a: int, k: int) -> list[int]:
    """Every training vertex within the distance of the ``k``-th nearest one."""
    _check(train, a, k)
    d = _train_distances(M, train, a)
    order = np.lexsort((np.asarray(train), d))
    cutoff = d[order[k - 1]]
    return [train[i] for i in order if d[i] <= cutoff]


def predict(f_train: Mapping[int, int], neighbors: Sequence[int]) -> int:
    if not neighbors:
        raise ValueError("no neighbors to vote")
    return sign_fn(sum(f_train[v] for v in neighbors))


def _ranks_int64(S):
    # only the order of distances matters; object arrays become dense ranks
    if S.dtype != object:
        return S
    _, inv = np.unique(S, return_inverse=True)
    return inv.reshape(S.shape).astype(np.int64)


def knn1_order(S: np.ndarray, tiebreak: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the ``k`` nearest per row, ties ordered by ``tiebreak``."""
    S = _ranks_int64(S)
    width = S.shape[1]
    if S.size and int(S.max()) < np.iinfo(np.int64).max // max(width, 1) - 1:
        key = S * width + tiebreak  # unique per row
        part = np.argpartition(key, k - 1, axis=1)[:, :k] if k < width else np.broadcast_to(np.arange(width), S.shape)
        sub = np.take_along_axis(key, part, axis=1)
        return np.take_along_axis(part, np.argsort(sub, axis=1, kind="stable"), axis=1)
    return np.lexsort((tiebreak, S), axis=1)[:, :k]


def batch_scores(S: np.ndarray, y_train: np.ndarray, k: int, method: str, tiebreak=None) -> np.ndarray:
    """Summed neighbor labels for each row of a test-by-train distance block."""
    S = _ranks_int64(S)
    if method == "knnall":
        kth = np.partition(S, k - 1, axis=1)[:, k - 1]
        return ((S <= kth[:, None]) * y_train[None, :]).sum(axis=1)
    if method == "knn1":
        return y_train[knn1_order(S, tiebreak, k)].sum(axis=1)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, trial]))


@dataclass(frozen=True)
class LabeledSplit:
    train: tuple[tuple[int, int], ...]
    test: tuple[int, ...]
    seed: int


def make_split(vertices: Sequence[int], labels: Callable[[int], int], split_fraction: float,
               rng: np.random.Generator, seed: int = 0) -> LabeledSplit:
    if not 0 < split_fraction < 1:
        raise ValueError("split_fraction must lie strictly between 0 and 1")
    n = len(vertices)
    ntrain = round_half_up(split_fraction * n)
    if ntrain < 1 or ntrain >= n:
        raise ValueError(f"degenerate split: {ntrain} training of {n} vertices")
    perm = rng.permutation(n)
    train = sorted(vertices[i] for i in perm[:ntrain])
    test = sorted(vertices[i] for i in perm[ntrain:])
    return LabeledSplit(tuple((v, labels(v)) for v in train), tuple(test), seed)


@dataclass
class KnnReport:
    method: str
    k_values: tuple[int, ...]
    rows: list[list[float]]
    averages: list[float]
    seed: int
    trial_seeds: list[tuple[int, int]]
    predictions: list[tuple[int, int, int]] = field(default_factory=list)
    prediction_key: tuple[int, int] | None = None

    def best_k(self) -> int:
        return self.k_values[int(np.argmin(self.averages))]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("trial," + ",".join(f"k={k}" for k in self.k_values) + "\n")
            for t, row in enumerate(self.rows, 1):
                fh.write(f"{t}," + ",".join(f"{e:.4f}" for e in row) + "\n")
            fh.write("Average," + ",".join(f"{e:.4f}" for e in self.averages) + "\n")

    def write_predictions(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("vertex,true_sign,predicted_sign\n")
            for v, t, p in self.predictions:
                fh.write(f"{v},{t},{p}\n")


def _run_trial(M, trial, method, k_values, split_fraction, master_seed, labels, record_k):
    rng = trial_rng(master_seed, trial)
    split = make_split(list(M.vertex_index), labels, split_fraction, rng, seed=master_seed)
    train = [v for v, _ in split.train]
    y_train = np.array([s for _, s in split.train], dtype=np.int64)
    y_test = np.array([labels(v) for v in split.test], dtype=np.int64)
    ti = [M.position(v) for v in train]
    si = [M.position(v) for v in split.test]
    S = M.entries[np.ix_(si, ti)]
    tiebreak = None
    if method == "knn1":
        tiebreak = rng.permuted(np.broadcast_to(np.arange(len(train)), S.shape), axis=1)
    if max(k_values) > len(train):
        raise ValueError(f"k={max(k_values)} exceeds the {len(train)} training vertices")
    nearest = knn1_order(S, tiebreak, max(k_values)) if method == "knn1" else None
    errors, preds = [], None
    for k in k_values:
        if nearest is not None:
            score = y_train[nearest[:, :k]].sum(axis=1)
        else:
            score = batch_scores(S, y_train, k, method)
        pred = np.where(score >= 0, 1, -1)
        errors.append(float((pred != y_test).mean()))
        if k == record_k:
            preds = list(zip(split.test, y_test.tolist(), pred.tolist()))
    return errors, preds


def run_experiment(M: DistanceMatrix, method: str, k_values: Sequence[int] = (1, 2, 3, 4, 5),
                   trials: int = 10, split_fraction: float = 0.7, master_seed: int = 0,
                   labels: Callable[[int], int] = objective_sign, jobs: int = 1,
                   record: tuple[int, int] | None = None) -> KnnReport:
    """Repeated random train/test splits; error rate per trial and ``k``.

    Each trial draws from its own generator seeded by ``(master_seed, trial)``,
    so results do not depend on ``jobs``.  ``record=(trial, k)`` (1-based
    trial) keeps the test predictions of that cell.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    k_values = tuple(int(k) for k in k_values)
    if not k_values or min(k_values) < 1:
        raise ValueError("k_values must be nonempty positive integers")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    record_trial, record_k = record if record else (None, None)

    def one(t):
        return _run_trial(M, t, method, k_values, split_fraction, master_seed, labels,
                          record_k if t + 1 == record_trial else None)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, range(trials)))
    else:
        results = [one(t) for t in range(trials)]

    rows = [r for r, _ in results]
    averages = [float(np.mean(col)) for col in zip(*rows)]
    report = KnnReport(method, k_values, rows, averages, master_seed,
                       [(master_seed, t) for t in range(trials)])
    if record_trial is not None:
        report.predictions = results[record_trial - 1][1] or []
        report.prediction_key = record
    return report
