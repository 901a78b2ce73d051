"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from hypermetric import kernels
from hypermetric.persistence import persistence_of_matrix


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _metric(rng, n):
    pts = rng.integers(0, 1000, size=(n, 4))
    return np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not available; only the fallback can run")

    cases = []
    P = rng.integers(0, 10**6, size=(2000, 16))
    cases.append(("l1 2000x16", lambda impl: kernels.l1_distance_matrix(P, impl=impl)))
    for n in (60, 150):
        D = _metric(rng, n)
        cases.append((f"rips H1 n={n}", lambda impl, D=D: persistence_of_matrix(D, impl=impl)))

    print(f"{'case':<16}" + "".join(f"{b:>12}" for b in sorted(backends)) + "     speedup")
    for name, fn in cases:
        times = {b: _best(lambda b=b: fn(b), args.repeat) for b in sorted(backends)}
        line = f"{name:<16}" + "".join(f"{times[b]:>11.4f}s" for b in sorted(backends))
        if len(times) == 2:
            line += f"  {times['python'] / times['compiled']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
