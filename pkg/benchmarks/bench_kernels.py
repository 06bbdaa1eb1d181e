"""Time the numba and pure-numpy paths of each kernel on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The first numba call compiles (or loads from cache); it is timed separately
and excluded from the per-call figures.
"""

import argparse
import time

import numpy as np
import scipy.linalg

from exkit import _kernels
from exkit.hermitian_core import random_flip_invariant, random_hermitian


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def cases():
    h2 = random_flip_invariant(2, seed=0)
    h3 = random_flip_invariant(3, seed=1)
    f = random_hermitian(2, seed=2)
    # Dicke generating functions evaluate exp(sA) at small s
    g = scipy.linalg.expm(0.1 * (random_hermitian(2, seed=3) + 1j * random_hermitian(2, seed=4)))
    th = np.linspace(0, np.pi, 129)
    ph = np.linspace(0, 2 * np.pi, 129, endpoint=False)
    yield "embed_pair_sum d=2 N=10", lambda u: _kernels.embed_pair_sum(h2, 2, 10, use_numba=u)
    yield "embed_pair_sum d=2 N=12", lambda u: _kernels.embed_pair_sum(h2, 2, 12, use_numba=u)
    yield "embed_pair_sum d=3 N=6", lambda u: _kernels.embed_pair_sum(h3, 3, 6, use_numba=u)
    yield "bloch_grid 129x129", lambda u: _kernels.bloch_grid_objective(h2, f, th, ph, use_numba=u)
    yield "generating_sum N=64 all (m,n)", lambda u: [
        _kernels.generating_sum(64, m, n, g, use_numba=u) for m in range(0, 65, 4) for n in range(0, 65, 4)
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        print("numba not available; only the numpy path can run")
    print(f"{'kernel':34s} {'compile':>9s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s} {'rel diff':>9s}")
    for name, fn in cases():
        t0 = time.perf_counter()
        if _kernels.HAVE_NUMBA:
            fn(True)
        compile_s = time.perf_counter() - t0
        tj, a = best_of(lambda: fn(True), args.repeat) if _kernels.HAVE_NUMBA else (float("nan"), None)
        tp, b = best_of(lambda: fn(False), args.repeat)
        if a is None:
            diff = float("nan")
        else:
            a, b = np.asarray(a), np.asarray(b)
            diff = float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))
        print(f"{name:34s} {compile_s:9.3f} {tj * 1e3:8.2f}ms {tp * 1e3:8.2f}ms {tp / tj:8.1f} {diff:9.1e}")


if __name__ == "__main__":
    main()
