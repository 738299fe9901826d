"""Time the numba kernels against their pure-numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat N] [--json]

Both paths are imported directly, so the HARDY_LORENTZ_PURE_NUMPY flag
does not matter here. Results are checked for agreement before timing.
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from hardy_lorentz import kernels
from hardy_lorentz.filtration import uniform_tree
from hardy_lorentz.process import stopping_time_matrix


def _best_time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_antichain_sums(repeat: int) -> dict:
    tree = uniform_tree(2, 4, mode="float")
    rows = stopping_time_matrix(tree)
    rng = np.random.default_rng(0)
    a, b = rng.random(tree.size), rng.random(tree.size)
    ref = kernels.antichain_sums_numpy(rows, a, b)
    got = kernels.antichain_sums_numba(rows, a, b)
    assert np.allclose(ref[0], got[0]) and np.allclose(ref[1], got[1])
    return {
        "kernel": "antichain_sums",
        "size": f"{rows.shape[0]} stop rules x {rows.shape[1]} nodes",
        "numpy_s": _best_time(lambda: kernels.antichain_sums_numpy(rows, a, b), repeat),
        "numba_s": _best_time(lambda: kernels.antichain_sums_numba(rows, a, b), repeat),
    }


def bench_sequence_search(repeat: int) -> dict:
    rng = np.random.default_rng(1)
    m, k = 30, 5
    c, w = rng.random(m), rng.random(m) + 0.05
    scale = 2.0 ** np.arange(-2, -2 + k)
    ref = kernels.sequence_search_numpy(c, w, scale, 2.0)
    got = kernels.sequence_search_numba(c, w, scale, 2.0)
    assert abs(ref[0] - got[0]) <= 1e-12 * ref[0]
    return {
        "kernel": "sequence_search",
        "size": f"{m}^{k} sequences",
        "numpy_s": _best_time(lambda: kernels.sequence_search_numpy(c, w, scale, 2.0), repeat),
        "numba_s": _best_time(lambda: kernels.sequence_search_numba(c, w, scale, 2.0), repeat),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()
    if kernels.numba is None:
        raise SystemExit("numba is not installed; nothing to compare")
    results = [bench_antichain_sums(args.repeat), bench_sequence_search(args.repeat)]
    for r in results:
        r["speedup"] = r["numpy_s"] / r["numba_s"]
    if args.json:
        print(json.dumps(results, indent=2))
        return
    for r in results:
        print(f"{r['kernel']:<16} {r['size']:<32} numpy {r['numpy_s']:.4f}s  numba {r['numba_s']:.4f}s  x{r['speedup']:.1f}")


if __name__ == "__main__":
    main()
