"""Compiled core vs numpy fallback on the hot kernels.

    python3 benchmarks/bench_kernels.py [--level 14] [--replicas 64] [--repeat 3]

Prints best-of-``repeat`` wall time per kernel and the speedup; also checks that
both backends agree (uniforms bit-exactly, floats to a few ulps).
"""

import argparse
import time

import numpy as np

from mmrl import _fallback
from mmrl.kernel_haar import cell_nodes
from mmrl.params import build_alpha
from mmrl.sampler import sheet_laws, stream_key

try:
    from mmrl import _core
except ImportError:  # extension not built
    _core = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(level, replicas):
    alpha = build_alpha({"family": "sine", "p1": 1.5, "p2": 0.3})
    a, scale = sheet_laws(alpha, level)
    keys = np.array([stream_key(1, r) for r in range(replicas)], dtype=np.uint64)
    weights = np.ascontiguousarray(np.random.default_rng(0).random((3, a.size)))
    nodes = cell_nodes(alpha, level)
    n = a.size

    def uniforms(mod):
        return lambda: mod.uniform_pairs(int(keys[0]), 0, n * replicas)

    def sheets(mod):
        out = np.empty((replicas, n))
        return lambda: mod.sas_sheets(keys, a, scale, out) or out

    def project(mod):
        out = np.empty((replicas, 3))
        return lambda: mod.sas_project(keys, a, scale, weights, out) or out

    def cells(mod):
        out = np.zeros(n)
        return lambda: mod.kernel_cells(1.0, 0.9, nodes.nodes, nodes.inv_alpha, nodes.weights,
                                        1.0 / n, n - 1, out) or out

    draws = n * replicas
    return [("uniform_pairs", uniforms, draws), ("sas_sheets", sheets, draws),
            ("sas_project", project, draws), ("kernel_cells", cells, n * 16)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--level", type=int, default=14)
    ap.add_argument("--replicas", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _core is None:
        print("compiled core not available; only the fallback can run")
        return
    print(f"level={args.level} replicas={args.replicas} repeat={args.repeat}")
    print(f"{'kernel':<15}{'cython s':>11}{'python s':>11}{'ns/item cy':>12}{'speedup':>9}{'max diff':>11}")
    for name, make, items in cases(args.level, args.replicas):
        fast, slow = make(_core), make(_fallback)
        t_fast, t_slow = best_of(fast, args.repeat), best_of(slow, args.repeat)
        a, b = fast(), slow()
        diff = max(float(np.max(np.abs(x - y))) for x, y in zip(np.atleast_2d(a), np.atleast_2d(b)))
        print(f"{name:<15}{t_fast:>11.4f}{t_slow:>11.4f}{1e9 * t_fast / items:>12.2f}"
              f"{t_slow / t_fast:>9.1f}{diff:>11.2e}")


if __name__ == "__main__":
    main()
