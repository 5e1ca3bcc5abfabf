"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Compilation is excluded: each numba kernel is called once before timing.
"""
import argparse
import math
import time

import numpy as np

from edgeoverlap import _kernels, bloch
from edgeoverlap.graphs import all_permutations, random_graph


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_overlap(n, repeat):
    rng = np.random.default_rng(n)
    g1, g2 = random_graph(n, 0.5, rng), random_graph(n, 0.5, rng)
    adj = np.ascontiguousarray(g1.adj, dtype=np.int64)
    edges = np.ascontiguousarray(g2.edges(), dtype=np.int64)
    perms = np.ascontiguousarray(all_permutations(n), dtype=np.int64)
    _kernels.overlap_counts_numba(adj, edges, perms[:2])
    t_nb, a = best_of(lambda: _kernels.overlap_counts_numba(adj, edges, perms), repeat)
    t_np, b = best_of(lambda: _kernels.overlap_counts_numpy(adj, edges, perms), repeat)
    assert np.array_equal(a, b)
    return f"overlap n={n} ({perms.shape[0]} perms)", t_nb, t_np


def bench_rk4(s, nfact, k, repeat):
    pts = bloch.launch_points(list(range(k)), s, nfact)
    duration = bloch.evolution_time(s, nfact)
    n_steps, dt = bloch.EvolutionParams().steps_for(duration)
    c0 = math.cos(bloch.alpha0(s, nfact) / 2)
    args = (n_steps, dt, 1.0, c0, 1.0, _kernels.FEEDBACK_CLOSED_FORM, False)
    _kernels.rk4_bloch_numba(pts, 2, dt, 1.0, c0, 1.0, 0, False)
    t_nb, (a, _) = best_of(lambda: _kernels.rk4_bloch_numba(pts, *args), repeat)
    t_np, (b, _) = best_of(lambda: _kernels.rk4_bloch_numpy(pts, *args), repeat)
    assert np.allclose(a, b, atol=1e-12)
    return f"rk4 s={s}/{nfact} ({n_steps} steps, {pts.shape[0]} pts)", t_nb, t_np


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rows = [bench_overlap(n, args.repeat) for n in (7, 8, 9)]
    rows += [bench_rk4(s, 120, k, args.repeat) for s, k in ((1, 1), (7, 7), (60, 60))]
    print(f"{'case':<40}{'numba s':>12}{'numpy s':>12}{'speedup':>10}")
    for name, t_nb, t_np in rows:
        print(f"{name:<40}{t_nb:>12.5f}{t_np:>12.5f}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
