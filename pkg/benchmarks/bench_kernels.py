"""Timing comparison of the jitted kernels against their numpy fallbacks.

Run from the repository root:

    python3 benchmarks/bench_kernels.py --repeat 5

The first jitted call per kernel pays numba's compilation cost; a warmup
call keeps that out of the numbers. Sizes default to values typical of
the desk-scale experiments (a few hundred nodes per curve).
"""

import argparse
import timeit

import numpy as np

from rodfilm import _kernels as K


def loop_nodes(rng, n, offset=(0.0, 0.0, 0.0)):
    s = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    pts = np.stack([np.cos(s), np.sin(s), np.zeros_like(s)], axis=1)
    for k in (2, 3):
        amp = 0.3 / k
        pts += amp * rng.standard_normal(3) * np.sin(k * s)[:, None]
        pts += amp * rng.standard_normal(3) * np.cos(k * s)[:, None]
    return pts + np.asarray(offset)


def build_cases(rng, n):
    a = loop_nodes(rng, n)
    b = loop_nodes(rng, n, offset=(0.4, 0.1, 0.9))
    da = np.roll(a, -1, axis=0) - a
    db = np.roll(b, -1, axis=0) - b

    s = np.linspace(0.0, 2.0 * np.pi, n + 1)
    k1 = 1.0 + 0.3 * np.sin(2.0 * s)
    zeros = np.zeros_like(s)
    x0 = np.array([0.0, 1.0, 0.0])
    t0 = np.array([1.0, 0.0, 0.0])
    d0 = np.array([0.0, -1.0, 0.0])
    frame = K.rk4_frame.via("numpy", s, k1, 0.2 * np.cos(s), zeros, x0, t0, d0)
    x, t, d = frame[0], frame[1], frame[2]

    pts = rng.standard_normal((4 * n, 3))
    segs0 = rng.standard_normal((n, 3))
    segs1 = segs0 + 0.3 * rng.standard_normal((n, 3))
    va = rng.standard_normal((n, 3))
    vb = va + rng.standard_normal((n, 3))
    vc = va + rng.standard_normal((n, 3))

    return [
        ("rk4_frame", K.rk4_frame, (s, k1, 0.2 * np.cos(s), zeros, x0, t0, d0)),
        ("gauss_pair_sum", K.gauss_pair_sum,
         (0.5 * (a + np.roll(a, -1, axis=0)), da,
          0.5 * (b + np.roll(b, -1, axis=0)), db)),
        ("min_gap", K.min_gap, (a, da, b, db)),
        ("min_circumradius", K.min_circumradius, (a, 1e-12)),
        ("min_circumradius_pruned", K.min_circumradius_pruned, (a, 1e-12, 8)),
        ("seg_tri_hits", K.seg_tri_hits, (segs0, segs1, va, vb, vc, 1e-12)),
        ("point_segments_dist", K.point_segments_dist, (pts, a, np.roll(a, -1, axis=0))),
        ("tube_crossings", K.tube_crossings, (pts, s, x, t, d, 8)),
    ]


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=512, help="nodes per curve")
    ap.add_argument("--repeat", type=int, default=5, help="timing repeats")
    ap.add_argument("--number", type=int, default=3, help="calls per repeat")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    cases = build_cases(rng, args.nodes)

    if not K.numba_available():
        print("numba is not importable; nothing to compare")
        return 1

    print(f"nodes={args.nodes} repeat={args.repeat} number={args.number}")
    print(f"{'kernel':<26} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>9}")
    for name, kern, kargs in cases:
        kern.via("numba", *kargs)  # warmup: pay compilation before timing
        t_np = best_of(lambda: kern.via("numpy", *kargs), args.repeat, args.number)
        t_nb = best_of(lambda: kern.via("numba", *kargs), args.repeat, args.number)
        print(f"{name:<26} {1e3 * t_np:>12.3f} {1e3 * t_nb:>12.3f} "
              f"{t_np / t_nb:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
