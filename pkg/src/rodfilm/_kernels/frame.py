"""RK4 integration of the rod frame ODE with per-step re-orthonormalization.

State is (x, t, d) with e = t x d implied:

    x' = t
    t' = k1 d + k2 e
    d' = om e - k1 t

Curvature/twist samples live on the grid nodes and are interpolated
piecewise-linearly, so the RK4 midpoint stage uses the endpoint average.
The recurrence is sequential; the "numpy" backend is simply the same loop
uncompiled, which keeps the two backends bit-identical.
"""

import numpy as np

from ._backend import Kernel


def _rk4_frame_loop(s, k1, k2, om, x0, t0, d0):
    n = s.shape[0] - 1
    xs = np.empty((n + 1, 3))
    ts = np.empty((n + 1, 3))
    ds = np.empty((n + 1, 3))

    def rhs(t, d, a, b, w):
        e = np.array(
            [
                t[1] * d[2] - t[2] * d[1],
                t[2] * d[0] - t[0] * d[2],
                t[0] * d[1] - t[1] * d[0],
            ]
        )
        return a * d + b * e, w * e - a * t

    x = x0.copy()
    t = t0.copy()
    d = d0.copy()
    xs[0] = x
    ts[0] = t
    ds[0] = d
    for kk in range(n):
        h = s[kk + 1] - s[kk]
        a1 = k1[kk]
        b1 = k2[kk]
        w1 = om[kk]
        a4 = k1[kk + 1]
        b4 = k2[kk + 1]
        w4 = om[kk + 1]
        am = 0.5 * (a1 + a4)
        bm = 0.5 * (b1 + b4)
        wm = 0.5 * (w1 + w4)

        tk1, dk1 = rhs(t, d, a1, b1, w1)
        T2 = t + 0.5 * h * tk1
        D2 = d + 0.5 * h * dk1
        tk2, dk2 = rhs(T2, D2, am, bm, wm)
        T3 = t + 0.5 * h * tk2
        D3 = d + 0.5 * h * dk2
        tk3, dk3 = rhs(T3, D3, am, bm, wm)
        T4 = t + h * tk3
        D4 = d + h * dk3
        tk4, dk4 = rhs(T4, D4, a4, b4, w4)

        x = x + (h / 6.0) * (t + 2.0 * T2 + 2.0 * T3 + T4)
        t = t + (h / 6.0) * (tk1 + 2.0 * tk2 + 2.0 * tk3 + tk4)
        d = d + (h / 6.0) * (dk1 + 2.0 * dk2 + 2.0 * dk3 + dk4)

        # drift control: keep t unit, d unit and perpendicular to t
        t = t / np.sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2])
        d = d - (d[0] * t[0] + d[1] * t[1] + d[2] * t[2]) * t
        d = d / np.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])

        xs[kk + 1] = x
        ts[kk + 1] = t
        ds[kk + 1] = d
    return xs, ts, ds


rk4_frame = Kernel(_rk4_frame_loop, _rk4_frame_loop)
