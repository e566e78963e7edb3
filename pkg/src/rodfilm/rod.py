"""Rod kinematics: curvature data, frame reconstruction, closed-up curves.

A rod is controlled by densities w = (k1, k2, om) sampled on a uniform grid
over [0, L]. The midline x and directors (t, d) solve the frame Cauchy
problem

    x' = t,   t' = k1 d + k2 (t x d),   d' = om (t x d) - k1 t,

integrated with fixed-step RK4 and per-step re-orthonormalization so the
frame never drifts off the orthonormal manifold. The closed-up companion
curve offsets the midline by tau along d and returns along a circular arc
whose swept angle phi records the net director rotation; linking the two
captures the rod's internal twist as a topological quantity.
"""

import csv
import io

import numpy as np

from . import _kernels
from .errors import AmbiguousAngle, DegenerateFrame, NonFiniteSample, NotClosed

POSITION_CLOSURE_TOL = 1e-6  # times L
DIRECTION_CLOSURE_TOL = 1e-6


class CurvatureField:
    """Sampled (k1, k2, om) densities on the uniform grid of [0, L].

    samples has shape (n+1, 3), one row per grid node, columns k1, k2, om.
    p is the exponent of the ambient Lebesgue space (> 1) used by norm().
    """

    def __init__(self, L, samples, p=2.0):
        self.L = float(L)
        self.samples = np.array(samples, dtype=float)
        self.p = float(p)
        if self.L <= 0.0:
            raise ValueError("rod length must be positive")
        if self.p <= 1.0:
            raise ValueError("exponent p must exceed 1")
        if self.samples.ndim != 2 or self.samples.shape[1] != 3:
            raise ValueError("samples must have shape (n+1, 3)")
        if self.samples.shape[0] < 9:
            raise ValueError("need at least 8 grid intervals")

    @property
    def n(self):
        return self.samples.shape[0] - 1

    @property
    def h(self):
        return self.L / self.n

    @property
    def grid(self):
        return np.linspace(0.0, self.L, self.n + 1)

    @property
    def k1(self):
        return self.samples[:, 0]

    @property
    def k2(self):
        return self.samples[:, 1]

    @property
    def om(self):
        return self.samples[:, 2]

    def norm(self):
        """Discrete L^p norm of the composite density (trapezoid in s)."""
        dens = np.sum(np.abs(self.samples) ** self.p, axis=1)
        return float(np.trapezoid(dens, self.grid) ** (1.0 / self.p))

    def with_samples(self, samples):
        return CurvatureField(self.L, samples, self.p)


class InitialFrame:
    """Anchor point plus orthonormal (t0, d0) pair."""

    def __init__(self, x0, t0, d0):
        self.x0 = np.array(x0, dtype=float)
        self.t0 = np.array(t0, dtype=float)
        self.d0 = np.array(d0, dtype=float)
        for v in (self.x0, self.t0, self.d0):
            if v.shape != (3,):
                raise ValueError("frame vectors must be 3-vectors")

    def check(self):
        if abs(np.linalg.norm(self.t0) - 1.0) > 1e-12:
            raise DegenerateFrame("t0 is not unit length")
        if abs(np.linalg.norm(self.d0) - 1.0) > 1e-12:
            raise DegenerateFrame("d0 is not unit length")
        if abs(float(self.t0 @ self.d0)) > 1e-12:
            raise DegenerateFrame("t0 and d0 are not orthogonal")


class FramedCurve:
    """Discrete (x, t, d) along a grid; the third director is e = t x d."""

    def __init__(self, s, x, t, d):
        self.s = np.asarray(s, dtype=float)
        self.x = np.asarray(x, dtype=float)
        self.t = np.asarray(t, dtype=float)
        self.d = np.asarray(d, dtype=float)
        m = self.s.shape[0]
        for arr in (self.x, self.t, self.d):
            if arr.shape != (m, 3):
                raise ValueError("node arrays must have shape (len(s), 3)")

    @property
    def L(self):
        return float(self.s[-1] - self.s[0])

    @property
    def n(self):
        return self.s.shape[0] - 1

    @property
    def h(self):
        return float(self.s[1] - self.s[0])

    @property
    def e(self):
        return np.cross(self.t, self.d)

    def orthonormality_drift(self):
        """Worst deviation of |t|, |d| from 1 and t.d from 0 over all nodes."""
        nt = np.abs(np.linalg.norm(self.t, axis=1) - 1.0)
        nd = np.abs(np.linalg.norm(self.d, axis=1) - 1.0)
        td = np.abs(np.einsum("ij,ij->i", self.t, self.d))
        return float(max(nt.max(), nd.max(), td.max()))

    def to_csv(self, path_or_buf):
        rows = np.column_stack([self.s, self.x, self.t, self.d])
        header = ["s", "x", "y", "z", "tx", "ty", "tz", "dx", "dy", "dz"]
        close = False
        if isinstance(path_or_buf, (str, bytes)):
            buf = open(path_or_buf, "w", newline="")
            close = True
        else:
            buf = path_or_buf
        try:
            w = csv.writer(buf)
            w.writerow(header)
            for row in rows:
                w.writerow([repr(v) for v in row])
        finally:
            if close:
                buf.close()

    @classmethod
    def from_csv(cls, path_or_buf):
        if isinstance(path_or_buf, (str, bytes)):
            with open(path_or_buf, newline="") as fh:
                data = fh.read()
        else:
            data = path_or_buf.read()
        rows = list(csv.reader(io.StringIO(data)))
        body = np.array([[float(v) for v in row] for row in rows[1:]])
        return cls(body[:, 0], body[:, 1:4], body[:, 4:7], body[:, 7:10])


class ClosureDefects:
    """Endpoint gaps of a frame: position, tangent, director."""

    def __init__(self, position_gap, tangent_gap, director_gap):
        self.position_gap = float(position_gap)
        self.tangent_gap = float(tangent_gap)
        self.director_gap = float(director_gap)

    def closed(self, L, pos_tol=POSITION_CLOSURE_TOL, dir_tol=DIRECTION_CLOSURE_TOL):
        return self.position_gap <= pos_tol * L and self.tangent_gap <= dir_tol

    def __repr__(self):
        return (
            f"ClosureDefects(position={self.position_gap:.3e}, "
            f"tangent={self.tangent_gap:.3e}, director={self.director_gap:.3e})"
        )


class ClosedUpCurve:
    """Offset curve x + tau d on [0, L] plus the circular closing arc on
    [L, L+1] that sweeps the closure angle phi about the endpoint tangent."""

    def __init__(self, base, tau, phi, s, nodes):
        self.base = base
        self.tau = float(tau)
        self.phi = float(phi)
        self.s = np.asarray(s, dtype=float)
        self.nodes = np.asarray(nodes, dtype=float)

    def as_polyline(self):
        """Nodes as a closed polyline; coincident nodes are dropped.

        With phi = 0 the closing arc degenerates to a single point, which
        is legitimate for the curve but would produce zero-length edges.
        """
        from .topology import ClosedPolyline

        pts = self.nodes[:-1]
        keep = [0]
        for i in range(1, pts.shape[0]):
            if np.linalg.norm(pts[i] - pts[keep[-1]]) > 1e-12:
                keep.append(i)
        while len(keep) > 1 and np.linalg.norm(pts[keep[-1]] - pts[keep[0]]) <= 1e-12:
            keep.pop()
        return ClosedPolyline(pts[keep])


def integrate_frame(w, f0):
    """Solve the frame Cauchy problem for the curvature field w from f0."""
    if not np.all(np.isfinite(w.samples)):
        raise NonFiniteSample("curvature/twist samples contain NaN or inf")
    f0.check()
    s = w.grid
    x, t, d = _kernels.rk4_frame(
        s,
        np.ascontiguousarray(w.k1),
        np.ascontiguousarray(w.k2),
        np.ascontiguousarray(w.om),
        f0.x0,
        f0.t0,
        f0.d0,
    )
    return FramedCurve(s, x, t, d)


def closure_defects(c):
    return ClosureDefects(
        np.linalg.norm(c.x[-1] - c.x[0]),
        np.linalg.norm(c.t[-1] - c.t[0]),
        np.linalg.norm(c.d[-1] - c.d[0]),
    )


def closure_angle(c, snap_tol=DIRECTION_CLOSURE_TOL):
    """Angle phi in [0, 2pi) rotating d(L) onto d(0) about the tangent.

    Equivalently: the unique angle between d(0) and d(L) whose offset from
    pi carries the sign of d(0) x d(L) . t(0). Angles within snap_tol of a
    full turn snap to 0: a director that returns to d(0) up to integration
    noise must not acquire a spurious extra winding on the closing arc.
    """
    dL = c.d[-1]
    d0 = c.d[0]
    if np.linalg.norm(dL + d0) <= 1e-12:
        raise AmbiguousAngle(
            "d(L) = -d(0): the closing rotation is exactly pi and its "
            "orientation is undetermined"
        )
    eL = np.cross(c.t[-1], dL)
    phi = float(np.arctan2(d0 @ eL, d0 @ dL))
    if -snap_tol < phi < 0.0:
        return 0.0
    if phi < 0.0:
        phi += 2.0 * np.pi
    return phi


def close_up_curve(c, tau, pos_tol=POSITION_CLOSURE_TOL, dir_tol=DIRECTION_CLOSURE_TOL):
    """Build the closed-up companion curve of a closed frame.

    Requires the frame to satisfy the closure constraints within tolerance;
    tau must be positive (the caller is responsible for tau < Delta of the
    midline so the offset stays embedded).
    """
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    defects = closure_defects(c)
    L = c.L
    if not defects.closed(L, pos_tol, dir_tol):
        raise NotClosed(f"frame does not close: {defects!r}")
    phi = closure_angle(c, snap_tol=dir_tol)

    offset = c.x + tau * c.d
    h = c.h
    m = max(4, int(round(1.0 / h)))
    # arc nodes at parameters L + j/m, j = 1..m; same spacing policy as the grid
    frac = np.arange(1, m + 1) / m
    dL = c.d[-1]
    eL = np.cross(c.t[-1], dL)
    arc = (
        c.x[-1][None, :]
        + tau * np.cos(phi * frac)[:, None] * dL[None, :]
        + tau * np.sin(phi * frac)[:, None] * eL[None, :]
    )
    s = np.concatenate([c.s, c.s[-1] + frac])
    nodes = np.concatenate([offset, arc], axis=0)
    return ClosedUpCurve(c, tau, phi, s, nodes)


def extend_constant(c):
    """Extend a frame to [0, L+1] holding x at x(L) (stationary tail)."""
    h = c.h
    m = max(4, int(round(1.0 / h)))
    frac = np.arange(1, m + 1) / m
    s = np.concatenate([c.s, c.s[-1] + frac])
    x = np.concatenate([c.x, np.repeat(c.x[-1][None, :], m, axis=0)], axis=0)
    t = np.concatenate([c.t, np.repeat(c.t[-1][None, :], m, axis=0)], axis=0)
    d = np.concatenate([c.d, np.repeat(c.d[-1][None, :], m, axis=0)], axis=0)
    return FramedCurve(s, x, t, d)
