"""Link, knot-thickness, and chain-structure computations on polylines.

The two workhorses are the Gauss linking double integral (midpoint rule
per edge pair, with the distance-to-integer gap as a built-in error
certificate) and the minimal global radius of curvature Delta (exact
O(n^3) circumradius scan over node triples, with an optional pruning
accelerator that returns identical values). Delta >= r characterizes
embeddedness of the radius-r tube around a closed curve.
"""

import csv
import io

import numpy as np

from . import _kernels
from .errors import CurvesTooClose, NonConvergent

SEPARATION_FLOOR = 1e-6  # times the joint diameter
COLLINEAR_TOL = 1e-12


class ClosedPolyline:
    """Ordered nodes of a closed curve; the wrap-around edge is implicit."""

    def __init__(self, nodes):
        self.nodes = np.array(nodes, dtype=float)
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 3:
            raise ValueError("nodes must have shape (n, 3)")
        if self.nodes.shape[0] < 8:
            raise ValueError("need at least 8 nodes")
        closed = np.vstack([self.nodes, self.nodes[0]])
        if np.min(np.linalg.norm(np.diff(closed, axis=0), axis=1)) <= 1e-12:
            raise ValueError("consecutive nodes must be distinct")

    @property
    def n(self):
        return self.nodes.shape[0]

    def chords(self):
        return np.roll(self.nodes, -1, axis=0) - self.nodes

    def midpoints(self):
        return self.nodes + 0.5 * self.chords()

    def length(self):
        return float(np.sum(np.linalg.norm(self.chords(), axis=1)))

    def subdivided(self):
        """Insert edge midpoints; same geometric curve, twice the nodes."""
        mids = self.midpoints()
        out = np.empty((2 * self.n, 3))
        out[0::2] = self.nodes
        out[1::2] = mids
        return ClosedPolyline(out)

    def diameter(self):
        lo = self.nodes.min(axis=0)
        hi = self.nodes.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def to_csv(self, path_or_buf):
        close = False
        if isinstance(path_or_buf, (str, bytes)):
            buf = open(path_or_buf, "w", newline="")
            close = True
        else:
            buf = path_or_buf
        try:
            w = csv.writer(buf)
            w.writerow(["x", "y", "z"])
            for row in self.nodes:
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
        return cls(np.array([[float(v) for v in row] for row in rows[1:]]))


class LinkResult:
    """Rounded linking number plus the raw Gauss value and integer gap."""

    def __init__(self, raw):
        self.raw = float(raw)
        self.value = int(round(self.raw))
        self.quality = abs(self.raw - self.value)

    def __repr__(self):
        return f"LinkResult(value={self.value}, raw={self.raw:.6f}, quality={self.quality:.2e})"


def curve_separation(a, b):
    """Minimum distance between the two closed polylines (all edge pairs)."""
    ca = a.chords()
    cb = b.chords()
    return float(_kernels.min_gap(a.nodes, ca, b.nodes, cb))


def _gauss_raw(a, b):
    s = _kernels.gauss_pair_sum(a.midpoints(), a.chords(), b.midpoints(), b.chords())
    return float(s) / (4.0 * np.pi)


def linking_number(a, b):
    """Gauss linking number of two disjoint closed polylines.

    Midpoint-rule double sum over edge pairs; |raw - round(raw)| certifies
    quadrature quality. One edge-midpoint subdivision is attempted before
    giving up on a poor certificate.
    """
    lo = np.minimum(a.nodes.min(axis=0), b.nodes.min(axis=0))
    hi = np.maximum(a.nodes.max(axis=0), b.nodes.max(axis=0))
    floor = SEPARATION_FLOOR * float(np.linalg.norm(hi - lo))
    sep = curve_separation(a, b)
    if sep < floor:
        raise CurvesTooClose(
            f"curve separation {sep:.3e} below floor {floor:.3e}", pair=None
        )
    res = LinkResult(_gauss_raw(a, b))
    if res.quality > 0.25:
        res = LinkResult(_gauss_raw(a.subdivided(), b.subdivided()))
        if res.quality > 0.25:
            raise NonConvergent(
                f"Gauss value {res.raw:.4f} is {res.quality:.3f} from an integer "
                "after one subdivision"
            )
    return res


def global_radius(c, accelerated=False):
    """Minimal circumradius over all node triples (collinear triples skip).

    accelerated=True runs the chord-length pruned scan; it returns the
    identical value, only faster.
    """
    if c.n < 3:
        return float("inf")
    if accelerated:
        stride = max(1, c.n // 24)
        return float(_kernels.min_circumradius_pruned(c.nodes, COLLINEAR_TOL, stride))
    return float(_kernels.min_circumradius(c.nodes, COLLINEAR_TOL))


def tube_is_embedded(c, r, accelerated=True):
    """Whether the closed tube of radius r about c is embedded (Delta >= r)."""
    if r <= 0.0:
        raise ValueError("tube radius must be positive")
    return bool(global_radius(c, accelerated=accelerated) >= r)


class LinkingMatrix:
    """Pairwise linking numbers of a curve family; diagonal unused (zero)."""

    def __init__(self, values, raw=None):
        self.values = np.array(values, dtype=int)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError("linking matrix must be square")
        if not np.array_equal(self.values, self.values.T):
            raise ValueError("linking matrix must be symmetric")
        self.raw = None if raw is None else np.asarray(raw, dtype=float)

    @property
    def size(self):
        return self.values.shape[0]


def linking_matrix(curves):
    """Symmetric matrix of pairwise linking numbers; diagonal zero."""
    n = len(curves)
    vals = np.zeros((n, n), dtype=int)
    raw = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            try:
                r = linking_number(curves[i], curves[j])
            except CurvesTooClose as exc:
                raise CurvesTooClose(f"curves {i} and {j}: {exc}", pair=(i, j)) from exc
            vals[i, j] = vals[j, i] = r.value
            raw[i, j] = raw[j, i] = r.raw
    return LinkingMatrix(vals, raw)


def chain_structure_holds(M):
    """Every curve reaches curve 0 through hops of |Link| = 1."""
    n = M.size
    if n == 0:
        return False
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    stack = [0]
    while stack:
        i = stack.pop()
        for j in range(n):
            if j != i and not seen[j] and abs(M.values[i, j]) == 1:
                seen[j] = True
                stack.append(j)
    return bool(seen.all())
