"""Cross-section shapes A(s) and their quadrature rules.

Sections live in the (z1, z2) director plane and must sandwich the origin:
B_eta(0) inside A(s) inside B_nu(0). Disk sections use a polar tensor rule
(Gauss-Legendre radial x uniform angular) exact for polynomials through
degree 4, so the odd moments that vanish analytically vanish to machine
precision. Polygon sections fan-triangulate about the vertex centroid and
use the per-triangle centroid rule (exact for linear integrands), with an
optional uniform refinement for nonlinear densities.
"""

import numpy as np


def _gauss_legendre01(k):
    x, w = np.polynomial.legendre.leggauss(k)
    return 0.5 * (x + 1.0), 0.5 * w


class DiskSection:
    """Disk of given radius centered at the origin of the section plane."""

    kind = "disk"

    def __init__(self, radius):
        self.radius = float(radius)
        if self.radius <= 0.0:
            raise ValueError("disk radius must be positive")

    def area(self):
        return np.pi * self.radius**2

    def inner_radius(self):
        return self.radius

    def outer_radius(self):
        return self.radius

    def first_moments(self):
        return 0.0, 0.0

    def quadrature(self, refine=0):
        nr = 3 + refine
        na = 8 + 4 * refine
        r, wr = _gauss_legendre01(nr)
        r = r * self.radius
        wr = wr * self.radius
        th = 2.0 * np.pi * np.arange(na) / na
        wa = 2.0 * np.pi / na
        R, T = np.meshgrid(r, th, indexing="ij")
        pts = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
        w = (wr[:, None] * R * wa).ravel()
        return pts, w

    def boundary_points(self, m):
        th = 2.0 * np.pi * np.arange(m) / m
        return self.radius * np.column_stack([np.cos(th), np.sin(th)])

    def contains(self, z1, z2):
        return np.asarray(z1) ** 2 + np.asarray(z2) ** 2 <= self.radius**2


class PolygonSection:
    """Simple polygon (CCW vertices) star-shaped about its vertex centroid."""

    kind = "polygon"

    def __init__(self, vertices):
        self.vertices = np.array(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2 or self.vertices.shape[0] < 3:
            raise ValueError("polygon needs at least 3 planar vertices")
        self._centroid = self.vertices.mean(axis=0)
        a = self.vertices - self._centroid
        b = np.roll(self.vertices, -1, axis=0) - self._centroid
        cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        if np.any(cross <= 0.0):
            raise ValueError(
                "polygon vertices must be counterclockwise and star-shaped "
                "about their centroid"
            )
        self._fan_areas = 0.5 * cross
        if self.inner_radius() <= 0.0:
            raise ValueError("section must contain the origin strictly")

    def area(self):
        return float(np.sum(self._fan_areas))

    def inner_radius(self):
        # distance from the origin to the boundary; requires origin inside
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        e = w - v
        ee = np.einsum("ij,ij->i", e, e)
        t = np.clip(-np.einsum("ij,ij->i", v, e) / ee, 0.0, 1.0)
        near = v + t[:, None] * e
        dist = np.min(np.linalg.norm(near, axis=1))
        cross = v[:, 0] * w[:, 1] - v[:, 1] * w[:, 0]
        if np.any(cross <= 0.0):  # origin not strictly inside the CCW polygon
            return 0.0
        return float(dist)

    def outer_radius(self):
        return float(np.max(np.linalg.norm(self.vertices, axis=1)))

    def first_moments(self):
        # exact for the polygon: area-weighted triangle centroids
        pts, w = self.quadrature(refine=0)
        return float(np.sum(w * pts[:, 0])), float(np.sum(w * pts[:, 1]))

    def _triangles(self, refine):
        a = np.repeat(self._centroid[None, :], self.vertices.shape[0], axis=0)
        b = self.vertices
        c = np.roll(self.vertices, -1, axis=0)
        for _ in range(refine):
            ab = 0.5 * (a + b)
            bc = 0.5 * (b + c)
            ca = 0.5 * (c + a)
            a = np.concatenate([a, ab, ca, ab])
            b2 = np.concatenate([ab, b, bc, bc])
            c2 = np.concatenate([ca, bc, c, ca])
            b, c = b2, c2
        return a, b, c

    def quadrature(self, refine=0):
        a, b, c = self._triangles(refine)
        area = 0.5 * np.abs(
            (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
            - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
        )
        cen = (a + b + c) / 3.0
        return cen, area

    def boundary_points(self, m):
        # m points distributed along the perimeter, corners included first
        v = self.vertices
        nv = v.shape[0]
        if m < nv:
            raise ValueError("need at least one point per polygon vertex")
        e = np.roll(v, -1, axis=0) - v
        elen = np.linalg.norm(e, axis=1)
        per = np.sum(elen)
        # split the m points among edges proportionally to length
        counts = np.maximum(1, np.floor(m * elen / per).astype(int))
        while counts.sum() > m:
            counts[np.argmax(counts)] -= 1
        while counts.sum() < m:
            counts[np.argmin(counts)] += 1
        pts = []
        for i in range(nv):
            fr = np.arange(counts[i]) / counts[i]
            pts.append(v[i] + fr[:, None] * e[i])
        return np.concatenate(pts, axis=0)

    def contains(self, z1, z2):
        # even-odd crossing rule, vectorized over the sample points
        z1 = np.asarray(z1, dtype=float)
        z2 = np.asarray(z2, dtype=float)
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        inside = np.zeros(np.broadcast(z1, z2).shape, dtype=bool)
        for i in range(v.shape[0]):
            y1, y2 = v[i, 1], w[i, 1]
            x1, x2 = v[i, 0], w[i, 0]
            crosses = (y1 > z2) != (y2 > z2)
            with np.errstate(divide="ignore", invalid="ignore"):
                xi = x1 + (z2 - y1) / (y2 - y1) * (x2 - x1)
            inside ^= crosses & (z1 < xi)
        return inside


class CrossSectionProfile:
    """Section assignment along s: constant or piecewise, with eta/nu bounds.

    pieces: list of (s_end, shape); shape applies for s up to s_end (the
    last piece covers the remainder). eta/nu default to the tightest
    sandwich the shapes allow.
    """

    def __init__(self, shape=None, pieces=None, eta=None, nu=None):
        if (shape is None) == (pieces is None):
            raise ValueError("give either a single shape or a piecewise list")
        if shape is not None:
            pieces = [(np.inf, shape)]
        self.pieces = [(float(s_end), shp) for s_end, shp in pieces]
        ends = [p[0] for p in self.pieces]
        if any(b <= a for a, b in zip(ends, ends[1:])):
            raise ValueError("piece breakpoints must be strictly increasing")
        inner = min(p[1].inner_radius() for p in self.pieces)
        outer = max(p[1].outer_radius() for p in self.pieces)
        self.eta = inner if eta is None else float(eta)
        self.nu = outer if nu is None else float(nu)
        if not 0.0 < self.eta <= self.nu:
            raise ValueError("need 0 < eta <= nu")
        if self.eta > inner + 1e-15:
            raise ValueError("some section does not contain the eta-ball")
        if self.nu < outer - 1e-15:
            raise ValueError("some section exceeds the nu-ball")

    @property
    def constant(self):
        return len(self.pieces) == 1

    def shape_at(self, s):
        for s_end, shp in self.pieces:
            if s <= s_end:
                return shp
        return self.pieces[-1][1]

    def piece_index(self, s):
        """Piece index per sample value of s (vectorized)."""
        ends = np.array([p[0] for p in self.pieces])
        return np.minimum(np.searchsorted(ends, np.asarray(s, dtype=float)), len(self.pieces) - 1)

    def area(self, s):
        idx = self.piece_index(s)
        areas = np.array([p[1].area() for p in self.pieces])
        return areas[idx]

    def first_moments(self, s):
        idx = self.piece_index(s)
        m = np.array([p[1].first_moments() for p in self.pieces])
        return m[idx, 0], m[idx, 1]

    def contains(self, s, z1, z2):
        idx = self.piece_index(s)
        out = np.zeros(np.asarray(s).shape, dtype=bool)
        for k, (_, shp) in enumerate(self.pieces):
            sel = idx == k
            if np.any(sel):
                out[sel] = shp.contains(np.asarray(z1)[sel], np.asarray(z2)[sel])
        return out
