"""Triangulated films spanning the rods, and the spanning test itself.

A spanning surface is a manifold-with-boundary triangle mesh whose boundary
loops are glued to the rods: either to the midline x(s) or to a constant
offset curve on the tube boundary. The spanning condition is operational,
not homological: a finite set of witness loops, each required to link one
rod once and the others not at all, must all intersect the mesh. Witness
loops are validated against the current midlines before use, never trusted.

Meshes are immutable here; every operation returns a new surface, so a
failed refinement or cleanup leaves the caller's mesh untouched.
"""

import numpy as np
import yaml

from .errors import SeedFailed, SpanningLost, TubeNotEmbedded, CurvesTooClose
from .rod import closure_defects
from .topology import ClosedPolyline, curve_separation, linking_number
from ._kernels import seg_tri_hits, point_segments_dist

AREA_FLOOR = 1e-14       # times scale^2, degenerate-triangle cutoff
ATTACH_TOL = 1e-9        # times scale, boundary-on-locus residual
QUALITY_FLOOR = 0.1      # radians, sliver min-angle threshold
TUBE_CLEARANCE = 0.98    # fraction of the tube radius a seed film must keep


class TriangleMesh:
    """Plain indexed triangle soup with validity checks on the indices."""

    def __init__(self, vertices, triangles):
        self.vertices = np.array(vertices, dtype=float)
        self.triangles = np.array(triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValueError("vertices must be (V, 3)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise ValueError("triangles must be (T, 3)")
        if not np.all(np.isfinite(self.vertices)):
            raise ValueError("vertices must be finite")
        if self.triangles.shape[0] == 0:
            raise ValueError("mesh has no triangles")
        if self.triangles.min() < 0 or self.triangles.max() >= self.vertices.shape[0]:
            raise ValueError("triangle index out of range")
        t = self.triangles
        if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 2] == t[:, 0])):
            raise ValueError("triangle with a repeated vertex")

    def scale(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        diag = float(np.linalg.norm(hi - lo))
        if diag == 0.0:
            raise ValueError("mesh has zero extent")
        return diag

    def corner_points(self):
        v = self.vertices
        t = self.triangles
        return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]

    def areas(self):
        a, b, c = self.corner_points()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def area(self):
        return float(np.sum(self.areas()))

    def normals(self):
        a, b, c = self.corner_points()
        nv = np.cross(b - a, c - a)
        return nv / np.linalg.norm(nv, axis=1)[:, None]

    def edge_lengths(self):
        """(T, 3) lengths of edges (v0,v1), (v1,v2), (v2,v0)."""
        a, b, c = self.corner_points()
        return np.column_stack([
            np.linalg.norm(b - a, axis=1),
            np.linalg.norm(c - b, axis=1),
            np.linalg.norm(a - c, axis=1),
        ])

    def min_angle(self):
        """Smallest interior angle over all triangles, radians."""
        ls = self.edge_lengths()
        worst = np.inf
        for k in range(3):
            opp = ls[:, (k + 1) % 3]
            s1 = ls[:, k]
            s2 = ls[:, (k + 2) % 3]
            cosang = (s1**2 + s2**2 - opp**2) / (2.0 * s1 * s2)
            worst = min(worst, float(np.arccos(np.clip(cosang, -1.0, 1.0)).min()))
        return worst

    def undirected_edges(self):
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def to_obj(self, path):
        with open(path, "w") as f:
            f.write(f"# rodfilm mesh: {self.vertices.shape[0]} vertices, "
                    f"{self.triangles.shape[0]} faces\n")
            for v in self.vertices:
                f.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
            for t in self.triangles:
                f.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")

    @staticmethod
    def read_obj_arrays(path):
        verts = []
        faces = []
        with open(path) as f:
            for line in f:
                parts = line.split()
                if not parts:
                    continue
                if parts[0] == "v":
                    verts.append([float(x) for x in parts[1:4]])
                elif parts[0] == "f":
                    faces.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
        return np.array(verts, dtype=float), np.array(faces, dtype=np.int64)


class TubeMesh(TriangleMesh):
    """Closed boundary surface of one rod's material tube.

    Lateral triangles come first; end caps (open rods only) follow, so the
    lateral area is a prefix sum.
    """

    def __init__(self, vertices, triangles, rod_index, closed, lateral_count, rings):
        super().__init__(vertices, triangles)
        self.rod_index = int(rod_index)
        self.closed = bool(closed)
        self.lateral_count = int(lateral_count)
        self.rings = int(rings)

    def lateral_area(self):
        return float(np.sum(self.areas()[: self.lateral_count]))

    def enclosed_volume(self):
        """Divergence-theorem volume; positive iff normals point outward."""
        a, b, c = self.corner_points()
        return float(np.sum(np.einsum("ij,ij->i", a, np.cross(b, c))) / 6.0)


class BoundaryLoop:
    """One boundary cycle of a film, glued to rod `rod`.

    The attachment locus is the piecewise-linear curve through
    (locus_s, locus_points); every boundary vertex carries the parameter s
    at which it sits on that curve. Keeping the locus piecewise linear means
    edge-bisection midpoints land on it exactly.

    offsets, when given, are the per-locus-node section coordinates
    (b1, b2) such that locus_points[k] = x(s_k) + eps*(b1*d + b2*e)(s_k);
    they let the locus be rebuilt on a moved rod without re-deriving the
    attachment rule.
    """

    def __init__(self, rod, mode, vertices, svals, locus_s, locus_points,
                 offsets=None):
        if mode not in ("midline", "tube"):
            raise ValueError("loop mode must be 'midline' or 'tube'")
        self.rod = int(rod)
        self.mode = mode
        self.vertices = np.array(vertices, dtype=np.int64)
        self.svals = np.array(svals, dtype=float)
        self.locus_s = np.array(locus_s, dtype=float)
        self.locus_points = np.array(locus_points, dtype=float)
        self.offsets = None if offsets is None else np.array(offsets, dtype=float)
        if self.vertices.ndim != 1 or self.vertices.shape[0] < 3:
            raise ValueError("boundary loop needs at least 3 vertices")
        if self.svals.shape != self.vertices.shape:
            raise ValueError("need one s value per boundary vertex")
        if np.unique(self.vertices).shape[0] != self.vertices.shape[0]:
            raise ValueError("boundary loop repeats a vertex")
        if self.locus_s.ndim != 1 or np.any(np.diff(self.locus_s) <= 0.0):
            raise ValueError("locus parameters must be strictly increasing")
        if self.locus_points.shape != (self.locus_s.shape[0], 3):
            raise ValueError("locus points must be (len(locus_s), 3)")
        if self.offsets is not None and self.offsets.shape != (
            self.locus_s.shape[0], 2,
        ):
            raise ValueError("offsets must be (len(locus_s), 2)")

    def attach(self, s):
        """Attachment point(s) on the locus at parameter s."""
        s = np.asarray(s, dtype=float)
        return np.column_stack([
            np.interp(s, self.locus_s, self.locus_points[:, k]) for k in range(3)
        ])

    def edge_pairs(self):
        return np.column_stack([self.vertices, np.roll(self.vertices, -1)])

    def remapped(self, index_map):
        return BoundaryLoop(
            self.rod, self.mode, index_map[self.vertices], self.svals,
            self.locus_s, self.locus_points, offsets=self.offsets,
        )


def _edge_key(i, j, nv):
    a = np.minimum(i, j)
    b = np.maximum(i, j)
    return a * np.int64(nv) + b


class SpanningSurface(TriangleMesh):
    """Manifold-with-boundary film whose boundary loops ride on the rods."""

    def __init__(self, vertices, triangles, boundary_loops):
        super().__init__(vertices, triangles)
        self.boundary_loops = list(boundary_loops)
        if not self.boundary_loops:
            raise ValueError("a spanning surface needs at least one boundary loop")
        self.validate()

    @property
    def free_vertices(self):
        mask = np.ones(self.vertices.shape[0], dtype=bool)
        for loop in self.boundary_loops:
            mask[loop.vertices] = False
        return np.nonzero(mask)[0]

    def boundary_vertex_set(self):
        idx = np.concatenate([loop.vertices for loop in self.boundary_loops])
        if np.unique(idx).shape[0] != idx.shape[0]:
            raise ValueError("boundary loops share a vertex")
        return idx

    def validate(self):
        scale = self.scale()
        areas = self.areas()
        floor = AREA_FLOOR * scale**2
        if np.any(areas <= floor):
            k = int(np.argmin(areas))
            raise ValueError(
                f"degenerate triangle {k}: area {areas[k]:.3e} <= floor {floor:.3e}"
            )
        t = self.triangles
        nv = self.vertices.shape[0]
        heads = np.concatenate([t[:, 0], t[:, 1], t[:, 2]])
        tails = np.concatenate([t[:, 1], t[:, 2], t[:, 0]])
        und = _edge_key(heads, tails, nv)
        keys, counts = np.unique(und, return_counts=True)
        if np.any(counts > 2):
            raise ValueError("edge shared by more than two triangles")
        directed = heads * np.int64(nv) + tails
        dkeys, dcounts = np.unique(directed, return_counts=True)
        if np.any(dcounts > 1):
            raise ValueError("inconsistently oriented triangle pair")
        self.boundary_vertex_set()
        rim = set()
        for loop in self.boundary_loops:
            for a, b in loop.edge_pairs():
                rim.add(int(_edge_key(a, b, nv)))
        naked = set(int(k) for k in keys[counts == 1])
        if naked != rim:
            raise ValueError(
                "boundary edges and declared loops disagree "
                f"({len(naked)} naked edges vs {len(rim)} loop edges)"
            )
        tol = ATTACH_TOL * scale
        for li, loop in enumerate(self.boundary_loops):
            res = self.vertices[loop.vertices] - loop.attach(loop.svals)
            worst = float(np.max(np.linalg.norm(res, axis=1)))
            if worst > tol:
                raise ValueError(
                    f"loop {li} leaves its attachment locus by {worst:.3e} "
                    f"(tol {tol:.3e})"
                )

    def with_vertices(self, vertices):
        return SpanningSurface(vertices, self.triangles, self.boundary_loops)


class WitnessLoop:
    """Test curve that must link rod `target` once and every other rod zero."""

    def __init__(self, loop, target):
        if not isinstance(loop, ClosedPolyline):
            loop = ClosedPolyline(loop)
        self.loop = loop
        self.target = int(target)


class SpanningWitnessSet:
    def __init__(self, loops):
        self.loops = list(loops)
        if not self.loops:
            raise ValueError("witness set is empty")

    def validate(self, sys):
        """Check tube clearance and recompute every declared linking pattern."""
        midlines = [rod.midline() for rod in sys.rods]
        for i, wl in enumerate(self.loops):
            if not 0 <= wl.target < sys.nrods:
                raise ValueError(f"witness {i} targets missing rod {wl.target}")
            for j, mid in enumerate(midlines):
                gap = curve_separation(wl.loop, mid)
                if gap <= sys.tube_radius(j):
                    raise CurvesTooClose(
                        f"witness {i} is {gap:.3e} from midline {j}, inside "
                        f"the tube radius {sys.tube_radius(j):.3e}",
                        pair=(i, j),
                    )
                want = 1 if j == wl.target else 0
                got = abs(linking_number(wl.loop, mid).value)
                if got != want:
                    raise ValueError(
                        f"witness {i} links rod {j} {got} times, wanted {want}"
                    )


def default_witnesses(sys, segments=64):
    """One meridian loop per rod, centered on the midline at s = 0.

    The loop lies in the normal plane spanned by (d, t x d) there, with
    radius halfway between the tube surface and the embeddedness radius, so
    it clears the tube and cannot reach any other strand of the same rod.
    """
    loops = []
    th = 2.0 * np.pi * np.arange(segments) / segments
    for i, rod in enumerate(sys.rods):
        fr = rod.frame
        r = 0.5 * (sys.tube_radius(i) + rod.delta())
        d0 = fr.d[0]
        e0 = np.cross(fr.t[0], fr.d[0])
        pts = fr.x[0] + r * (np.cos(th)[:, None] * d0 + np.sin(th)[:, None] * e0)
        loops.append(WitnessLoop(ClosedPolyline(pts), target=i))
    ws = SpanningWitnessSet(loops)
    ws.validate(sys)
    return ws


def check_spanning(S, witnesses):
    """(all spanned, [(loop index, intersection count), ...])."""
    va = np.ascontiguousarray(S.vertices[S.triangles[:, 0]])
    vb = np.ascontiguousarray(S.vertices[S.triangles[:, 1]])
    vc = np.ascontiguousarray(S.vertices[S.triangles[:, 2]])
    det_floor = 1e-12 * S.scale() ** 3
    report = []
    for i, wl in enumerate(witnesses.loops):
        nodes = wl.loop.nodes
        s0 = np.ascontiguousarray(nodes)
        s1 = np.ascontiguousarray(np.roll(nodes, -1, axis=0))
        hits = seg_tri_hits(s0, s1, va, vb, vc, det_floor)
        report.append((i, int(hits.sum())))
    ok = all(h > 0 for _, h in report)
    return ok, report


def _strict_pierce_counts(s0, s1, va, vb, vc, margin=1e-7):
    """Transversal interior hits only: barycentric and segment parameters
    must clear `margin`, and near-coplanar pairs are skipped. Used to ask
    whether a curve genuinely passes through a film it is allowed to touch.
    """
    e1 = vb - va
    e2 = vc - va
    n = np.cross(e1, e2)
    nn = np.linalg.norm(n, axis=1)
    d = s1 - s0
    dn = np.linalg.norm(d, axis=1)
    counts = np.zeros(s0.shape[0], dtype=np.int64)
    block = max(1, int(2e6 // max(1, va.shape[0])))
    for lo in range(0, s0.shape[0], block):
        hi = min(lo + block, s0.shape[0])
        db = d[lo:hi]
        det = np.einsum("nk,tk->nt", db, n)
        ok = np.abs(det) > 1e-9 * dn[lo:hi, None] * nn[None, :]
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        tvec = s0[lo:hi, None, :] - va[None, :, :]
        p = np.cross(db[:, None, :], e2[None, :, :])
        u = np.einsum("ntk,ntk->nt", tvec, p) * inv
        q = np.cross(tvec, e1[None, :, :])
        v = np.einsum("nk,ntk->nt", db, q) * inv
        t = np.einsum("tk,ntk->nt", e2, q) * inv
        ok &= (u > margin) & (v > margin) & (u + v < 1.0 - margin)
        ok &= (t > margin) & (t < 1.0 - margin)
        counts[lo:hi] = np.count_nonzero(ok, axis=1)
    return counts


def _rod_is_closed(rod):
    fr = rod.frame
    return closure_defects(fr).closed(fr.L)


def _ring_points(rod, eps, rings):
    """Per-node tube-boundary rings (K, rings, 3) plus node index list."""
    fr = rod.frame
    grid = rod.w.grid
    closed = _rod_is_closed(rod)
    K = fr.x.shape[0] - 1 if closed else fr.x.shape[0]
    e = np.cross(fr.t, fr.d)
    piece = rod.profile.piece_index(grid[:K])
    rings_out = np.empty((K, rings, 3))
    for pk, (_, shape) in enumerate(rod.profile.pieces):
        sel = np.nonzero(piece == pk)[0]
        if sel.size == 0:
            continue
        bp = shape.boundary_points(rings)
        for k in sel:
            rings_out[k] = (
                fr.x[k]
                + eps * bp[:, 0, None] * fr.d[k]
                + eps * bp[:, 1, None] * e[k]
            )
    return rings_out, closed


def _section_center(shape):
    c = getattr(shape, "_centroid", None)
    return np.zeros(2) if c is None else np.asarray(c, dtype=float)


def build_tube_mesh(sys, eps=None, rings=32):
    """Boundary surface of each rod's material tube, one mesh per rod.

    Rings of section-boundary points are placed with the director frame and
    stitched into quads; closed rods weld the last ring to the first, open
    rods get fan caps. Normals point out of the tube.
    """
    if rings < 8:
        raise ValueError("need at least 8 ring points")
    eps = sys.epsilon if eps is None else float(eps)
    out = []
    for i, rod in enumerate(sys.rods):
        r_out = eps * rod.profile.nu
        delta = rod.delta()
        if r_out >= delta:
            raise TubeNotEmbedded(
                f"rod {i}: tube radius {r_out:.6g} >= embeddedness radius "
                f"{delta:.6g}"
            )
        P, closed = _ring_points(rod, eps, rings)
        K = P.shape[0]
        verts = P.reshape(-1, 3)
        tris = []
        nquad = K if closed else K - 1
        for k in range(nquad):
            k2 = (k + 1) % K
            for j in range(rings):
                j2 = (j + 1) % rings
                a = k * rings + j
                b = k * rings + j2
                c = k2 * rings + j2
                dd = k2 * rings + j
                tris.append((a, b, dd))
                tris.append((b, c, dd))
        lateral_count = len(tris)
        if not closed:
            fr = rod.frame
            grid = rod.w.grid
            e = np.cross(fr.t, fr.d)
            caps = []
            for end, (k, sgn) in enumerate((((0, -1)), (K - 1, +1))):
                shape = rod.profile.shape_at(grid[k])
                cc = _section_center(shape)
                apex = fr.x[k] + eps * (cc[0] * fr.d[k] + cc[1] * e[k])
                apex_idx = verts.shape[0] + end
                caps.append(apex)
                for j in range(rings):
                    j2 = (j + 1) % rings
                    a = k * rings + j
                    b = k * rings + j2
                    if sgn < 0:
                        tris.append((apex_idx, b, a))
                    else:
                        tris.append((apex_idx, a, b))
            verts = np.vstack([verts, np.array(caps)])
        out.append(TubeMesh(verts, np.array(tris, dtype=np.int64), i, closed,
                            lateral_count, rings))
    return out


def _attachment_ring(rod, eps, mode):
    """Per-node attachment points, wrapped locus arrays, section offsets."""
    fr = rod.frame
    grid = rod.w.grid
    n = fr.x.shape[0] - 1
    if mode == "midline":
        pts = fr.x[:n].copy()
        off = np.zeros((n, 2))
    else:
        e = np.cross(fr.t, fr.d)
        center = fr.x[:n].mean(axis=0)
        inward = center[None, :] - fr.x[:n]
        d1 = np.einsum("ij,ij->i", inward, fr.d[:n]).mean()
        d2 = np.einsum("ij,ij->i", inward, e[:n]).mean()
        aim = np.array([d1, d2])
        norm = np.linalg.norm(aim)
        aim = np.array([1.0, 0.0]) if norm < 1e-12 else aim / norm
        piece = rod.profile.piece_index(grid[:n])
        pts = np.empty((n, 3))
        off = np.empty((n, 2))
        for pk, (_, shape) in enumerate(rod.profile.pieces):
            sel = np.nonzero(piece == pk)[0]
            if sel.size == 0:
                continue
            bp = shape.boundary_points(64)
            bstar = bp[int(np.argmax(bp @ aim))]
            for k in sel:
                off[k] = bstar
                pts[k] = fr.x[k] + eps * (bstar[0] * fr.d[k] + bstar[1] * e[k])
    svals = grid[:n]
    locus_s = np.append(svals, grid[-1])
    locus_points = np.vstack([pts, pts[0]])
    offsets = np.vstack([off, off[:1]])
    return pts, svals, locus_s, locus_points, offsets


def _seed_conflicts(rod, eps, verts, tris, boundary_count, mode):
    """True if a coned fill runs through its own rod's tube."""
    mid = rod.midline()
    a = np.ascontiguousarray(mid.nodes)
    b = np.ascontiguousarray(np.roll(mid.nodes, -1, axis=0))
    va = verts[tris[:, 0]]
    vb = verts[tris[:, 1]]
    vc = verts[tris[:, 2]]
    if np.any(_strict_pierce_counts(a, b, va, vb, vc) > 0):
        return True
    if mode == "tube":
        cen = (va + vb + vc) / 3.0
        emid = np.concatenate([(va + vb) / 2.0, (vb + vc) / 2.0, (vc + va) / 2.0])
        probes = np.vstack([verts[boundary_count:], cen, emid])
        dist = point_segments_dist(np.ascontiguousarray(probes), a, b)
        if np.any(dist < TUBE_CLEARANCE * eps * rod.profile.eta):
            return True
    return False


def _interp_ring(boundary, frac):
    """Cyclic linear interpolation of a polygon at fractional index positions."""
    m = boundary.shape[0]
    pos = frac * m
    i0 = np.floor(pos).astype(int) % m
    i1 = (i0 + 1) % m
    w = (pos - np.floor(pos))[:, None]
    return boundary[i0] * (1.0 - w) + boundary[i1] * w


def _stitch(outer, inner):
    """Triangle strip between two index rings ordered by ring fraction."""
    mo, mi = len(outer), len(inner)
    tris = []
    i = j = 0
    while i < mo or j < mi:
        if j >= mi or (i < mo and (i + 1) * mi <= (j + 1) * mo):
            tris.append((outer[i % mo], outer[(i + 1) % mo], inner[j % mi]))
            i += 1
        else:
            tris.append((outer[i % mo], inner[(j + 1) % mi], inner[j % mi]))
            j += 1
    return tris


def _coned_fill(boundary_pts):
    """Layered cone from a boundary polygon to its centroid.

    Concentric rings shrink toward the apex with proportionally fewer
    vertices, so the triangles stay near-isotropic at every depth instead
    of degenerating the way a single-apex fan does. Vertex order: boundary
    first, inner rings, apex last.
    """
    m = boundary_pts.shape[0]
    apex = boundary_pts.mean(axis=0)
    K = max(1, int(round(m / (2.0 * np.pi))))
    verts = [boundary_pts]
    rings = [list(range(m))]
    nxt = m
    for k in range(1, K):
        lam = 1.0 - k / K
        mk = max(6, int(np.ceil(m * lam)))
        frac = np.arange(mk) / mk
        ring_pts = apex + lam * (_interp_ring(boundary_pts, frac) - apex)
        verts.append(ring_pts)
        rings.append(list(range(nxt, nxt + mk)))
        nxt += mk
    apex_idx = nxt
    verts.append(apex[None, :])
    tris = []
    for outer, inner in zip(rings, rings[1:]):
        tris.extend(_stitch(outer, inner))
    last = rings[-1]
    mk = len(last)
    for j in range(mk):
        tris.append((last[j], last[(j + 1) % mk], apex_idx))
    return np.vstack(verts), np.array(tris, dtype=np.int64)


def initial_spanning_surface(sys, mode="midline", fallback=None):
    """Coned fill of each rod's attachment curve; the standard seed film.

    mode 'midline' glues the film straight to the midlines (the thin limit),
    'tube' to a constant-offset curve on each tube, aimed at the midline
    centroid so the cone stays on the inward side. If a cone pierces its own
    rod's tube the user-provided fallback surface is returned instead, or
    SeedFailed is raised.
    """
    if mode not in ("midline", "tube"):
        raise ValueError("mode must be 'midline' or 'tube'")
    all_verts = []
    all_tris = []
    loops = []
    offset = 0
    for i, rod in enumerate(sys.rods):
        pts, svals, locus_s, locus_points, offsets = _attachment_ring(
            rod, sys.epsilon, mode,
        )
        m = pts.shape[0]
        verts, tris = _coned_fill(pts)
        if _seed_conflicts(rod, sys.epsilon, verts, tris, m, mode):
            if fallback is not None:
                fallback.validate()
                return fallback
            raise SeedFailed(
                f"coned fill of rod {i} pierces its own tube; supply a seed "
                "mesh for this geometry"
            )
        all_verts.append(verts)
        all_tris.append(tris + offset)
        loops.append(BoundaryLoop(
            i, mode, np.arange(m) + offset, svals, locus_s, locus_points,
            offsets=offsets,
        ))
        offset += verts.shape[0]
    return SpanningSurface(np.vstack(all_verts), np.vstack(all_tris), loops)


def _split_triangle(tri, mids, positions):
    """Split one triangle by its marked-edge midpoints.

    mids[k] is the midpoint vertex of edge (tri[k], tri[(k+1)%3]) or -1.
    Children are listed in parent orientation. positions gives vertex
    coordinates for choosing the better quad diagonal in the 2-split case.
    """
    v0, v1, v2 = (int(x) for x in tri)
    m = [int(x) for x in mids]
    marked = [k for k in range(3) if m[k] >= 0]
    if not marked:
        return [(v0, v1, v2)]
    if len(marked) == 3:
        return [
            (v0, m[0], m[2]), (m[0], v1, m[1]), (m[2], m[1], v2),
            (m[0], m[1], m[2]),
        ]
    if len(marked) == 1:
        k = marked[0]
        corners = (v0, v1, v2)
        a = corners[k]
        b = corners[(k + 1) % 3]
        c = corners[(k + 2) % 3]
        return [(a, m[k], c), (m[k], b, c)]
    # two marked edges: cut the corner between them, then the quad by its
    # shorter diagonal
    k = [k for k in range(3) if m[k] < 0][0]
    corners = (v0, v1, v2)
    a = corners[k]            # unmarked edge runs a -> b
    b = corners[(k + 1) % 3]
    c = corners[(k + 2) % 3]  # both edges at corner c are marked
    mbc = m[(k + 1) % 3]
    mca = m[(k + 2) % 3]
    tris = [(mca, mbc, c)]
    if np.linalg.norm(positions[a] - positions[mbc]) <= np.linalg.norm(
        positions[b] - positions[mca]
    ):
        tris += [(a, b, mbc), (a, mbc, mca)]
    else:
        tris += [(a, b, mca), (b, mbc, mca)]
    return tris


class _LoopWork:
    """Mutable view of a boundary loop during refinement."""

    def __init__(self, loop):
        self.loop = loop
        self.vertices = [int(v) for v in loop.vertices]
        self.svals = [float(s) for s in loop.svals]
        self.period = float(loop.locus_s[-1])

    def edge_set(self, nv):
        keys = {}
        n = len(self.vertices)
        for pos in range(n):
            a = self.vertices[pos]
            b = self.vertices[(pos + 1) % n]
            keys[int(_edge_key(np.int64(a), np.int64(b), nv))] = pos
        return keys

    def midpoint_s(self, pos):
        n = len(self.vertices)
        sa = self.svals[pos]
        sb = self.svals[(pos + 1) % n]
        if pos == n - 1:
            sb = self.period if self.svals[0] <= sa else sb
        return 0.5 * (sa + sb)

    def insert_after(self, pos, vertex, s):
        self.vertices.insert(pos + 1, vertex)
        self.svals.insert(pos + 1, s)

    def finish(self):
        return BoundaryLoop(
            self.loop.rod, self.loop.mode, np.array(self.vertices),
            np.array(self.svals), self.loop.locus_s, self.loop.locus_points,
            offsets=self.loop.offsets,
        )


def _bisect_pass(verts, tris, works, target):
    """One marked-edge bisection sweep; returns (verts, tris, changed)."""
    nv = np.int64(verts.shape[0])
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    pts = verts
    lens = np.stack([
        np.linalg.norm(pts[b] - pts[a], axis=1),
        np.linalg.norm(pts[c] - pts[b], axis=1),
        np.linalg.norm(pts[a] - pts[c], axis=1),
    ], axis=1)
    ekeys = np.stack(
        [_edge_key(a, b, nv), _edge_key(b, c, nv), _edge_key(c, a, nv)], axis=1
    )
    marked = set(int(k) for k in ekeys[lens > target])
    if not marked:
        return verts, tris, False
    # closure: whenever a triangle has any marked edge, its longest edge
    # must be marked too, or bisection would leave hanging nodes
    longest = np.argmax(lens, axis=1)
    changed = True
    while changed:
        changed = False
        tri_marked = np.isin(ekeys, np.fromiter(marked, dtype=np.int64)).any(axis=1)
        for ti in np.nonzero(tri_marked)[0]:
            lk = int(ekeys[ti, longest[ti]])
            if lk not in marked:
                marked.add(lk)
                changed = True
    # one midpoint vertex per marked edge
    new_verts = [verts]
    mid_of = {}
    loop_edges = [w.edge_set(nv) for w in works]
    next_idx = verts.shape[0]
    for key in sorted(marked):
        i = int(key // nv)
        j = int(key % nv)
        mid_of[key] = next_idx
        new_verts.append(0.5 * (verts[i] + verts[j])[None, :])
        next_idx += 1
    verts = np.vstack(new_verts)
    # boundary bookkeeping: insert midpoints into their loops, in reverse
    # position order so earlier insertions do not shift later ones
    for w, edges in zip(works, loop_edges):
        hits = [(pos, key) for key, pos in edges.items() if key in mid_of]
        for pos, key in sorted(hits, reverse=True):
            w.insert_after(pos, mid_of[key], w.midpoint_s(pos))
    out = []
    for ti in range(tris.shape[0]):
        mids = [mid_of.get(int(ekeys[ti, k]), -1) for k in range(3)]
        out.extend(_split_triangle(tris[ti], mids, verts))
    return verts, np.array(out, dtype=np.int64), True


def _compact(verts, tris, loops):
    used = np.zeros(verts.shape[0], dtype=bool)
    used[tris.ravel()] = True
    for loop in loops:
        used[loop.vertices] = True
    index_map = -np.ones(verts.shape[0], dtype=np.int64)
    index_map[used] = np.arange(int(used.sum()))
    return (
        verts[used], index_map[tris], [lp.remapped(index_map) for lp in loops],
    )


def _try_collapse(verts, tris, boundary_mask, ti, floor, max_len):
    """Collapse the shortest legal edge of triangle ti; None if impossible."""
    tri = tris[ti]
    pts = verts
    pairs = [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])]
    pairs.sort(key=lambda p: np.linalg.norm(pts[p[0]] - pts[p[1]]))
    for u, v in pairs:
        if np.linalg.norm(pts[u] - pts[v]) > max_len:
            continue
        if boundary_mask[u] and boundary_mask[v]:
            continue
        if boundary_mask[v]:
            u, v = v, u   # collapse the free endpoint onto the boundary one
        keep = int(u)
        drop = int(v)
        new_pos = verts[keep] if boundary_mask[keep] else 0.5 * (
            verts[keep] + verts[drop]
        )
        dead = (tris == drop).any(axis=1) & (tris == keep).any(axis=1)
        cand = tris.copy()
        cand[cand == drop] = keep
        cand = cand[~dead]
        vnew = verts.copy()
        vnew[keep] = new_pos
        aff = ((tris == drop).any(axis=1) | (tris == keep).any(axis=1)) & ~dead
        old_aff = tris[aff]
        new_aff = old_aff.copy()
        new_aff[new_aff == drop] = keep
        if np.any(
            (new_aff[:, 0] == new_aff[:, 1])
            | (new_aff[:, 1] == new_aff[:, 2])
            | (new_aff[:, 2] == new_aff[:, 0])
        ):
            continue
        n_old = np.cross(
            verts[old_aff[:, 1]] - verts[old_aff[:, 0]],
            verts[old_aff[:, 2]] - verts[old_aff[:, 0]],
        )
        n_new = np.cross(
            vnew[new_aff[:, 1]] - vnew[new_aff[:, 0]],
            vnew[new_aff[:, 2]] - vnew[new_aff[:, 0]],
        )
        area_new = 0.5 * np.linalg.norm(n_new, axis=1)
        if np.any(area_new <= floor):
            continue
        if np.any(np.einsum("ij,ij->i", n_old, n_new) <= 0.0):
            continue
        heads = np.concatenate([cand[:, 0], cand[:, 1], cand[:, 2]])
        tails = np.concatenate([cand[:, 1], cand[:, 2], cand[:, 0]])
        _, counts = np.unique(
            _edge_key(heads, tails, np.int64(vnew.shape[0])), return_counts=True
        )
        if np.any(counts > 2):
            continue
        return vnew, cand
    return None


def refine_and_cleanup(S, target_edge, witnesses=None, quality_floor=QUALITY_FLOOR,
                       max_passes=32):
    """Bisect long edges down to target_edge, then collapse interior slivers.

    Boundary midpoints stay on the attachment locus because the locus is the
    piecewise-linear curve through the original attachment points. If the
    result stops intersecting a witness loop the operation raises
    SpanningLost and the input surface (never mutated) remains valid.
    """
    if target_edge <= 0.0:
        raise ValueError("target_edge must be positive")
    verts = S.vertices.copy()
    tris = S.triangles.copy()
    works = [_LoopWork(lp) for lp in S.boundary_loops]
    any_change = False
    for _ in range(max_passes):
        verts, tris, changed = _bisect_pass(verts, tris, works, target_edge)
        if not changed:
            break
        any_change = True
    loops = [w.finish() for w in works]
    # sliver cleanup: collapse short interior edges of bad-angle triangles
    floor = AREA_FLOOR * S.scale() ** 2
    boundary_mask = np.zeros(verts.shape[0], dtype=bool)
    for lp in loops:
        boundary_mask[lp.vertices] = True
    for _ in range(200):
        mesh = TriangleMesh(verts, tris)
        ls = mesh.edge_lengths()
        with np.errstate(invalid="ignore"):
            cosang = np.stack([
                (ls[:, 0]**2 + ls[:, 2]**2 - ls[:, 1]**2) / (2 * ls[:, 0] * ls[:, 2]),
                (ls[:, 0]**2 + ls[:, 1]**2 - ls[:, 2]**2) / (2 * ls[:, 0] * ls[:, 1]),
                (ls[:, 1]**2 + ls[:, 2]**2 - ls[:, 0]**2) / (2 * ls[:, 1] * ls[:, 2]),
            ], axis=1)
        angles = np.arccos(np.clip(cosang, -1.0, 1.0))
        worst = angles.min(axis=1)
        order = np.argsort(worst)
        done = True
        for ti in order:
            if worst[ti] >= quality_floor:
                break
            got = _try_collapse(
                verts, tris, boundary_mask, ti, floor, 0.5 * target_edge
            )
            if got is not None:
                verts, tris = got
                any_change = True
                done = False
                break
        if done:
            break
    if not any_change:
        return S
    verts, tris, loops = _compact(verts, tris, loops)
    out = SpanningSurface(verts, tris, loops)
    if witnesses is not None:
        ok, report = check_spanning(out, witnesses)
        if not ok:
            misses = [i for i, h in report if h == 0]
            raise SpanningLost(
                f"refinement broke witness intersections {misses}; "
                "the input surface is unchanged"
            )
    return out


def save_surface(S, obj_path, sidecar_path=None):
    """OBJ mesh plus a YAML sidecar describing the boundary attachments."""
    sidecar_path = sidecar_path or obj_path + ".attach.yaml"
    S.to_obj(obj_path)
    doc = {"loops": []}
    for lp in S.boundary_loops:
        entry = {
            "rod": lp.rod,
            "mode": lp.mode,
            "vertices": [int(v) for v in lp.vertices],
            "s": [float(x) for x in lp.svals],
            "locus_s": [float(x) for x in lp.locus_s],
            "locus_points": [[float(c) for c in p] for p in lp.locus_points],
        }
        if lp.offsets is not None:
            entry["offsets"] = [[float(c) for c in p] for p in lp.offsets]
        doc["loops"].append(entry)
    with open(sidecar_path, "w") as f:
        yaml.safe_dump(doc, f, sort_keys=False)


def load_surface(obj_path, sidecar_path=None):
    sidecar_path = sidecar_path or obj_path + ".attach.yaml"
    verts, tris = TriangleMesh.read_obj_arrays(obj_path)
    with open(sidecar_path) as f:
        doc = yaml.safe_load(f)
    loops = [
        BoundaryLoop(
            entry["rod"], entry["mode"], entry["vertices"], entry["s"],
            entry["locus_s"], entry["locus_points"],
            offsets=entry.get("offsets"),
        )
        for entry in doc["loops"]
    ]
    return SpanningSurface(verts, tris, loops)


def _reseat_loop(lp, fr, eps):
    """Locus points of `lp` rebuilt on the frame `fr` (same s, same offsets)."""
    idx = np.rint(lp.locus_s / fr.h).astype(np.int64)
    if np.any(idx < 0) or np.any(idx > fr.n) or not np.allclose(
        fr.s[idx], lp.locus_s, atol=1e-9 * max(fr.L, 1.0)
    ):
        raise ValueError(f"loop on rod {lp.rod} does not sit on that rod's grid")
    off = lp.offsets
    if off is None:
        pts = fr.x[idx].copy()
    else:
        e = np.cross(fr.t[idx], fr.d[idx])
        pts = fr.x[idx] + eps * (off[:, :1] * fr.d[idx] + off[:, 1:] * e)
    # exact closure of the wrapped locus node
    pts[-1] = pts[0]
    return pts


def _locus_interp(svals, locus_s, pts):
    return np.column_stack([
        np.interp(svals, locus_s, pts[:, k]) for k in range(3)
    ])


def dragged_vertices(S, sys):
    """Vertex array of S with every boundary loop re-seated on sys frames.

    Free vertices stay put; no mesh validation happens. Use drag_surface
    for a validated SpanningSurface.
    """
    V = S.vertices.copy()
    for lp in S.boundary_loops:
        pts = _reseat_loop(lp, sys.rods[lp.rod].frame, sys.epsilon)
        V[lp.vertices] = _locus_interp(lp.svals, lp.locus_s, pts)
    return V


def drag_surface(S, sys):
    """Re-seat every boundary loop on the current frames of `sys`.

    Each locus node keeps its arclength parameter and section offset; only
    the frame it rides on changes. Free vertices stay put. The loop's s
    grid must match the rod grid it was built from.
    """
    V = S.vertices.copy()
    loops = []
    for lp in S.boundary_loops:
        pts = _reseat_loop(lp, sys.rods[lp.rod].frame, sys.epsilon)
        new_lp = BoundaryLoop(
            lp.rod, lp.mode, lp.vertices, lp.svals, lp.locus_s, pts,
            offsets=lp.offsets,
        )
        V[lp.vertices] = _locus_interp(lp.svals, lp.locus_s, pts)
        loops.append(new_lp)
    return SpanningSurface(V, S.triangles, loops)
