"""Segment/triangle crossing counts and point-to-polyline distances."""

import numpy as np

from ._backend import Kernel


def _seg_tri_hits_loop(s0, s1, va, vb, vc, eps):
    # Moller-Trumbore restricted to the segment parameter range [0, 1]
    nseg = s0.shape[0]
    ntri = va.shape[0]
    hits = np.zeros(nseg, dtype=np.int64)
    for i in range(nseg):
        dx = s1[i, 0] - s0[i, 0]
        dy = s1[i, 1] - s0[i, 1]
        dz = s1[i, 2] - s0[i, 2]
        for j in range(ntri):
            e1x = vb[j, 0] - va[j, 0]
            e1y = vb[j, 1] - va[j, 1]
            e1z = vb[j, 2] - va[j, 2]
            e2x = vc[j, 0] - va[j, 0]
            e2y = vc[j, 1] - va[j, 1]
            e2z = vc[j, 2] - va[j, 2]
            px = dy * e2z - dz * e2y
            py = dz * e2x - dx * e2z
            pz = dx * e2y - dy * e2x
            det = e1x * px + e1y * py + e1z * pz
            if det > -eps and det < eps:
                continue
            inv = 1.0 / det
            tx = s0[i, 0] - va[j, 0]
            ty = s0[i, 1] - va[j, 1]
            tz = s0[i, 2] - va[j, 2]
            u = (tx * px + ty * py + tz * pz) * inv
            if u < 0.0 or u > 1.0:
                continue
            qx = ty * e1z - tz * e1y
            qy = tz * e1x - tx * e1z
            qz = tx * e1y - ty * e1x
            v = (dx * qx + dy * qy + dz * qz) * inv
            if v < 0.0 or u + v > 1.0:
                continue
            t = (e2x * qx + e2y * qy + e2z * qz) * inv
            if t < 0.0 or t > 1.0:
                continue
            hits[i] += 1
    return hits


def _seg_tri_hits_numpy(s0, s1, va, vb, vc, eps):
    nseg = s0.shape[0]
    hits = np.zeros(nseg, dtype=np.int64)
    e1 = vb - va
    e2 = vc - va
    for i in range(nseg):
        d = s1[i] - s0[i]
        p = np.cross(d[None, :], e2)
        det = np.einsum("jk,jk->j", e1, p)
        ok = np.abs(det) >= eps
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        tv = s0[i][None, :] - va
        u = np.einsum("jk,jk->j", tv, p) * inv
        ok &= (u >= 0.0) & (u <= 1.0)
        q = np.cross(tv, e1)
        v = np.einsum("k,jk->j", d, q) * inv
        ok &= (v >= 0.0) & (u + v <= 1.0)
        t = np.einsum("jk,jk->j", e2, q) * inv
        ok &= (t >= 0.0) & (t <= 1.0)
        hits[i] = int(np.count_nonzero(ok))
    return hits


seg_tri_hits = Kernel(_seg_tri_hits_loop, _seg_tri_hits_numpy)


def _point_segments_dist_loop(pts, a, b):
    npts = pts.shape[0]
    nseg = a.shape[0]
    out = np.empty(npts)
    for i in range(npts):
        px = pts[i, 0]
        py = pts[i, 1]
        pz = pts[i, 2]
        best = np.inf
        for j in range(nseg):
            ex = b[j, 0] - a[j, 0]
            ey = b[j, 1] - a[j, 1]
            ez = b[j, 2] - a[j, 2]
            rx = px - a[j, 0]
            ry = py - a[j, 1]
            rz = pz - a[j, 2]
            ee = ex * ex + ey * ey + ez * ez
            t = 0.0
            if ee > 0.0:
                t = (rx * ex + ry * ey + rz * ez) / ee
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
            wx = rx - t * ex
            wy = ry - t * ey
            wz = rz - t * ez
            d2 = wx * wx + wy * wy + wz * wz
            if d2 < best:
                best = d2
        out[i] = np.sqrt(best)
    return out


def _point_segments_dist_numpy(pts, a, b):
    e = b - a
    ee = np.einsum("jk,jk->j", e, e)
    ee_safe = np.where(ee > 0.0, ee, 1.0)
    out = np.empty(pts.shape[0])
    block = max(1, int(2.0e6 // max(1, a.shape[0])))
    for lo in range(0, pts.shape[0], block):
        hi = lo + block
        r = pts[lo:hi, None, :] - a[None, :, :]
        t = np.clip(np.einsum("ijk,jk->ij", r, e) / ee_safe[None, :], 0.0, 1.0)
        w = r - t[:, :, None] * e[None, :, :]
        out[lo:hi] = np.sqrt(np.min(np.einsum("ijk,ijk->ij", w, w), axis=1))
    return out


point_segments_dist = Kernel(_point_segments_dist_loop, _point_segments_dist_numpy)
