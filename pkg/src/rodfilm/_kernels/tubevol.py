"""Perpendicular-plane crossings of points against a framed midline.

A point p lies inside the tube around a framed curve iff some arclength s*
with (p - x(s*)) . t(s*) = 0 puts the section offset (z1, z2) inside the
cross-section. This kernel extracts all such crossings per point: the sign
pattern of g_k = (p - x_k) . t_k along the nodes locates them, linear
interpolation inside the flipped interval supplies s* and the section
coordinates. Section membership itself is applied by the caller, which
keeps the kernel independent of the section shape.
"""

import numpy as np

from ._backend import Kernel


def _tube_crossings_loop(pts, s, x, t, d, kmax):
    npts = pts.shape[0]
    n = s.shape[0] - 1
    counts = np.zeros(npts, dtype=np.int64)
    sstar = np.zeros((npts, kmax))
    z1 = np.zeros((npts, kmax))
    z2 = np.zeros((npts, kmax))
    for i in range(npts):
        px = pts[i, 0]
        py = pts[i, 1]
        pz = pts[i, 2]
        g0 = (px - x[0, 0]) * t[0, 0] + (py - x[0, 1]) * t[0, 1] + (pz - x[0, 2]) * t[0, 2]
        c = 0
        for k in range(n):
            g1 = (
                (px - x[k + 1, 0]) * t[k + 1, 0]
                + (py - x[k + 1, 1]) * t[k + 1, 1]
                + (pz - x[k + 1, 2]) * t[k + 1, 2]
            )
            if (g0 > 0.0) != (g1 > 0.0):
                th = g0 / (g0 - g1)
                om = 1.0 - th
                xsx = om * x[k, 0] + th * x[k + 1, 0]
                xsy = om * x[k, 1] + th * x[k + 1, 1]
                xsz = om * x[k, 2] + th * x[k + 1, 2]
                tsx = om * t[k, 0] + th * t[k + 1, 0]
                tsy = om * t[k, 1] + th * t[k + 1, 1]
                tsz = om * t[k, 2] + th * t[k + 1, 2]
                dsx = om * d[k, 0] + th * d[k + 1, 0]
                dsy = om * d[k, 1] + th * d[k + 1, 1]
                dsz = om * d[k, 2] + th * d[k + 1, 2]
                tn = np.sqrt(tsx * tsx + tsy * tsy + tsz * tsz)
                if tn < 1e-300:
                    tn = 1e-300
                tsx /= tn
                tsy /= tn
                tsz /= tn
                proj = dsx * tsx + dsy * tsy + dsz * tsz
                dsx -= proj * tsx
                dsy -= proj * tsy
                dsz -= proj * tsz
                dn = np.sqrt(dsx * dsx + dsy * dsy + dsz * dsz)
                if dn < 1e-300:
                    dn = 1e-300
                dsx /= dn
                dsy /= dn
                dsz /= dn
                esx = tsy * dsz - tsz * dsy
                esy = tsz * dsx - tsx * dsz
                esz = tsx * dsy - tsy * dsx
                rx = px - xsx
                ry = py - xsy
                rz = pz - xsz
                if c < kmax:
                    sstar[i, c] = om * s[k] + th * s[k + 1]
                    z1[i, c] = rx * dsx + ry * dsy + rz * dsz
                    z2[i, c] = rx * esx + ry * esy + rz * esz
                c += 1
            g0 = g1
        counts[i] = c
    return counts, sstar, z1, z2


def _tube_crossings_numpy(pts, s, x, t, d, kmax):
    npts = pts.shape[0]
    counts = np.zeros(npts, dtype=np.int64)
    sstar = np.zeros((npts, kmax))
    z1 = np.zeros((npts, kmax))
    z2 = np.zeros((npts, kmax))
    block = max(1, int(4.0e6 // max(1, s.shape[0])))
    for lo in range(0, npts, block):
        hi = min(npts, lo + block)
        p = pts[lo:hi]
        g = np.einsum("ijk,jk->ij", p[:, None, :] - x[None, :, :], t)
        pos = g > 0.0
        flip = pos[:, :-1] != pos[:, 1:]
        counts[lo:hi] = flip.sum(axis=1)
        ii, kk = np.nonzero(flip)
        if ii.size == 0:
            continue
        g0 = g[ii, kk]
        g1 = g[ii, kk + 1]
        th = (g0 / (g0 - g1))[:, None]
        om = 1.0 - th
        xs_ = om * x[kk] + th * x[kk + 1]
        ts_ = om * t[kk] + th * t[kk + 1]
        ds_ = om * d[kk] + th * d[kk + 1]
        tn = np.maximum(np.sqrt(np.einsum("ik,ik->i", ts_, ts_)), 1e-300)
        ts_ = ts_ / tn[:, None]
        ds_ = ds_ - np.einsum("ik,ik->i", ds_, ts_)[:, None] * ts_
        dn = np.maximum(np.sqrt(np.einsum("ik,ik->i", ds_, ds_)), 1e-300)
        ds_ = ds_ / dn[:, None]
        es_ = np.cross(ts_, ds_)
        r = p[ii] - xs_
        sv = om[:, 0] * s[kk] + th[:, 0] * s[kk + 1]
        z1v = np.einsum("ik,ik->i", r, ds_)
        z2v = np.einsum("ik,ik->i", r, es_)
        first = np.zeros(ii.size, dtype=np.int64)
        _, start, inv = np.unique(ii, return_index=True, return_inverse=True)
        first = start[inv]
        slot = np.arange(ii.size) - first
        keep = slot < kmax
        sstar[lo + ii[keep], slot[keep]] = sv[keep]
        z1[lo + ii[keep], slot[keep]] = z1v[keep]
        z2[lo + ii[keep], slot[keep]] = z2v[keep]
    return counts, sstar, z1, z2


tube_crossings = Kernel(_tube_crossings_loop, _tube_crossings_numpy)
