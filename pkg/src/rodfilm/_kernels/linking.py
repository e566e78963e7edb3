"""Pairwise edge kernels: Gauss linking double sum and polyline separation."""

import numpy as np

from ._backend import Kernel

_TINY = 1e-300


def _gauss_pair_sum_loop(mid1, chord1, mid2, chord2):
    n1 = mid1.shape[0]
    n2 = mid2.shape[0]
    acc = 0.0
    for i in range(n1):
        m1x = mid1[i, 0]
        m1y = mid1[i, 1]
        m1z = mid1[i, 2]
        u1x = chord1[i, 0]
        u1y = chord1[i, 1]
        u1z = chord1[i, 2]
        for j in range(n2):
            rx = m1x - mid2[j, 0]
            ry = m1y - mid2[j, 1]
            rz = m1z - mid2[j, 2]
            cx = u1y * chord2[j, 2] - u1z * chord2[j, 1]
            cy = u1z * chord2[j, 0] - u1x * chord2[j, 2]
            cz = u1x * chord2[j, 1] - u1y * chord2[j, 0]
            r2 = rx * rx + ry * ry + rz * rz
            acc += (rx * cx + ry * cy + rz * cz) / (r2 * np.sqrt(r2))
    return acc


def _gauss_pair_sum_numpy(mid1, chord1, mid2, chord2):
    acc = 0.0
    block = max(1, int(4.0e6 // max(1, mid2.shape[0])))
    for lo in range(0, mid1.shape[0], block):
        hi = lo + block
        r = mid1[lo:hi, None, :] - mid2[None, :, :]
        c = np.cross(chord1[lo:hi, None, :], chord2[None, :, :])
        r2 = np.einsum("ijk,ijk->ij", r, r)
        acc += float(np.sum(np.einsum("ijk,ijk->ij", r, c) / (r2 * np.sqrt(r2))))
    return acc


gauss_pair_sum = Kernel(_gauss_pair_sum_loop, _gauss_pair_sum_numpy)


def _min_gap_loop(a0, da, b0, db):
    # closest-point parameters per segment pair (Ericson's clamped scheme)
    def clamp01(x):
        if x < 0.0:
            return 0.0
        if x > 1.0:
            return 1.0
        return x

    best = np.inf
    for i in range(a0.shape[0]):
        ax = a0[i, 0]
        ay = a0[i, 1]
        az = a0[i, 2]
        d1x = da[i, 0]
        d1y = da[i, 1]
        d1z = da[i, 2]
        a = d1x * d1x + d1y * d1y + d1z * d1z
        for j in range(b0.shape[0]):
            d2x = db[j, 0]
            d2y = db[j, 1]
            d2z = db[j, 2]
            rx = ax - b0[j, 0]
            ry = ay - b0[j, 1]
            rz = az - b0[j, 2]
            e = d2x * d2x + d2y * d2y + d2z * d2z
            f = d2x * rx + d2y * ry + d2z * rz
            c = d1x * rx + d1y * ry + d1z * rz
            b = d1x * d2x + d1y * d2y + d1z * d2z
            denom = a * e - b * b
            if denom > _TINY:
                s = clamp01((b * f - c * e) / denom)
            else:
                s = 0.0
            if e > _TINY:
                t = (b * s + f) / e
            else:
                t = 0.0
            if t < 0.0:
                t = 0.0
                s = clamp01(-c / a) if a > _TINY else 0.0
            elif t > 1.0:
                t = 1.0
                s = clamp01((b - c) / a) if a > _TINY else 0.0
            wx = rx + s * d1x - t * d2x
            wy = ry + s * d1y - t * d2y
            wz = rz + s * d1z - t * d2z
            d2sum = wx * wx + wy * wy + wz * wz
            if d2sum < best:
                best = d2sum
    return np.sqrt(best)


def _min_gap_numpy(a0, da, b0, db):
    a = np.einsum("ik,ik->i", da, da)[:, None]
    e = np.einsum("jk,jk->j", db, db)[None, :]
    best = np.inf
    block = max(1, int(2.0e6 // max(1, b0.shape[0])))
    for lo in range(0, a0.shape[0], block):
        hi = lo + block
        r = a0[lo:hi, None, :] - b0[None, :, :]
        c = np.einsum("ik,ijk->ij", da[lo:hi], r)
        f = np.einsum("jk,ijk->ij", db, r)
        b = np.einsum("ik,jk->ij", da[lo:hi], db)
        ab = a[lo:hi]
        denom = ab * e - b * b
        s = np.where(denom > _TINY, np.clip((b * f - c * e) / np.where(denom > _TINY, denom, 1.0), 0.0, 1.0), 0.0)
        t = (b * s + f) / np.where(e > _TINY, e, 1.0)
        a_safe = np.where(ab > _TINY, ab, 1.0)
        s = np.where(t < 0.0, np.clip(-c / a_safe, 0.0, 1.0), s)
        s = np.where(t > 1.0, np.clip((b - c) / a_safe, 0.0, 1.0), s)
        t = np.clip(t, 0.0, 1.0)
        w = r + s[:, :, None] * da[lo:hi, None, :] - t[:, :, None] * db[None, :, :]
        best = min(best, float(np.min(np.einsum("ijk,ijk->ij", w, w))))
    return np.sqrt(best)


min_gap = Kernel(_min_gap_loop, _min_gap_numpy)
