"""Minimum circumradius over all node triples of a polyline (O(n^3) scan).

The pruned variant exploits R >= (longest side)/2: once a candidate best
radius is known, any triple containing a chord of length >= 2*best cannot
beat it, so whole inner loops are skipped. The pruning is exact, the
returned value is identical to the full scan.
"""

import numpy as np

from ._backend import Kernel


def _min_circumradius_loop(nodes, tol):
    # R = |u||v||w| / (2 |u x v|); near-collinear triples count as inf
    def circ3(i, j, k):
        ux = nodes[j, 0] - nodes[i, 0]
        uy = nodes[j, 1] - nodes[i, 1]
        uz = nodes[j, 2] - nodes[i, 2]
        vx = nodes[k, 0] - nodes[i, 0]
        vy = nodes[k, 1] - nodes[i, 1]
        vz = nodes[k, 2] - nodes[i, 2]
        wx = nodes[k, 0] - nodes[j, 0]
        wy = nodes[k, 1] - nodes[j, 1]
        wz = nodes[k, 2] - nodes[j, 2]
        crx = uy * vz - uz * vy
        cry = uz * vx - ux * vz
        crz = ux * vy - uy * vx
        cr = np.sqrt(crx * crx + cry * cry + crz * crz)
        nu = np.sqrt(ux * ux + uy * uy + uz * uz)
        nv = np.sqrt(vx * vx + vy * vy + vz * vz)
        if cr <= tol * nu * nv:
            return np.inf
        nw = np.sqrt(wx * wx + wy * wy + wz * wz)
        return nu * nv * nw / (2.0 * cr)

    n = nodes.shape[0]
    best = np.inf
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            for k in range(j + 1, n):
                r = circ3(i, j, k)
                if r < best:
                    best = r
    return best


def _pairs_block(q, tol):
    """Min circumradius over triples (base, j, k) given q = nodes[jk] - base."""
    m = q.shape[0]
    if m < 2:
        return np.inf
    nq = np.sqrt(np.einsum("ik,ik->i", q, q))
    cr = np.cross(q[:, None, :], q[None, :, :])
    ncr = np.sqrt(np.einsum("ijk,ijk->ij", cr, cr))
    w = q[None, :, :] - q[:, None, :]
    nw = np.sqrt(np.einsum("ijk,ijk->ij", w, w))
    uv = nq[:, None] * nq[None, :]
    iu, ik = np.triu_indices(m, k=1)
    ncr_f = ncr[iu, ik]
    ok = ncr_f > tol * uv[iu, ik]
    if not np.any(ok):
        return np.inf
    r = uv[iu, ik][ok] * nw[iu, ik][ok] / (2.0 * ncr_f[ok])
    return float(np.min(r))


def _min_circumradius_numpy(nodes, tol):
    n = nodes.shape[0]
    best = np.inf
    for i in range(n - 2):
        q = nodes[i + 1 :] - nodes[i]
        best = min(best, _pairs_block(q, tol))
    return best


min_circumradius = Kernel(_min_circumradius_loop, _min_circumradius_numpy)


def _min_circumradius_pruned_loop(nodes, tol, seed_stride):
    def circ3(i, j, k):
        ux = nodes[j, 0] - nodes[i, 0]
        uy = nodes[j, 1] - nodes[i, 1]
        uz = nodes[j, 2] - nodes[i, 2]
        vx = nodes[k, 0] - nodes[i, 0]
        vy = nodes[k, 1] - nodes[i, 1]
        vz = nodes[k, 2] - nodes[i, 2]
        wx = nodes[k, 0] - nodes[j, 0]
        wy = nodes[k, 1] - nodes[j, 1]
        wz = nodes[k, 2] - nodes[j, 2]
        crx = uy * vz - uz * vy
        cry = uz * vx - ux * vz
        crz = ux * vy - uy * vx
        cr = np.sqrt(crx * crx + cry * cry + crz * crz)
        nu = np.sqrt(ux * ux + uy * uy + uz * uz)
        nv = np.sqrt(vx * vx + vy * vy + vz * vz)
        if cr <= tol * nu * nv:
            return np.inf
        nw = np.sqrt(wx * wx + wy * wy + wz * wz)
        return nu * nv * nw / (2.0 * cr)

    n = nodes.shape[0]
    best = np.inf
    st = seed_stride
    if st < 1:
        st = 1
    # coarse strided pass seeds the bound cheaply
    for i in range(0, n - 2, st):
        for j in range(i + st, n - 1, st):
            for k in range(j + st, n, st):
                r = circ3(i, j, k)
                if r < best:
                    best = r
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            djx = nodes[j, 0] - nodes[i, 0]
            djy = nodes[j, 1] - nodes[i, 1]
            djz = nodes[j, 2] - nodes[i, 2]
            if 0.25 * (djx * djx + djy * djy + djz * djz) >= best * best:
                continue
            for k in range(j + 1, n):
                r = circ3(i, j, k)
                if r < best:
                    best = r
    return best


def _min_circumradius_pruned_numpy(nodes, tol, seed_stride):
    n = nodes.shape[0]
    st = max(1, int(seed_stride))
    best = _min_circumradius_numpy(nodes[::st], tol) if n // st >= 3 else np.inf
    for i in range(n - 2):
        q = nodes[i + 1 :] - nodes[i]
        if np.isfinite(best):
            keep = np.einsum("ik,ik->i", q, q) < 4.0 * best * best
            q = q[keep]
        best = min(best, _pairs_block(q, tol))
    return best


min_circumradius_pruned = Kernel(_min_circumradius_pruned_loop, _min_circumradius_pruned_numpy)
