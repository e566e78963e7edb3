"""Built-in rod systems: a circle, a linked pair, and a trefoil sample.

Presets exist so experiments and acceptance checks run with zero external
data. Each returns a ready RodSystem; energy models come from the caller.
"""

import numpy as np

from .rod import CurvatureField, InitialFrame, closure_defects, integrate_frame
from .sections import CrossSectionProfile, DiskSection, PolygonSection
from .system import Rod, RodSystem

# Triangle with its centroid off the section origin: both first area
# moments are nonzero (0.002, 0.002), which keeps the first-order term of
# the scaled gravity expansion alive. A centered disk would zero it out.
TRIANGLE_VERTICES = ((0.3, 0.0), (-0.1, 0.2), (-0.1, -0.1))


def triangle_section():
    return PolygonSection(TRIANGLE_VERTICES)


def circle(n=256, shape=None, epsilon=1.0, twist_target=0):
    """Unit circle in the xy-plane with constant curvature samples.

    The default cross-section is the off-center triangle so that gravity
    sweeps see a nonzero first-moment term.
    """
    L = 2.0 * np.pi
    ones = np.ones(n + 1)
    w = CurvatureField(L, np.column_stack([ones, 0.0 * ones, 0.0 * ones]))
    f0 = InitialFrame(x0=(0.0, 1.0, 0.0), t0=(1.0, 0.0, 0.0), d0=(0.0, -1.0, 0.0))
    profile = CrossSectionProfile(shape=shape if shape is not None else triangle_section())
    rod = Rod(w, f0, profile, twist_target=twist_target)
    return RodSystem([rod], linking_target=[[0]], epsilon=epsilon)


def hopf_pair(n=256, a=0.05, epsilon=1.0):
    """Two unit circles forming a Hopf link (pairwise linking number +1).

    Rod 0 lies in the xy-plane about the origin; rod 1 lies in the xz-plane
    about (1, 0, 0), threading through rod 0.
    """
    L = 2.0 * np.pi
    ones = np.ones(n + 1)
    samples = np.column_stack([ones, 0.0 * ones, 0.0 * ones])
    f1 = InitialFrame(x0=(0.0, 1.0, 0.0), t0=(1.0, 0.0, 0.0), d0=(0.0, -1.0, 0.0))
    f2 = InitialFrame(x0=(2.0, 0.0, 0.0), t0=(0.0, 0.0, 1.0), d0=(-1.0, 0.0, 0.0))
    profile = CrossSectionProfile(shape=DiskSection(a))
    rods = [
        Rod(CurvatureField(L, samples), f1, profile),
        Rod(CurvatureField(L, samples), f2, profile),
    ]
    return RodSystem(rods, linking_target=[[0, 1], [1, 0]], epsilon=epsilon)


def _trefoil_point(t):
    return np.stack([
        np.sin(t) + 2.0 * np.sin(2.0 * t),
        np.cos(t) - 2.0 * np.cos(2.0 * t),
        -np.sin(3.0 * t),
    ], axis=-1)


def _trefoil_derivatives(t):
    d1 = np.stack([
        np.cos(t) + 4.0 * np.cos(2.0 * t),
        -np.sin(t) + 4.0 * np.sin(2.0 * t),
        -3.0 * np.cos(3.0 * t),
    ], axis=-1)
    d2 = np.stack([
        -np.sin(t) - 8.0 * np.sin(2.0 * t),
        -np.cos(t) + 8.0 * np.cos(2.0 * t),
        9.0 * np.sin(3.0 * t),
    ], axis=-1)
    d3 = np.stack([
        -np.cos(t) - 16.0 * np.cos(2.0 * t),
        np.sin(t) - 16.0 * np.sin(2.0 * t),
        27.0 * np.cos(3.0 * t),
    ], axis=-1)
    return d1, d2, d3


def _closure_basis(grid, L, modes=4):
    """Low-frequency perturbation directions for the closure polish."""
    cols = [np.ones(grid.size)]
    for m in range(1, modes + 1):
        cols.append(np.cos(2.0 * np.pi * m * grid / L))
        cols.append(np.sin(2.0 * np.pi * m * grid / L))
    return cols


def _polish_closure(w, f0, modes=4, iters=6):
    """Newton-correct k1/k2 in a low-frequency basis until the frame closes.

    Sampling a smooth curvature field onto a piecewise-linear grid leaves an
    O(h^2) endpoint gap; a handful of Fourier directions absorbs it.
    """
    basis = _closure_basis(w.grid, w.L, modes)
    ncols = 2 * len(basis)

    def residual(samples):
        fr = integrate_frame(w.with_samples(samples), f0)
        return np.concatenate([
            (fr.x[-1] - fr.x[0]) / fr.L, fr.t[-1] - fr.t[0], fr.d[-1] - fr.d[0],
        ])

    def apply(samples, coef):
        out = samples.copy()
        for j, col in enumerate(basis):
            out[:, 0] += coef[2 * j] * col
            out[:, 1] += coef[2 * j + 1] * col
        return out

    samples = w.samples.copy()
    h = 1e-6
    for _ in range(iters):
        c0 = residual(samples)
        if np.max(np.abs(c0)) < 1e-12:
            break
        J = np.empty((9, ncols))
        for p in range(ncols):
            coef = np.zeros(ncols)
            coef[p] = h
            J[:, p] = (residual(apply(samples, coef)) - c0) / h
        step, *_ = np.linalg.lstsq(J, -c0, rcond=None)
        # damp oversized corrections; the gap being polished is O(h^2)
        big = np.max(np.abs(step))
        if big > 0.1:
            step *= 0.1 / big
        samples = apply(samples, step)
    return w.with_samples(samples)


def trefoil_sample(n=1024, a=0.05, epsilon=1.0, fine=8192):
    """Trefoil rod recovered from curvature data in a uniformly spun frame.

    The curve (sin t + 2 sin 2t, cos t - 2 cos 2t, -sin 3t) is resampled by
    arclength; curvature splits into frame components through the rotation
    angle integral of the torsion. A parallel-transported frame returns
    rotated by the transport holonomy, so a constant spin rate spreads that
    angle over the length and lets the director close. A closure polish then
    removes the O(h^2) sampling gap; the pointwise match to the analytic
    curve stays at the sampling order.
    """
    tt = np.linspace(0.0, 2.0 * np.pi, fine + 1)
    d1, d2, d3 = _trefoil_derivatives(tt)
    speed = np.linalg.norm(d1, axis=1)
    cross = np.cross(d1, d2)
    cnorm = np.linalg.norm(cross, axis=1)
    kappa = cnorm / speed**3
    torsion = np.einsum("ij,ij->i", cross, d3) / cnorm**2

    s_fine = np.concatenate([[0.0], np.cumsum(
        0.5 * (speed[1:] + speed[:-1]) * np.diff(tt)
    )])
    L = float(s_fine[-1])
    # rotation of the normal-plane components relative to the start
    theta = np.concatenate([[0.0], np.cumsum(
        0.5 * (torsion[1:] + torsion[:-1]) * np.diff(s_fine)
    )])
    # spread the holonomy angle uniformly so the frame closes
    phi_L = theta[-1] - 2.0 * np.pi * np.round(theta[-1] / (2.0 * np.pi))
    omega = phi_L / L
    ang = theta - omega * s_fine
    k1_fine = kappa * np.cos(ang)
    k2_fine = kappa * np.sin(ang)

    grid = np.linspace(0.0, L, n + 1)
    samples = np.column_stack([
        np.interp(grid, s_fine, k1_fine),
        np.interp(grid, s_fine, k2_fine),
        np.full(n + 1, omega),
    ])

    t0 = d1[0] / speed[0]
    n0 = np.cross(cross[0], d1[0])
    n0 = n0 / np.linalg.norm(n0)
    f0 = InitialFrame(x0=_trefoil_point(0.0), t0=t0, d0=n0)

    w = _polish_closure(CurvatureField(L, samples), f0)
    profile = CrossSectionProfile(shape=DiskSection(a))
    # self-link of this curve with the spun frame's offset copy
    rod = Rod(w, f0, profile, twist_target=-3)
    gaps = closure_defects(rod.frame)
    if not gaps.closed(rod.frame.L):
        raise ValueError(
            f"trefoil sample failed to close: position gap {gaps.position_gap:.3e},"
            f" direction gap {max(gaps.tangent_gap, gaps.director_gap):.3e}"
        )
    return RodSystem([rod], linking_target=[[0]], epsilon=epsilon)


PRESETS = {
    "circle": circle,
    "hopf-pair": hopf_pair,
    "trefoil-sample": trefoil_sample,
}


def build(name, **kwargs):
    if name not in PRESETS:
        raise KeyError(f"unknown preset '{name}'; choose from {sorted(PRESETS)}")
    return PRESETS[name](**kwargs)
