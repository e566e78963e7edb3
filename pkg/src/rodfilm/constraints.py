"""Admissibility checks: closure, twist, isotopy surrogate, volume, chain.

check_admissible validates a rod system against the full linked-problem
constraint set (closure C1/C2, prescribed twist link C3, isotopy surrogate
C4, non-interpenetration C5, chain structure C6) or the reduced single-rod
set where C5 becomes the global-radius floor Delta >= Delta0. Failures are
report entries, never exceptions; the report records every measured
quantity, the tolerances used, and the Monte Carlo seed.
"""

import numpy as np

from . import _kernels
from .errors import (
    AmbiguousAngle,
    CurvesTooClose,
    EstimatorVariance,
    NonConvergent,
    NotClosed,
)
from .rod import (
    DIRECTION_CLOSURE_TOL,
    POSITION_CLOSURE_TOL,
    close_up_curve,
    closure_defects,
)
from .topology import chain_structure_holds, linking_matrix, linking_number

C5_RELATIVE_SLACK = 1e-3


class ConstraintRecord:
    def __init__(self, name, rod, passed, measured, tolerance, note=""):
        self.name = name
        self.rod = rod
        self.passed = bool(passed)
        self.measured = measured
        self.tolerance = tolerance
        self.note = note

    def __repr__(self):
        who = "" if self.rod is None else f"[rod {self.rod}]"
        return (
            f"{self.name}{who}: {'pass' if self.passed else 'FAIL'} "
            f"(measured={self.measured}, tol={self.tolerance}) {self.note}"
        )


class FeasibilityReport:
    """Per-constraint records plus the overall admissibility verdict."""

    def __init__(self, mode, entries, seed=None):
        self.mode = mode
        self.entries = list(entries)
        self.seed = seed

    @property
    def admissible(self):
        return all(e.passed for e in self.entries)

    def failed(self):
        return [e for e in self.entries if not e.passed]

    def to_text(self):
        lines = [f"feasibility report (mode={self.mode}, seed={self.seed})"]
        for e in self.entries:
            who = "-" if e.rod is None else str(e.rod)
            status = "pass" if e.passed else "FAIL"
            lines.append(
                f"  {e.name:<12} rod={who:<5} {status:<4} "
                f"measured={_fmt(e.measured):<24} tol={_fmt(e.tolerance):<12} {e.note}"
            )
        lines.append(f"  admissible: {self.admissible}")
        return "\n".join(lines)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def tube_profile_arrays(rod, epsilon):
    """Frame arrays plus e = t x d for the scaled tube of a rod."""
    fr = rod.frame
    return fr.s, fr.x, fr.t, fr.d, np.cross(fr.t, fr.d)


def tube_contains(rod, epsilon, pts, kmax=8):
    """Membership of points in the scaled tube around the rod midline."""
    s, x, t, d, _ = tube_profile_arrays(rod, epsilon)
    counts, sstar, z1, z2 = _kernels.tube_crossings(
        np.ascontiguousarray(pts, dtype=float), s, x, t, d, kmax
    )
    if counts.max(initial=0) > kmax:
        return tube_contains(rod, epsilon, pts, kmax=2 * kmax)
    inside = np.zeros(pts.shape[0], dtype=bool)
    any_cross = counts > 0
    for k in range(min(kmax, int(counts.max(initial=0)))):
        live = any_cross & (counts > k) & ~inside
        if not np.any(live):
            break
        hit = rod.profile.contains(
            sstar[live, k], z1[live, k] / epsilon, z2[live, k] / epsilon
        )
        inside[live] |= hit
    return inside


def interpenetration_volume(
    rod,
    epsilon=1.0,
    seed=0,
    samples=200_000,
    max_samples=6_400_000,
):
    """Ciarlet-Necas check data for one rod.

    lhs integrates the tube-map volume form 1 - eps*(z1*k1 + z2*k2) over
    the material region (section moments make the transverse integral
    analytic); rhs is a seeded Monte Carlo estimate of the realized tube
    volume with its 95% confidence half-width. The sample budget doubles
    until the half-width is below 1% of the estimate.
    """
    w = rod.w
    grid = w.grid
    area = rod.profile.area(grid) * epsilon**2
    m1, m2 = rod.profile.first_moments(grid)
    dens = area - epsilon**3 * (m1 * w.k1 + m2 * w.k2)
    lhs = float(np.trapezoid(dens, grid))

    pad = epsilon * rod.profile.nu
    lo = rod.frame.x.min(axis=0) - pad
    hi = rod.frame.x.max(axis=0) + pad
    box = float(np.prod(hi - lo))
    rng = np.random.default_rng(seed)
    n = int(samples)
    hits = 0
    total = 0
    while True:
        pts = rng.uniform(lo, hi, size=(n, 3))
        hits += int(np.count_nonzero(tube_contains(rod, epsilon, pts)))
        total += n
        p = hits / total
        rhs = box * p
        half = 1.96 * box * np.sqrt(max(p * (1.0 - p), 1e-300) / total)
        if rhs > 0.0 and half <= 0.01 * rhs:
            return lhs, rhs, half
        if total >= max_samples:
            raise EstimatorVariance(
                f"volume half-width {half:.3e} exceeds 1% of estimate "
                f"{rhs:.3e} after {total} samples"
            )
        n = total  # double the budget


def rods_disjoint(sys, ring_points=24):
    """Pairwise non-penetration of the rod tubes.

    Fast path: midline separation above the sum of scaled outer radii.
    Otherwise a dense cross check: boundary and midline samples of each
    tube must stay outside the other tube.
    """
    eps = sys.epsilon
    for i in range(sys.nrods):
        for j in range(i + 1, sys.nrods):
            a = sys.rods[i].midline()
            b = sys.rods[j].midline()
            gap = float(_kernels.min_gap(a.nodes, a.chords(), b.nodes, b.chords()))
            if gap > eps * (sys.rods[i].profile.nu + sys.rods[j].profile.nu):
                continue
            for src, dst in ((i, j), (j, i)):
                pts = _tube_surface_samples(sys.rods[src], eps, ring_points)
                pts = np.vstack([pts, sys.rods[src].frame.x])
                if np.any(tube_contains(sys.rods[dst], eps, pts)):
                    return False
    return True


def _tube_surface_samples(rod, epsilon, ring_points):
    fr = rod.frame
    e = np.cross(fr.t, fr.d)
    pts = []
    for k in range(fr.s.shape[0]):
        ring = rod.profile.shape_at(fr.s[k]).boundary_points(ring_points) * epsilon
        pts.append(fr.x[k] + ring[:, 0:1] * fr.d[k] + ring[:, 1:2] * e[k])
    return np.concatenate(pts, axis=0)


def _twist_tau(rod, epsilon):
    return min(rod.delta() / 10.0, epsilon * rod.profile.eta / 2.0)


def check_admissible(
    sys,
    mode="linked",
    pos_tol=POSITION_CLOSURE_TOL,
    dir_tol=DIRECTION_CLOSURE_TOL,
    seed=0,
    mc_samples=200_000,
    mc_max_samples=6_400_000,
    c5_slack=C5_RELATIVE_SLACK,
):
    """Validate the constraint set; failures become report entries."""
    if mode not in ("linked", "reduced"):
        raise ValueError("mode must be 'linked' or 'reduced'")
    if mode == "reduced":
        if sys.nrods != 1:
            raise ValueError("reduced mode applies to single-rod systems")
        if sys.delta0 is None:
            raise ValueError("reduced mode needs a prescribed Delta0")
    if mode == "linked" and sys.linking_target is None:
        raise ValueError("linked mode needs a prescribed linking matrix")

    entries = []
    closed = []
    for i, rod in enumerate(sys.rods):
        dfc = closure_defects(rod.frame)
        L = rod.frame.L
        entries.append(
            ConstraintRecord(
                "C1-position", i, dfc.position_gap <= pos_tol * L,
                dfc.position_gap, pos_tol * L,
            )
        )
        entries.append(
            ConstraintRecord(
                "C2-tangent", i, dfc.tangent_gap <= dir_tol, dfc.tangent_gap, dir_tol
            )
        )
        closed.append(dfc.closed(L, pos_tol, dir_tol))

    for i, rod in enumerate(sys.rods):
        if not closed[i]:
            entries.append(
                ConstraintRecord(
                    "C3-twist", i, False, "n/a", rod.twist_target,
                    note="frame not closed",
                )
            )
            continue
        tau = _twist_tau(rod, sys.epsilon)
        try:
            cu = close_up_curve(rod.frame, tau, pos_tol, dir_tol)
            res = linking_number(rod.midline(), cu.as_polyline())
        except (AmbiguousAngle, CurvesTooClose, NonConvergent, NotClosed) as exc:
            entries.append(
                ConstraintRecord(
                    "C3-twist", i, False, "n/a", rod.twist_target,
                    note=f"{type(exc).__name__}: {exc}",
                )
            )
            continue
        entries.append(
            ConstraintRecord(
                "C3-twist", i, res.value == rod.twist_target, res.value,
                rod.twist_target, note=f"tau={tau:.4g} raw={res.raw:.6f}",
            )
        )

    for i, rod in enumerate(sys.rods):
        delta = rod.delta()
        r = sys.tube_radius(i)
        declared = sys.reference_loops is not None
        note = "reference loop declared" if declared else "isotopy class taken as declared"
        entries.append(
            ConstraintRecord("C4-isotopy", i, delta >= r, delta, r, note=note)
        )

    if mode == "reduced":
        rod = sys.rods[0]
        entries.append(
            ConstraintRecord(
                "C5-thickness", 0, rod.delta() >= sys.delta0, rod.delta(), sys.delta0
            )
        )
    else:
        for i, rod in enumerate(sys.rods):
            try:
                lhs, rhs, half = interpenetration_volume(
                    rod, sys.epsilon, seed=seed + i, samples=mc_samples,
                    max_samples=mc_max_samples,
                )
            except EstimatorVariance as exc:
                entries.append(
                    ConstraintRecord(
                        "C5-volume", i, False, "n/a", "n/a",
                        note=f"EstimatorVariance: {exc}",
                    )
                )
                continue
            ok = lhs <= rhs * (1.0 + c5_slack) + half
            entries.append(
                ConstraintRecord(
                    "C5-volume", i, ok, lhs, rhs,
                    note=f"halfwidth={half:.3e} slack={c5_slack}",
                )
            )
        entries.append(
            ConstraintRecord(
                "C5-disjoint", None, rods_disjoint(sys), "see note", True,
                note="pairwise tube separation / surface cross-check",
            )
        )

    if mode == "linked":
        try:
            M = linking_matrix([rod.midline() for rod in sys.rods])
        except (CurvesTooClose, NonConvergent) as exc:
            entries.append(
                ConstraintRecord(
                    "C6-chain", None, False, "n/a", "prescribed",
                    note=f"{type(exc).__name__}: {exc}",
                )
            )
        else:
            match = np.array_equal(M.values, sys.linking_target.values)
            chain = chain_structure_holds(M)
            entries.append(
                ConstraintRecord(
                    "C6-chain", None, match and chain,
                    M.values.tolist(), sys.linking_target.values.tolist(),
                    note=f"chain connectivity: {chain}",
                )
            )

    return FeasibilityReport(mode, entries, seed=seed)
