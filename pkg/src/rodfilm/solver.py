"""Desk-scale alternating minimization and the thin-limit sweep.

Two descent phases alternate: the film moves its free vertices down the
analytic area gradient at a frozen rod configuration, then the rods move
their curvature samples down a finite-difference gradient with the film
boundary dragged along. Every accepted rod step re-validates the full
constraint set; every film energy reported for a triangulated surface is
an upper bound for the true least film energy at that boundary.
"""

import csv

import numpy as np

from .constraints import C5_RELATIVE_SLACK, check_admissible
from .energy import (
    elastic_energy,
    gravitational_energy,
    limit_energy,
    surface_energy,
    surface_energy_gradient,
    total_energy,
    total_energy_eps,
)
from .errors import (
    LineSearchStalled,
    NoFeasibleStep,
    SpanningLost,
    TubeNotEmbedded,
)
from .rod import DIRECTION_CLOSURE_TOL, POSITION_CLOSURE_TOL
from .surface import (
    TriangleMesh,
    check_spanning,
    drag_surface,
    dragged_vertices,
    default_witnesses,
    initial_spanning_surface,
)

# sufficient-decrease constant for every backtracking line search
ARMIJO = 1e-4
# the line search gives up once the trial step drops below this fraction
# of its initial value
STEP_UNDERFLOW = 1e-12
# accepted rod steps may move no midline node farther than delta/8; a step
# that small cannot change the tube isotopy class while delta stays positive
DISPLACEMENT_FRACTION = 0.125


class SolveConfig:
    """Knobs for the alternating minimization and the thin-limit sweep.

    Steps are initial line-search lengths; backtrack is the shrink factor;
    energy_tolerance is the relative total-energy decrease below which the
    outer loop stops. eps_sweep, when given, must be strictly decreasing
    positive thicknesses. The seed fixes every Monte Carlo draw, so equal
    configs give bitwise-equal runs.
    """

    def __init__(
        self,
        max_outer_iters=16,
        film_iters=200,
        rod_iters=6,
        film_step=0.2,
        rod_step=0.05,
        backtrack=0.5,
        energy_tolerance=1e-6,
        film_grad_tol=1e-8,
        rod_grad_tol=1e-9,
        rod_fd_rel=1e-6,
        rollback_budget=20,
        pos_tol=POSITION_CLOSURE_TOL,
        dir_tol=DIRECTION_CLOSURE_TOL,
        mc_samples=200_000,
        mc_max_samples=6_400_000,
        c5_slack=C5_RELATIVE_SLACK,
        attachment="midline",
        constraint_mode=None,
        eps_sweep=None,
        seed=0,
    ):
        self.max_outer_iters = int(max_outer_iters)
        self.film_iters = int(film_iters)
        self.rod_iters = int(rod_iters)
        self.film_step = float(film_step)
        self.rod_step = float(rod_step)
        self.backtrack = float(backtrack)
        self.energy_tolerance = float(energy_tolerance)
        self.film_grad_tol = float(film_grad_tol)
        self.rod_grad_tol = float(rod_grad_tol)
        self.rod_fd_rel = float(rod_fd_rel)
        self.rollback_budget = int(rollback_budget)
        self.pos_tol = float(pos_tol)
        self.dir_tol = float(dir_tol)
        self.mc_samples = int(mc_samples)
        self.mc_max_samples = int(mc_max_samples)
        self.c5_slack = float(c5_slack)
        self.attachment = attachment
        self.constraint_mode = constraint_mode
        self.eps_sweep = None if eps_sweep is None else [float(e) for e in eps_sweep]
        self.seed = int(seed)

        for name in (
            "max_outer_iters", "film_iters", "rod_iters", "film_step",
            "rod_step", "energy_tolerance", "film_grad_tol", "rod_grad_tol",
            "rod_fd_rel", "rollback_budget", "pos_tol", "dir_tol",
            "mc_samples", "mc_max_samples", "c5_slack",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError("backtrack must lie strictly between 0 and 1")
        if self.attachment not in ("midline", "tube"):
            raise ValueError("attachment must be 'midline' or 'tube'")
        if self.constraint_mode not in (None, "linked", "reduced"):
            raise ValueError("constraint_mode must be None, 'linked' or 'reduced'")
        if self.eps_sweep is not None:
            arr = np.asarray(self.eps_sweep)
            if arr.size == 0 or np.any(arr <= 0.0):
                raise ValueError("eps_sweep entries must be positive")
            if np.any(np.diff(arr) >= 0.0):
                raise ValueError("eps_sweep must be strictly decreasing")


class SolveTrace:
    """Per-outer-iteration energy and feasibility record."""

    FIELDS = (
        "iteration", "e_el", "e_g", "film", "total", "max_violation",
        "accepted",
    )

    def __init__(self):
        self.rows = []

    def append(self, iteration, breakdown, max_violation, accepted):
        self.rows.append({
            "iteration": int(iteration),
            "e_el": breakdown.elastic,
            "e_g": breakdown.gravity,
            "film": breakdown.film,
            "total": breakdown.total,
            "max_violation": float(max_violation),
            "accepted": bool(accepted),
        })

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def accepted_totals(self):
        return [r["total"] for r in self.rows if r["accepted"]]

    def monotone(self):
        """True when the accepted totals never increase."""
        tot = self.accepted_totals()
        return all(b <= a + 1e-12 * max(abs(a), 1.0) for a, b in zip(tot, tot[1:]))

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            wr = csv.writer(f)
            wr.writerow(self.FIELDS)
            for r in self.rows:
                wr.writerow([r[k] for k in self.FIELDS])


def _max_violation(report):
    """Worst feasibility overshoot in a report; 0 when admissible."""
    worst = 0.0
    for rec in report.entries:
        if rec.passed:
            continue
        try:
            gap = abs(float(rec.measured) - float(rec.tolerance))
        except (TypeError, ValueError):
            gap = float("inf")
        worst = max(worst, gap)
    return worst


def film_descend(S, F, cfg, witnesses=None):
    """Gradient descent on the free vertices of S at fixed boundary.

    Steps must pass an Armijo sufficient-decrease test; steps that break
    the witness spanning check are rolled back and retried shorter, up to
    cfg.rollback_budget times in total. Raises LineSearchStalled when no
    acceptable step exists above the underflow floor while the gradient is
    still above tolerance.
    """
    free = S.free_vertices
    if free.size == 0:
        return S
    scale = S.scale()
    E = surface_energy(F, S)
    step = cfg.film_step
    floor = cfg.film_step * STEP_UNDERFLOW
    rollbacks = 0
    g_prev = z_prev = direction = None
    for _ in range(cfg.film_iters):
        g = surface_energy_gradient(F, S)[free]
        gmax = float(np.max(np.abs(g)))
        if gmax <= cfg.film_grad_tol * scale:
            break
        # mass-lumped preconditioning: the area gradient at a vertex scales
        # with its one-ring area, so divide it out to get a step length in
        # actual distance units independent of the mesh grading
        lump = np.zeros(S.vertices.shape[0])
        np.add.at(lump, S.triangles.ravel(), np.repeat(S.areas() / 3.0, 3))
        z = g / np.maximum(lump[free], 1e-300)[:, None]
        # Polak-Ribiere conjugate direction (restarts on loss of descent)
        if direction is None:
            direction = z
        else:
            beta = max(0.0, float(np.sum(g * (z - z_prev)) /
                                  max(np.sum(g_prev * z_prev), 1e-300)))
            direction = z + beta * direction
        deriv = float(np.sum(g * direction))
        if deriv <= 0.0:
            direction = z
            deriv = float(np.sum(g * z))
        g_prev, z_prev = g, z
        t = step
        accepted = False
        while t >= floor:
            V = S.vertices.copy()
            V[free] -= t * direction
            try:
                trial = S.with_vertices(V)
            except ValueError:
                t *= cfg.backtrack
                continue
            E_try = surface_energy(F, trial)
            if E_try <= E - ARMIJO * t * deriv:
                if witnesses is not None:
                    ok, _ = check_spanning(trial, witnesses)
                    if not ok:
                        rollbacks += 1
                        if rollbacks > cfg.rollback_budget:
                            raise SpanningLost(
                                "film steps keep breaking the witness check"
                                f" (rolled back {rollbacks - 1} times)"
                            )
                        t *= cfg.backtrack
                        continue
                gain = E - E_try
                S, E = trial, E_try
                step = min(cfg.film_step, t / cfg.backtrack)
                accepted = True
                break
            t *= cfg.backtrack
        if not accepted:
            raise LineSearchStalled(
                f"film line search underflowed below {floor:.3e}"
                f" with gradient max {gmax:.3e}"
            )
        if gain <= cfg.energy_tolerance * max(abs(E), 1e-300):
            break
    return S


def _closure_residual(rod):
    """Endpoint closure residual (position gap scaled by 1/L)."""
    fr = rod.frame
    return np.concatenate([
        (fr.x[-1] - fr.x[0]) / fr.L,
        fr.t[-1] - fr.t[0],
        fr.d[-1] - fr.d[0],
    ])


def _objective(sys, models, S):
    """Total energy with the film boundary dragged onto sys's frames."""
    e = sum(
        elastic_energy(models.elastic_for(i), rod.w)
        for i, rod in enumerate(sys.rods)
    )
    e += gravitational_energy(models.mass, sys)
    if S is not None:
        mesh = TriangleMesh(dragged_vertices(S, sys), S.triangles)
        e += surface_energy(models.integrand, mesh)
    return float(e)


def _pick_mode(sys, cfg):
    if cfg.constraint_mode is not None:
        return cfg.constraint_mode
    if sys.linking_target is not None:
        return "linked"
    return "reduced"


def _admissible(sys, cfg, mode):
    return check_admissible(
        sys,
        mode=mode,
        pos_tol=cfg.pos_tol,
        dir_tol=cfg.dir_tol,
        seed=cfg.seed,
        mc_samples=cfg.mc_samples,
        mc_max_samples=cfg.mc_max_samples,
        c5_slack=cfg.c5_slack,
    )


def _fd_sweep(sys, models, S, i, h):
    """Central differences of energy and closure residual in rod i's samples."""
    shape = sys.rods[i].w.samples.shape
    flat = sys.rods[i].w.samples.ravel()
    dim = flat.size
    g = np.empty(dim)
    J = np.empty((9, dim))
    for p in range(dim):
        wp = flat.copy()
        wp[p] += h
        wm = flat.copy()
        wm[p] -= h
        sp = sys.with_rod_samples(i, wp.reshape(shape))
        sm = sys.with_rod_samples(i, wm.reshape(shape))
        g[p] = (_objective(sp, models, S) - _objective(sm, models, S)) / (2 * h)
        J[:, p] = (
            _closure_residual(sp.rods[i]) - _closure_residual(sm.rods[i])
        ) / (2 * h)
    return g, J


def _elastic_diag(model, w):
    """Diagonal of the elastic Hessian in the flattened samples."""
    h = np.diff(w.grid)
    weights = np.zeros(w.grid.size)
    weights[:-1] += h / 2.0
    weights[1:] += h / 2.0
    return (2.0 * weights[:, None] * model.c[None, :]).ravel()


def _descend_one_rod(sys, models, S, cfg, witnesses, i, mode):
    E = _objective(sys, models, S)
    diag = _elastic_diag(models.elastic_for(i), sys.rods[i].w)
    step = cfg.rod_step
    floor = cfg.rod_step * STEP_UNDERFLOW
    for _ in range(cfg.rod_iters):
        rod = sys.rods[i]
        shape = rod.w.samples.shape
        flat = rod.w.samples.ravel()
        h = cfg.rod_fd_rel * max(np.sqrt(np.mean(flat * flat)), 1e-3)
        g, J = _fd_sweep(sys, models, S, i, h)

        # project onto the closure-constraint tangent space, precondition
        # by the elastic diagonal, and project the step back to tangent
        JJt = J @ J.T
        gp = g - J.T @ np.linalg.lstsq(JJt, J @ g, rcond=None)[0]
        if np.max(np.abs(gp)) <= cfg.rod_grad_tol * max(1.0, abs(E)):
            break
        d = gp / diag
        d = d - J.T @ np.linalg.lstsq(JJt, J @ d, rcond=None)[0]
        gsq = float(g @ d)
        if gsq <= 0.0:
            d = gp
            gsq = float(gp @ gp)

        delta_cap = DISPLACEMENT_FRACTION * rod.delta()
        x_cur = rod.frame.x
        ctol = 1e-10 * max(rod.frame.L, 1.0)
        t = step
        accepted = False
        while t >= floor:
            flat_try = flat - t * d
            # pull the stepped samples back onto the closure manifold
            sys_try = sys.with_rod_samples(i, flat_try.reshape(shape))
            for _ in range(4):
                c = _closure_residual(sys_try.rods[i])
                if np.max(np.abs(c)) <= ctol:
                    break
                dy = np.linalg.lstsq(JJt, c, rcond=None)[0]
                flat_try = flat_try - J.T @ dy
                sys_try = sys.with_rod_samples(i, flat_try.reshape(shape))

            trial = sys_try.rods[i]
            disp = float(np.max(np.linalg.norm(trial.frame.x - x_cur, axis=1)))
            if disp > delta_cap:
                t *= cfg.backtrack
                continue
            E_try = _objective(sys_try, models, S)
            if E_try > E - ARMIJO * t * gsq:
                t *= cfg.backtrack
                continue
            if not _admissible(sys_try, cfg, mode).admissible:
                t *= cfg.backtrack
                continue
            if S is not None and witnesses is not None:
                try:
                    ok, _ = check_spanning(drag_surface(S, sys_try), witnesses)
                except ValueError:
                    ok = False
                if not ok:
                    t *= cfg.backtrack
                    continue
            sys, E = sys_try, E_try
            step = t / cfg.backtrack
            accepted = True
            break
        if not accepted:
            raise NoFeasibleStep(
                f"rod {i}: no admissible descent step above"
                f" {STEP_UNDERFLOW:.0e} of the initial length"
            )
    return sys


def rod_descend(sys, models, S, cfg, witnesses=None):
    """Constrained curvature descent, one rod at a time.

    The film boundary rides along via the frame map during every energy
    evaluation. Accepted steps keep the endpoint closure restored, move no
    midline node farther than delta/8, and re-validate the full constraint
    set. S may be None to descend the rods without a film term.
    """
    mode = _pick_mode(sys, cfg)
    for i in range(sys.nrods):
        sys = _descend_one_rod(sys, models, S, cfg, witnesses, i, mode)
        if S is not None:
            S = drag_surface(S, sys)
    return sys


def alternate_minimize(sys, models, F, cfg, seed_surface=None, witnesses=None):
    """Alternate film and rod descents until the total energy settles.

    Returns (system, surface, trace). F overrides the film integrand in
    `models` when given. The seed system must be admissible; inner solver
    errors propagate with the outer iteration prepended.
    """
    if F is not None:
        models = models.with_integrand(F)
    mode = _pick_mode(sys, cfg)
    report = _admissible(sys, cfg, mode)
    if not report.admissible:
        raise ValueError(
            "seed system is not admissible:\n" + report.to_text()
        )
    if witnesses is None:
        witnesses = default_witnesses(sys)
    if seed_surface is None:
        S = initial_spanning_surface(sys, mode=cfg.attachment)
    else:
        S = seed_surface
        ok, misses = check_spanning(S, witnesses)
        if not ok:
            raise SpanningLost(
                f"seed surface misses witness loops {[m[0] for m in misses]}"
            )

    trace = SolveTrace()
    bd = total_energy(sys, models, S)
    trace.append(0, bd, _max_violation(report), True)
    prev = bd.total
    for k in range(1, cfg.max_outer_iters + 1):
        try:
            S = film_descend(S, models.integrand, cfg, witnesses=witnesses)
            sys = rod_descend(sys, models, S, cfg, witnesses=witnesses)
            S = drag_surface(S, sys)
        except (SpanningLost, LineSearchStalled, NoFeasibleStep) as exc:
            raise type(exc)(f"outer iteration {k}: {exc}") from exc
        report = _admissible(sys, cfg, mode)
        bd = total_energy(sys, models, S)
        accepted = bd.total <= prev + 1e-12 * max(abs(prev), 1.0)
        trace.append(k, bd, _max_violation(report), accepted)
        if prev - bd.total <= cfg.energy_tolerance * max(abs(prev), 1e-300):
            break
        prev = bd.total
    return sys, S, trace


class SweepRow:
    """One thickness in a dimensional-reduction sweep."""

    def __init__(self, eps, e_el, e_g, film, total, gap, note=None):
        self.eps = float(eps)
        self.e_el = float(e_el)
        self.e_g = float(e_g)
        self.film = float(film)
        self.total = float(total)
        self.gap = float(gap)
        self.note = note


class DimredReport:
    """Sweep rows, the thin-limit reference energy, and the fitted rate."""

    def __init__(self, rows, limit, rate):
        self.rows = rows
        self.limit = limit
        self.rate = rate

    def gaps(self):
        return [r.gap for r in self.rows if r.note is None]

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            wr = csv.writer(f)
            wr.writerow(["eps", "E_el", "E_g_eps", "film", "total", "gap_to_E0"])
            for r in self.rows:
                wr.writerow([r.eps, r.e_el, r.e_g, r.film, r.total, r.gap])


def dimred_sweep(sys, models, F, cfg):
    """Evaluate the scaled energy down a thickness sweep against the limit.

    The rods stay frozen; at each eps the film is re-seeded on the tube
    surface and minimized, and the (1/eps^2)-scaled total is compared with
    the thin-limit energy of a midline-attached minimized film. Thicknesses
    whose tube is not embedded are flagged and skipped; the sweep continues.
    """
    if cfg.eps_sweep is None or len(cfg.eps_sweep) == 0:
        raise ValueError("cfg.eps_sweep is required for a thickness sweep")
    if sys.nrods != 1:
        raise ValueError("the thin-limit sweep takes a single-rod system")
    if F is not None:
        models = models.with_integrand(F)

    S0 = initial_spanning_surface(sys, mode="midline")
    S0 = film_descend(S0, models.integrand, cfg)
    e0 = limit_energy(sys, models, S0)

    rows = []
    for eps in cfg.eps_sweep:
        sys_eps = sys.with_epsilon(eps)
        try:
            if not all(sys_eps.embedded_tubes()):
                raise TubeNotEmbedded(
                    f"eps={eps:g}: tube radius {sys_eps.tube_radius(0):g}"
                    f" reaches the midline thickness {sys.rods[0].delta():g}"
                )
            S = initial_spanning_surface(sys_eps, mode="tube")
            S = film_descend(S, models.integrand, cfg)
            bd = total_energy_eps(sys_eps, models, S, eps)
        except TubeNotEmbedded as exc:
            nan = float("nan")
            rows.append(SweepRow(eps, nan, nan, nan, nan, nan, note=str(exc)))
            continue
        rows.append(SweepRow(
            eps, bd.elastic, bd.gravity, bd.film, bd.total,
            bd.total - e0.total,
        ))

    good = [(r.eps, abs(r.gap)) for r in rows if r.note is None and abs(r.gap) > 0]
    if len(good) >= 2:
        le = np.log([g[0] for g in good])
        lg = np.log([g[1] for g in good])
        rate = float(np.polyfit(le, lg, 1)[0])
    else:
        rate = float("nan")
    return DimredReport(rows, e0, rate)
