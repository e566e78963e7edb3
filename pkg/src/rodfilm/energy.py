"""The three energy contributions and their combinations.

Elastic: quadratic Kirchhoff density in the curvature residuals, integrated
exactly for piecewise-linear sample data. Gravitational: density times
g . position over the material region, tensor quadrature (grid in s times
the section rule), with the thin-rod scaling 1/eps^2 implemented by the
change of variables zeta = eps * eta. Surface: per-triangle area times the
anisotropic integrand F(centroid, normal mod sign), plus its analytic
vertex gradient for the film flow.
"""

import numpy as np

from .errors import DegenerateTriangle, NotSpanning

_PROBE_DIRECTIONS = None


def _probe_directions():
    # fixed Fibonacci-sphere probe set for constructor spot checks
    global _PROBE_DIRECTIONS
    if _PROBE_DIRECTIONS is None:
        k = np.arange(32)
        ga = np.pi * (3.0 - np.sqrt(5.0))
        z = 1.0 - 2.0 * (k + 0.5) / 32
        r = np.sqrt(1.0 - z * z)
        _PROBE_DIRECTIONS = np.column_stack([r * np.cos(ga * k), r * np.sin(ga * k), z])
    return _PROBE_DIRECTIONS


class AnisotropicIntegrand:
    """Positive cost per unit area F(x, plane), plane = unit normal mod sign.

    Kinds: constant, matrix-norm (sqrt(nu^T M nu), M symmetric positive
    definite), user-table (Shepard interpolation over direction samples,
    symmetrized so evenness is exact). Bounds 0 < lambda <= F <= Lambda are
    spot-checked on a fixed probe set at construction; so is evenness.
    Built-in kinds are elliptic by construction, tables are not checked
    (ellipticity_unchecked flag).
    """

    def __init__(self, kind, evaluator, lambda_bound, Lambda_bound,
                 grad_nu=None, ellipticity_unchecked=False, params=None):
        self.kind = kind
        self._eval = evaluator
        self.lambda_bound = float(lambda_bound)
        self.Lambda_bound = float(Lambda_bound)
        self._grad_nu = grad_nu
        self.ellipticity_unchecked = bool(ellipticity_unchecked)
        self.params = params or {}
        if not 0.0 < self.lambda_bound <= self.Lambda_bound:
            raise ValueError("need 0 < lambda_bound <= Lambda_bound")
        self._spot_check()

    @classmethod
    def constant(cls, value):
        value = float(value)

        def ev(x, nv):
            return np.full(np.asarray(x).shape[0], value)

        def gn(x, nv):
            return np.zeros_like(np.asarray(nv, dtype=float))

        return cls("constant", ev, value, value, grad_nu=gn, params={"value": value})

    @classmethod
    def matrix_norm(cls, M):
        M = np.array(M, dtype=float)
        if M.shape != (3, 3) or not np.allclose(M, M.T, atol=1e-14):
            raise ValueError("matrix must be symmetric 3x3")
        eig = np.linalg.eigvalsh(M)
        if eig[0] <= 0.0:
            raise ValueError("matrix must be positive definite")

        def ev(x, nv):
            return np.sqrt(np.einsum("ij,jk,ik->i", nv, M, nv))

        def gn(x, nv):
            f = ev(x, nv)
            return (nv @ M) / f[:, None]

        return cls(
            "matrix-norm", ev, np.sqrt(eig[0]), np.sqrt(eig[-1]),
            grad_nu=gn, params={"matrix": M},
        )

    @classmethod
    def table(cls, directions, values, sharpness=1e-12):
        U = np.array(directions, dtype=float)
        vals = np.array(values, dtype=float)
        if U.ndim != 2 or U.shape[1] != 3 or U.shape[0] != vals.shape[0]:
            raise ValueError("need matching direction/value tables")
        if np.any(vals <= 0.0):
            raise ValueError("table values must be positive")
        U = U / np.linalg.norm(U, axis=1)[:, None]

        def ev(x, nv):
            # inverse-square Shepard on the direction pair {+u, -u}
            dplus = np.linalg.norm(nv[:, None, :] - U[None, :, :], axis=2)
            dminus = np.linalg.norm(nv[:, None, :] + U[None, :, :], axis=2)
            d = np.minimum(dplus, dminus)
            w = 1.0 / (d * d + sharpness)
            return (w @ vals) / np.sum(w, axis=1)

        return cls(
            "user-table", ev, float(vals.min()), float(vals.max()),
            ellipticity_unchecked=True,
            params={"directions": U, "values": vals},
        )

    def _spot_check(self):
        nv = _probe_directions()
        x = np.zeros_like(nv)
        f_plus = self.evaluate(x, nv)
        f_minus = self.evaluate(x, -nv)
        if not np.array_equal(f_plus, f_minus):
            raise ValueError("integrand is not even in the normal")
        if np.any(f_plus < self.lambda_bound - 1e-12) or np.any(
            f_plus > self.Lambda_bound + 1e-12
        ):
            raise ValueError("integrand violates its declared bounds on probes")

    def evaluate(self, x, nv):
        x = np.asarray(x, dtype=float)
        nv = np.asarray(nv, dtype=float)
        return self._eval(x, nv)

    def gradient_nu(self, x, nv, fd_step=1e-6):
        """d F / d nu (ambient gradient; caller projects off the normal)."""
        if self._grad_nu is not None:
            return self._grad_nu(np.asarray(x, float), np.asarray(nv, float))
        nv = np.asarray(nv, dtype=float)
        x = np.asarray(x, dtype=float)
        g = np.empty_like(nv)
        for k in range(3):
            dp = np.zeros(3)
            dp[k] = fd_step
            g[:, k] = (self.evaluate(x, nv + dp) - self.evaluate(x, nv - dp)) / (
                2.0 * fd_step
            )
        return g


class ElasticModel:
    """Quadratic Kirchhoff density c1(k1-k1^)^2 + c2(k2-k2^)^2 + c3(om-om^)^2.

    Positive stiffnesses make the density coercive. intrinsic is None, a
    3-vector, or per-node (n+1, 3) samples.
    """

    def __init__(self, c1=1.0, c2=1.0, c3=1.0, intrinsic=None):
        self.c = np.array([c1, c2, c3], dtype=float)
        if np.any(self.c <= 0.0):
            raise ValueError("stiffnesses must be positive")
        self.intrinsic = None if intrinsic is None else np.array(intrinsic, dtype=float)


def elastic_energy(model, w):
    """Exact integral of the quadratic density for piecewise-linear samples.

    Per interval: integral of (a + (b-a)u)^2 du = (a^2 + ab + b^2)/3.
    """
    r = w.samples
    if model.intrinsic is not None:
        r = r - model.intrinsic
    h = np.diff(w.grid)
    a = r[:-1]
    b = r[1:]
    per = (a * a + a * b + b * b) / 3.0
    return float(np.einsum("k,kc,c->", h, per, model.c))


class MassModel:
    """Mass density over the rod material plus the gravity vector.

    kinds: constant rho; separable rho_s(s) * rho_perp(z1, z2). rho0(s) is
    the section-center limit used by the thin-rod energy.
    """

    def __init__(self, g, rho=None, rho_s=None, rho_perp=None):
        self.g = np.array(g, dtype=float)
        if self.g.shape != (3,):
            raise ValueError("gravity must be a 3-vector")
        if rho is not None:
            if rho < 0.0:
                raise ValueError("density must be nonnegative")
            self.kind = "constant"
            self._rho = float(rho)
        else:
            if rho_s is None or rho_perp is None:
                raise ValueError("separable kind needs rho_s and rho_perp")
            self.kind = "separable"
            self._rho_s = rho_s
            self._rho_perp = rho_perp

    def density(self, s, z1, z2):
        if self.kind == "constant":
            return np.full(np.broadcast(np.asarray(s), np.asarray(z1)).shape, self._rho)
        return np.asarray(self._rho_s(np.asarray(s, float))) * np.asarray(
            self._rho_perp(np.asarray(z1, float), np.asarray(z2, float))
        )

    def rho0(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            return np.full(s.shape, self._rho)
        return np.asarray(self._rho_s(s)) * float(
            np.asarray(self._rho_perp(np.zeros(1), np.zeros(1)))[0]
        )


def _gravity_normalized(mass, rod, eps, refine=0):
    """(1/eps^2) * integral of rho g.(x + z1 d + z2 e) over the eps-tube.

    By zeta = eps * eta this is the eta-integral of
    rho(s, eps*eta) * g.(x + eps*eta1 d + eps*eta2 e) over the unscaled
    section, so eps enters only the density argument and the offset terms.
    """
    fr = rod.frame
    grid = rod.w.grid
    gx = fr.x @ mass.g
    gd = fr.d @ mass.g
    ge = np.cross(fr.t, fr.d) @ mass.g
    integrand = np.zeros(grid.shape[0])
    idx = rod.profile.piece_index(grid)
    for k, (_, shape) in enumerate(rod.profile.pieces):
        sel = idx == k
        if not np.any(sel):
            continue
        pts, wq = shape.quadrature(refine=refine)
        rho = mass.density(
            grid[sel][:, None], eps * pts[None, :, 0], eps * pts[None, :, 1]
        )
        w0 = rho @ wq
        w1 = rho @ (wq * pts[:, 0])
        w2 = rho @ (wq * pts[:, 1])
        integrand[sel] = w0 * gx[sel] + eps * (w1 * gd[sel] + w2 * ge[sel])
    return float(np.trapezoid(integrand, grid))


def gravitational_energy(mass, sys, refine=0):
    """Weight of all rods over their eps-scaled material regions."""
    eps = sys.epsilon
    return eps**2 * sum(_gravity_normalized(mass, rod, eps, refine) for rod in sys.rods)


def scaled_gravitational_energy(mass, sys, eps, refine=0):
    """Thin-rod weight (1/eps^2) * E_g over the eps-tube; single rod."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if sys.nrods != 1:
        raise ValueError("the scaled weight applies to single-rod systems")
    return _gravity_normalized(mass, sys.rods[0], eps, refine)


def limit_gravity_term(mass, sys):
    """Middle term of the thin-rod limit: integral |A(s)| rho0(s) g.x(s) ds."""
    if sys.nrods != 1:
        raise ValueError("the limit term applies to single-rod systems")
    rod = sys.rods[0]
    grid = rod.w.grid
    area = rod.profile.area(grid)
    gx = rod.frame.x @ mass.g
    return float(np.trapezoid(area * mass.rho0(grid) * gx, grid))


def _triangle_geometry(S):
    v = S.vertices
    tri = S.triangles
    a = v[tri[:, 0]]
    b = v[tri[:, 1]]
    c = v[tri[:, 2]]
    N = np.cross(b - a, c - a)
    nl = np.linalg.norm(N, axis=1)
    return a, b, c, N, nl


def surface_energy(F, S):
    """Sum over triangles of area * F(centroid, unit normal mod sign)."""
    a, b, c, N, nl = _triangle_geometry(S)
    floor = 1e-14 * S.scale() ** 2
    areas = 0.5 * nl
    if np.any(areas < floor):
        k = int(np.argmin(areas))
        raise DegenerateTriangle(
            f"triangle {k} area {areas[k]:.3e} below floor {floor:.3e}"
        )
    nv = N / nl[:, None]
    cen = (a + b + c) / 3.0
    return float(np.sum(areas * F.evaluate(cen, nv)))


def surface_energy_gradient(F, S):
    """d(surface_energy)/d(vertex) for every vertex (boundary rows included).

    Per triangle with vertices (a, b, c), normal direction N = (b-a)x(c-a):
    the area gradient at a is ((b-c) x n)/2, the normal variation
    contributes ((b-c) x P grad_nu F)/2 with P the tangential projector,
    and the centroid moves the position argument by 1/3.
    """
    a, b, c, N, nl = _triangle_geometry(S)
    nv = N / nl[:, None]
    areas = 0.5 * nl
    cen = (a + b + c) / 3.0
    Fv = F.evaluate(cen, nv)
    gFn = F.gradient_nu(cen, nv)
    gFn_t = gFn - np.einsum("ij,ij->i", gFn, nv)[:, None] * nv
    # position dependence: none of the built-in kinds vary with x, but a
    # custom evaluator might; probe cheaply via finite differences only if
    # the integrand declares position dependence
    grad = np.zeros_like(S.vertices)
    for verts, opp in (
        (S.triangles[:, 0], (b, c)),
        (S.triangles[:, 1], (c, a)),
        (S.triangles[:, 2], (a, b)),
    ):
        edge = opp[0] - opp[1]
        term = 0.5 * Fv[:, None] * np.cross(edge, nv) + 0.5 * np.cross(edge, gFn_t)
        np.add.at(grad, verts, term)
    return grad


def bounds_check(F, S):
    """(lambda * area, Lambda * area): the sandwich for the surface energy."""
    _, _, _, _, nl = _triangle_geometry(S)
    area = float(np.sum(0.5 * nl))
    return F.lambda_bound * area, F.Lambda_bound * area


class EnergyModels:
    """Bundle of the three models driving the total energy."""

    def __init__(self, elastic, mass, integrand):
        self.elastic = elastic
        self.mass = mass
        self.integrand = integrand

    def elastic_for(self, i):
        if isinstance(self.elastic, (list, tuple)):
            return self.elastic[i]
        return self.elastic

    def with_integrand(self, integrand):
        return EnergyModels(self.elastic, self.mass, integrand)


class EnergyBreakdown:
    def __init__(self, elastic, gravity, film):
        self.elastic = float(elastic)
        self.gravity = float(gravity)
        self.film = float(film)

    @property
    def total(self):
        return self.elastic + self.gravity + self.film

    def __repr__(self):
        return (
            f"EnergyBreakdown(elastic={self.elastic:.6g}, gravity={self.gravity:.6g}, "
            f"film={self.film:.6g}, total={self.total:.6g})"
        )


def _require_spanning(S, witnesses):
    if witnesses is None:
        return
    from .surface import check_spanning

    ok, report = check_spanning(S, witnesses)
    if not ok:
        misses = [i for i, hits in report if hits == 0]
        raise NotSpanning(f"witness loops {misses} do not intersect the surface")


def total_energy(sys, models, S, witnesses=None):
    """E = E_el + E_g + film energy of S (upper bound for the film term)."""
    _require_spanning(S, witnesses)
    e_el = sum(
        elastic_energy(models.elastic_for(i), rod.w) for i, rod in enumerate(sys.rods)
    )
    e_g = gravitational_energy(models.mass, sys)
    film = surface_energy(models.integrand, S)
    return EnergyBreakdown(e_el, e_g, film)


def total_energy_eps(sys, models, S, eps, witnesses=None):
    """E_eps = E_el + (1/eps^2)-scaled weight + film on the eps-tube surface."""
    _require_spanning(S, witnesses)
    e_el = sum(
        elastic_energy(models.elastic_for(i), rod.w) for i, rod in enumerate(sys.rods)
    )
    e_g = scaled_gravitational_energy(models.mass, sys, eps)
    film = surface_energy(models.integrand, S)
    return EnergyBreakdown(e_el, e_g, film)


def limit_energy(sys, models, S, witnesses=None):
    """E_0 = E_el + integral |A| rho0 g.x + film spanning the bare midline."""
    _require_spanning(S, witnesses)
    e_el = sum(
        elastic_energy(models.elastic_for(i), rod.w) for i, rod in enumerate(sys.rods)
    )
    e_g = limit_gravity_term(models.mass, sys)
    film = surface_energy(models.integrand, S)
    return EnergyBreakdown(e_el, e_g, film)
