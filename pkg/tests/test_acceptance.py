"""End-to-end acceptance gate.

Each test covers one advertised capability at desk scale and registers a
PASS/FAIL line that the terminal summary prints (see conftest). The checks
here deliberately re-derive expectations from independent oracles or closed
forms instead of trusting package internals.
"""

import numpy as np
import pytest

import oracles
from conftest import ring_nodes
from rodfilm import cli
from rodfilm.constraints import check_admissible, interpenetration_volume
from rodfilm.energy import (
    AnisotropicIntegrand,
    ElasticModel,
    EnergyModels,
    MassModel,
    bounds_check,
    limit_gravity_term,
    scaled_gravitational_energy,
    surface_energy,
)
from rodfilm.presets import circle, hopf_pair, trefoil_sample
from rodfilm.rod import CurvatureField, InitialFrame, closure_defects, integrate_frame
from rodfilm.sections import CrossSectionProfile, DiskSection
from rodfilm.solver import SolveConfig, alternate_minimize, dimred_sweep
from rodfilm.surface import TriangleMesh
from rodfilm.system import Rod, RodSystem
from rodfilm.topology import (
    ClosedPolyline,
    global_radius,
    linking_matrix,
    linking_number,
    tube_is_embedded,
)

F1 = AnisotropicIntegrand.constant(1.0)
F0 = InitialFrame(x0=[0.0, 1.0, 0.0], t0=[1.0, 0.0, 0.0], d0=[0.0, -1.0, 0.0])


def _start(request, num, title):
    titles = getattr(request.config, "_acceptance_titles", None)
    if titles is None:
        titles = {}
        request.config._acceptance_titles = titles
    titles[num] = title


def _pass(request, num):
    passed = getattr(request.config, "_acceptance_passed", None)
    if passed is None:
        passed = set()
        request.config._acceptance_passed = passed
    passed.add(num)


def circle_field(n, L=2.0 * np.pi):
    ones = np.ones(n + 1)
    return CurvatureField(L, np.column_stack([ones, 0 * ones, 0 * ones]))


def wavy_field(n, L=2.0 * np.pi):
    s = np.linspace(0.0, L, n + 1)
    return CurvatureField(
        L,
        np.column_stack(
            [1.0 + 0.3 * np.sin(2 * s), 0.2 * np.cos(s), 0.1 * np.sin(3 * s)]
        ),
    )


def disk_circle_system(n=128, a=0.05):
    rod = Rod(circle_field(n), F0, CrossSectionProfile(shape=DiskSection(a)))
    return RodSystem([rod], linking_target=[[0]], epsilon=1.0)


def torus_link_component(phase, n=512, R=2.0, r=0.8):
    t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    rad = R + r * np.cos(2.0 * t + phase)
    return np.stack(
        [rad * np.cos(t), rad * np.sin(t), r * np.sin(2.0 * t + phase)], axis=1
    )


def test_criterion_1_gauss_linking(request):
    _start(request, 1, "Gauss linking integers match the crossing-count oracle")
    hopf_a = ClosedPolyline(ring_nodes(512))
    hopf_b = ClosedPolyline(ring_nodes(512, center=(1.0, 0.0, 0.0), axis="x"))
    lk = linking_number(hopf_a, hopf_b)
    assert abs(lk.value) == 1
    assert abs(lk.raw - lk.value) < 1e-2
    assert lk.value == oracles.projection_link(hopf_a.nodes, hopf_b.nodes)

    split_a = ClosedPolyline(ring_nodes(512))
    split_b = ClosedPolyline(ring_nodes(512, center=(5.0, 0.0, 0.0)))
    assert linking_number(split_a, split_b).value == 0
    assert oracles.projection_link(split_a.nodes, split_b.nodes) == 0

    ta = ClosedPolyline(torus_link_component(0.0))
    tb = ClosedPolyline(torus_link_component(np.pi))
    tl = linking_number(ta, tb)
    assert abs(tl.value) == 2
    assert abs(tl.raw - tl.value) < 1e-2
    assert tl.value == oracles.projection_link(ta.nodes, tb.nodes)
    _pass(request, 1)


def test_criterion_2_frame_integration(request):
    _start(request, 2, "frame integration closes the circle at order >= 2")
    c = integrate_frame(circle_field(1024), F0)
    L = 2.0 * np.pi
    assert closure_defects(c).position_gap <= 1e-6 * L
    drift = max(
        np.abs(np.linalg.norm(c.t, axis=1) - 1.0).max(),
        np.abs(np.linalg.norm(c.d, axis=1) - 1.0).max(),
        np.abs(np.einsum("ij,ij->i", c.t, c.d)).max(),
    )
    assert drift <= 1e-8

    for field in (circle_field, wavy_field):
        errs = []
        for n in (64, 128, 256):
            w = field(n)
            run = integrate_frame(w, F0)
            x, _, _ = oracles.frame_endpoint(w, F0)
            errs.append(np.linalg.norm(run.x[-1] - x))
        orders = [np.log2(a / b) for a, b in zip(errs, errs[1:])]
        assert min(orders) >= 2.0, (field.__name__, errs, orders)
    _pass(request, 2)


def test_criterion_3_global_radius(request):
    _start(request, 3, "global radius is exact on circles, embedding test is sharp")
    for R in (1.0, 2.5):
        c = ClosedPolyline(ring_nodes(256, R=R))
        assert abs(global_radius(c) - R) <= 1e-3 * R

    rng = np.random.default_rng(11)
    for _ in range(50):
        c = ClosedPolyline(oracles.fourier_loop(rng))
        delta = global_radius(c)
        assert tube_is_embedded(c, 0.95 * delta)
        assert not tube_is_embedded(c, 1.05 * delta)
    _pass(request, 3)


def test_criterion_4_surface_energy(request):
    _start(request, 4, "anisotropic surface energy reproduces disk areas and bounds")
    xy = TriangleMesh(*oracles.polar_disk_mesh(rings=32, sectors=64, plane="xy"))
    assert len(xy.triangles) >= 2048
    assert surface_energy(F1, xy) == pytest.approx(np.pi, rel=5e-3)

    F = AnisotropicIntegrand.matrix_norm(np.diag([1.0, 1.0, 4.0]))
    assert surface_energy(F, xy) == pytest.approx(2.0 * np.pi, rel=5e-3)
    xz = TriangleMesh(*oracles.polar_disk_mesh(rings=32, sectors=64, plane="xz"))
    assert surface_energy(F, xz) == pytest.approx(np.pi, rel=5e-3)

    Fg = AnisotropicIntegrand.matrix_norm(
        np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.1], [0.0, 0.1, 3.0]])
    )
    rng = np.random.default_rng(4)
    for _ in range(100):
        verts = rng.standard_normal((20, 3))
        tris = []
        while len(tris) < 30:
            t = rng.choice(20, size=3, replace=False)
            a, b, c = verts[t]
            if 0.5 * np.linalg.norm(np.cross(b - a, c - a)) > 1e-3:
                tris.append(t)
        S = TriangleMesh(verts, np.array(tris))
        lo, hi = bounds_check(Fg, S)
        assert lo <= surface_energy(Fg, S) <= hi
    _pass(request, 4)


def _integers_preserved(sys_out, trace, twist_targets, link_target):
    assert trace.monotone()
    assert all(row["accepted"] for row in trace.rows)
    assert all(row["max_violation"] == 0.0 for row in trace.rows)
    # recompute the invariants of the final state from scratch
    M = linking_matrix([r.midline() for r in sys_out.rods])
    assert np.array_equal(M.values, np.asarray(link_target))
    rep = check_admissible(sys_out, seed=0, mc_samples=50_000)
    assert rep.admissible, rep.to_text()
    twists = sorted(
        (e.rod, e.measured) for e in rep.entries if e.name == "C3-twist"
    )
    assert twists == [(i, t) for i, t in enumerate(twist_targets)]


def test_criterion_5_minimization(request):
    _start(request, 5, "coned seed relaxes to the disk without touching invariants")
    sys = disk_circle_system(n=128)
    models = EnergyModels(
        ElasticModel(intrinsic=(1.0, 0.0, 0.0)),
        MassModel(g=(0.0, 0.0, 0.0), rho=1.0),
        None,
    )
    cfg = SolveConfig(max_outer_iters=3, rod_iters=2, film_iters=40, mc_samples=50_000)
    out, S, trace = alternate_minimize(sys, models, F1, cfg)
    assert surface_energy(F1, S) <= 1.01 * np.pi
    _integers_preserved(out, trace, [0], [[0]])

    # a run where the rod really moves: relax toward a wavy intrinsic shape
    grid = sys.rods[0].w.grid
    wavy = EnergyModels(
        ElasticModel(2.0, 2.0, 2.0, intrinsic=np.column_stack(
            [1.0 + 0.3 * np.sin(2.0 * grid), np.zeros(grid.size), np.zeros(grid.size)]
        )),
        MassModel(g=(0.0, 0.0, 0.0), rho=1.0),
        None,
    )
    out2, _, trace2 = alternate_minimize(disk_circle_system(n=128), wavy, F1, cfg)
    moved = np.linalg.norm(out2.rods[0].frame.x - sys.rods[0].frame.x)
    assert moved > 1e-3
    _integers_preserved(out2, trace2, [0], [[0]])
    _pass(request, 5)


def test_criterion_6_interpenetration_volume(request):
    _start(request, 6, "tube volume identity holds exactly and detects overlap")
    L, a = 2.0, 0.25
    straight = Rod(
        CurvatureField(L, np.zeros((65, 3))),
        InitialFrame(x0=[0, 0, 0], t0=[0, 0, 1], d0=[1, 0, 0]),
        CrossSectionProfile(shape=DiskSection(a)),
    )
    lhs, rhs, half = interpenetration_volume(straight)
    exact = np.pi * a * a * L
    assert np.isclose(lhs, exact, rtol=1e-12)
    assert abs(rhs - exact) <= 3.0 * half

    ring = disk_circle_system(n=128, a=0.1).rods[0]
    lhs, rhs, half = interpenetration_volume(ring)
    exact = oracles.pappus_torus_volume(1.0, 0.1)
    assert np.isclose(lhs, exact, rtol=1e-6)
    assert abs(rhs - exact) <= 0.01 * exact

    # tube radius above the trefoil's strand distance but below its local
    # curvature radius: distant strands overlap while the volume form
    # stays positive, so the identity must fail
    r0 = trefoil_sample(n=512).rods[0]
    fat = Rod(r0.w, r0.f0, CrossSectionProfile(shape=DiskSection(0.9)),
              twist_target=r0.twist_target)
    lhs, rhs, half = interpenetration_volume(fat)
    assert lhs > rhs * 1.001 + half
    rep = check_admissible(
        RodSystem([fat], linking_target=[[0]], epsilon=1.0), seed=0,
        mc_samples=50_000,
    )
    assert "C5-volume" in {e.name for e in rep.failed()}
    _pass(request, 6)


def test_criterion_7_dimensional_reduction(request):
    _start(request, 7, "scaled energies approach the thin-rod limit linearly")
    sys = circle(n=128)
    mass = MassModel(g=[0.0, 0.0, -9.81], rho=1.0)
    limit = limit_gravity_term(mass, sys)
    gaps = [
        abs(scaled_gravitational_energy(mass, sys, eps) - limit)
        for eps in (0.1, 0.05, 0.025)
    ]
    ratios = [b / a for a, b in zip(gaps, gaps[1:])]
    assert all(0.3 <= r <= 0.7 for r in ratios), (gaps, ratios)

    models = EnergyModels(ElasticModel(intrinsic=(1.0, 0.0, 0.0)), mass, None)
    cfg = SolveConfig(eps_sweep=[0.1, 0.05, 0.025], film_iters=30, mc_samples=50_000)
    rep = dimred_sweep(sys, models, F1, cfg)
    sweep_gaps = [abs(g) for g in rep.gaps()]
    assert len(sweep_gaps) == 3
    assert sweep_gaps[-1] <= sweep_gaps[0] / 2.0
    _pass(request, 7)


def test_criterion_8_determinism(request, tmp_path):
    _start(request, 8, "same config and seed give byte-identical traces")
    cfgpath = tmp_path / "c.yaml"
    cfgpath.write_text(
        "problem:\n"
        "  preset: circle\n"
        "  nodes: 128\n"
        "  rho: 0.0\n"
        "solver:\n"
        "  max_outer_iters: 2\n"
        "  film_iters: 30\n"
        "  rod_iters: 1\n"
        "  seed: 12\n"
        "output:\n"
        "  prefix: det\n"
    )
    for run in ("r1", "r2"):
        rc = cli.main(
            ["minimize", "--config", str(cfgpath), "--out", str(tmp_path / run)]
        )
        assert rc == 0
    b1 = (tmp_path / "r1" / "det_trace.csv").read_bytes()
    b2 = (tmp_path / "r2" / "det_trace.csv").read_bytes()
    assert b1 == b2 and len(b1) > 0
    _pass(request, 8)
