import numpy as np
import pytest

from rodfilm.constraints import check_admissible
from rodfilm.energy import (
    AnisotropicIntegrand,
    ElasticModel,
    EnergyModels,
    MassModel,
    elastic_energy,
    surface_energy,
    surface_energy_gradient,
)
from rodfilm.rod import CurvatureField, InitialFrame
from rodfilm.sections import CrossSectionProfile, DiskSection
from rodfilm.solver import (
    SolveConfig,
    alternate_minimize,
    dimred_sweep,
    film_descend,
    rod_descend,
)
from rodfilm.surface import default_witnesses, initial_spanning_surface
from rodfilm.system import Rod, RodSystem

F1 = AnisotropicIntegrand.constant(1.0)
NOG = MassModel(g=(0.0, 0.0, 0.0), rho=1.0)


def disk_circle_system(n=96, a=0.05):
    w = CurvatureField(2.0 * np.pi, np.column_stack([
        np.ones(n + 1), np.zeros(n + 1), np.zeros(n + 1),
    ]))
    f0 = InitialFrame(x0=(0.0, 1.0, 0.0), t0=(1.0, 0.0, 0.0), d0=(0.0, -1.0, 0.0))
    rod = Rod(w, f0, CrossSectionProfile(shape=DiskSection(a)))
    return RodSystem([rod], linking_target=[[0]], epsilon=1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(film_iters=0)
    with pytest.raises(ValueError):
        SolveConfig(backtrack=1.0)
    with pytest.raises(ValueError):
        SolveConfig(eps_sweep=[0.1, 0.2])  # must decrease
    with pytest.raises(ValueError):
        SolveConfig(eps_sweep=[0.1, -0.05])
    with pytest.raises(TypeError):
        SolveConfig(film_stpe=0.1)


def test_flat_disk_is_stationary():
    sys = disk_circle_system()
    S = initial_spanning_surface(sys, mode="midline")
    g = surface_energy_gradient(F1, S)[S.free_vertices]
    assert np.max(np.abs(g)) <= 1e-6 * S.scale()
    out = film_descend(S, F1, SolveConfig(mc_samples=50_000))
    assert surface_energy(F1, out) <= np.pi * 1.01


def test_film_descend_recovers_disk():
    sys = disk_circle_system()
    S = initial_spanning_surface(sys, mode="midline")
    V = S.vertices.copy()
    free = S.free_vertices
    r2 = np.sum(V[free, :2] ** 2, axis=1)
    V[free, 2] += 0.35 * np.exp(-2.0 * r2)
    S = S.with_vertices(V)
    before = surface_energy(F1, S)
    out = film_descend(S, F1, SolveConfig(mc_samples=50_000),
                       witnesses=default_witnesses(sys))
    after = surface_energy(F1, out)
    assert after < before
    assert after <= np.pi * 1.01


def test_rest_rod_does_not_move():
    sys = disk_circle_system(n=64)
    models = EnergyModels(
        ElasticModel(2.0, 1.0, 1.0, intrinsic=(1.0, 0.0, 0.0)), NOG, F1,
    )
    out = rod_descend(sys, models, None, SolveConfig(rod_iters=3, mc_samples=50_000))
    assert np.array_equal(out.rods[0].w.samples, sys.rods[0].w.samples)


def test_rod_descends_toward_wavy_intrinsic():
    sys = disk_circle_system(n=128)
    grid = sys.rods[0].w.grid
    intrinsic = np.column_stack([
        1.0 + 0.3 * np.sin(2.0 * grid), np.zeros(grid.size), np.zeros(grid.size),
    ])
    models = EnergyModels(ElasticModel(2.0, 2.0, 2.0, intrinsic=intrinsic), NOG, F1)
    start = elastic_energy(models.elastic, sys.rods[0].w)
    out = rod_descend(sys, models, None, SolveConfig(rod_iters=6, mc_samples=50_000))
    end = elastic_energy(models.elastic, out.rods[0].w)
    assert end < 0.5 * start
    # every accepted step kept the system admissible
    assert check_admissible(out, mode="linked", mc_samples=50_000).admissible


def test_alternate_minimize_monotone_and_feasible():
    sys = disk_circle_system(n=128)
    models = EnergyModels(
        ElasticModel(intrinsic=(1.0, 0.0, 0.0)), NOG, None,
    )
    cfg = SolveConfig(max_outer_iters=3, rod_iters=2, film_iters=40, mc_samples=50_000)
    _, S, trace = alternate_minimize(sys, models, F1, cfg)
    assert len(trace) >= 1
    assert trace.monotone()
    assert all(r["max_violation"] == 0.0 for r in trace.rows)
    assert all(r["accepted"] for r in trace.rows)
    assert surface_energy(F1, S) <= np.pi * 1.01


def test_alternate_minimize_rejects_bad_seed():
    sys = disk_circle_system(n=128)
    bad = RodSystem(
        [Rod(sys.rods[0].w, sys.rods[0].f0, sys.rods[0].profile, twist_target=2)],
        linking_target=[[0]], epsilon=1.0,
    )
    models = EnergyModels(ElasticModel(intrinsic=(1.0, 0.0, 0.0)), NOG, None)
    with pytest.raises(ValueError, match="admissible"):
        alternate_minimize(bad, models, F1, SolveConfig(mc_samples=50_000))


def test_trace_csv_is_deterministic(tmp_path):
    sys = disk_circle_system(n=96)
    models = EnergyModels(ElasticModel(intrinsic=(1.0, 0.0, 0.0)), NOG, None)
    cfg = SolveConfig(max_outer_iters=2, rod_iters=1, film_iters=20, mc_samples=50_000)
    paths = []
    for run in range(2):
        _, _, trace = alternate_minimize(sys, models, F1, cfg)
        p = tmp_path / f"trace{run}.csv"
        trace.to_csv(str(p))
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_dimred_sweep_gaps_shrink(tmp_path):
    sys = disk_circle_system(n=128, a=0.2)
    models = EnergyModels(ElasticModel(intrinsic=(1.0, 0.0, 0.0)), NOG, None)
    cfg = SolveConfig(eps_sweep=[0.4, 0.2, 0.1], film_iters=30, mc_samples=50_000)
    rep = dimred_sweep(sys, models, F1, cfg)
    gaps = [abs(g) for g in rep.gaps()]
    assert len(gaps) == 3
    assert gaps[-1] <= gaps[0] / 2.0
    assert rep.rate == pytest.approx(1.0, abs=0.25)
    p = tmp_path / "sweep.csv"
    rep.to_csv(str(p))
    header = p.read_text().splitlines()[0]
    assert header == "eps,E_el,E_g_eps,film,total,gap_to_E0"


def test_dimred_flags_overthick_entries():
    # first thickness exceeds the embeddedness radius: flagged, rest run
    sys = disk_circle_system(n=128, a=0.2)
    models = EnergyModels(ElasticModel(intrinsic=(1.0, 0.0, 0.0)), NOG, None)
    cfg = SolveConfig(eps_sweep=[6.0, 0.2, 0.1], film_iters=20, mc_samples=50_000)
    rep = dimred_sweep(sys, models, F1, cfg)
    assert rep.rows[0].note is not None
    assert np.isnan(rep.rows[0].total)
    assert rep.rows[1].note is None and rep.rows[2].note is None
    assert len(rep.gaps()) == 2


def test_dimred_preconditions():
    sys = disk_circle_system(n=96)
    models = EnergyModels(ElasticModel(intrinsic=(1.0, 0.0, 0.0)), NOG, None)
    with pytest.raises(ValueError):
        dimred_sweep(sys, models, F1, SolveConfig())  # no sweep
    two = RodSystem(sys.rods * 2, linking_target=np.zeros((2, 2)), epsilon=1.0)
    with pytest.raises(ValueError):
        dimred_sweep(two, models, F1, SolveConfig(eps_sweep=[0.1]))
