import numpy as np
import pytest

import oracles
from rodfilm.errors import AmbiguousAngle, NonFiniteSample, NotClosed
from rodfilm.rod import (
    CurvatureField,
    InitialFrame,
    close_up_curve,
    closure_angle,
    closure_defects,
    integrate_frame,
)

L = 2.0 * np.pi


def circle_field(n):
    samples = np.zeros((n + 1, 3))
    samples[:, 0] = 1.0
    return CurvatureField(L, samples)


def wavy_field(n):
    s = np.linspace(0.0, L, n + 1)
    samples = np.zeros((n + 1, 3))
    samples[:, 0] = 1.0 + 0.3 * np.sin(2.0 * s)
    samples[:, 1] = 0.2 * np.cos(s)
    samples[:, 2] = 0.1 * np.sin(3.0 * s)
    return CurvatureField(L, samples)


F0 = InitialFrame(x0=[0.0, 1.0, 0.0], t0=[1.0, 0.0, 0.0], d0=[0.0, -1.0, 0.0])


def test_field_validation():
    good = np.zeros((17, 3))
    with pytest.raises(ValueError):
        CurvatureField(0.0, good)
    with pytest.raises(ValueError):
        CurvatureField(1.0, good, p=1.0)
    with pytest.raises(ValueError):
        CurvatureField(1.0, np.zeros((17, 2)))
    with pytest.raises(ValueError):
        CurvatureField(1.0, np.zeros((5, 3)))  # fewer than 8 intervals


def test_field_norm_matches_quadrature():
    w = circle_field(64)
    # |k1|^2 integrates to L for the unit circle
    assert np.isclose(w.norm(), np.sqrt(L))


def test_nonfinite_samples_rejected():
    samples = np.zeros((17, 3))
    samples[3, 1] = np.nan
    with pytest.raises(NonFiniteSample):
        integrate_frame(CurvatureField(1.0, samples), F0)


def test_degenerate_initial_frame_rejected():
    with pytest.raises(Exception):
        InitialFrame(x0=[0, 0, 0], t0=[1, 0, 0], d0=[1, 0, 0]).check()


def test_circle_closes_and_stays_orthonormal():
    c = integrate_frame(circle_field(1024), F0)
    defects = closure_defects(c)
    assert defects.position_gap <= 1e-6 * L
    assert defects.closed(L)
    # orthonormality drift across the whole run
    drift = max(
        np.abs(np.linalg.norm(c.t, axis=1) - 1.0).max(),
        np.abs(np.linalg.norm(c.d, axis=1) - 1.0).max(),
        np.abs(np.einsum("ij,ij->i", c.t, c.d)).max(),
    )
    assert drift <= 1e-8


def test_circle_geometry_is_exact():
    c = integrate_frame(circle_field(512), F0)
    radii = np.linalg.norm(c.x - [0.0, 0.0, 0.0], axis=1)
    assert np.allclose(radii, 1.0, atol=5e-9)
    assert np.allclose(c.x[:, 2], 0.0, atol=1e-12)


def test_endpoint_agrees_with_adaptive_integrator():
    w = wavy_field(512)
    c = integrate_frame(w, F0)
    x, t, d = oracles.frame_endpoint(w, F0)
    assert np.linalg.norm(c.x[-1] - x) <= 2e-4
    assert np.linalg.norm(c.t[-1] - t) <= 2e-4
    assert np.linalg.norm(c.d[-1] - d) <= 2e-4


def test_endpoint_error_second_order_on_smooth_field():
    errs = []
    for n in (128, 256, 512):
        w = wavy_field(n)
        c = integrate_frame(w, F0)
        x, _, _ = oracles.frame_endpoint(w, F0)
        errs.append(np.linalg.norm(c.x[-1] - x))
    orders = [np.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 1.9, (errs, orders)


def test_endpoint_error_fourth_order_on_constant_field():
    errs = []
    for n in (64, 128, 256):
        w = circle_field(n)
        c = integrate_frame(w, F0)
        x, _, _ = oracles.frame_endpoint(w, F0)
        errs.append(np.linalg.norm(c.x[-1] - x))
    orders = [np.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 3.5, (errs, orders)


def test_open_arc_reports_gap():
    samples = np.zeros((129, 3))
    samples[:, 0] = 0.5  # half the curvature: only half a turn
    c = integrate_frame(CurvatureField(L, samples), F0)
    defects = closure_defects(c)
    assert defects.position_gap > 0.1
    assert not defects.closed(L)
    with pytest.raises(NotClosed):
        close_up_curve(c, 0.1)


def test_closure_angle_snaps_clean_return():
    c = integrate_frame(circle_field(1024), F0)
    assert closure_angle(c) == 0.0


def test_closure_angle_ambiguous_at_half_turn():
    c = integrate_frame(circle_field(1024), F0)
    flipped = type(c)(c.s, c.x, c.t, np.concatenate([c.d[:-1], [-c.d[0]]]))
    with pytest.raises(AmbiguousAngle):
        closure_angle(flipped)


def test_close_up_curve_offsets_and_closes():
    c = integrate_frame(circle_field(256), F0)
    cu = close_up_curve(c, 0.25)
    # offset part sits at distance tau from the midline
    assert np.allclose(
        np.linalg.norm(cu.nodes[: c.n + 1] - c.x, axis=1), 0.25
    )
    poly = cu.as_polyline()
    # polyline drops the duplicate seam nodes but keeps the arc
    assert poly.n >= c.n
    with pytest.raises(ValueError):
        close_up_curve(c, -0.1)
