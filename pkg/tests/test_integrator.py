import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import period_map
from pwsavg.errors import StickingDetected, SwitchAtBoundary, TangentialContact, TooManyEvents
from pwsavg.integrator import (NOMINAL_ORDER, Tolerances, empirical_order, fundamental_matrix, generating_flow,
                               integrate_piecewise, integrate_smooth, inverse_generating_flow, locate_event,
                               write_events_csv, write_trajectory_csv)
from pwsavg.model import dry_friction, dual_dry_friction
from systems import nonlinear_system

TWO_PI = 2 * np.pi
off_plane = st.floats(-0.95, 0.95).filter(lambda v: abs(v) > 1e-3)


def test_smooth_against_closed_form():
    seg = integrate_smooth(lambda t, x: np.cos(t) * x, 0.0, [1.5], 4.0)
    assert seg.x_b[0] == pytest.approx(1.5 * np.exp(np.sin(4.0)), rel=1e-9)
    ts = np.linspace(0, 4, 17)
    np.testing.assert_allclose(seg(ts)[0], 1.5 * np.exp(np.sin(ts)), rtol=1e-8)


def test_backward_integration_inverts_forward():
    s = nonlinear_system()
    xi = np.array([0.4, -0.2])
    y = generating_flow(s, xi, 3.0)
    np.testing.assert_allclose(inverse_generating_flow(s, y, 3.0), xi, atol=1e-9)


def test_integrator_order():
    slope = empirical_order(lambda t, x: np.cos(t) * x, 0.0, [1.0], 5.0, np.exp(np.sin(5.0)),
                            [1.0, 0.8, 0.6, 0.5])
    assert abs(slope - NOMINAL_ORDER) <= 0.5


def test_fundamental_matrix_against_finite_differences():
    s = nonlinear_system()
    xi = np.array([0.3, 0.5])
    m = fundamental_matrix(s, xi, TWO_PI)
    h = 1e-6
    fd = np.column_stack([(generating_flow(s, xi + d, TWO_PI) - generating_flow(s, xi - d, TWO_PI)) / (2 * h)
                          for d in np.eye(2) * h])
    assert np.max(np.abs(m - fd)) <= 1e-6


def test_generating_events_exact():
    traj = integrate_piecewise(dry_friction(), [0.5], 0.0, TWO_PI)
    times = [e.time for e in traj.events]
    np.testing.assert_allclose(times, [7 * np.pi / 6, 11 * np.pi / 6], atol=1e-10)
    for e in traj.events:
        assert e.margin == pytest.approx(np.sqrt(0.75), abs=1e-8)
    assert [(e.sign_before, e.sign_after) for e in traj.events] == [(1, -1), (-1, 1)]


@settings(max_examples=25, deadline=None)
@given(off_plane, st.floats(0.0, 0.05))
def test_period_map_matches_semi_analytic(xi, eps):
    traj = integrate_piecewise(dry_friction(), [xi], eps, TWO_PI)
    assert traj.final_state[0] == pytest.approx(period_map(0.3, 0.1, xi, eps), abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(off_plane, off_plane, st.floats(0.0, 0.05))
def test_gluing_invariants(x1, x2, eps):
    traj = integrate_piecewise(dual_dry_friction(), [x1, x2], eps, 3 * TWO_PI)
    jumps = traj.junction_jumps()
    assert jumps.size == 0 or jumps.max() <= 1e-10
    times = [e.time for e in traj.events]
    assert times == sorted(times)
    for seg in traj.segments:
        if seg.t_b - seg.t_a > 1e-6:
            mid = seg(0.5 * (seg.t_a + seg.t_b))
            assert all(np.sign(mid[j]) == seg.signature[j] for j in (0, 1))


def test_locate_event_on_segment():
    s = dry_friction()
    seg = integrate_smooth(s.generating_rhs, 0.0, [0.5], TWO_PI)
    assert locate_event(seg, 0) == pytest.approx(7 * np.pi / 6, abs=1e-10)
    seg = integrate_smooth(s.generating_rhs, 0.0, [1.5], TWO_PI)
    assert locate_event(seg, 0) is None


def test_sticking_detected():
    with pytest.raises(StickingDetected) as info:
        integrate_piecewise(dry_friction(1, 1), [0.5], 1.5, TWO_PI)
    assert info.value.component == 0


def test_tangential_contact_rejected():
    with pytest.raises(TangentialContact) as info:
        integrate_piecewise(dry_friction(), [1 - 1e-14], 0.0, TWO_PI)
    assert info.value.time == pytest.approx(1.5 * np.pi, abs=1e-3)
    assert info.value.margin < 1e-6


def test_start_on_hyperplane_rejected():
    with pytest.raises(SwitchAtBoundary):
        integrate_piecewise(dry_friction(), [0.0], 0.01, TWO_PI)


def test_crossing_at_horizon_rejected():
    with pytest.raises(SwitchAtBoundary):
        integrate_piecewise(dry_friction(), [0.5], 0.0, 7 * np.pi / 6)


def test_event_budget():
    with pytest.raises(TooManyEvents):
        integrate_piecewise(dry_friction(), [0.5], 0.0, 4 * TWO_PI, Tolerances(max_events=3))


def test_reproducible():
    a = integrate_piecewise(dual_dry_friction(), [0.3, 0.7], 0.02, TWO_PI)
    b = integrate_piecewise(dual_dry_friction(), [0.3, 0.7], 0.02, TWO_PI)
    assert a.events == b.events
    assert np.array_equal(a.final_state, b.final_state)


def test_csv_export(tmp_path):
    traj = integrate_piecewise(dry_friction(), [0.5], 0.01, TWO_PI)
    write_trajectory_csv(traj, tmp_path / "t.csv", 5)
    write_events_csv(traj, tmp_path / "e.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "t,x1,signature"
    assert len(lines) == 1 + 5 * len(traj.segments)
    assert len((tmp_path / "e.csv").read_text().splitlines()) == 1 + len(traj.events)
