import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_occupation, fbar, fbar_prime, fbar_zero, occupation_measure
from pwsavg.averaging import (INCONCLUSIVE, STABLE, UNSTABLE, averaged_function, averaged_jacobian, classify,
                              damped_newton, find_zero, generating_crossings, perturbed_average, tabulate)
from pwsavg.errors import NoConvergence, SingularJacobian, TangentialContact
from pwsavg.model import anti_dry_friction, dry_friction, dual_dry_friction
from pwsavg.poincare import standard_form_map
from systems import nonlinear_system


@pytest.mark.parametrize("xi", [-0.9, -0.3, 0.0, 0.4, 0.8])
def test_occupation_formula_against_grid_count(xi):
    assert brute_occupation(xi) == pytest.approx(occupation_measure(xi), abs=1e-5)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 2), st.floats(0.05, 2), st.floats(-0.95, 0.95).filter(lambda v: abs(v) > 1e-6))
def test_matches_closed_form(a, b, xi):
    assert averaged_function(dry_friction(a, b), xi)[0] == pytest.approx(fbar(a, b, xi), abs=1e-8)


def test_outside_band_has_no_switching():
    # |xi| > 1: the generating solution never changes sign
    assert averaged_function(dry_friction(), [1.5])[0] == pytest.approx(-0.3 * 2 * np.pi, abs=1e-10)
    assert averaged_function(dry_friction(), [-1.5])[0] == pytest.approx(0.1 * 2 * np.pi, abs=1e-10)


def test_split_beats_unsplit():
    s = dry_friction()
    exact = fbar(0.3, 0.1, 0.2)
    split_err = abs(averaged_function(s, [0.2])[0] - exact)
    unsplit_err = abs(averaged_function(s, [0.2], split=False)[0] - exact)
    assert split_err <= 1e-10
    assert unsplit_err >= split_err


def test_reversed_sign_negates():
    assert averaged_function(anti_dry_friction(), [0.3])[0] == pytest.approx(-fbar(0.3, 0.1, 0.3), abs=1e-10)


@pytest.mark.parametrize("xi", [-0.7, -0.2, 0.5])
def test_jacobian_against_derivative(xi):
    assert averaged_jacobian(dry_friction(), [xi])[0, 0] == pytest.approx(fbar_prime(0.3, 0.1, xi), rel=1e-6)


def test_find_zero_dry_friction():
    rep = find_zero(dry_friction(), [-0.5])
    assert rep.xi0[0] == pytest.approx(fbar_zero(0.3, 0.1), abs=1e-9)
    assert rep.verdict == STABLE
    assert rep.eigenvalues[0].real == pytest.approx(fbar_prime(0.3, 0.1, fbar_zero(0.3, 0.1)), rel=1e-6)
    assert rep.residual_history[0] > rep.residual_history[-1]
    d = rep.to_dict()
    assert d["verdict"] == STABLE and len(d["eigenvalues"][0]) == 2


def test_find_zero_reversed_is_unstable():
    rep = find_zero(anti_dry_friction(), [-0.5])
    assert rep.verdict == UNSTABLE


def test_dual_zero_sits_on_first_hyperplane():
    rep = find_zero(dual_dry_friction(), [0.1, 0.7])
    np.testing.assert_allclose(rep.xi0, [0.0, np.sin(np.pi / 3)], atol=1e-8)
    assert abs(rep.jacobian[0, 1]) <= 1e-7 and abs(rep.jacobian[1, 0]) <= 1e-7


def test_grazing_orbit_rejected():
    with pytest.raises(TangentialContact):
        averaged_function(dry_friction(), [1 - 1e-14])


def test_crossings_listed():
    _, cr = generating_crossings(dry_friction(), [0.5])
    np.testing.assert_allclose([c.time for c in cr], [7 * np.pi / 6, 11 * np.pi / 6], atol=1e-10)
    _, cr = generating_crossings(dry_friction(), [0.0])
    assert cr[0].kind == "start"


def test_perturbed_average_tends_to_averaged():
    s = dry_friction()
    base = averaged_function(s, [-0.5])[0]
    gaps = [abs(perturbed_average(s, [-0.5], e)[0] - base) for e in (1e-2, 1e-3)]
    assert gaps[1] < gaps[0] < 0.05


def test_standard_form_identity():
    # u(T) = xi + eps * perturbed average, exactly
    s = dry_friction()
    eps = 0.02
    u = standard_form_map(s, [-0.4], eps)
    assert u[0] == pytest.approx(-0.4 + eps * perturbed_average(s, [-0.4], eps)[0], abs=1e-10)


def test_nonlinear_drift_against_epsilon_derivative():
    s = nonlinear_system()
    xi = np.array([0.5, 0.1])
    eps = 1e-5
    quotient = (standard_form_map(s, xi, eps) - standard_form_map(s, xi, 0.0)) / eps
    np.testing.assert_allclose(averaged_function(s, xi), quotient, atol=1e-3)


def test_classify_cases():
    assert classify(np.diag([-1.0, -2.0])) == STABLE
    assert classify(np.diag([-1.0, 2.0])) == UNSTABLE
    assert classify(np.array([[0.0, 1.0], [-1.0, 0.0]])) == INCONCLUSIVE
    assert classify(np.diag([-1.0, -1e-12])) == INCONCLUSIVE


def test_damped_newton_simple_root():
    x, r, its, hist = damped_newton(lambda x: x**2 - 2, lambda x: np.diag(2 * x), [3.0], 1e-12, 30)
    assert x[0] == pytest.approx(np.sqrt(2), abs=1e-14)
    assert hist == sorted(hist, reverse=True)


def test_damped_newton_failures():
    with pytest.raises(SingularJacobian):
        damped_newton(lambda x: x**2 + 1, lambda x: np.diag(2 * x), [0.0], 1e-12, 30)
    with pytest.raises(NoConvergence):
        damped_newton(lambda x: x**2 + 1, lambda x: np.diag(2 * x), [3.0], 1e-12, 5)


def test_tabulate_shape():
    rows = tabulate(dry_friction(), [[-0.5], [0.5]])
    assert rows.shape == (2, 2)
    assert rows[1, 1] == pytest.approx(fbar(0.3, 0.1, 0.5), abs=1e-8)
