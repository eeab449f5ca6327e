import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwsavg.errors import InvalidParams, UnknownModel, UnresolvedOrthant
from pwsavg.model import (BUILTINS, dry_friction, dual_dry_friction, make_builtin, orthant_signature,
                          perturbation_periodicity_defect, rhs_full)

finite = st.floats(-5, 5, allow_nan=False)


@given(st.lists(finite, min_size=1, max_size=6))
def test_signature_entries(xs):
    sig = orthant_signature(xs)
    assert len(sig) == len(xs)
    for v, s in zip(xs, sig):
        assert s == (0 if abs(v) <= 1e-9 else np.sign(v))


def test_signature_rejects_bad_band():
    with pytest.raises(ValueError):
        orthant_signature([1.0], dead_tol=0)


@given(st.floats(0.01, 3), st.floats(0.01, 3), st.floats(-3, 3), st.floats(0, 1))
def test_dry_friction_branches(a, b, x, eps):
    sys_ = dry_friction(a, b)
    assert sys_.branch((1,))(0.0, np.array([x]), eps)[0] == -a
    assert sys_.branch((-1,))(0.0, np.array([x]), eps)[0] == b


def test_branch_rejects_unresolved():
    with pytest.raises(UnresolvedOrthant):
        dry_friction().branch((0,))


@settings(max_examples=30)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 2 * np.pi))
def test_dual_components_independent(x1, x2, t):
    s = dual_dry_friction(0.2, 0.3, 0.4, 0.5, 1.0)
    for sig in [(1, 1), (1, -1), (-1, 1), (-1, -1)]:
        f = s.branch(sig)(t, np.array([x1, x2]), 0.1)
        assert f[0] == (-0.2 if sig[0] > 0 else 0.3)
        assert f[1] == (-0.4 if sig[1] > 0 else 0.5)


@settings(max_examples=30)
@given(st.sampled_from(sorted(BUILTINS)), st.floats(-2, 2), st.floats(0, 1))
def test_builtins_are_periodic(name, x, eps):
    s = make_builtin(name)
    assert perturbation_periodicity_defect(s, np.full(s.n, x), eps) <= 1e-12
    for t in np.linspace(0, s.period, 7):
        np.testing.assert_allclose(s.drift(t + s.period, np.full(s.n, x)), s.drift(t, np.full(s.n, x)),
                                   atol=1e-12)


def test_rhs_full_unperturbed_ignores_signs():
    s = dry_friction()
    assert rhs_full(s, 1.0, np.array([0.2]), 0.0, (1,))[0] == pytest.approx(np.cos(1.0))
    assert rhs_full(s, 1.0, np.array([0.2]), 0.5, (1,))[0] == pytest.approx(np.cos(1.0) - 0.15)


def test_drift_jacobian_matches_finite_differences():
    s = dual_dry_friction()
    np.testing.assert_allclose(s.drift_jac(0.3, np.array([0.1, 0.2])), np.zeros((2, 2)))


def test_make_builtin_errors():
    with pytest.raises(UnknownModel):
        make_builtin("bogus")
    with pytest.raises(InvalidParams):
        make_builtin("dry_friction", {"a": -1})
    with pytest.raises(InvalidParams):
        make_builtin("dry_friction", {"c": 1})
    with pytest.raises(InvalidParams):
        make_builtin("dry_friction", {"a": float("nan")})


def test_system_is_immutable():
    s = dry_friction()
    with pytest.raises(AttributeError):
        s.n = 2
