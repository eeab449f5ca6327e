import json

import numpy as np
import pytest

from pwsavg.checker import (check_crossing_structure, check_generating_periodicity, check_hypotheses,
                            check_transversality, measure_convergence_check, switching_time_sensitivity)
from pwsavg.model import PiecewiseSystem, dry_friction, dual_dry_friction


def growing_system():
    """Generating solutions drift linearly, so periodicity fails."""
    return PiecewiseSystem(n=1, period=2 * np.pi, drift=lambda t, x: np.array([-1.0]),
                           perturbation=lambda t, x, eps, s: np.array([0.0]), switching=(0,), name="drift")


def test_periodicity_holds_for_builtins():
    assert check_generating_periodicity(dry_friction()).passed
    res = check_generating_periodicity(dual_dry_friction(), sample_count=10)
    assert res.passed and res.margins["max_defect"] <= 1e-8


def test_periodicity_failure_has_witness():
    res = check_generating_periodicity(growing_system(), sample_count=5)
    assert not res.passed
    assert res.witness["value"] == pytest.approx(2 * np.pi, rel=1e-8)


def test_sampling_is_deterministic():
    a = check_generating_periodicity(dry_friction(), sample_count=8).to_dict()
    b = check_generating_periodicity(dry_friction(), sample_count=8).to_dict()
    assert a == b


def test_crossing_structure():
    res = check_crossing_structure(dry_friction(), [0.5])
    assert res.passed and res.margins["m"] == 2
    bad = check_crossing_structure(dry_friction(), [0.0])
    assert not bad.passed and bad.witness["time"] == 0.0


def test_transversality_margins():
    xi = 0.5
    res = check_transversality(dry_friction(), [xi])
    assert res.passed
    for row in res.margins["events"]:
        assert row["margin"] == pytest.approx(np.sqrt(1 - xi**2), abs=1e-8)
        assert row["margin_dense"] == pytest.approx(row["margin"], abs=1e-6)


def test_grazing_fails_transversality():
    res = check_transversality(dry_friction(), [1 - 1e-14])
    assert not res.passed
    assert res.witness["value"] < 1e-6
    assert res.witness["time"] == pytest.approx(1.5 * np.pi, abs=1e-3)


def test_report_round_trips_json():
    rep = check_hypotheses(dry_friction(), [-0.7], sample_count=5)
    assert rep.passed
    assert [c.name for c in rep.checks] == ["generating_periodicity", "crossing_structure", "transversality"]
    json.dumps(rep.to_dict())
    assert rep["transversality"].passed


def test_switching_time_slopes():
    xi = 0.5
    out = switching_time_sensitivity(dry_friction(), [xi])
    assert out["passed"]
    # t1 = pi + arcsin(xi), t2 = 2pi - arcsin(xi)
    d = 1 / np.sqrt(1 - xi**2)
    np.testing.assert_allclose(out["d_xi"][:, 0], [d, -d], rtol=1e-5)


def test_measure_scaling():
    out = measure_convergence_check(dry_friction(), [-0.5], 0.1, [0.1, 0.01, 0.001])
    assert out["strictly_decreasing"]
    assert out["spread"] <= 5


def test_measure_check_validates_input():
    with pytest.raises(ValueError):
        measure_convergence_check(dry_friction(), [-0.5], 0.1, [0.01, 0.1])
    with pytest.raises(ValueError):
        measure_convergence_check(dry_friction(), [-0.5], 0.1, [0.1], grid_size=10)
