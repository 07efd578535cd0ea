"""Fast, reduced-size versions of the Monte Carlo checks.

The full-size runs with the tolerances from the verification protocol
live in test_acceptance.py; these exercise the machinery and the
pass/fail plumbing at small trajectory counts.
"""

import numpy as np
import pytest

from stochmhd.errors import ConstraintError
from stochmhd.ergodicity import (
    _default_init,
    audit_residual_halving,
    energy_balance_audit,
    hitting_times,
    moment_bound_check,
    ou_stationary_energy,
    recurrence_count,
)
from stochmhd.lattice import build_lattice
from stochmhd.noise import ForcingConfig


@pytest.fixture(scope="module")
def lat():
    return build_lattice(1)


@pytest.fixture(scope="module")
def forcing(lat):
    return ForcingConfig.single_mode(lat, (1, 0, 0), 1.0, 1.0)


def test_audit_small(lat, forcing):
    res = energy_balance_audit(
        forcing, _default_init(lat, 1.0), dt=2e-3, t_end=0.25,
        n_trajectories=60, seed=0,
    )
    assert abs(res.residual) <= 3.0 * res.standard_error + res.bias_allowance
    assert res.passed


def test_residual_halving(lat):
    res = audit_residual_halving(_default_init(lat, 4.0), dt=2e-3, t_end=0.5)
    assert res.passed, f"bias ratio {res.ratio} not near one half"


def test_moment_bound_small(lat, forcing):
    res = moment_bound_check(
        forcing, _default_init(lat, 1.0), dt=5e-3, t_end=4.0,
        n_trajectories=40, seed=1,
    )
    assert res.passed


def test_ou_closed_form(lat):
    f = ForcingConfig.single_mode(lat, (1, 0, 0), 2.0, 0.0)
    assert ou_stationary_energy(f) == pytest.approx(1.0)
    res = moment_bound_check(
        f, _default_init(lat, 0.0), dt=5e-3, t_end=8.0,
        n_trajectories=150, seed=2, linear_only=True,
    )
    assert res.mean_energy == pytest.approx(1.0, abs=3.5 * res.standard_error + 0.05)


def test_hitting_precondition(lat, forcing):
    with pytest.raises(ConstraintError):
        hitting_times(
            forcing, _default_init(lat, 16.0), c_sq=1.0, dt=1e-2, t_end=1.0,
            n_trajectories=4,
        )


def test_hitting_small(lat):
    f = ForcingConfig.single_mode(lat, (1, 0, 0), 0.5, 0.5)
    res = hitting_times(
        f, _default_init(lat, 16.0), c_sq=4.0, dt=2e-3, t_end=4.0,
        n_trajectories=80, seed=3,
    )
    assert res.delta == pytest.approx(0.75)
    assert res.passed


def test_recurrence_small(lat, forcing):
    res = recurrence_count(
        forcing, _default_init(lat, 2.0), ball_energy=2.0, sample_interval=0.5,
        horizons=(5.0, 10.0, 20.0), dt=0.01, n_trajectories=8, seed=4,
    )
    assert res.slope > 0
    assert res.mean_visits[0] <= res.mean_visits[-1]
