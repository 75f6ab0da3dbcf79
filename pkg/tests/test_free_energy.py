# -*- coding: utf-8 -*-
import math

import pytest

from backend.app.core.errors import ErrorReason, ExitCode, NumericalFlagError, PreconditionError
from backend.app.domain.schemas.sampling import MCParams
from backend.app.services.exact.staircase import tau_zero_exact
from backend.app.services.free_energy.positivity import (
    exact_log_positivity,
    log_positivity,
    telescope_stages,
)
from backend.app.services.free_energy.scaling import fkg_lower_bound, scaling_experiment, scaling_frame
from backend.app.services.free_energy.surface_tension import flip_order, tau_zero_mc
from backend.app.services.lattice.boundary import BoundaryCondition
from backend.app.services.lattice.geometry import Site, box


# ==================== TELESCOPIO DE POSITIVIDAD ====================


def test_telescope_stage_layouts():
    region = box(1)
    assert len(telescope_stages(region, "site")) == 9
    rows = telescope_stages(region, "row")
    assert [len(r) for r in rows] == [3, 3, 3]
    assert rows[0][0] == Site(-1, -1)
    with pytest.raises(PreconditionError):
        telescope_stages(region, "site", order=[(0, 0)])


def test_exact_telescope_independent_of_granularity():
    region = box(1)
    bc = BoundaryCondition.zero(region)
    by_site = exact_log_positivity(region, bc, 1.0, margin=3)
    by_row = exact_log_positivity(region, bc, 1.0, margin=3, granularity="row")
    assert by_site.value == pytest.approx(by_row.value, abs=1e-10)
    assert by_site.method == "exact"
    assert len(by_site.components) == 9
    assert all(c.log_value <= 0 for c in by_site.components)


def test_mc_positivity_agrees_with_exact(quick_params):
    region = box(1)
    bc = BoundaryCondition.zero(region)
    exact = exact_log_positivity(region, bc, 1.0, margin=3, granularity="row")
    estimate = log_positivity(region, bc, 1.0, quick_params, granularity="row")
    assert estimate.method == "telescoping_rows"
    assert len(estimate.components) == 3
    assert estimate.value == pytest.approx(sum(c.log_value for c in estimate.components))
    assert abs(estimate.value - exact.value) < 5 * estimate.std_error + 0.05


def test_mc_positivity_is_reproducible(quick_params):
    region = box(0)
    bc = BoundaryCondition.zero(region)
    a = log_positivity(region, bc, 1.0, quick_params)
    b = log_positivity(region, bc, 1.0, quick_params)
    assert a.value == b.value


def test_zero_stage_raises_numerical_flag():
    region = box(0)
    params = MCParams(sweeps=50, burnin=0, seed=1, max_sweeps=100)
    with pytest.raises(NumericalFlagError) as exc:
        log_positivity(region, BoundaryCondition.zero(region), 3.0, params, floor_level=5)
    assert exc.value.reason == ErrorReason.ZERO_STAGE
    assert exc.value.exit_code == ExitCode.NUMERICAL_FLAG


# ==================== TENSIÓN SUPERFICIAL ====================


def test_flip_order_layout():
    order = flip_order(1)
    assert len(order) == 7
    assert order[:2] == [Site(-2, 0), Site(2, 0)]
    assert order[-3:] == [Site(-1, 2), Site(0, 2), Site(1, 2)]
    assert len(set(order)) == len(order)


def test_flip_estimator_agrees_with_transfer_matrix():
    params = MCParams(sweeps=600, burnin=20, seed=13)
    estimate = tau_zero_mc(1, 1.0, params)
    exact = tau_zero_exact(1, 1.0, margin=3)
    assert len(estimate.log_ratio.components) == 7
    assert estimate.log_ratio.method == "boundary_flip"
    assert abs(estimate.log_ratio.value - exact.log_ratio) < 5 * estimate.log_ratio.std_error + 0.05
    assert estimate.tau_hat == pytest.approx(-estimate.log_ratio.value / 3)


def test_flip_estimator_normalizations():
    params = MCParams(sweeps=100, burnin=5, seed=2)
    interface = tau_zero_mc(1, 1.0, params)
    definition = tau_zero_mc(1, 1.0, params, normalization="definition")
    assert definition.tau_hat == pytest.approx(interface.tau_hat * 3 / 2)


def test_low_ess_is_flagged(monkeypatch):
    monkeypatch.setenv("SOS_MIN_EFFECTIVE_SAMPLE_SIZE", "1000000")
    params = MCParams(sweeps=40, burnin=5, seed=3)
    estimate = tau_zero_mc(0, 1.0, params)
    flags = estimate.log_ratio.flags
    assert len(flags) == 3
    assert all(flag.startswith("LOW_ESS: stage") for flag in flags)
    assert all(c.flagged and c.n_samples == 80 for c in estimate.log_ratio.components)


def test_flip_order_must_be_a_permutation():
    with pytest.raises(PreconditionError):
        tau_zero_mc(1, 1.0, MCParams(sweeps=10, burnin=0), order=[(0, 2)])


# ==================== ESCALA ====================


def test_fkg_lower_bound_is_a_log_probability():
    region = box(1)
    params = MCParams(sweeps=200, burnin=10, seed=5)
    bound, se = fkg_lower_bound(region, BoundaryCondition.zero(region), 1.0, params)
    assert bound < 0
    assert se >= 0


def test_scaling_validation():
    params = MCParams(sweeps=10, burnin=0)
    with pytest.raises(PreconditionError):
        scaling_experiment([1, 2], 1.0, params)
    with pytest.raises(PreconditionError):
        scaling_experiment([3, 2], 1.0, params)


def test_scaling_row_and_frame():
    params = MCParams(sweeps=200, burnin=10, seed=8, max_sweeps=400)
    rows = scaling_experiment([2], 1.0, params, exact_max_states=10**5)
    row = rows[0]
    assert row.L == 2
    assert row.H_L == 0
    assert row.rate == pytest.approx(-row.log_p / (2 * math.log(2)))
    assert row.exact_log_p is not None
    frame = scaling_frame(rows)
    assert list(frame.columns[:9]) == [
        "L", "beta", "log_p", "se", "rate", "tau_hat", "se_tau", "H_L", "fkg_lower_bound",
    ]


@pytest.mark.slow
def test_scaling_acceptance():
    params = MCParams(sweeps=2000, seed=20240607)
    rows = scaling_experiment([2, 3], 1.0, params, exact_max_states=10**6)
    for row in rows:
        assert row.fkg_consistent
        assert row.tau_hat > 0
        if row.exact_log_p is not None:
            assert abs(row.log_p - row.exact_log_p) < 5 * row.se + 0.05
