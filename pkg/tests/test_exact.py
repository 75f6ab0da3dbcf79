# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from backend.app.connectors.storage.height_field_io import region_for_shape
from backend.app.core.errors import ErrorReason, ExitCode, GuardExceededError, PreconditionError
from backend.app.domain.schemas.exact import HeightWindow
from backend.app.services.contours.tracer import Contour
from backend.app.services.exact.constraints import SiteConstraints, resolve_window
from backend.app.services.exact.enumerator import (
    constrained_partition,
    event_probability,
    fkg_positivity_check,
    log_event_probability,
    partition,
    partition_brute,
    verify_fkg,
)
from backend.app.services.exact.potentials import (
    d_proxy,
    extract_potentials,
    is_connected,
    reconstruction_residual,
)
from backend.app.services.exact.staircase import (
    check_monotonicity,
    contour_factorization,
    nested_contour_probability,
    pinning_rate,
    staircase_ratio,
    tau_normalizer,
    tau_zero_exact,
)
from backend.app.services.exact.transfer_matrix import partition_transfer
from backend.app.services.free_energy.surface_tension import tau_zero_flip_exact
from backend.app.services.lattice.boundary import BoundaryCondition
from backend.app.services.lattice.geometry import box, rectangle

# ==================== FUNCIÓN DE PARTICIÓN ====================


def test_single_site_with_empty_margin():
    region = box(0)
    window = resolve_window(BoundaryCondition.zero(region), 1.0, margin=0)
    assert window.size == 1
    result = partition(region, BoundaryCondition.zero(region), 1.0, window)
    assert result.log_z == 0.0


def test_single_site_closed_form():
    region = box(0)
    beta = 0.7
    result = partition_brute(region, BoundaryCondition.zero(region), beta, HeightWindow(hmin=-2, hmax=2))
    expected = math.log(1 + 2 * math.exp(-4 * beta) + 2 * math.exp(-8 * beta))
    assert result.log_z == pytest.approx(expected, abs=1e-12)
    assert result.method == "brute"


def test_transfer_matches_brute_on_box1():
    region = box(1)
    bc = BoundaryCondition.zero(region)
    window = HeightWindow(hmin=-1, hmax=1)
    brute = partition_brute(region, bc, 1.0, window)
    transfer = partition_transfer(region, bc, 1.0, window)
    assert transfer.log_z == pytest.approx(brute.log_z, abs=1e-10)


def test_transfer_matches_brute_with_staircase_and_constraints():
    region = rectangle(1, 1)
    bc = BoundaryCondition.staircase(region, [0], [1])
    window = HeightWindow(hmin=-1, hmax=2)
    constraints = SiteConstraints({(0, 0): 1}, {(-1, -1): 0})
    brute = partition_brute(region, bc, 0.8, window, constraints)
    transfer = partition_transfer(region, bc, 0.8, window, constraints)
    assert transfer.log_z == pytest.approx(brute.log_z, abs=1e-10)


def test_wide_rectangle_is_transposed_consistently():
    region = rectangle(2, 0)
    bc = BoundaryCondition.constant(region, 1)
    window = HeightWindow(hmin=-1, hmax=2)
    assert partition_transfer(region, bc, 1.0, window).log_z == pytest.approx(
        partition_brute(region, bc, 1.0, window).log_z, abs=1e-10
    )


def _constraint_variant(region, kind):
    first, last = region.order[0], region.order[-1]
    if kind == "floor":
        return SiteConstraints.floor_on(region.order, 0)
    if kind == "pin":
        return SiteConstraints.pinned([first], 1)
    if kind == "sign":
        return SiteConstraints.sign(u_plus=[first], u_minus=[last])
    return None


@pytest.mark.parametrize("shape", [(1, 1), (1, 2), (2, 1), (2, 2), (2, 3), (3, 3)])
@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("kind", ["free", "floor", "pin", "sign"])
def test_transfer_matches_brute_on_small_rectangles(shape, beta, kind):
    region = region_for_shape(*shape)
    bc = BoundaryCondition.constant(region, 1) if kind == "sign" else BoundaryCondition.zero(region)
    # 3×3 con ventana de 3 alturas; el resto con 5
    margin = 1 if len(region) > 6 else 2
    window = HeightWindow.around(bc.min_value(), bc.max_value(), margin)
    constraints = _constraint_variant(region, kind)
    brute = partition_brute(region, bc, beta, window, constraints)
    transfer = partition_transfer(region, bc, beta, window, constraints)
    assert np.isfinite(brute.log_z)
    assert transfer.log_z == pytest.approx(brute.log_z, abs=1e-10)


def test_window_growth_is_monotone_and_converges():
    region = rectangle(1, 0)
    bc = BoundaryCondition.zero(region)
    log_z = [partition(region, bc, 1.0, HeightWindow.around(0, 0, m)).log_z for m in range(9)]
    steps = np.diff(log_z)
    assert (steps >= -1e-12).all()
    assert steps[0] > steps[-1]
    assert steps[-1] < 1e-10


def test_constant_shift_invariance():
    region = box(1)
    window = HeightWindow(hmin=-1, hmax=1)
    base = partition(region, BoundaryCondition.zero(region), 1.0, window).log_z
    shifted = partition(region, BoundaryCondition.constant(region, 3), 1.0, window.shifted(3)).log_z
    assert shifted == pytest.approx(base, abs=1e-12)


def test_infeasible_constraints_give_minus_infinity():
    region = box(0)
    bc = BoundaryCondition.zero(region)
    result = partition(region, bc, 1.0, HeightWindow(hmin=-1, hmax=1), SiteConstraints({(0, 0): 1}, {(0, 0): 0}))
    assert result.infeasible
    assert result.log_z == -np.inf


def test_default_window_margin():
    region = box(0)
    window = resolve_window(BoundaryCondition.zero(region), 0.5)
    assert window.as_list() == [-8, 8]
    assert HeightWindow.default_margin(4.0) == 2


def test_brute_guard(monkeypatch):
    monkeypatch.setenv("SOS_BRUTE_STATE_LIMIT", "10")
    region = box(1)
    with pytest.raises(GuardExceededError) as exc:
        partition_brute(region, BoundaryCondition.zero(region), 1.0, HeightWindow(hmin=-1, hmax=1))
    assert exc.value.reason == ErrorReason.BRUTE_GUARD
    assert exc.value.exit_code == ExitCode.GUARD


def test_transfer_guard(monkeypatch):
    monkeypatch.setenv("SOS_TRANSFER_STATE_LIMIT", "5")
    region = box(1)
    with pytest.raises(GuardExceededError) as exc:
        partition_transfer(region, BoundaryCondition.zero(region), 1.0, HeightWindow(hmin=-1, hmax=1))
    assert exc.value.reason == ErrorReason.TRANSFER_GUARD


def test_invalid_beta():
    region = box(0)
    with pytest.raises(PreconditionError):
        partition(region, BoundaryCondition.zero(region), 0.0)


# ==================== EVENTOS ====================


def test_single_site_marginals():
    region = box(0)
    bc = BoundaryCondition.zero(region)
    window = HeightWindow(hmin=-30, hmax=30)
    p0 = event_probability(region, bc, 1.0, window, constraints=SiteConstraints.pinned([(0, 0)], 0))
    p1 = event_probability(region, bc, 1.0, window, constraints=SiteConstraints.pinned([(0, 0)], 1))
    e4 = math.exp(-4)
    assert p0 == pytest.approx((1 - e4) / (1 + e4), abs=1e-12)
    assert p1 == pytest.approx(e4 * (1 - e4) / (1 + e4), abs=1e-12)


def test_predicate_and_constraint_probabilities_agree():
    region = rectangle(1, 0)
    bc = BoundaryCondition.zero(region)
    window = HeightWindow(hmin=-2, hmax=2)
    by_predicate = log_event_probability(
        region, bc, 1.0, window, predicate=lambda heights: (heights >= 0).all(axis=1)
    )
    by_constraints = log_event_probability(
        region, bc, 1.0, window, constraints=SiteConstraints.floor_on(region.order, 0)
    )
    assert by_predicate == pytest.approx(by_constraints, abs=1e-12)


def test_constrained_partition_signs():
    region = rectangle(1, 0)
    window = HeightWindow(hmin=-2, hmax=2)
    free = constrained_partition(region, 1.0, window).log_z
    signed = constrained_partition(region, 1.0, window, u_plus=[(-1, 0)], u_minus=[(1, 0)]).log_z
    assert signed < free


# ==================== FKG ====================


def test_fkg_holds_on_small_rectangle():
    region = rectangle(1, 0)
    report = verify_fkg(region, BoundaryCondition.zero(region), 1.0, HeightWindow(hmin=-2, hmax=2))
    assert report.violation_count == 0
    assert report.pairs_checked == 125 * 124 // 2
    assert report.min_slack >= 0


def test_fkg_guard(monkeypatch):
    monkeypatch.setenv("SOS_FKG_PAIR_LIMIT", "100")
    region = rectangle(1, 0)
    with pytest.raises(GuardExceededError) as exc:
        verify_fkg(region, BoundaryCondition.zero(region), 1.0, HeightWindow(hmin=-2, hmax=2))
    assert exc.value.reason == ErrorReason.FKG_GUARD


@pytest.mark.parametrize("shape", [(1, 2), (2, 2)])
@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_fkg_exhaustive_on_small_boxes(shape, beta):
    region = region_for_shape(*shape)
    report = verify_fkg(region, BoundaryCondition.zero(region), beta, HeightWindow(hmin=-2, hmax=2))
    states = 5 ** len(region)
    assert report.pairs_checked == states * (states - 1) // 2
    assert report.violation_count == 0
    assert report.violations == []


def test_positivity_beats_product_of_marginals():
    region = rectangle(1, 0)
    check = fkg_positivity_check(region, BoundaryCondition.zero(region), 1.0, HeightWindow(hmin=-2, hmax=2))
    assert check.holds
    assert check.log_p_joint >= check.log_p_product


# ==================== POTENCIALES ====================


def test_shape_helpers():
    assert is_connected([(0, 0), (1, 0)])
    assert not is_connected([(0, 0), (1, 1)])
    assert d_proxy([(0, 0)]) == 4
    assert d_proxy([(0, 0), (1, 0)]) == 6


def test_potentials_small_table():
    table = extract_potentials(2, 1.0, HeightWindow(hmin=-1, hmax=1), box_side=2)
    single = table.phi([(0, 0)])
    assert single == pytest.approx(math.log(1 + 2 * math.exp(-4)), abs=1e-12)
    assert table.max_disconnected_phi < 1e-9
    assert table.max_shift_spread < 1e-9
    assert table.decay_rate is not None
    frame = table.to_frame()
    assert {"shape_id", "size", "d_proxy", "connected", "phi", "beta", "window"} <= set(frame.columns)


def test_mobius_reconstruction_is_exact():
    table = extract_potentials(2, 1.0, HeightWindow(hmin=-1, hmax=1), box_side=2)
    assert reconstruction_residual(table, [(0, 0), (1, 0)]) == pytest.approx(0.0, abs=1e-10)




def test_mobius_reconstruction_up_to_six_sites():
    table = extract_potentials(6, 1.0, HeightWindow(hmin=-1, hmax=1), box_side=3)
    assert table.max_disconnected_phi < 1e-10
    regions = [
        [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1)],
        [(0, 0), (1, 0), (1, 1), (1, 2), (2, 2), (0, 2)],
        [(0, 0), (2, 0), (1, 1), (0, 2), (2, 2)],
        [(0, 0), (1, 0), (0, 1)],
    ]
    for sites in regions:
        assert reconstruction_residual(table, sites) == pytest.approx(0.0, abs=1e-10)


def test_connected_potentials_decay_with_beta():
    window = HeightWindow(hmin=-2, hmax=2)
    warm = extract_potentials(3, 1.0, window, box_side=3)
    cold = extract_potentials(3, 2.0, window, box_side=3)
    assert cold.max_abs_phi(3) < warm.max_abs_phi(3)
    assert cold.max_disconnected_phi < 1e-10


def test_potentials_guard():
    with pytest.raises(GuardExceededError) as exc:
        extract_potentials(7, 1.0)
    assert exc.value.reason == ErrorReason.POTENTIAL_GUARD


# ==================== ESCALERAS ====================


def test_empty_staircase_ratio_is_zero():
    result = staircase_ratio([], [], 1, 1, 1.0, margin=1)
    assert result.log_ratio == pytest.approx(0.0, abs=1e-12)
    assert result.tau_hat is None


def test_single_step_costs_free_energy():
    result = staircase_ratio([0], [0], 1, 1, 1.0, margin=1)
    assert result.log_ratio < 0
    assert result.tau_hat > 0
    assert result.window.contains(0, 1)


def test_single_step_monotonicity_gap_is_exactly_zero():
    report = check_monotonicity([0], [0], 1, [1, 2], 1.0, margin=1)
    assert [row.gap for row in report.rows] == [0.0, 0.0]
    assert report.gap_trend == "non-increasing"
    assert all(row.shift_gap is not None for row in report.rows)


def test_monotonicity_single_M_and_validation():
    report = check_monotonicity([0, 1], [0, 1], 1, [1], 1.0, margin=1)
    assert report.gap_trend == "single"
    with pytest.raises(PreconditionError) as exc:
        check_monotonicity([0], [0, 1], 1, [1], 1.0, margin=1)
    assert exc.value.reason == ErrorReason.INVALID_STAIRCASE


def test_shift_unavailable_at_top_row():
    report = check_monotonicity([1], [1], 1, [1], 1.0, margin=1)
    assert report.rows[0].shift_gap is None
    assert report.shift_trend == "unavailable"


# ==================== TENSIÓN SUPERFICIAL ====================


def test_tau_normalizer():
    assert tau_normalizer(3, "interface") == 7
    assert tau_normalizer(3, "definition") == 6
    with pytest.raises(PreconditionError):
        tau_normalizer(0, "definition")


def test_tau_zero_exact_positive_and_exploratory_flag():
    result = tau_zero_exact(1, 1.0, margin=1)
    assert result.tau_hat > 0
    assert not result.exploratory
    assert tau_zero_exact(1, 0.5, margin=1).exploratory


def test_flip_telescope_matches_direct_ratio():
    direct = tau_zero_exact(1, 1.0, margin=1)
    flips = tau_zero_flip_exact(1, 1.0, margin=1)
    assert len(flips.stages) == 7
    assert flips.total_log_ratio == pytest.approx(direct.log_ratio, abs=1e-10)


def test_flip_telescope_order_independent():
    default = tau_zero_flip_exact(1, 1.0, margin=1)
    reversed_order = [tuple(s.site) for s in default.stages][::-1]
    other = tau_zero_flip_exact(1, 1.0, margin=1, order=reversed_order)
    assert other.total_log_ratio == pytest.approx(default.total_log_ratio, abs=1e-10)


@pytest.mark.slow
def test_tau_zero_exact_L4_low_temperature():
    for beta in (1.0, 2.0):
        assert tau_zero_exact(4, beta, margin=1).tau_hat > 0




@pytest.mark.parametrize("L", [2, 3, pytest.param(4, marks=pytest.mark.slow)])
def test_tau_zero_exact_low_temperature_limit(L):
    result = tau_zero_exact(L, 6.0, margin=1)
    assert result.normalization == "interface"
    assert 0.85 <= result.tau_hat <= 1.15


def test_two_step_monotonicity_trend():
    report = check_monotonicity([0, 0], [0, 0], 1, [2, 3, 4], 2.0, margin=2, tolerance=1e-3)
    assert [row.M for row in report.rows] == [2, 3, 4]
    assert report.rows[-1].gap <= 0.05
    assert report.gap_trend == "non-increasing"


@pytest.mark.parametrize("beta", [1.0, 2.0])
def test_pinning_rate_stays_bounded(beta):
    rates = [pinning_rate(L, beta, margin=1).rate for L in (1, 2, 3)]
    assert all(0 < r < 2 for r in rates)
    assert max(rates) < 2 * min(rates)


def test_pinning_rate_sets():
    internal = pinning_rate(1, 1.0, margin=1)
    assert internal.pinned_sites == 8
    assert 0 < internal.rate
    external = pinning_rate(1, 1.0, margin=1, pin_set="external")
    assert external.pinned_sites == 12
    assert external.rate > 0


# ==================== CONTORNOS ANIDADOS ====================


def test_nested_single_square_probability():
    region = box(1)
    result = nested_contour_probability(region, 1.0, [Contour.elementary_square((0, 0))], margin=1)
    assert 0 < result.probability < 1
    assert not result.infeasible


def test_non_nested_contours_rejected():
    region = box(2)
    contours = [Contour.elementary_square((-1, 0)), Contour.elementary_square((1, 0))]
    with pytest.raises(PreconditionError) as exc:
        nested_contour_probability(region, 1.0, contours, margin=1)
    assert exc.value.reason == ErrorReason.INVALID_CONTOUR


def test_contour_factorization_identity():
    region = box(1)
    square = Contour.elementary_square((0, 0))
    result = contour_factorization(region, 1.0, [square], HeightWindow(hmin=-1, hmax=2))
    assert result.stratum_sizes == [8, 1]
    assert result.contour_length == 4
    assert result.log_factorized == pytest.approx(result.log_direct, abs=1e-10)
