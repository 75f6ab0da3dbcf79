# -*- coding: utf-8 -*-
import pytest

from backend.app.core.errors import ErrorReason, PreconditionError, UnboundedLevelSetError
from backend.app.services.contours.circuits import annulus_radii, detect_high_circuit, repulsion_height
from backend.app.services.contours.tracer import (
    Contour,
    DualBond,
    all_contours,
    crossing_count,
    dual_bond_between,
    is_h_contour,
    trace_level,
)
from backend.app.services.lattice.boundary import BoundaryCondition
from backend.app.services.lattice.geometry import Site, box
from backend.app.services.lattice.height_field import HeightConfig


def spike(L: int = 1, h: int = 1, site=(0, 0)) -> HeightConfig:
    region = box(L)
    return HeightConfig.from_mapping(region, BoundaryCondition.zero(region), {site: h})


# ==================== CONTORNOS GEOMÉTRICOS ====================


def test_elementary_square_geometry():
    square = Contour.elementary_square((0, 0))
    assert square.length == 4
    assert square.interior == frozenset({Site(0, 0)})
    assert Site(0, 0) in square.delta_plus
    assert {Site(1, 0), Site(-1, 0), Site(0, 1), Site(0, -1)} <= square.delta_minus


def test_square_delta_includes_non_linked_corners():
    square = Contour.elementary_square((0, 0))
    assert Site(-1, -1) in square.delta
    assert Site(1, 1) in square.delta
    assert Site(1, -1) not in square.delta


def test_contour_rejects_disconnected_bonds():
    a = DualBond.of((0, 0), (1, 0))
    b = DualBond.of((3, 3), (3, 4))
    with pytest.raises(PreconditionError) as exc:
        Contour.from_bonds([a, b], closed=False)
    assert exc.value.reason == ErrorReason.INVALID_CONTOUR


def test_contour_rejects_short_closed_cycle():
    with pytest.raises(PreconditionError):
        Contour.from_bonds([DualBond.of((0, 0), (1, 0)), DualBond.of((1, 0), (1, 1))])


def test_dual_bond_between_separates_the_pair():
    bond = dual_bond_between((0, 0), (1, 0))
    assert set(bond.separated_sites()) == {Site(0, 0), Site(1, 0)}
    bond = dual_bond_between((0, 0), (0, 1))
    assert set(bond.separated_sites()) == {Site(0, 0), Site(0, 1)}


# ==================== TRAZADO ====================


def test_flat_configuration_has_no_contours():
    region = box(2)
    report = all_contours(HeightConfig.flat(region, BoundaryCondition.zero(region)))
    assert report.contours == []
    assert report.summary_frame().empty


def test_single_spike_gives_one_unit_contour():
    config = spike()
    contours = trace_level(config, 1)
    assert len(contours) == 1
    gamma = contours[0]
    assert gamma.length == 4
    assert gamma.orientation == "up"
    assert is_h_contour(config, gamma, 1)


def test_tall_spike_nests_one_contour_per_level():
    config = spike(h=3)
    report = all_contours(config)
    assert report.counts() == {1: 1, 2: 1, 3: 1}
    assert report.total_length() == 12
    # Mismo interior: el nivel bajo es el padre
    assert report.parents[0] is None
    assert report.parents[1] == 0
    assert report.parents[2] == 1
    assert report.nesting_violations() == []


def test_each_crossed_bond_appears_once_per_level():
    config = spike(h=2)
    report = all_contours(config)
    multiplicity = report.multiplicity()
    bond = dual_bond_between((0, 0), (1, 0))
    assert multiplicity[bond] == crossing_count(config, bond) == 2


def test_negative_spike_is_oriented_down():
    config = spike(h=-1)
    contours = trace_level(config, 0)
    assert len(contours) == 1
    assert contours[0].orientation == "down"
    assert is_h_contour(config, contours[0], 0)


def test_two_separate_spikes():
    region = box(2)
    config = HeightConfig.from_mapping(region, BoundaryCondition.zero(region), {(-1, 0): 1, (1, 0): 1})
    assert [c.length for c in trace_level(config, 1)] == [4, 4]


def test_plateau_contour_length():
    region = box(2)
    plateau = {(x1, x2): 1 for x1 in (-1, 0, 1) for x2 in (-1, 0, 1)}
    config = HeightConfig.from_mapping(region, BoundaryCondition.zero(region), plateau)
    contours = trace_level(config, 1)
    assert len(contours) == 1
    assert contours[0].length == 12
    assert len(contours[0].interior) == 9


def test_h_contour_test_fails_for_wrong_level():
    config = spike()
    gamma = trace_level(config, 1)[0]
    assert not is_h_contour(config, gamma, 2)


def test_unbounded_level_set_is_rejected():
    region = box(1)
    config = HeightConfig.flat(region, BoundaryCondition.xi_step(region), 0)
    with pytest.raises(UnboundedLevelSetError):
        trace_level(config, 1)


def test_report_serialization():
    report = all_contours(spike())
    payload = report.to_dict(verbose=True)
    assert payload["1"][0]["length"] == 4
    assert len(payload["1"][0]["bonds"]) == 4
    frame = report.summary_frame()
    assert list(frame.columns) == ["level", "count", "total_length", "max_length"]


# ==================== CIRCUITOS ====================


def test_repulsion_height():
    assert repulsion_height(1, 1.0) == 0
    assert repulsion_height(100, 0.25) == 4


def test_annulus_radii_validation():
    assert annulus_radii(4, 0.5) == (2, 4)
    with pytest.raises(PreconditionError):
        annulus_radii(4, 1.5)


def test_high_circuit_on_flat_and_with_a_cut():
    region = box(4)
    bc = BoundaryCondition.zero(region)
    flat = HeightConfig.flat(region, bc, 0)
    assert detect_high_circuit(flat, 0.5, 0, 1.0, 4)

    # Un corredor de sitios bajos cruza todo el anillo
    cut = HeightConfig.from_mapping(region, bc, {(x1, 0): -1 for x1 in range(2, 5)})
    assert not detect_high_circuit(cut, 0.5, 0, 1.0, 4)
    assert detect_high_circuit(cut, 0.5, 1, 1.0, 4)
