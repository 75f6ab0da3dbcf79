# -*- coding: utf-8 -*-
"""
SOS LAB - EXACT: Enumeración exhaustiva
Suma sobre todas las configuraciones de la ventana en bloques vectorizados
(numpy), acumulando en dominio log con scipy.special.logsumexp.
También: probabilidades de eventos, condición FKG de Holley y su consecuencia
ℙ(η ≥ 0 en Λ) ≥ ∏_x ℙ(η(x) ≥ 0).
"""

from typing import Callable, Iterator

import numpy as np
from scipy.special import logsumexp

from backend.app.core.config import get_settings
from backend.app.core.errors import ErrorReason, PreconditionError, enforce_guard
from backend.app.core.forensic_logger import exact_logger
from backend.app.domain.schemas.exact import (
    FKGReport,
    FKGViolation,
    HeightWindow,
    PartitionResult,
    PositivityFKGCheck,
)
from backend.app.services.exact.constraints import SiteConstraints, resolve_window
from backend.app.services.exact.transfer_matrix import partition_transfer, row_state_count
from backend.app.services.lattice.boundary import BoundaryCondition
from backend.app.services.lattice.geometry import Region
from backend.app.services.lattice.height_field import bond_table, energies

# predicate(heights[chunk, n_sites]) -> bool[chunk]; columnas en orden raster
Predicate = Callable[[np.ndarray], np.ndarray]

MAX_REPORTED_VIOLATIONS = 100


# ==================== ENUMERACIÓN ====================


def _value_lists(region: Region, window: HeightWindow, constraints: SiteConstraints) -> list[np.ndarray]:
    return [constraints.allowed_values(site, window) for site in region.order]


def state_count(region: Region, window: HeightWindow, constraints: SiteConstraints | None = None) -> int:
    constraints = constraints or SiteConstraints.none()
    count = 1
    for values in _value_lists(region, window, constraints):
        count *= len(values)
    return count


def iter_configurations(value_lists: list[np.ndarray], chunk: int) -> Iterator[np.ndarray]:
    """Bloques (chunk, n) de configuraciones en orden mixto-radix (el primer sitio varía más lento)"""
    sizes = [len(v) for v in value_lists]
    total = int(np.prod(sizes, dtype=np.int64))
    for start in range(0, total, chunk):
        index = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = np.unravel_index(index, sizes)
        yield np.stack([values[d] for values, d in zip(value_lists, digits)], axis=1)


def _log_sums(
    region: Region,
    bc: BoundaryCondition,
    beta: float,
    window: HeightWindow,
    constraints: SiteConstraints,
    predicate: Predicate | None = None,
) -> tuple[float, float, int]:
    """(log Σ e^{−βℋ}, log Σ_{predicate} e^{−βℋ}, estados enumerados)"""
    settings = get_settings()
    value_lists = _value_lists(region, window, constraints)
    states = int(np.prod([len(v) for v in value_lists], dtype=np.float64))
    enforce_guard(ErrorReason.BRUTE_GUARD, states, settings.brute_state_limit, exact_logger)
    if states == 0:
        return -np.inf, -np.inf, 0

    table = bond_table(region, bc)
    totals, events = [], []
    for heights in iter_configurations(value_lists, settings.brute_chunk_size):
        log_w = -beta * energies(heights, table)
        totals.append(logsumexp(log_w))
        if predicate is not None:
            mask = np.asarray(predicate(heights), dtype=bool)
            events.append(logsumexp(log_w[mask]) if mask.any() else -np.inf)

    log_total = float(logsumexp(totals))
    log_event = float(logsumexp(events)) if events else -np.inf
    return log_total, log_event, states


def partition_brute(
    region: Region,
    bc: BoundaryCondition,
    beta: float,
    window: HeightWindow | None = None,
    constraints: SiteConstraints | None = None,
    predicate: Predicate | None = None,
) -> PartitionResult:
    """
    log Z = log Σ_η exp(−βℋ) sobre la ventana (y restricciones, y predicado si se da).
    Conjunto vacío → log_z = −inf con infeasible=True.
    """
    window = resolve_window(bc, beta, window)
    constraints = constraints or SiteConstraints.none()
    inside, _ = constraints.split(region.sites)

    log_total, log_event, states = _log_sums(region, bc, beta, window, inside, predicate)
    log_z = log_event if predicate is not None else log_total
    digest = inside.digest() + ("; predicate" if predicate is not None else "")

    exact_logger.logger.debug(f"🧮 brute: {region!r} β={beta} estados={states} log Z={log_z:.12g}")
    return PartitionResult(
        log_z=log_z,
        infeasible=not np.isfinite(log_z),
        window=window,
        beta=beta,
        constraint_digest=digest,
        method="brute",
        n_sites=len(region),
        states=float(states),
        guard_limits=get_settings().guard_limits(),
    )


def choose_method(region: Region, window: HeightWindow) -> str:
    if region.is_rectangle and row_state_count(region, window) <= get_settings().transfer_state_limit:
        return "transfer"
    return "brute"


def partition(
    region: Region,
    bc: BoundaryCondition,
    beta: float,
    window: HeightWindow | None = None,
    constraints: SiteConstraints | None = None,
    method: str = "auto",
) -> PartitionResult:
    """Despacho: transfer si Λ es rectangular y cabe en el guard, brute si no"""
    window = resolve_window(bc, beta, window)
    if method == "auto":
        method = choose_method(region, window)
    if method == "transfer":
        return partition_transfer(region, bc, beta, window, constraints)
    if method == "brute":
        return partition_brute(region, bc, beta, window, constraints)
    raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"unknown method {method!r}")


def constrained_partition(
    region: Region,
    beta: float,
    window: HeightWindow | None = None,
    u_plus=(),
    u_minus=(),
    bc: BoundaryCondition | None = None,
    method: str = "auto",
) -> PartitionResult:
    """Z_{Λ,U⁺,U⁻}: borde cero, η ≥ 0 en U⁺ y η ≤ 0 en U⁻"""
    bc = bc or BoundaryCondition.zero(region)
    return partition(region, bc, beta, window, SiteConstraints.sign(u_plus, u_minus), method)


# ==================== EVENTOS ====================


def log_event_probability(
    region: Region,
    bc: BoundaryCondition,
    beta: float,
    window: HeightWindow | None = None,
    predicate: Predicate | None = None,
    constraints: SiteConstraints | None = None,
    method: str = "auto",
) -> float:
    """
    log ℙ_Λ^τ(evento) exacto en la ventana.
    Con predicado se enumera; con restricciones por sitio puede usarse transfer.
    """
    window = resolve_window(bc, beta, window)
    if predicate is None and constraints is None:
        return 0.0
    if predicate is not None:
        constraints = constraints or SiteConstraints.none()
        inside, _ = constraints.split(region.sites)
        log_total, _, _ = _log_sums(region, bc, beta, window, SiteConstraints.none())
        _, log_event, _ = _log_sums(region, bc, beta, window, inside, predicate)
        return log_event - log_total

    numerator = partition(region, bc, beta, window, constraints, method)
    denominator = partition(region, bc, beta, window, None, numerator.method)
    return numerator.log_z - denominator.log_z


def event_probability(
    region: Region,
    bc: BoundaryCondition,
    beta: float,
    window: HeightWindow | None = None,
    predicate: Predicate | None = None,
    constraints: SiteConstraints | None = None,
    method: str = "auto",
) -> float:
    """ℙ_Λ^τ(evento) dentro de la ventana"""
    return float(np.exp(log_event_probability(region, bc, beta, window, predicate, constraints, method)))


# ==================== FKG ====================


def verify_fkg(
    region: Region,
    bc: BoundaryCondition,
    beta: float,
    window: HeightWindow | None = None,
) -> FKGReport:
    """
    Condición de Holley para todos los pares: ℋ(η∨η') + ℋ(η∧η') ≤ ℋ(η) + ℋ(η'),
    comparada en enteros exactos. La holgura se reporta en unidades de log ℙ.
    """
    settings = get_settings()
    window = resolve_window(bc, beta, window)
    n = len(region)
    w = window.size
    states = w**n
    pairs = states * (states - 1) // 2
    enforce_guard(ErrorReason.FKG_GUARD, pairs, settings.fkg_pair_limit, exact_logger)

    value_lists = _value_lists(region, window, SiteConstraints.none())
    heights = next(iter_configurations(value_lists, states))
    table = bond_table(region, bc)
    energy = energies(heights, table)
    strides = w ** np.arange(n - 1, -1, -1, dtype=np.int64)

    violations: list[FKGViolation] = []
    max_gap, min_gap = None, None
    block = max(1, 10**6 // max(states * n, 1))
    for start in range(0, states, block):
        rows = np.arange(start, min(start + block, states))
        left = heights[rows][:, None, :]
        join = np.maximum(left, heights[None, :, :])
        meet = np.minimum(left, heights[None, :, :])
        e_join = energy[((join - window.hmin) * strides).sum(axis=-1)]
        e_meet = energy[((meet - window.hmin) * strides).sum(axis=-1)]
        gap = e_join + e_meet - energy[rows][:, None] - energy[None, :]

        upper = np.arange(states)[None, :] > rows[:, None]
        if not upper.any():
            continue
        block_gaps = gap[upper]
        max_gap = block_gaps.max() if max_gap is None else max(max_gap, block_gaps.max())
        min_gap = block_gaps.min() if min_gap is None else min(min_gap, block_gaps.min())

        for i, j in zip(*np.nonzero(upper & (gap > 0))):
            if len(violations) >= MAX_REPORTED_VIOLATIONS:
                break
            violations.append(
                FKGViolation(
                    eta=heights[rows[i]].tolist(),
                    eta_prime=heights[j].tolist(),
                    energy_gap=int(gap[i, j]),
                )
            )

    max_slack = -beta * float(min_gap) if min_gap is not None else 0.0
    min_slack = -beta * float(max_gap) if max_gap is not None else 0.0
    exact_logger.log_event(
        "FKG_CHECK",
        {"n_sites": n, "beta": beta, "pairs": pairs, "violations": len(violations)},
    )
    return FKGReport(
        n_sites=n,
        beta=beta,
        window=window,
        states=states,
        pairs_checked=pairs,
        violations=violations,
        max_slack=max_slack,
        min_slack=min_slack,
        guard_limits=settings.guard_limits(),
    )


def fkg_positivity_check(
    region: Region,
    bc: BoundaryCondition,
    beta: float,
    window: HeightWindow | None = None,
) -> PositivityFKGCheck:
    """log ℙ(η ≥ 0 en Λ) contra Σ_x log ℙ(η(x) ≥ 0), ambos exactos"""
    settings = get_settings()
    window = resolve_window(bc, beta, window)
    value_lists = _value_lists(region, window, SiteConstraints.none())
    states = int(np.prod([len(v) for v in value_lists], dtype=np.float64))
    enforce_guard(ErrorReason.BRUTE_GUARD, states, settings.brute_state_limit, exact_logger)

    table = bond_table(region, bc)
    totals, joints, marginals = [], [], []
    for heights in iter_configurations(value_lists, settings.brute_chunk_size):
        log_w = -beta * energies(heights, table)
        totals.append(logsumexp(log_w))
        positive = heights >= 0
        all_positive = positive.all(axis=1)
        joints.append(logsumexp(log_w[all_positive]) if all_positive.any() else -np.inf)
        marginals.append(logsumexp(np.where(positive, log_w[:, None], -np.inf), axis=0))

    log_total = logsumexp(totals)
    log_joint = float(logsumexp(joints) - log_total)
    log_product = float((logsumexp(np.vstack(marginals), axis=0) - log_total).sum())
    return PositivityFKGCheck(
        log_p_joint=log_joint,
        log_p_product=log_product,
        holds=log_joint >= log_product - 1e-12,
    )
