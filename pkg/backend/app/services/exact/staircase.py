# -*- coding: utf-8 -*-
"""
SOS LAB - EXACT: Escaleras, tensión superficial y eventos de contorno
Razones log Z(·)/Z_Λ con ventana compartida, tendencia en M de la
monotonicidad, τ̂ a escala de escritorio, anclaje del borde y la
probabilidad (y factorización) de contornos anidados.
"""

from typing import Literal, Sequence

import numpy as np

from backend.app.core.errors import ErrorReason, PreconditionError
from backend.app.core.forensic_logger import exact_logger
from backend.app.domain.schemas.exact import (
    ContourFactorization,
    HeightWindow,
    MonotonicityReport,
    MonotonicityRow,
    NestedContourResult,
    PinningResult,
    StaircaseRatio,
    SurfaceTensionResult,
)
from backend.app.services.contours.tracer import Contour
from backend.app.services.exact.constraints import SiteConstraints, resolve_window
from backend.app.services.exact.enumerator import partition
from backend.app.services.exact.transfer_matrix import partition_transfer
from backend.app.services.lattice.boundary import BoundaryCondition
from backend.app.services.lattice.geometry import (
    Region,
    RegionKind,
    boundaries,
    box,
    build_region,
    external_boundary,
    rectangle,
)

Normalization = Literal["interface", "definition"]


# ==================== ESCALERAS ====================


def staircase_ratio(
    a: Sequence[int],
    b: Sequence[int],
    L: int,
    M: int,
    beta: float,
    window: HeightWindow | None = None,
    margin: int | None = None,
) -> StaircaseRatio:
    """log Z(a; b; L, M) − log Z_{Λ_{L,M}} (borde cero), misma ventana para ambos"""
    region = rectangle(L, M)
    stairs = BoundaryCondition.staircase(region, a, b)
    n = stairs.params["n"]
    window = resolve_window(stairs, beta, window, margin, low=0, high=n)
    if not window.contains(0, n):
        raise PreconditionError(
            ErrorReason.INVALID_PARAMETER, f"window {window.as_list()} must contain [0, {n}]"
        )

    log_z_stairs = partition_transfer(region, stairs, beta, window).log_z
    log_z_zero = partition_transfer(region, BoundaryCondition.zero(region), beta, window).log_z
    log_ratio = log_z_stairs - log_z_zero
    tau_hat = -log_ratio / (beta * n * (2 * L + 1)) if n else None
    return StaircaseRatio(
        a=list(a),
        b=list(b),
        L=L,
        M=M,
        beta=beta,
        window=window,
        log_z_staircase=log_z_stairs,
        log_z_zero=log_z_zero,
        log_ratio=log_ratio,
        tau_hat=tau_hat,
    )


def check_monotonicity(
    a: Sequence[int],
    b: Sequence[int],
    L: int,
    M_list: Sequence[int],
    beta: float,
    window: HeightWindow | None = None,
    margin: int | None = None,
    tolerance: float = 1e-9,
) -> MonotonicityReport:
    """
    Δ(M) = log[Z(a;b)/Z] − Σ_i log[Z(a_i;b_i)/Z] para cada M, y el shift gap
    log Z(a';b') − log Z(a;b) con el último escalón subido una fila.
    Se reporta la tendencia; a M finito no se afirma ninguna desigualdad.
    """
    a, b = [int(v) for v in a], [int(v) for v in b]
    if not a or len(a) != len(b):
        raise PreconditionError(
            ErrorReason.INVALID_STAIRCASE,
            f"invalid staircase: need 1 <= len(a) == len(b), got {len(a)} and {len(b)}",
        )
    if not M_list:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, "M_list must be nonempty")
    M_list = sorted(int(m) for m in M_list)
    n = len(a)

    if window is None:
        if margin is None:
            margin = HeightWindow.default_margin(beta)
            exact_logger.log_default_applied("window_margin", margin, "monotonicity sweep")
        window = HeightWindow.around(0, n, margin)

    cache: dict[tuple, float] = {}

    def ratio(a_: list[int], b_: list[int], M: int) -> float:
        key = (tuple(a_), tuple(b_), M)
        if key not in cache:
            cache[key] = staircase_ratio(a_, b_, L, M, beta, window).log_ratio
        return cache[key]

    rows = []
    for M in M_list:
        joint = ratio(a, b, M)
        singles = sum(ratio([ai], [bi], M) for ai, bi in zip(a, b))
        shift_gap = None
        a_up, b_up = a[:-1] + [a[-1] + 1], b[:-1] + [b[-1] + 1]
        if a_up[-1] <= M and b_up[-1] <= M:
            shift_gap = ratio(a_up, b_up, M) - joint
        rows.append(
            MonotonicityRow(
                M=M,
                joint_log_ratio=joint,
                singles_log_ratio_sum=singles,
                gap=joint - singles,
                shift_gap=shift_gap,
            )
        )
        exact_logger.logger.info(f"📐 M={M} Δ={joint - singles:.6g} shift={shift_gap}")

    gaps = [r.gap for r in rows]
    if len(gaps) == 1:
        gap_trend = "single"
    elif all(later - earlier <= tolerance for earlier, later in zip(gaps, gaps[1:])):
        gap_trend = "non-increasing"
    else:
        gap_trend = "mixed"

    shifts = [r.shift_gap for r in rows if r.shift_gap is not None]
    if not shifts:
        shift_trend = "unavailable"
    elif all(s >= -tolerance for s in shifts):
        shift_trend = "non-negative"
    else:
        shift_trend = "mixed"

    report = MonotonicityReport(
        a=a,
        b=b,
        L=L,
        beta=beta,
        window=window,
        rows=rows,
        gap_sign_at_largest_M="nonpositive" if gaps[-1] <= tolerance else "positive",
        gap_trend=gap_trend,
        shift_trend=shift_trend,
        tolerance=tolerance,
    )
    exact_logger.log_event(
        "MONOTONICITY",
        {"n": n, "L": L, "M": M_list, "gap_trend": gap_trend, "shift_trend": shift_trend},
    )
    return report


# ==================== TENSIÓN SUPERFICIAL ====================


def tau_normalizer(L: int, normalization: Normalization) -> int:
    """Longitud de la interfaz: 2L+1 (estado fundamental) o 2L"""
    if normalization == "interface":
        return 2 * L + 1
    if normalization == "definition":
        if L < 1:
            raise PreconditionError(ErrorReason.INVALID_PARAMETER, "definition normalization needs L >= 1")
        return 2 * L
    raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"unknown normalization {normalization!r}")


def tau_zero_exact(
    L: int,
    beta: float,
    window: HeightWindow | None = None,
    margin: int | None = None,
    normalization: Normalization = "interface",
) -> SurfaceTensionResult:
    """τ̂(L) = −log(Z^ξ/Z)/(β·longitud) en Λ_L por matriz de transferencia"""
    region = box(L)
    xi = BoundaryCondition.xi_step(region)
    window = resolve_window(xi, beta, window, margin)
    if not window.contains(0, 1):
        raise PreconditionError(
            ErrorReason.INVALID_PARAMETER, f"window {window.as_list()} must contain [0, 1]"
        )

    log_z_xi = partition_transfer(region, xi, beta, window).log_z
    log_z_zero = partition_transfer(region, BoundaryCondition.zero(region), beta, window).log_z
    log_ratio = log_z_xi - log_z_zero
    tau_hat = -log_ratio / (beta * tau_normalizer(L, normalization))
    exploratory = beta < 1
    if exploratory:
        exact_logger.logger.warning(f"⚠️ β={beta} < 1: τ̂ marcado como exploratorio")

    exact_logger.log_event("TAU_EXACT", {"L": L, "beta": beta, "tau_hat": tau_hat})
    return SurfaceTensionResult(
        L=L,
        beta=beta,
        window=window,
        log_z_xi=log_z_xi,
        log_z_zero=log_z_zero,
        log_ratio=log_ratio,
        tau_hat=tau_hat,
        normalization=normalization,
        exploratory=exploratory,
    )


# ==================== ANCLAJE ====================


def pinning_rate(
    L: int,
    beta: float,
    window: HeightWindow | None = None,
    margin: int | None = None,
    pin_set: Literal["internal", "external"] = "internal",
) -> PinningResult:
    """
    −(1/L)·log ℙ(η = 0 en el conjunto de anclaje), borde cero:
    internal → ∂_*Λ_L dentro de Λ_L; external → ∂Λ_L dentro de Λ_{L+1}.
    """
    if L < 1:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"pinning rate needs L >= 1, got {L}")
    if pin_set == "internal":
        region = box(L)
        _, pinned = boundaries(region)
    elif pin_set == "external":
        region = box(L + 1)
        pinned = external_boundary(box(L))
    else:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"unknown pin set {pin_set!r}")

    bc = BoundaryCondition.zero(region)
    window = resolve_window(bc, beta, window, margin)
    pinned_z = partition_transfer(region, bc, beta, window, SiteConstraints.pinned(pinned, 0))
    free_z = partition_transfer(region, bc, beta, window)
    log_p = pinned_z.log_z - free_z.log_z
    return PinningResult(
        L=L,
        beta=beta,
        window=window,
        pin_set=pin_set,
        pinned_sites=len(pinned),
        log_probability=log_p,
        rate=-log_p / L,
    )


# ==================== CONTORNOS ANIDADOS ====================


def _nested_constraints(contours: Sequence[Contour]) -> SiteConstraints:
    """η ≥ i en Δ⁺_{γ_i}, η ≤ i−1 en Δ⁻_{γ_i}"""
    constraints = SiteConstraints.none()
    for i, gamma in enumerate(contours, start=1):
        if not gamma.closed:
            raise PreconditionError(ErrorReason.INVALID_CONTOUR, f"contour {i} is not closed")
        layer = SiteConstraints(
            {s: i for s in gamma.delta_plus}, {s: i - 1 for s in gamma.delta_minus}
        )
        constraints = constraints.merged(layer)
    for i, (outer, inner) in enumerate(zip(contours, contours[1:]), start=1):
        if not inner.interior <= outer.interior:
            raise PreconditionError(
                ErrorReason.INVALID_CONTOUR, f"contour {i + 1} is not nested inside contour {i}"
            )
    return constraints


def _outside_feasible(constraints: SiteConstraints, region: Region, bc: BoundaryCondition) -> bool:
    _, outside = constraints.split(region.sites)
    return all(outside.admits(s, bc.height(s)) for s in outside.sites())


def nested_contour_probability(
    region: Region,
    beta: float,
    contours: Sequence[Contour],
    window: HeightWindow | None = None,
    margin: int | None = None,
) -> NestedContourResult:
    """ℙ_Λ(∩_i 𝒞_{γ_i, i}) exacto con borde cero: cociente de Z con y sin restricciones Δ±"""
    if not contours:
        raise PreconditionError(ErrorReason.INVALID_CONTOUR, "need at least one contour")
    bc = BoundaryCondition.zero(region)
    constraints = _nested_constraints(contours)
    window = resolve_window(bc, beta, window, margin, low=0, high=len(contours))
    method = "transfer" if region.is_rectangle else "brute"

    if not _outside_feasible(constraints, region, bc):
        exact_logger.logger.info("🔒 restricciones Δ± incompatibles con el borde: ℙ = 0")
        log_p = -np.inf
    else:
        constrained = partition(region, bc, beta, window, constraints, method)
        free = partition(region, bc, beta, window, None, constrained.method)
        method = constrained.method
        log_p = constrained.log_z - free.log_z

    return NestedContourResult(
        n_contours=len(contours),
        log_probability=log_p,
        probability=float(np.exp(log_p)),
        infeasible=not np.isfinite(log_p),
        method=method,
    )


def contour_factorization(
    region: Region,
    beta: float,
    contours: Sequence[Contour],
    window: HeightWindow,
) -> ContourFactorization:
    """
    Z_Λ(∩ 𝒞_{γ_i,i}) = e^{−βΣ|γ_i|} ∏_j Z_{S_j}, con S_j = Λ_{γ_{j−1}} ∖ Λ_{γ_j}
    y las restricciones de cada estrato desplazadas en −(j−1).
    Cada enlace de γ_i debe separar S_{i+1} de S_i (o de ∂Λ si i = 1).
    """
    bc = BoundaryCondition.zero(region)
    constraints = _nested_constraints(contours)
    n = len(contours)

    interiors = [frozenset(region.sites)] + [g.interior for g in contours] + [frozenset()]
    if not interiors[1] <= region.sites:
        raise PreconditionError(ErrorReason.INVALID_CONTOUR, "outer contour leaves the region")
    strata = [interiors[j - 1] - interiors[j] for j in range(1, n + 2)]
    stratum_of = {s: j for j, stratum in enumerate(strata, start=1) for s in stratum}

    for i, gamma in enumerate(contours, start=1):
        for bond in gamma.bonds:
            s, t = bond.separated_sites()
            inner, outer = (s, t) if s in gamma.interior else (t, s)
            outer_ok = stratum_of.get(outer) == i or (i == 1 and outer not in region.sites)
            if stratum_of.get(inner) != i + 1 or not outer_ok:
                raise PreconditionError(
                    ErrorReason.INVALID_CONTOUR,
                    f"bond {bond} of contour {i} does not separate consecutive strata",
                )

    direct = partition(region, bc, beta, window, constraints).log_z
    if not _outside_feasible(constraints, region, bc):
        direct = -np.inf

    length = sum(g.length for g in contours)
    factorized = -beta * length
    for j, stratum in enumerate(strata, start=1):
        if not stratum:
            continue
        sub = build_region(RegionKind.CUSTOM, sites=stratum)
        shifted = SiteConstraints(
            {s: h - (j - 1) for s, h in constraints.floors.items() if s in stratum},
            {s: h - (j - 1) for s, h in constraints.ceilings.items() if s in stratum},
        )
        factorized += partition(
            sub, BoundaryCondition.zero(sub), beta, window.shifted(-(j - 1)), shifted
        ).log_z
    if not _outside_feasible(constraints, region, bc):
        factorized = -np.inf

    return ContourFactorization(
        n_contours=n,
        log_direct=direct,
        log_factorized=factorized,
        stratum_sizes=[len(s) for s in strata],
        contour_length=length,
    )
