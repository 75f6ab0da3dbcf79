# -*- coding: utf-8 -*-
"""
SOS LAB - FREE ENERGY: Positividad por telescopio condicional
log ℙ(η ≥ n en Λ) = Σ_k log ℙ(η(x_k) ≥ n | η ≥ n en x_1..x_{k−1})
Cada factor es la media temporal de un indicador bajo una cadena con pisos
sólo en los sitios ya condicionados. Las etapas son independientes entre sí
(stream = índice de etapa) y sus errores se combinan en cuadratura.
"""

from typing import Literal, Sequence

import numpy as np

from backend.app.core.config import get_settings
from backend.app.core.errors import ErrorReason, NumericalFlagError, PreconditionError
from backend.app.core.forensic_logger import free_energy_logger
from backend.app.domain.schemas.exact import HeightWindow
from backend.app.domain.schemas.sampling import (
    EstimateWithError,
    MCParams,
    RandomSeed,
    StageEstimate,
)
from backend.app.services.exact.constraints import SiteConstraints, resolve_window
from backend.app.services.exact.enumerator import partition
from backend.app.services.lattice.boundary import BoundaryCondition
from backend.app.services.lattice.geometry import Region, Site
from backend.app.services.mc.chain import ChainState, default_burnin
from backend.app.services.mc.statistics import batch_means, effective_sample_size

Granularity = Literal["site", "row"]


def telescope_stages(
    region: Region, granularity: Granularity = "site", order: Sequence | None = None
) -> list[list[Site]]:
    """Bloques de sitios condicionados uno tras otro (sitios en raster u orden dado, o filas)"""
    if granularity == "row":
        rows: dict[int, list[Site]] = {}
        for site in region.order:
            rows.setdefault(site.x2, []).append(site)
        return [rows[x2] for x2 in sorted(rows)]
    if granularity != "site":
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"unknown granularity {granularity!r}")
    if order is None:
        return [[site] for site in region.order]
    sites = [Site(*s) for s in order]
    if sorted(sites) != sorted(region.order):
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, "stage order must be a permutation of the region")
    return [[site] for site in sites]


def _stage_label(block: list[Site]) -> str:
    if len(block) == 1:
        return f"site {tuple(block[0])}"
    return f"row x2={block[0].x2}"


# ==================== ETAPA MC ====================


def _run_stage(
    region: Region,
    bc: BoundaryCondition,
    beta: float,
    params: MCParams,
    floor_level: int,
    conditioned: list[Site],
    target: list[Site],
    stage: int,
) -> StageEstimate:
    settings = get_settings()
    relative_target = params.target_relative_error or settings.target_relative_error
    max_sweeps = params.max_sweeps or settings.max_stage_sweeps

    state = ChainState(
        region,
        bc,
        beta,
        RandomSeed(seed=params.seed, stream=stage),
        floor=floor_level,
        floor_sites=conditioned,
        order=params.order,
    )
    burnin = params.burnin if params.burnin is not None else default_burnin(region.L, state.floor_active)
    for _ in range(burnin):
        state.sweep()

    target_index = np.array([region.index[s] for s in target], dtype=np.int64)
    indicator: list[float] = []

    def extend(n_sweeps: int) -> None:
        for _ in range(n_sweeps):
            state.sweep()
            indicator.append(float((state.config.values()[target_index] >= floor_level).all()))

    def summary() -> tuple[float, float]:
        p, se = batch_means(indicator, params.n_batches)
        if not np.isfinite(se):
            se = np.sqrt(p * (1 - p) / len(indicator))
        return p, se

    extend(params.sweeps)
    p, se = summary()
    while (p == 0 or se / p > relative_target) and len(indicator) < max_sweeps:
        extend(min(len(indicator), max_sweeps - len(indicator)))
        p, se = summary()

    if p == 0:
        free_energy_logger.log_numerical_flag(
            "zero stage, retrying with doubled sweeps", {"stage": stage, "sweeps": len(indicator)}
        )
        extend(len(indicator))
        p, se = summary()
        if p == 0:
            raise NumericalFlagError(
                ErrorReason.ZERO_STAGE,
                f"stage {stage} ({_stage_label(target)}) saw no positive samples in {len(indicator)} sweeps",
            )

    if se / p > relative_target:
        free_energy_logger.logger.warning(
            f"⚠️ etapa {stage}: error relativo {se / p:.3g} > objetivo {relative_target} con {len(indicator)} sweeps"
        )
    return StageEstimate(
        stage=stage,
        label=_stage_label(target),
        estimate=p,
        log_value=float(np.log(p)),
        std_error=float(se / p),
        n_samples=len(indicator),
        ess=effective_sample_size(indicator, params.n_batches),
        sweeps=burnin + len(indicator),
    )


def log_positivity(
    region: Region,
    bc: BoundaryCondition,
    beta: float,
    params: MCParams,
    floor_level: int = 0,
    granularity: Granularity = "site",
    order: Sequence | None = None,
) -> EstimateWithError:
    """Estimación MC de log ℙ_Λ^τ(η(x) ≥ floor_level ∀ x ∈ Λ)"""
    stages = telescope_stages(region, granularity, order)
    free_energy_logger.log_event(
        "POSITIVITY_START",
        {"region": repr(region), "beta": beta, "stages": len(stages), "floor": floor_level,
         "granularity": granularity, "seed": params.seed},
    )

    components = []
    conditioned: list[Site] = []
    for k, block in enumerate(stages):
        components.append(_run_stage(region, bc, beta, params, floor_level, list(conditioned), block, k))
        conditioned.extend(block)

    value = float(sum(c.log_value for c in components))
    std_error = float(np.sqrt(sum(c.std_error**2 for c in components)))
    free_energy_logger.log_event(
        "POSITIVITY_DONE", {"log_p": value, "se": std_error, "stages": len(components)}
    )
    return EstimateWithError(
        value=value,
        std_error=std_error,
        n_samples=sum(c.n_samples for c in components),
        method="telescoping_rows" if granularity == "row" else "telescoping_sites",
        components=components,
        seed=RandomSeed(seed=params.seed),
        exploratory=beta < 1,
    )


# ==================== ORÁCULO EXACTO ====================


def exact_log_positivity(
    region: Region,
    bc: BoundaryCondition,
    beta: float,
    window: HeightWindow | None = None,
    margin: int | None = None,
    floor_level: int = 0,
    granularity: Granularity = "site",
    order: Sequence | None = None,
) -> EstimateWithError:
    """Mismo telescopio con cada factor condicional exacto (cociente de Z con pisos)"""
    stages = telescope_stages(region, granularity, order)
    window = resolve_window(bc, beta, window, margin, low=floor_level, high=floor_level)

    previous = partition(region, bc, beta, window)
    method = previous.method
    components = []
    conditioned: list[Site] = []
    for k, block in enumerate(stages):
        conditioned.extend(block)
        current = partition(region, bc, beta, window, SiteConstraints.floor_on(conditioned, floor_level), method)
        log_factor = current.log_z - previous.log_z
        components.append(
            StageEstimate(
                stage=k,
                label=_stage_label(block),
                estimate=float(np.exp(log_factor)),
                log_value=log_factor,
                std_error=0.0,
                n_samples=0,
                sweeps=0,
            )
        )
        previous = current

    return EstimateWithError(
        value=float(sum(c.log_value for c in components)),
        std_error=0.0,
        n_samples=0,
        method="exact",
        components=components,
        exploratory=beta < 1,
    )
