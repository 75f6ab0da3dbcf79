# -*- coding: utf-8 -*-
"""
SOS LAB - FREE ENERGY: Experimento de escala
Por cada L: −log ℙ(η ≥ 0)/(L log L), τ̂ por volteos, H(L) y la cota FKG
Σ_x log ℙ(η(x) ≥ 0). Documenta la tendencia; no se espera ver el límite
asintótico a esta escala.
"""

from typing import Sequence

import numpy as np
import pandas as pd

from backend.app.core.errors import ErrorReason, PreconditionError
from backend.app.core.forensic_logger import free_energy_logger
from backend.app.domain.schemas.exact import HeightWindow
from backend.app.domain.schemas.sampling import MCParams, RandomSeed, ScalingRow
from backend.app.services.contours.circuits import repulsion_height
from backend.app.services.free_energy.positivity import (
    Granularity,
    exact_log_positivity,
    log_positivity,
)
from backend.app.services.free_energy.surface_tension import tau_zero_mc
from backend.app.services.lattice.boundary import BoundaryCondition
from backend.app.services.lattice.geometry import Region, box
from backend.app.services.mc.chain import ChainState, default_burnin
from backend.app.services.mc.statistics import batch_means

FKG_STREAM = 2_000_000


def fkg_lower_bound(
    region: Region, bc: BoundaryCondition, beta: float, params: MCParams
) -> tuple[float, float]:
    """(Σ_x log ℙ(η(x) ≥ 0), error) desde una cadena libre; −inf si algún sitio nunca fue ≥ 0"""
    state = ChainState(region, bc, beta, RandomSeed(seed=params.seed, stream=FKG_STREAM), order=params.order)
    burnin = params.burnin if params.burnin is not None else default_burnin(region.L, False)
    for _ in range(burnin):
        state.sweep()

    indicators = np.empty((params.sweeps, len(region)), dtype=np.float64)
    for t in range(params.sweeps):
        state.sweep()
        indicators[t] = state.config.values() >= 0

    total, variance = 0.0, 0.0
    for column in indicators.T:
        p, se = batch_means(column, params.n_batches)
        if p == 0:
            return float("-inf"), 0.0
        total += np.log(p)
        if np.isfinite(se):
            variance += (se / p) ** 2
    return float(total), float(np.sqrt(variance))


def scaling_experiment(
    L_list: Sequence[int],
    beta: float,
    params: MCParams,
    granularity: Granularity = "row",
    exact_max_states: int | None = None,
    window: HeightWindow | None = None,
) -> list[ScalingRow]:
    """
    Una fila por L (ascendente, L ≥ 2). Si window.size^(2L+1) ≤ exact_max_states
    se añade el log ℙ exacto por matriz de transferencia.
    """
    L_list = [int(L) for L in L_list]
    if not L_list or any(L < 2 for L in L_list):
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"L values must be >= 2, got {L_list}")
    if L_list != sorted(L_list):
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"L_list must be ascending, got {L_list}")

    rows = []
    for L in L_list:
        region = box(L)
        bc = BoundaryCondition.zero(region)
        positivity = log_positivity(region, bc, beta, params, granularity=granularity)
        tension = tau_zero_mc(L, beta, params)
        bound, bound_se = fkg_lower_bound(region, bc, beta, params)

        exact_log_p = None
        exact_window = window or HeightWindow.around(0, 0, HeightWindow.default_margin(beta))
        if exact_max_states is not None and exact_window.size ** (2 * L + 1) <= exact_max_states:
            exact_log_p = exact_log_positivity(region, bc, beta, exact_window, granularity=granularity).value

        combined = np.sqrt(positivity.std_error**2 + bound_se**2)
        row = ScalingRow(
            L=L,
            beta=beta,
            log_p=positivity.value,
            se=positivity.std_error,
            rate=-positivity.value / (L * np.log(L)),
            tau_hat=tension.tau_hat,
            se_tau=tension.se_tau,
            H_L=repulsion_height(L, beta),
            fkg_lower_bound=bound,
            fkg_lower_bound_se=bound_se,
            fkg_consistent=bool(positivity.value >= bound - 3 * combined),
            exact_log_p=exact_log_p,
        )
        free_energy_logger.log_event("SCALING_ROW", row.model_dump())
        rows.append(row)
    return rows


def scaling_frame(rows: Sequence[ScalingRow]) -> pd.DataFrame:
    """Tabla de resultados en el orden de columnas del CSV"""
    columns = ["L", "beta", "log_p", "se", "rate", "tau_hat", "se_tau", "H_L", "fkg_lower_bound"]
    frame = pd.DataFrame([row.model_dump() for row in rows])
    extra = [c for c in frame.columns if c not in columns]
    return frame[columns + extra]
