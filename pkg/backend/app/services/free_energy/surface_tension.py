# -*- coding: utf-8 -*-
"""
SOS LAB - FREE ENERGY: Tensión superficial por volteos de borde
Los sitios de ∂Λ_L con ξ = 1 se voltean a 0 uno por uno; cada etapa estima
Z_{k+1}/Z_k = ⟨e^{−βΔℋ}⟩_k (perturbación de energía libre) y la suma con
signo da log(Z^ξ/Z).
"""

from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from backend.app.core.config import get_settings
from backend.app.core.errors import ErrorReason, PreconditionError
from backend.app.core.forensic_logger import free_energy_logger
from backend.app.domain.schemas.exact import FlipStage, FlipTelescope, HeightWindow
from backend.app.domain.schemas.sampling import (
    EstimateWithError,
    MCParams,
    RandomSeed,
    StageEstimate,
    SurfaceTensionEstimate,
)
from backend.app.services.exact.constraints import resolve_window
from backend.app.services.exact.staircase import Normalization, tau_normalizer
from backend.app.services.exact.transfer_matrix import partition_transfer
from backend.app.services.lattice.boundary import BoundaryCondition
from backend.app.services.lattice.geometry import Region, Site, box
from backend.app.services.mc.chain import ChainState, default_burnin
from backend.app.services.mc.statistics import batch_means, importance_ess

# Las cadenas de volteo usan streams disjuntos de los del telescopio de positividad
FLIP_STREAM_OFFSET = 1_000_000


def flip_order(L: int) -> list[Site]:
    """
    Sitios con ξ = 1 en ∂Λ_L (4L+3): paredes izquierda/derecha alternadas de abajo
    hacia arriba, luego el techo de izquierda a derecha.
    """
    if L < 0:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"L must be >= 0, got {L}")
    order = []
    for v in range(0, L + 1):
        order.extend([Site(-L - 1, v), Site(L + 1, v)])
    order.extend(Site(u, L + 1) for u in range(-L, L + 1))
    return order


def _validated_order(L: int, order: Sequence | None) -> list[Site]:
    default = flip_order(L)
    if order is None:
        return default
    order = [Site(*s) for s in order]
    if sorted(order) != sorted(default):
        raise PreconditionError(
            ErrorReason.INVALID_PARAMETER, "flip order must be a permutation of the ξ = 1 boundary sites"
        )
    return order


def _inner_neighbor(region: Region, y: Site) -> Site:
    inside = [x for x in y.neighbors() if x in region.sites]
    if len(inside) != 1:
        raise PreconditionError(
            ErrorReason.INVALID_PARAMETER, f"boundary site {tuple(y)} must touch exactly one region site"
        )
    return inside[0]


def _flip_stage(
    region: Region,
    bc: BoundaryCondition,
    beta: float,
    params: MCParams,
    y: Site,
    stage: int,
) -> tuple[StageEstimate, str | None]:
    settings = get_settings()
    x = _inner_neighbor(region, y)
    state = ChainState(
        region, bc, beta, RandomSeed(seed=params.seed, stream=FLIP_STREAM_OFFSET + stage), order=params.order
    )
    burnin = params.burnin if params.burnin is not None else default_burnin(region.L, False)
    for _ in range(burnin):
        state.sweep()

    log_weights: list[float] = []

    def extend(n_sweeps: int) -> None:
        for _ in range(n_sweeps):
            state.sweep()
            h = state.config.height(x)
            # y pasa de 1 a 0: Δℋ = |η(x)| − |η(x) − 1|
            log_weights.append(-beta * (abs(h) - abs(h - 1)))

    extend(params.sweeps)
    ess = importance_ess(log_weights)
    if ess < settings.min_effective_sample_size:
        free_energy_logger.log_numerical_flag(
            "low ESS, retrying with doubled sweeps", {"stage": stage, "site": list(y), "ess": ess}
        )
        extend(len(log_weights))
        ess = importance_ess(log_weights)

    flag = None
    if ess < settings.min_effective_sample_size:
        flag = f"{ErrorReason.LOW_ESS.value}: stage {stage} site {tuple(y)} ess={ess:.1f}"
        free_energy_logger.log_numerical_flag("low ESS", {"stage": stage, "site": list(y), "ess": ess})

    log_w = np.asarray(log_weights)
    log_ratio = float(logsumexp(log_w) - np.log(len(log_w)))
    weights = np.exp(log_w - log_w.max())
    mean_w, se_w = batch_means(weights, params.n_batches)
    se_log = float(se_w / mean_w) if np.isfinite(se_w) else 0.0

    return (
        StageEstimate(
            stage=stage,
            label=f"flip {tuple(y)}",
            estimate=float(np.exp(log_ratio)),
            log_value=-log_ratio,
            std_error=se_log,
            n_samples=len(log_weights),
            ess=ess,
            sweeps=burnin + len(log_weights),
            flagged=flag is not None,
        ),
        flag,
    )


def tau_zero_mc(
    L: int,
    beta: float,
    params: MCParams,
    normalization: Normalization = "interface",
    order: Sequence | None = None,
) -> SurfaceTensionEstimate:
    """
    τ̂(L) por telescopio de volteos ξ → 0 en Λ_L.
    Cada componente vale −log⟨e^{−βΔℋ}⟩_k, de modo que la suma es log(Z^ξ/Z).
    """
    region = box(L)
    flips = _validated_order(L, order)
    bc = BoundaryCondition.xi_step(region)
    free_energy_logger.log_event(
        "FLIP_TELESCOPE_START", {"L": L, "beta": beta, "stages": len(flips), "seed": params.seed}
    )

    components, flags = [], []
    for k, y in enumerate(flips):
        estimate, flag = _flip_stage(region, bc, beta, params, y, k)
        components.append(estimate)
        if flag:
            flags.append(flag)
        bc = bc.with_overrides({y: 0})

    value = float(sum(c.log_value for c in components))
    std_error = float(np.sqrt(sum(c.std_error**2 for c in components)))
    log_ratio = EstimateWithError(
        value=value,
        std_error=std_error,
        n_samples=sum(c.n_samples for c in components),
        method="boundary_flip",
        components=components,
        flags=flags,
        seed=RandomSeed(seed=params.seed, stream=FLIP_STREAM_OFFSET),
        exploratory=beta < 1,
    )
    length = tau_normalizer(L, normalization)
    result = SurfaceTensionEstimate(
        L=L,
        beta=beta,
        log_ratio=log_ratio,
        tau_hat=-value / (beta * length),
        se_tau=std_error / (beta * length),
        normalization=normalization,
    )
    free_energy_logger.log_event(
        "FLIP_TELESCOPE_DONE", {"L": L, "tau_hat": result.tau_hat, "se_tau": result.se_tau, "flags": len(flags)}
    )
    return result


def tau_zero_flip_exact(
    L: int,
    beta: float,
    window: HeightWindow | None = None,
    margin: int | None = None,
    order: Sequence | None = None,
) -> FlipTelescope:
    """Telescopio de volteos con cada razón exacta (independiente del orden de volteo)"""
    region = box(L)
    flips = _validated_order(L, order)
    bc = BoundaryCondition.xi_step(region)
    window = resolve_window(bc, beta, window, margin)

    stages = []
    log_z = partition_transfer(region, bc, beta, window).log_z
    for k, y in enumerate(flips):
        bc = bc.with_overrides({y: 0})
        next_log_z = partition_transfer(region, bc, beta, window).log_z
        stages.append(FlipStage(stage=k, site=tuple(y), log_ratio=next_log_z - log_z))
        log_z = next_log_z

    return FlipTelescope(
        L=L,
        beta=beta,
        window=window,
        stages=stages,
        total_log_ratio=-float(sum(s.log_ratio for s in stages)),
    )
