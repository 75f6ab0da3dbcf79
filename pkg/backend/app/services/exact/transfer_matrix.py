# -*- coding: utf-8 -*-
"""
SOS LAB - EXACT: Matriz de transferencia
Z sobre rectángulos fila por fila. El vector de estado es un tensor (w,)*ancho;
el núcleo entre filas K(a, b) = exp(−β|a − b|) se contrae columna por columna,
con reescalado logarítmico en cada fila.
"""

import numpy as np

from backend.app.core.config import get_settings
from backend.app.core.errors import ErrorReason, PreconditionError, enforce_guard
from backend.app.core.forensic_logger import exact_logger
from backend.app.domain.schemas.exact import HeightWindow, PartitionResult
from backend.app.services.exact.constraints import SiteConstraints, resolve_window
from backend.app.services.lattice.boundary import BoundaryCondition
from backend.app.services.lattice.geometry import Region, Site


class RowFrame:
    """
    Vista fila/columna de un rectángulo. Si es más ancho que alto se transpone
    para que las filas recorran el lado corto.
    """

    def __init__(self, region: Region):
        self.region = region
        self.transposed = region.width > region.height
        if self.transposed:
            self.n_rows, self.n_cols = region.width, region.height
        else:
            self.n_rows, self.n_cols = region.height, region.width

    def site(self, r: int, c: int) -> Site:
        if self.transposed:
            return Site(self.region.x1_min + r, self.region.x2_min + c)
        return Site(self.region.x1_min + c, self.region.x2_min + r)


def row_state_count(region: Region, window: HeightWindow) -> int:
    return window.size ** min(region.width, region.height)


def _axis_term(values: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = len(values)
    return values.reshape(shape)


def _pair_term(matrix: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = matrix.shape[0]
    shape[axis + 1] = matrix.shape[1]
    return matrix.reshape(shape)


def _row_log_weight(
    frame: RowFrame,
    r: int,
    bc: BoundaryCondition,
    beta: float,
    heights: np.ndarray,
    constraints: SiteConstraints,
    window: HeightWindow,
) -> np.ndarray:
    """−β·(energía interna de la fila + enlaces a paredes, fondo y techo) − ∞ si prohibido"""
    n = frame.n_cols
    log_w = np.zeros((len(heights),) * n)
    for c in range(n):
        site = frame.site(r, c)
        term = np.zeros(len(heights))
        outside = [nb for nb in site.neighbors() if nb not in frame.region.sites]
        for nb in outside:
            term -= beta * np.abs(heights - bc.height(nb))
        term[~constraints.allowed_mask(site, window)] = -np.inf
        log_w = log_w + _axis_term(term, c, n)
    gradient = -beta * np.abs(heights[:, None] - heights[None, :])
    for c in range(n - 1):
        log_w = log_w + _pair_term(gradient, c, n)
    return log_w


def partition_transfer(
    region: Region,
    bc: BoundaryCondition,
    beta: float,
    window: HeightWindow | None = None,
    constraints: SiteConstraints | None = None,
) -> PartitionResult:
    """
    log Z_Λ^τ exacto en la ventana, para Λ rectangular.
    Admite paredes dependientes de la fila (escaleras) y restricciones por sitio.
    """
    if not region.is_rectangle:
        raise PreconditionError(ErrorReason.INVALID_REGION, "transfer matrix needs a rectangle")
    settings = get_settings()
    window = resolve_window(bc, beta, window)
    constraints = constraints or SiteConstraints.none()
    inside, _ = constraints.split(region.sites)

    frame = RowFrame(region)
    states = window.size ** frame.n_cols
    enforce_guard(ErrorReason.TRANSFER_GUARD, states, settings.transfer_state_limit, exact_logger)

    heights = np.arange(window.hmin, window.hmax + 1, dtype=np.int64)
    kernel = np.exp(-beta * np.abs(heights[:, None] - heights[None, :]))
    n = frame.n_cols

    def result(log_z: float) -> PartitionResult:
        return PartitionResult(
            log_z=log_z,
            infeasible=not np.isfinite(log_z),
            window=window,
            beta=beta,
            constraint_digest=inside.digest(),
            method="transfer",
            n_sites=len(region),
            states=float(states),
            guard_limits=settings.guard_limits(),
        )

    log_scale = 0.0
    vector = None
    for r in range(frame.n_rows):
        row_log = _row_log_weight(frame, r, bc, beta, heights, inside, window)
        peak = row_log.max()
        if not np.isfinite(peak):
            return result(-np.inf)

        if vector is None:
            vector = np.exp(row_log - peak)
        else:
            for c in range(n):
                vector = np.moveaxis(np.tensordot(vector, kernel, axes=([c], [0])), -1, c)
            vector *= np.exp(row_log - peak)
        log_scale += peak

        top = vector.max()
        if top <= 0:
            return result(-np.inf)
        vector /= top
        log_scale += np.log(top)

    log_z = float(log_scale + np.log(vector.sum()))
    exact_logger.logger.debug(
        f"🧮 transfer: {region!r} β={beta} ventana={window.as_list()} log Z={log_z:.12g}"
    )
    return result(log_z)
