# -*- coding: utf-8 -*-
"""
SOS LAB - CONTOURS: Circuitos altos
Evento A(δ, K): existe un circuito de sitios vecinos que rodea Λ_{(1−δ)L}
dentro de Λ_L con η ≥ H(L) − K en cada sitio.
"""

import math

import numpy as np
from scipy import ndimage

from backend.app.core.errors import ErrorReason, PreconditionError
from backend.app.core.forensic_logger import contours_logger
from backend.app.services.lattice.height_field import HeightConfig


def repulsion_height(L: int, beta: float) -> int:
    """H(L) = ⌊log L / (4β)⌋ con logaritmo natural"""
    if L < 1 or beta <= 0:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"H(L) needs L >= 1 and beta > 0, got L={L}, beta={beta}")
    return math.floor(math.log(L) / (4 * beta))


def annulus_radii(L: int, delta: float) -> tuple[int, int]:
    """(radio interior r = ⌊(1−δ)L⌋, radio exterior L)"""
    if not 0 < delta < 1:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"delta must be in (0,1), got {delta}")
    inner = math.floor((1 - delta) * L)
    if inner >= L:
        raise PreconditionError(
            ErrorReason.INVALID_PARAMETER, f"L={L} too small for an annulus at delta={delta}"
        )
    return inner, L


def detect_high_circuit(
    config: HeightConfig, delta: float, K: int, beta: float, L: int
) -> bool:
    """
    Circuito 4-conexo de sitios con η ≥ H(L) − K en el anillo Λ_L ∖ Λ_r.
    Por dualidad existe sii ningún cluster 8-conexo del complemento {η < H(L) − K}
    une el borde interior del anillo con el exterior.
    """
    if K < 0:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"K must be >= 0, got {K}")
    inner, outer = annulus_radii(L, delta)
    threshold = repulsion_height(L, beta) - K

    size = 2 * L + 1
    heights = np.empty((size, size), dtype=np.int64)
    for x2 in range(-L, L + 1):
        for x1 in range(-L, L + 1):
            if (x1, x2) not in config.region:
                raise PreconditionError(
                    ErrorReason.INVALID_REGION, f"region must contain Λ_{L}"
                )
            heights[x2 + L, x1 + L] = config.height((x1, x2))

    coords = np.arange(-L, L + 1)
    radius = np.maximum(np.abs(coords)[None, :], np.abs(coords)[:, None])
    annulus = radius > inner
    closed = annulus & (heights < threshold)

    labels, count = ndimage.label(closed, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        return True
    touching_inner = set(np.unique(labels[(radius == inner + 1) & closed]))
    touching_outer = set(np.unique(labels[(radius == outer) & closed]))
    blocked = bool((touching_inner & touching_outer) - {0})

    contours_logger.logger.debug(
        f"🔎 A(δ={delta}, K={K}) L={L}: umbral {threshold}, clusters {count}, bloqueado={blocked}"
    )
    return not blocked
