# -*- coding: utf-8 -*-
"""
SOS LAB - EXACT: Restricciones por sitio y ventanas de altura
Pisos/techos por sitio (incluye U⁺/U⁻ y el piso η ≥ n) y la ventana por defecto.
"""

from typing import Iterable, Mapping

import numpy as np

from backend.app.core.errors import ErrorReason, PreconditionError
from backend.app.core.forensic_logger import exact_logger
from backend.app.domain.schemas.exact import HeightWindow
from backend.app.services.lattice.boundary import BoundaryCondition
from backend.app.services.lattice.geometry import Site


class SiteConstraints:
    """
    floors[x] ≤ η(x) ≤ ceilings[x]. Sitios ausentes: sin restricción.
    Piso > techo en un sitio es legal: deja el conjunto vacío (Z = 0).
    """

    def __init__(
        self,
        floors: Mapping | None = None,
        ceilings: Mapping | None = None,
    ):
        self.floors: dict[Site, int] = {Site(*s): int(h) for s, h in (floors or {}).items()}
        self.ceilings: dict[Site, int] = {Site(*s): int(h) for s, h in (ceilings or {}).items()}

    # ==================== FÁBRICAS ====================

    @classmethod
    def none(cls) -> "SiteConstraints":
        return cls()

    @classmethod
    def sign(cls, u_plus: Iterable = (), u_minus: Iterable = ()) -> "SiteConstraints":
        """η ≥ 0 en U⁺ y η ≤ 0 en U⁻"""
        return cls({s: 0 for s in u_plus}, {s: 0 for s in u_minus})

    @classmethod
    def floor_on(cls, sites: Iterable, n: int = 0) -> "SiteConstraints":
        return cls({s: n for s in sites})

    @classmethod
    def pinned(cls, sites: Iterable, h: int = 0) -> "SiteConstraints":
        sites = list(sites)
        return cls({s: h for s in sites}, {s: h for s in sites})

    def merged(self, other: "SiteConstraints") -> "SiteConstraints":
        floors = dict(self.floors)
        for s, h in other.floors.items():
            floors[s] = max(h, floors.get(s, h))
        ceilings = dict(self.ceilings)
        for s, h in other.ceilings.items():
            ceilings[s] = min(h, ceilings.get(s, h))
        return SiteConstraints(floors, ceilings)

    # ==================== CONSULTAS ====================

    def is_empty(self) -> bool:
        return not self.floors and not self.ceilings

    def sites(self) -> set[Site]:
        return set(self.floors) | set(self.ceilings)

    def bounds(self, site, window: HeightWindow) -> tuple[int, int]:
        site = Site(*site)
        lo = max(window.hmin, self.floors.get(site, window.hmin))
        hi = min(window.hmax, self.ceilings.get(site, window.hmax))
        return lo, hi

    def allowed_values(self, site, window: HeightWindow) -> np.ndarray:
        lo, hi = self.bounds(site, window)
        return np.arange(lo, hi + 1, dtype=np.int64)

    def allowed_mask(self, site, window: HeightWindow) -> np.ndarray:
        """Máscara booleana sobre window.hmin..window.hmax"""
        values = np.arange(window.hmin, window.hmax + 1)
        site = Site(*site)
        mask = np.ones(window.size, dtype=bool)
        if site in self.floors:
            mask &= values >= self.floors[site]
        if site in self.ceilings:
            mask &= values <= self.ceilings[site]
        return mask

    def admits(self, site, h: int) -> bool:
        site = Site(*site)
        return self.floors.get(site, h) <= h <= self.ceilings.get(site, h)

    def split(self, region_sites) -> tuple["SiteConstraints", "SiteConstraints"]:
        """(restricciones dentro de Λ, restricciones fuera de Λ)"""
        inside = SiteConstraints(
            {s: h for s, h in self.floors.items() if s in region_sites},
            {s: h for s, h in self.ceilings.items() if s in region_sites},
        )
        outside = SiteConstraints(
            {s: h for s, h in self.floors.items() if s not in region_sites},
            {s: h for s, h in self.ceilings.items() if s not in region_sites},
        )
        return inside, outside

    def digest(self) -> str:
        if self.is_empty():
            return "none"
        floors = ",".join(f"{s.x1}:{s.x2}>={h}" for s, h in sorted(self.floors.items()))
        ceilings = ",".join(f"{s.x1}:{s.x2}<={h}" for s, h in sorted(self.ceilings.items()))
        return f"floors[{floors}];ceilings[{ceilings}]"

    def __repr__(self) -> str:
        return f"SiteConstraints({self.digest()})"


def resolve_window(
    bc: BoundaryCondition,
    beta: float,
    window: HeightWindow | None = None,
    margin: int | None = None,
    low: int | None = None,
    high: int | None = None,
) -> HeightWindow:
    """
    Ventana explícita o [min τ − w, max τ + w] con w = max(2, ⌈4/β⌉) por defecto.
    low/high amplían el rango cubierto (p.ej. [0, n] en escaleras).
    """
    if beta <= 0:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"beta must be > 0, got {beta}")
    if window is not None:
        return window
    if margin is None:
        margin = HeightWindow.default_margin(beta)
        exact_logger.log_default_applied("window_margin", margin, f"max(2, ceil(4/beta)) at beta={beta}")
    if margin < 0:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"margin must be >= 0, got {margin}")
    lo = bc.min_value() if low is None else min(low, bc.min_value())
    hi = bc.max_value() if high is None else max(high, bc.max_value())
    return HeightWindow.around(lo, hi, margin)
