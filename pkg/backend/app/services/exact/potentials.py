# -*- coding: utf-8 -*-
"""
SOS LAB - EXACT: Potenciales de cluster por inversión de Möbius
φ₀(V) = Σ_{W ⊆ V} (−1)^{|V∖W|} log Z_W  (borde cero en cada W)
Luego Σ_{V ⊆ Λ} φ₀(V) = log Z_Λ es una identidad exacta.
"""

from collections import defaultdict
from itertools import combinations

import numpy as np

from backend.app.core.config import get_settings
from backend.app.core.errors import ErrorReason, enforce_guard
from backend.app.core.forensic_logger import exact_logger
from backend.app.domain.schemas.exact import (
    HeightWindow,
    PotentialEntry,
    PotentialTable,
    canonical_shape,
)
from backend.app.services.exact.enumerator import partition_brute
from backend.app.services.lattice.boundary import BoundaryCondition
from backend.app.services.lattice.geometry import RegionKind, build_region


# ==================== GEOMETRÍA DE FORMAS ====================


def is_connected(sites) -> bool:
    """Conexión por enlaces de vecinos más cercanos"""
    sites = set(map(tuple, sites))
    if not sites:
        return False
    start = next(iter(sites))
    seen, stack = {start}, [start]
    while stack:
        x1, x2 = stack.pop()
        for nb in ((x1 + 1, x2), (x1 - 1, x2), (x1, x2 + 1), (x1, x2 - 1)):
            if nb in sites and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(sites)


def d_proxy(sites) -> int:
    """Perímetro del rectángulo envolvente mínimo: 2(ancho + alto)"""
    xs = [s[0] for s in sites]
    ys = [s[1] for s in sites]
    return 2 * ((max(xs) - min(xs) + 1) + (max(ys) - min(ys) + 1))


def diameter(sites) -> int:
    sites = list(sites)
    return max(abs(a[0] - b[0]) + abs(a[1] - b[1]) for a in sites for b in sites)


# ==================== EXTRACCIÓN ====================


class LogZCache:
    """log Z_W con borde cero, calculado una vez por conjunto W (no por forma)"""

    def __init__(self, beta: float, window: HeightWindow):
        self.beta = beta
        self.window = window
        self._values: dict[frozenset, float] = {frozenset(): 0.0}

    def __call__(self, sites) -> float:
        key = frozenset(map(tuple, sites))
        if key not in self._values:
            region = build_region(RegionKind.CUSTOM, sites=key)
            bc = BoundaryCondition.zero(region)
            self._values[key] = partition_brute(region, bc, self.beta, self.window).log_z
        return self._values[key]


def mobius_phi(sites, log_z: LogZCache) -> float:
    sites = tuple(map(tuple, sites))
    total = 0.0
    for k in range(len(sites) + 1):
        sign = -1.0 if (len(sites) - k) % 2 else 1.0
        for subset in combinations(sites, k):
            total += sign * log_z(subset)
    return total


def extract_potentials(
    max_sites: int,
    beta: float,
    window: HeightWindow | None = None,
    box_side: int = 3,
) -> PotentialTable:
    """
    φ₀ para todas las formas de hasta max_sites sitios dentro de una caja
    box_side × box_side. Cada traslación se calcula por separado para medir
    la invariancia por traslación.
    """
    settings = get_settings()
    enforce_guard(ErrorReason.POTENTIAL_GUARD, max_sites, settings.potential_max_sites, exact_logger)
    if window is None:
        margin = HeightWindow.default_margin(beta)
        window = HeightWindow.around(0, 0, margin)
        exact_logger.log_default_applied("window_margin", margin, "potential extraction")

    cells = [(i, j) for j in range(box_side) for i in range(box_side)]
    log_z = LogZCache(beta, window)

    by_shape: dict[tuple, list[float]] = defaultdict(list)
    for k in range(1, max_sites + 1):
        for subset in combinations(cells, k):
            key = tuple(canonical_shape(subset))
            by_shape[key].append(mobius_phi(subset, log_z))

    entries = []
    for key, values in sorted(by_shape.items(), key=lambda kv: (len(kv[0]), kv[0])):
        entries.append(
            PotentialEntry(
                shape=list(key),
                size=len(key),
                diameter=diameter(key),
                d_proxy=d_proxy(key),
                connected=is_connected(key),
                phi=values[0],
                placements=len(values),
                shift_spread=float(max(values) - min(values)),
            )
        )

    disconnected = [abs(e.phi) for e in entries if not e.connected]
    decay_rate = _fit_decay(entries)
    table = PotentialTable(
        entries=entries,
        beta=beta,
        window=window,
        max_sites=max_sites,
        box_side=box_side,
        max_disconnected_phi=max(disconnected) if disconnected else 0.0,
        max_shift_spread=max(e.shift_spread for e in entries),
        decay_rate=decay_rate,
        guard_limits=settings.guard_limits(),
    )
    exact_logger.log_event(
        "POTENTIALS_EXTRACTED",
        {
            "beta": beta,
            "shapes": len(entries),
            "max_disconnected_phi": table.max_disconnected_phi,
            "decay_rate": decay_rate,
        },
    )
    return table


def _fit_decay(entries: list[PotentialEntry]) -> float | None:
    """−pendiente del ajuste lineal log|φ| ~ d_proxy sobre formas conexas"""
    points = [(e.d_proxy, np.log(abs(e.phi))) for e in entries if e.connected and e.phi != 0]
    if len({d for d, _ in points}) < 2:
        return None
    d, log_phi = np.array(points).T
    slope, _ = np.polyfit(d, log_phi, 1)
    return float(-slope)


def reconstruction_residual(table: PotentialTable, sites) -> float:
    """Σ_{∅≠V⊆Λ} φ₀(V) − log Z_Λ (cero por construcción de Möbius)"""
    sites = [tuple(s) for s in sites]
    lookup = {tuple(e.shape): e.phi for e in table.entries}
    total = 0.0
    for k in range(1, len(sites) + 1):
        for subset in combinations(sites, k):
            total += lookup[tuple(canonical_shape(subset))]
    region = build_region(RegionKind.CUSTOM, sites=sites)
    log_z = partition_brute(region, BoundaryCondition.zero(region), table.beta, table.window).log_z
    return total - log_z
