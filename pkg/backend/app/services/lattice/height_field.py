# -*- coding: utf-8 -*-
"""
SOS LAB - LATTICE: Campo de alturas
Configuración η sobre Λ con lecturas de borde resueltas por τ, y el Hamiltoniano
SOS ℋ(η) = Σ_{xy ∈ ℬ_Λ} |η(x) − η(y)| en aritmética entera exacta.
"""

from typing import Iterable, Mapping

import numpy as np

from backend.app.core.errors import ErrorReason, PreconditionError
from backend.app.services.lattice.boundary import BoundaryCondition
from backend.app.services.lattice.geometry import Region, Site, external_boundary


class HeightConfig:
    """
    η ∈ Ω_Λ^τ guardada en una grilla entera con un marco de un sitio alrededor
    de la caja envolvente de Λ. Fila = x2, columna = x1.
    El marco contiene τ sobre ∂Λ; las celdas que no son ni Λ ni ∂Λ no entran en
    ningún enlace de ℬ_Λ.
    """

    def __init__(self, region: Region, bc: BoundaryCondition, grid: np.ndarray | None = None):
        self.region = region
        self.bc = bc
        self.x1_origin = region.x1_min - 1
        self.x2_origin = region.x2_min - 1
        shape = (region.height + 2, region.width + 2)

        self.inside = np.zeros(shape, dtype=bool)
        rows, cols = self._cells(region.order)
        self.inside[rows, cols] = True

        if grid is None:
            grid = np.zeros(shape, dtype=np.int64)
            self.grid = grid
            boundary_sites = [s for s in external_boundary(region) if self._in_frame(s)]
            if boundary_sites:
                b_rows, b_cols = self._cells(boundary_sites)
                grid[b_rows, b_cols] = [bc.height(s) for s in boundary_sites]
        self.grid = np.asarray(grid, dtype=np.int64)

    # ==================== CONSTRUCTORES ====================

    @classmethod
    def flat(cls, region: Region, bc: BoundaryCondition, h: int = 0) -> "HeightConfig":
        config = cls(region, bc)
        config.grid[config.inside] = h
        return config

    @classmethod
    def from_values(
        cls, region: Region, bc: BoundaryCondition, values: Iterable[int]
    ) -> "HeightConfig":
        """Valores en orden raster de la región"""
        values = np.asarray(list(values), dtype=np.int64)
        if values.shape != (len(region),):
            raise PreconditionError(
                ErrorReason.INVALID_PARAMETER,
                f"expected {len(region)} heights, got {values.shape}",
            )
        config = cls(region, bc)
        config.grid[config.inside] = values
        return config

    @classmethod
    def from_mapping(
        cls, region: Region, bc: BoundaryCondition, heights: Mapping, default: int = 0
    ) -> "HeightConfig":
        config = cls.flat(region, bc, default)
        for site, h in heights.items():
            config.set_height(site, h)
        return config

    # ==================== ACCESO ====================

    def _cells(self, sites) -> tuple[np.ndarray, np.ndarray]:
        sites = list(sites)
        rows = np.fromiter((s[1] - self.x2_origin for s in sites), dtype=np.int64, count=len(sites))
        cols = np.fromiter((s[0] - self.x1_origin for s in sites), dtype=np.int64, count=len(sites))
        return rows, cols

    def _in_frame(self, site) -> bool:
        r, c = site[1] - self.x2_origin, site[0] - self.x1_origin
        return 0 <= r < self.grid.shape[0] and 0 <= c < self.grid.shape[1]

    def height(self, site) -> int:
        site = Site(*site)
        if site in self.region.sites:
            return int(self.grid[site.x2 - self.x2_origin, site.x1 - self.x1_origin])
        return self.bc.height(site)

    def set_height(self, site, h: int) -> None:
        site = Site(*site)
        if site not in self.region.sites:
            raise PreconditionError(
                ErrorReason.SITE_OUTSIDE_REGION, f"site {tuple(site)} is not in the region"
            )
        self.grid[site.x2 - self.x2_origin, site.x1 - self.x1_origin] = h

    def values(self) -> np.ndarray:
        """Alturas de Λ en orden raster (copia)"""
        return self.grid[self.inside].copy()

    def as_dict(self) -> dict[Site, int]:
        return dict(zip(self.region.order, self.values().tolist()))

    def copy(self) -> "HeightConfig":
        return HeightConfig(self.region, self.bc, self.grid.copy())

    def neighbor_heights(self, site) -> list[int]:
        return [self.height(nb) for nb in Site(*site).neighbors()]

    # ==================== ENERGÍA ====================

    def bond_gradients(self) -> tuple[np.ndarray, np.ndarray]:
        """
        |∇η| sobre enlaces horizontales y verticales de la grilla, enmascarados a ℬ_Λ.
        """
        horizontal = np.abs(np.diff(self.grid, axis=1))
        vertical = np.abs(np.diff(self.grid, axis=0))
        horizontal_mask = self.inside[:, 1:] | self.inside[:, :-1]
        vertical_mask = self.inside[1:, :] | self.inside[:-1, :]
        return horizontal * horizontal_mask, vertical * vertical_mask

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, HeightConfig)
            and self.region == other.region
            and np.array_equal(self.values(), other.values())
        )

    def __repr__(self) -> str:
        return f"HeightConfig({self.region!r}, bc={self.bc.kind.value})"


def energy(config: HeightConfig) -> int:
    """ℋ_Λ^τ(η), entero exacto"""
    horizontal, vertical = config.bond_gradients()
    return int(horizontal.sum() + vertical.sum())


def energy_delta(config: HeightConfig, site, new_height: int) -> int:
    """ℋ(η con η(site) = new_height) − ℋ(η), tocando sólo los 4 enlaces del sitio"""
    site = Site(*site)
    if site not in config.region.sites:
        raise PreconditionError(
            ErrorReason.SITE_OUTSIDE_REGION, f"site {tuple(site)} is not in the region"
        )
    old = config.height(site)
    return sum(abs(new_height - h) - abs(old - h) for h in config.neighbor_heights(site))


def bond_table(region: Region, bc: BoundaryCondition) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Estructura de enlaces para evaluación vectorizada sobre muchos η:
    (pares internos (i, j) en índices raster, sitio i de cada enlace de borde, altura τ).
    """
    internal, boundary_sites, boundary_heights = [], [], []
    for i, site in enumerate(region.order):
        for nb in site.neighbors():
            j = region.index.get(nb)
            if j is None:
                boundary_sites.append(i)
                boundary_heights.append(bc.height(nb))
            elif i < j:
                internal.append((i, j))
    internal = np.asarray(internal, dtype=np.int64).reshape(-1, 2)
    return (
        internal,
        np.asarray(boundary_sites, dtype=np.int64),
        np.asarray(boundary_heights, dtype=np.int64),
    )


def energies(heights: np.ndarray, table) -> np.ndarray:
    """ℋ para un bloque de configuraciones (filas = configuraciones en orden raster)"""
    internal, boundary_sites, boundary_heights = table
    total = np.abs(heights[:, internal[:, 0]] - heights[:, internal[:, 1]]).sum(axis=1)
    total += np.abs(heights[:, boundary_sites] - boundary_heights).sum(axis=1)
    return total
