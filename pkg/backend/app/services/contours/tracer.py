# -*- coding: utf-8 -*-
"""
SOS LAB - CONTOURS: Trazado de líneas de nivel
Contornos geométricos sobre la red dual, h-contornos, conjuntos Δ±_γ y anidamiento.

Convenciones:
- DualVertex(u, v) representa el punto (u + ½, v + ½).
- En un vértice con cuatro enlaces los pares enlazados son (N, W) y (S, E):
  ambos quedan del mismo lado de la recta a 45° que pasa por el vértice.
"""

from collections import Counter, defaultdict
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np
import pandas as pd

from backend.app.core.errors import ErrorReason, PreconditionError, UnboundedLevelSetError
from backend.app.core.forensic_logger import contours_logger
from backend.app.services.lattice.geometry import Site, external_boundary
from backend.app.services.lattice.height_field import HeightConfig


class DualVertex(NamedTuple):
    u: int
    v: int

    def corner_sites(self) -> tuple[Site, Site, Site, Site]:
        """Sitios a distancia 1/√2: SW, SE, NW, NE"""
        return (
            Site(self.u, self.v),
            Site(self.u + 1, self.v),
            Site(self.u, self.v + 1),
            Site(self.u + 1, self.v + 1),
        )


class DualBond(NamedTuple):
    """Enlace dual entre vértices vecinos (normalizado: p < q)"""

    p: DualVertex
    q: DualVertex

    @classmethod
    def of(cls, a, b) -> "DualBond":
        a, b = DualVertex(*a), DualVertex(*b)
        if abs(a.u - b.u) + abs(a.v - b.v) != 1:
            raise PreconditionError(
                ErrorReason.INVALID_CONTOUR, f"dual vertices {a} and {b} are not adjacent"
            )
        return cls(a, b) if a < b else cls(b, a)

    @property
    def horizontal(self) -> bool:
        return self.p.v == self.q.v

    def separated_sites(self) -> tuple[Site, Site]:
        """Los dos sitios a distancia ½ del enlace dual"""
        if self.horizontal:
            return Site(self.p.u + 1, self.p.v), Site(self.p.u + 1, self.p.v + 1)
        return Site(self.p.u, self.p.v + 1), Site(self.p.u + 1, self.p.v + 1)

    def other(self, w: DualVertex) -> DualVertex:
        return self.q if w == self.p else self.p

    def arm_at(self, w: DualVertex) -> str:
        """Dirección del enlace vista desde el vértice w"""
        if self.horizontal:
            return "E" if w == self.p else "W"
        return "N" if w == self.p else "S"


def dual_bond_between(x, y) -> DualBond:
    """El enlace dual que separa dos sitios vecinos"""
    x, y = Site(*x), Site(*y)
    if x > y:
        x, y = y, x
    if y == Site(x.x1 + 1, x.x2):
        return DualBond.of((x.x1, x.x2 - 1), (x.x1, x.x2))
    if y == Site(x.x1, x.x2 + 1):
        return DualBond.of((x.x1 - 1, x.x2), (x.x1, x.x2))
    raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"sites {x}, {y} are not neighbors")


LINKED_PARTNER = {"N": "W", "W": "N", "S": "E", "E": "S"}
NON_LINKED_TURNS = ({"N", "E"}, {"S", "W"})


# ==================== CONTORNO ====================


class Contour:
    """
    Contorno geométrico γ: secuencia de enlaces duales (cíclica si closed).
    orientation = "up" si el interior es el lado alto (η ≥ h), "down" si es el bajo.
    """

    def __init__(
        self,
        bonds: Sequence[DualBond],
        closed: bool = True,
        orientation: str = "up",
        level: int | None = None,
    ):
        self.bonds: tuple[DualBond, ...] = tuple(bonds)
        self.closed = closed
        self.orientation = orientation
        self.level = level

    # ==================== CONSTRUCTORES ====================

    @classmethod
    def from_bonds(
        cls, bonds: Iterable, closed: bool = True, orientation: str = "up"
    ) -> "Contour":
        """Valida las condiciones (1)-(3) de contorno geométrico"""
        seq = [b if isinstance(b, DualBond) else DualBond.of(*b) for b in bonds]
        if not seq:
            raise PreconditionError(ErrorReason.INVALID_CONTOUR, "contour has no bonds")
        if len(set(seq)) != len(seq):
            raise PreconditionError(ErrorReason.INVALID_CONTOUR, "contour repeats a bond")
        if closed and len(seq) < 4:
            raise PreconditionError(ErrorReason.INVALID_CONTOUR, "closed contour needs >= 4 bonds")

        contour = cls(seq, closed, orientation)
        turns = contour.turns()  # valida que consecutivos compartan vértice

        # Un enlace no puede entrar y salir por el mismo vértice
        n = len(seq)
        for i in range(n):
            w_in = turns[i - 1][0] if (closed or i > 0) else None
            w_out = turns[i][0] if (closed or i < n - 1) else None
            if w_in is not None and w_in == w_out:
                raise PreconditionError(
                    ErrorReason.INVALID_CONTOUR, f"bond {seq[i]} enters and leaves through {w_out}"
                )

        degree: Counter = Counter()
        for bond in seq:
            degree[bond.p] += 1
            degree[bond.q] += 1
        for w, d in degree.items():
            if d == 3:
                raise PreconditionError(
                    ErrorReason.INVALID_CONTOUR, f"three contour bonds meet at {tuple(w)}"
                )
            if d == 4:
                pairs = [{a, b} for v, a, b in turns if v == w]
                if any(LINKED_PARTNER[next(iter(pair))] not in pair for pair in pairs):
                    raise PreconditionError(
                        ErrorReason.INVALID_CONTOUR, f"non-linked pairs at four-bond vertex {tuple(w)}"
                    )
        return contour

    @classmethod
    def elementary_square(cls, x) -> "Contour":
        """El cuadrado de lado 1 alrededor del sitio x"""
        x1, x2 = Site(*x)
        sw, se = DualVertex(x1 - 1, x2 - 1), DualVertex(x1, x2 - 1)
        ne, nw = DualVertex(x1, x2), DualVertex(x1 - 1, x2)
        return cls.from_bonds(
            [DualBond.of(sw, se), DualBond.of(se, ne), DualBond.of(nw, ne), DualBond.of(sw, nw)]
        )

    # ==================== GEOMETRÍA ====================

    @property
    def length(self) -> int:
        return len(self.bonds)

    def turns(self) -> list[tuple[DualVertex, str, str]]:
        """(vértice compartido, brazo de entrada, brazo de salida) entre enlaces consecutivos"""
        n = len(self.bonds)
        pairs = range(n) if self.closed else range(n - 1)
        result = []
        for i in pairs:
            a, b = self.bonds[i], self.bonds[(i + 1) % n]
            shared = {a.p, a.q} & {b.p, b.q}
            if len(shared) != 1:
                raise PreconditionError(
                    ErrorReason.INVALID_CONTOUR, f"consecutive bonds {a} and {b} do not meet"
                )
            w = shared.pop()
            result.append((w, a.arm_at(w), b.arm_at(w)))
        return result

    @cached_property
    def interior(self) -> frozenset[Site]:
        """Λ_γ por paridad de cruces en cada fila (sólo contornos cerrados)"""
        if not self.closed:
            return frozenset()
        crossings: dict[int, list[int]] = defaultdict(list)
        for bond in self.bonds:
            if not bond.horizontal:
                crossings[bond.p.v + 1].append(bond.p.u)
        sites = []
        for row, us in crossings.items():
            us.sort()
            for left, right in zip(us[::2], us[1::2]):
                sites.extend(Site(x1, row) for x1 in range(left + 1, right + 1))
        return frozenset(sites)

    @cached_property
    def delta(self) -> frozenset[Site]:
        """Δ_γ: sitios a distancia ½ de γ y las cuatro esquinas de cada giro no enlazado"""
        sites = {s for bond in self.bonds for s in bond.separated_sites()}
        for w, arm_in, arm_out in self.turns():
            if {arm_in, arm_out} in NON_LINKED_TURNS:
                sites.update(w.corner_sites())
        return frozenset(sites)

    @cached_property
    def delta_plus(self) -> frozenset[Site]:
        return self.delta & self.interior

    @cached_property
    def delta_minus(self) -> frozenset[Site]:
        return self.delta - self.delta_plus

    def bond_set(self) -> frozenset[DualBond]:
        return frozenset(self.bonds)

    def to_dict(self, verbose: bool = False) -> dict:
        entry = {
            "length": self.length,
            "interior_area": len(self.interior),
            "orientation": self.orientation,
        }
        if verbose:
            entry["bonds"] = [[list(b.p), list(b.q)] for b in self.bonds]
        return entry

    def __eq__(self, other) -> bool:
        return isinstance(other, Contour) and self.bond_set() == other.bond_set()

    def __hash__(self) -> int:
        return hash(self.bond_set())

    def __repr__(self) -> str:
        return f"Contour(h={self.level}, |γ|={self.length}, {self.orientation})"


def canonical_cycle(bonds: list[DualBond]) -> list[DualBond]:
    """Rota para empezar en el enlace mínimo y fija el sentido (bonds[1] < bonds[-1])"""
    start = bonds.index(min(bonds))
    rotated = bonds[start:] + bonds[:start]
    if len(rotated) > 2 and rotated[-1] < rotated[1]:
        rotated = [rotated[0]] + rotated[:0:-1]
    return rotated


# ==================== TRAZADO ====================


def _level_bonds(config: HeightConfig, h: int) -> list[DualBond]:
    """Enlaces de ℬ_Λ con min(η) < h ≤ max(η), como enlaces duales"""
    grid, inside = config.grid, config.inside
    found = []

    left, right = grid[:, :-1], grid[:, 1:]
    mask = (inside[:, :-1] | inside[:, 1:]) & (np.minimum(left, right) < h) & (np.maximum(left, right) >= h)
    for r, c in zip(*np.nonzero(mask)):
        x = Site(int(c) + config.x1_origin, int(r) + config.x2_origin)
        found.append(dual_bond_between(x, Site(x.x1 + 1, x.x2)))

    low, high = grid[:-1, :], grid[1:, :]
    mask = (inside[:-1, :] | inside[1:, :]) & (np.minimum(low, high) < h) & (np.maximum(low, high) >= h)
    for r, c in zip(*np.nonzero(mask)):
        x = Site(int(c) + config.x1_origin, int(r) + config.x2_origin)
        found.append(dual_bond_between(x, Site(x.x1, x.x2 + 1)))

    return sorted(found)


def _check_bounded(config: HeightConfig, h: int) -> None:
    boundary_values = [config.bc.height(s) for s in external_boundary(config.region)]
    below = [v < h for v in boundary_values]
    if any(below) and not all(below):
        raise UnboundedLevelSetError(
            f"level {h} set touches the boundary condition support (bc spans both sides)"
        )


def trace_level(config: HeightConfig, h: int) -> list[Contour]:
    """
    Contornos cerrados del conjunto de nivel {η ≥ h}.
    Cada enlace dual que separa x, y con min < h ≤ max aparece en exactamente un contorno.
    """
    _check_bounded(config, h)
    level_bonds = _level_bonds(config, h)

    arms: dict[DualVertex, dict[str, DualBond]] = defaultdict(dict)
    for bond in level_bonds:
        arms[bond.p][bond.arm_at(bond.p)] = bond
        arms[bond.q][bond.arm_at(bond.q)] = bond

    visited: set[DualBond] = set()
    contours = []
    for start in level_bonds:
        if start in visited:
            continue
        cycle = [start]
        visited.add(start)
        bond, w = start, start.q
        while True:
            incident = arms[w]
            arm_in = bond.arm_at(w)
            if len(incident) == 2:
                arm_out = next(a for a in incident if a != arm_in)
            else:
                arm_out = LINKED_PARTNER[arm_in]
            bond = incident[arm_out]
            if bond == start:
                break
            cycle.append(bond)
            visited.add(bond)
            w = bond.other(w)

        contour = Contour(canonical_cycle(cycle), closed=True, level=h)
        inner_site = next(s for s in contour.bonds[0].separated_sites() if s in contour.interior)
        contour.orientation = "up" if config.height(inner_site) >= h else "down"
        contours.append(contour)

    return contours


def is_h_contour(config: HeightConfig, contour: Contour, h: int) -> bool:
    """
    ¿γ es un h-contorno de η? (η ≤ h−1 en Δ⁻_γ, η ≥ h en Δ⁺_γ).
    Para contornos "down" los papeles de Δ⁺ y Δ⁻ se invierten.
    """
    if not contour.closed:
        raise PreconditionError(ErrorReason.INVALID_CONTOUR, "h-contour test needs a closed contour")
    region = config.region.sites
    for bond in contour.bonds:
        if not any(s in region for s in bond.separated_sites()):
            raise PreconditionError(
                ErrorReason.INVALID_CONTOUR, f"contour bond {bond} is not dual to a bond of the region"
            )

    high, low = contour.delta_plus, contour.delta_minus
    if contour.orientation == "down":
        high, low = low, high
    return all(config.height(s) >= h for s in high) and all(config.height(s) <= h - 1 for s in low)


def crossing_count(config: HeightConfig, bond) -> int:
    """|η(x) − η(y)| para los dos sitios que separa el enlace dual"""
    bond = bond if isinstance(bond, DualBond) else DualBond.of(*bond)
    x, y = bond.separated_sites()
    return abs(config.height(x) - config.height(y))


# ==================== REPORTE DE LÍNEAS DE NIVEL ====================


class LevelLineReport:
    """
    Todas las líneas de nivel de una configuración, con el bosque de anidamiento
    por inclusión de interiores.
    """

    def __init__(self, by_level: dict[int, list[Contour]]):
        self.by_level = {h: cs for h, cs in sorted(by_level.items()) if cs}
        self.contours: list[Contour] = [c for cs in self.by_level.values() for c in cs]
        self.parents: dict[int, int | None] = self._build_forest()

    def _nesting_key(self, i: int):
        contour = self.contours[i]
        # Interiores iguales: en "up" el nivel bajo es el padre, en "down" el alto
        tie = contour.level if contour.orientation == "up" else -contour.level
        return (-len(contour.interior), tie, i)

    def _build_forest(self) -> dict[int, int | None]:
        ordered = sorted(range(len(self.contours)), key=self._nesting_key)
        parents: dict[int, int | None] = {}
        for pos, i in enumerate(ordered):
            inner = self.contours[i].interior
            parent = None
            for j in reversed(ordered[:pos]):
                if inner <= self.contours[j].interior:
                    parent = j
                    break
            parents[i] = parent
        return parents

    def children(self, i: int) -> list[int]:
        return [j for j, p in self.parents.items() if p == i]

    def counts(self) -> dict[int, int]:
        return {h: len(cs) for h, cs in self.by_level.items()}

    def total_lengths(self) -> dict[int, int]:
        return {h: sum(c.length for c in cs) for h, cs in self.by_level.items()}

    def multiplicity(self) -> Counter:
        """Cuántos contornos (de todos los niveles) pasan por cada enlace dual"""
        counter: Counter = Counter()
        for contour in self.contours:
            counter.update(contour.bonds)
        return counter

    def total_length(self) -> int:
        return sum(c.length for c in self.contours)

    def nesting_violations(self) -> list[tuple[int, int]]:
        """Pares cuyos interiores ni son disjuntos ni están anidados"""
        bad = []
        for i in range(len(self.contours)):
            for j in range(i + 1, len(self.contours)):
                a, b = self.contours[i].interior, self.contours[j].interior
                if a & b and not (a <= b or b <= a):
                    bad.append((i, j))
        return bad

    def to_dict(self, verbose: bool = False) -> dict:
        return {
            str(h): [c.to_dict(verbose) for c in cs] for h, cs in self.by_level.items()
        }

    def summary_frame(self) -> pd.DataFrame:
        rows = [
            {
                "level": h,
                "count": len(cs),
                "total_length": sum(c.length for c in cs),
                "max_length": max(c.length for c in cs),
            }
            for h, cs in self.by_level.items()
        ]
        return pd.DataFrame(rows, columns=["level", "count", "total_length", "max_length"])


def all_contours(config: HeightConfig) -> LevelLineReport:
    """Unión sobre h de trace_level, con el bosque de anidamiento"""
    values = config.values()
    boundary_values = [config.bc.height(s) for s in external_boundary(config.region)]
    lowest = int(min(values.min(), min(boundary_values)))
    highest = int(max(values.max(), max(boundary_values)))

    by_level = {h: trace_level(config, h) for h in range(lowest + 1, highest + 1)}
    report = LevelLineReport(by_level)
    contours_logger.logger.debug(
        f"🗺️ {len(report.contours)} contornos en niveles {list(report.by_level)}"
    )
    return report
