# -*- coding: utf-8 -*-
"""
SOS LAB - MC: Cadenas de Markov
Barridos sistemáticos heat-bath (raster o checkerboard) sobre ℙ_Λ^τ, con piso
opcional η ≥ n en un subconjunto de sitios. Alturas sin ventana: las colas
geométricas del heat-bath hacen innecesaria la truncación.
"""

from typing import Callable, Iterable, Iterator, Mapping

import numpy as np

from backend.app.core.config import get_settings
from backend.app.core.errors import ErrorReason, PreconditionError
from backend.app.core.forensic_logger import mc_logger
from backend.app.domain.schemas.sampling import (
    CouplingReport,
    MCParams,
    Observables,
    OrderViolation,
    RandomSeed,
    SweepOrder,
)
from backend.app.services.contours.circuits import detect_high_circuit
from backend.app.services.contours.tracer import all_contours
from backend.app.services.lattice.boundary import BoundaryCondition
from backend.app.services.lattice.geometry import Region, Site
from backend.app.services.lattice.height_field import HeightConfig
from backend.app.services.mc.heat_bath import HeightLaw, sample_heights
from backend.app.services.mc.rng import CounterStream

# Sondas de usuario: config -> valor escalar registrado en Observables.probes
Probe = Callable[[HeightConfig], float]

# Desplazamientos (fila, columna) de los vecinos E, N, W, S en la grilla
NEIGHBOR_OFFSETS = ((0, 1), (1, 0), (0, -1), (-1, 0))


def resolve_order(order: SweepOrder | str, n_sites: int) -> SweepOrder:
    """auto: raster en regiones chicas; checkerboard vectorizado por encima de raster_max_sites"""
    order = SweepOrder(order)
    if order != SweepOrder.AUTO:
        return order
    limit = get_settings().raster_max_sites
    resolved = SweepOrder.RASTER if n_sites <= limit else SweepOrder.CHECKERBOARD
    if resolved == SweepOrder.CHECKERBOARD:
        mc_logger.log_default_applied("order", resolved.value, f"{n_sites} sites > raster_max_sites={limit}")
    return resolved


class ChainState:
    """
    Estado de una cadena: configuración, β, piso y contador de sweeps.
    Si hay piso, toda altura de floor_sites es ≥ floor en todo momento.
    """

    def __init__(
        self,
        region: Region,
        bc: BoundaryCondition,
        beta: float,
        seed: RandomSeed,
        floor: int | None = None,
        floor_sites: Iterable | None = None,
        order: SweepOrder = SweepOrder.AUTO,
        initial: HeightConfig | None = None,
    ):
        if beta <= 0:
            raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"beta must be > 0, got {beta}")
        self.region = region
        self.bc = bc
        self.beta = beta
        self.seed = seed
        self.floor = floor
        self.order = resolve_order(order, len(region))
        self.sweep_count = 0
        self.stream = CounterStream(seed)

        if initial is None:
            initial = HeightConfig.flat(region, bc, floor if floor is not None else 0)
        self.config = initial.copy()

        # Piso por sitio en orden raster
        n = len(region)
        self.has_floor = np.zeros(n, dtype=bool)
        if floor is not None:
            sites = region.order if floor_sites is None else floor_sites
            for site in sites:
                self.has_floor[region.index[Site(*site)]] = True
        self.floors = np.full(n, floor if floor is not None else 0, dtype=np.int64)

        values = self.config.values()
        if (values[self.has_floor] < self.floors[self.has_floor]).any():
            raise PreconditionError(
                ErrorReason.INVALID_PARAMETER, f"initial configuration violates floor {floor}"
            )

        rows, cols = self.config._cells(region.order)
        self._rows, self._cols = rows, cols
        parity = np.fromiter(((s.x1 + s.x2) % 2 for s in region.order), dtype=np.int64, count=n)
        self._colors = [np.flatnonzero(parity == c) for c in (0, 1)]

    @property
    def floor_active(self) -> bool:
        return bool(self.has_floor.any())

    def sweep(self) -> None:
        """Un barrido completo; el uniforme de cada sitio se indexa por su posición raster"""
        u = self.stream.uniforms(self.sweep_count, len(self.region))
        if self.order == SweepOrder.RASTER:
            self._raster_sweep(u)
        else:
            self._checkerboard_sweep(u)
        self.sweep_count += 1

    def _raster_sweep(self, u: np.ndarray) -> None:
        grid = self.config.grid
        for i in range(len(self.region)):
            r, c = self._rows[i], self._cols[i]
            neighbors = (grid[r, c + 1], grid[r + 1, c], grid[r, c - 1], grid[r - 1, c])
            floor = int(self.floors[i]) if self.has_floor[i] else None
            grid[r, c] = HeightLaw(neighbors, self.beta, floor).sample(u[i])

    def _checkerboard_sweep(self, u: np.ndarray) -> None:
        grid = self.config.grid
        for color in self._colors:
            if not len(color):
                continue
            r, c = self._rows[color], self._cols[color]
            neighbors = np.stack([grid[r + dr, c + dc] for dr, dc in NEIGHBOR_OFFSETS], axis=1)
            grid[r, c] = sample_heights(
                neighbors, self.beta, u[color], self.floors[color], self.has_floor[color]
            )

    def __repr__(self) -> str:
        return f"ChainState({self.region!r}, β={self.beta}, sweep={self.sweep_count}, floor={self.floor})"


def heat_bath_site(
    state: ChainState | HeightConfig,
    site,
    u: float,
    beta: float | None = None,
    floor: int | None = None,
) -> int:
    """Actualiza η(site) con la ley condicional exacta y devuelve la nueva altura"""
    config = state.config if isinstance(state, ChainState) else state
    if isinstance(state, ChainState):
        beta = state.beta if beta is None else beta
        index = state.region.index.get(Site(*site))
        if floor is None and index is not None and state.has_floor[index]:
            floor = int(state.floors[index])
    if beta is None:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, "beta is required")
    if not 0.0 <= u < 1.0:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"uniform draw must lie in [0, 1), got {u}")
    h = HeightLaw(config.neighbor_heights(site), beta, floor).sample(u)
    config.set_height(site, h)
    return h


def default_burnin(L: int | None, floor_active: bool) -> int:
    """10·L sweeps (burnin_per_L·L), duplicado con piso activo; siempre se registra"""
    burnin = get_settings().burnin_per_L * max(L or 1, 1)
    if floor_active:
        burnin *= 2
    mc_logger.log_default_applied("burnin", burnin, f"L={L} floor_active={floor_active}")
    return burnin


# ==================== CORRIDAS ====================


def run_chain(
    region: Region,
    bc: BoundaryCondition,
    beta: float,
    params: MCParams,
    floor: int | None = None,
    stream: int = 0,
    level_lines: bool = False,
    circuit: tuple[float, int] | None = None,
    probes: Mapping[str, Probe] | None = None,
    on_emit: Callable[[HeightConfig], None] | None = None,
) -> Iterator[Observables]:
    """
    Observables cada observables_every sweeps tras el burn-in.
    circuit = (δ, K) activa la detección del circuito alto en el anillo.
    on_emit recibe la configuración en cada emisión (snapshots).
    Reproducible desde (seed, stream).
    """
    state = ChainState(region, bc, beta, RandomSeed(seed=params.seed, stream=stream), floor, order=params.order)
    burnin = params.burnin if params.burnin is not None else default_burnin(region.L, state.floor_active)
    if params.sweeps <= 0:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, "sweeps must be > 0")

    mc_logger.log_event(
        "CHAIN_START",
        {"region": repr(region), "beta": beta, "floor": floor, "burnin": burnin, "sweeps": params.sweeps,
         "seed": params.seed, "stream": stream, "order": state.order.value},
    )
    for _ in range(burnin):
        state.sweep()

    center = Site(0, 0) if Site(0, 0) in region.sites else region.order[len(region) // 2]
    for k in range(1, params.sweeps + 1):
        state.sweep()
        if k % params.observables_every:
            continue
        config = state.config
        observables = Observables(
            sweep=state.sweep_count,
            mean_height=float(config.values().mean()),
            center_height=config.height(center),
            L=region.L,
            beta=beta,
        )
        if level_lines:
            observables.level_line_counts = all_contours(config).counts()
        if circuit is not None and region.L:
            delta, K = circuit
            observables.high_circuit = detect_high_circuit(config, delta, K, beta, region.L)
        if probes:
            observables.probes = {name: float(probe(config)) for name, probe in probes.items()}
        if on_emit is not None:
            on_emit(config)
        yield observables


def _ordered(low: HeightConfig, high: HeightConfig) -> bool:
    return bool((low.values() <= high.values()).all())


def coupled_run(
    region: Region,
    bc_low: BoundaryCondition,
    bc_high: BoundaryCondition,
    beta: float,
    sweeps: int,
    seed: RandomSeed,
    initial_low: HeightConfig | None = None,
    initial_high: HeightConfig | None = None,
    floor: int | None = None,
    order: SweepOrder = SweepOrder.AUTO,
) -> CouplingReport:
    """
    Dos cadenas con los mismos uniformes sitio a sitio. Reporta cada violación de
    η_low ≤ η_high, la distancia sup por sweep y el primer sweep de coalescencia.
    """
    if not bc_low.is_below(bc_high):
        raise PreconditionError(ErrorReason.UNORDERED_COUPLING, "boundary conditions are not ordered")
    low = ChainState(region, bc_low, beta, seed, floor, order=order, initial=initial_low)
    high = ChainState(region, bc_high, beta, seed, floor, order=order, initial=initial_high)
    if not _ordered(low.config, high.config):
        raise PreconditionError(ErrorReason.UNORDERED_COUPLING, "initial configurations are not ordered")

    violations: list[OrderViolation] = []
    sup_distance: list[int] = []
    coalesced_at = None
    for _ in range(sweeps):
        low.sweep()
        high.sweep()
        a, b = low.config.values(), high.config.values()
        for i in np.flatnonzero(a > b)[:100]:
            violations.append(
                OrderViolation(sweep=low.sweep_count, site=tuple(region.order[i]), low=int(a[i]), high=int(b[i]))
            )
        sup_distance.append(int(np.abs(b - a).max()))
        if coalesced_at is None and sup_distance[-1] == 0:
            coalesced_at = low.sweep_count

    if violations:
        mc_logger.log_numerical_flag("order violation in monotone coupling", {"count": len(violations)})
    return CouplingReport(
        sweeps=sweeps,
        violations=violations,
        sup_distance=sup_distance,
        identical=bool(sup_distance) and all(d == 0 for d in sup_distance),
        coalesced_at=coalesced_at,
    )
