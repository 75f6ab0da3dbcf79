# -*- coding: utf-8 -*-
"""
SOS LAB - LATTICE: Condiciones de borde
Alturas τ fuera de Λ: cero, constante, escalera, escalón ξ y mapas arbitrarios.
"""

from enum import Enum
from typing import Mapping, Sequence

from backend.app.core.errors import ErrorReason, PreconditionError
from backend.app.core.forensic_logger import lattice_logger
from backend.app.services.lattice.geometry import Region, Site, external_boundary


class BCKind(str, Enum):
    ZERO = "zero"
    CONSTANT = "constant"
    STAIRCASE = "staircase"
    XI_STEP = "xi_step"
    CUSTOM = "custom"


class BoundaryCondition:
    """
    Condición de borde materializada sobre ∂Λ.
    Las lecturas fuera del soporte declarado devuelven 0 y dejan un warning
    (salvo en los tipos definidos sobre todo Z²: cero, constante y ξ).
    """

    def __init__(
        self,
        kind: BCKind,
        region: Region,
        values: Mapping[Site, int],
        params: dict | None = None,
    ):
        self.kind = kind
        self.region = region
        self.values: dict[Site, int] = {Site(*s): int(h) for s, h in values.items()}
        self.params = dict(params or {})
        self._warned: set[Site] = set()

    # ==================== FÁBRICAS ====================

    @classmethod
    def zero(cls, region: Region) -> "BoundaryCondition":
        return cls.constant(region, 0)

    @classmethod
    def constant(cls, region: Region, h: int) -> "BoundaryCondition":
        kind = BCKind.ZERO if h == 0 else BCKind.CONSTANT
        values = {s: int(h) for s in external_boundary(region)}
        return cls(kind, region, values, {"h": int(h)})

    @classmethod
    def staircase(
        cls, region: Region, a: Sequence[int], b: Sequence[int]
    ) -> "BoundaryCondition":
        """
        Escalera sobre Λ_{L,M}: altura i en la pared izquierda si a_i ≤ v < a_{i+1},
        en la derecha si b_i ≤ v < b_{i+1}; 0 abajo y n arriba.
        Requiere −M ≤ a_1 ≤ … ≤ a_n ≤ M (idem b).
        """
        L, M = region.params.get("L"), region.params.get("M")
        if L is None or M is None or not region.is_rectangle:
            raise PreconditionError(
                ErrorReason.INVALID_STAIRCASE,
                "invalid staircase: region must be a rectangle Λ_{L,M}",
            )
        a, b = [int(v) for v in a], [int(v) for v in b]
        if len(a) != len(b):
            raise PreconditionError(
                ErrorReason.INVALID_STAIRCASE,
                f"invalid staircase: len(a)={len(a)} != len(b)={len(b)}",
            )
        for name, seq in (("a", a), ("b", b)):
            if any(x > y for x, y in zip(seq, seq[1:])):
                raise PreconditionError(
                    ErrorReason.INVALID_STAIRCASE,
                    f"invalid staircase: {name} must be non-decreasing, got {seq}",
                )
            if seq and (seq[0] < -M or seq[-1] > M):
                raise PreconditionError(
                    ErrorReason.INVALID_STAIRCASE,
                    f"invalid staircase: {name} must lie in [-{M}, {M}], got {seq}",
                )

        n = len(a)
        values: dict[Site, int] = {}
        for v in range(-M, M + 1):
            values[Site(-L - 1, v)] = sum(1 for x in a if x <= v)
            values[Site(L + 1, v)] = sum(1 for x in b if x <= v)
        for u in range(-L, L + 1):
            values[Site(u, -M - 1)] = 0
            values[Site(u, M + 1)] = n
        return cls(BCKind.STAIRCASE, region, values, {"a": a, "b": b, "n": n})

    @classmethod
    def xi_step(cls, region: Region) -> "BoundaryCondition":
        """ξ(x) = 1 si x2 ≥ 0, 0 si no"""
        values = {s: int(s.x2 >= 0) for s in external_boundary(region)}
        return cls(BCKind.XI_STEP, region, values)

    @classmethod
    def custom(cls, region: Region, mapping: Mapping) -> "BoundaryCondition":
        """Mapa arbitrario sobre ∂Λ; los sitios de ∂Λ ausentes valen 0"""
        values = {s: 0 for s in external_boundary(region)}
        for s, h in mapping.items():
            values[Site(*s)] = int(h)
        return cls(BCKind.CUSTOM, region, values)

    def with_overrides(self, mapping: Mapping) -> "BoundaryCondition":
        """Copia con algunos valores reemplazados (volteos de borde)"""
        values = dict(self.values)
        values.update({Site(*s): int(h) for s, h in mapping.items()})
        return BoundaryCondition(BCKind.CUSTOM, self.region, values, {"base": self.kind.value})

    def shifted(self, c: int) -> "BoundaryCondition":
        """τ + c"""
        values = {s: h + c for s, h in self.values.items()}
        params = dict(self.params)
        if "h" in params:
            params["h"] += c
        kind = self.kind if self.kind in (BCKind.ZERO, BCKind.CONSTANT) else BCKind.CUSTOM
        if kind == BCKind.ZERO and c != 0:
            kind = BCKind.CONSTANT
        return BoundaryCondition(kind, self.region, values, params)

    # ==================== LECTURA ====================

    def height(self, site) -> int:
        site = Site(*site)
        if site in self.values:
            return self.values[site]
        if self.kind in (BCKind.ZERO, BCKind.CONSTANT):
            return self.params["h"]
        if self.kind == BCKind.XI_STEP:
            return int(site.x2 >= 0)
        if site not in self._warned:
            self._warned.add(site)
            lattice_logger.logger.warning(
                f"⚠️ BC read outside support at {tuple(site)} ({self.kind.value}); using 0"
            )
        return 0

    def min_value(self) -> int:
        return min(self.values.values())

    def max_value(self) -> int:
        return max(self.values.values())

    def is_below(self, other: "BoundaryCondition") -> bool:
        """τ ≤ τ' sobre el soporte común"""
        return all(h <= other.height(s) for s, h in self.values.items())

    def describe(self) -> dict:
        return {"kind": self.kind.value, **self.params}

    def __repr__(self) -> str:
        return f"BoundaryCondition({self.kind.value}, {self.params})"
