# -*- coding: utf-8 -*-
"""
SOS LAB - EXACT SCHEMAS
Resultados de los cómputos exactos: funciones de partición, FKG, potenciales,
escaleras y tensión superficial a escala de escritorio.
"""

import math
from typing import Literal

import pandas as pd
from pydantic import BaseModel, Field, computed_field, model_validator


# ==================== VENTANA DE ALTURAS ====================


class HeightWindow(BaseModel):
    """
    Truncación finita de Z para los cómputos exactos.
    Debe contener todos los valores de borde, ampliados por un margen w.
    """

    hmin: int = Field(..., description="Altura mínima admitida")
    hmax: int = Field(..., description="Altura máxima admitida")

    @model_validator(mode="after")
    def validate_order(self):
        if self.hmin > self.hmax:
            raise ValueError(f"window needs hmin <= hmax, got [{self.hmin}, {self.hmax}]")
        return self

    @classmethod
    def around(cls, low: int, high: int, margin: int) -> "HeightWindow":
        """[low − w, high + w]"""
        if margin < 0:
            raise ValueError("window margin must be >= 0")
        return cls(hmin=low - margin, hmax=high + margin)

    @staticmethod
    def default_margin(beta: float) -> int:
        """w = max(2, ⌈4/β⌉)"""
        return max(2, math.ceil(4 / beta))

    @property
    def size(self) -> int:
        return self.hmax - self.hmin + 1

    def contains(self, low: int, high: int) -> bool:
        return self.hmin <= low and high <= self.hmax

    def shifted(self, c: int) -> "HeightWindow":
        return HeightWindow(hmin=self.hmin + c, hmax=self.hmax + c)

    def as_list(self) -> list[int]:
        return [self.hmin, self.hmax]


# ==================== FUNCIÓN DE PARTICIÓN ====================


class PartitionResult(BaseModel):
    """log Z en la ventana dada, con restricciones y método registrados"""

    log_z: float = Field(..., description="log natural de Z; −inf si es infactible")
    infeasible: bool = Field(default=False, description="Conjunto de restricciones vacío")
    window: HeightWindow
    beta: float = Field(..., gt=0)
    constraint_digest: str = Field(default="none", description="Resumen de pisos/techos")
    method: Literal["brute", "transfer"]
    n_sites: int
    states: float = Field(..., description="Estados enumerados (o de fila en transfer)")
    guard_limits: dict[str, int] = Field(default_factory=dict)


# ==================== FKG ====================


class FKGViolation(BaseModel):
    eta: list[int]
    eta_prime: list[int]
    energy_gap: int = Field(..., description="ℋ(∨)+ℋ(∧) − ℋ(η) − ℋ(η') (> 0 viola)")


class FKGReport(BaseModel):
    """Condición de red de Holley sobre todos los pares de la ventana"""

    n_sites: int
    beta: float
    window: HeightWindow
    states: int
    pairs_checked: int
    violations: list[FKGViolation] = Field(default_factory=list)
    max_slack: float = Field(..., description="max β·(ℋ(η)+ℋ(η') − ℋ(∨) − ℋ(∧))")
    min_slack: float = Field(..., description="min de la misma holgura (≥ 0 esperado)")
    guard_limits: dict[str, int] = Field(default_factory=dict)

    @computed_field
    @property
    def violation_count(self) -> int:
        return len(self.violations)


class PositivityFKGCheck(BaseModel):
    """ℙ(η ≥ 0 en Λ) contra ∏_x ℙ(η(x) ≥ 0)"""

    log_p_joint: float
    log_p_product: float
    holds: bool


# ==================== POTENCIALES ====================


class PotentialEntry(BaseModel):
    shape: list[tuple[int, int]] = Field(..., description="Forma canónica (mínimo lexicográfico)")
    size: int
    diameter: int = Field(..., description="Máxima distancia L1 entre sitios de V")
    d_proxy: int = Field(..., description="Perímetro del rectángulo envolvente de V")
    connected: bool = Field(..., description="Conexa por enlaces de vecinos")
    phi: float
    placements: int = Field(..., description="Traslaciones de la forma dentro de la caja")
    shift_spread: float = Field(..., description="max − min de φ entre traslaciones")


class PotentialTable(BaseModel):
    """φ₀(V) por inversión de Möbius de log Z_W con borde cero"""

    entries: list[PotentialEntry]
    beta: float
    window: HeightWindow
    max_sites: int
    box_side: int
    max_disconnected_phi: float
    max_shift_spread: float
    decay_rate: float | None = Field(None, description="−pendiente de log|φ| vs d_proxy")
    guard_limits: dict[str, int] = Field(default_factory=dict)

    def phi(self, shape) -> float:
        key = canonical_shape(shape)
        for entry in self.entries:
            if entry.shape == key:
                return entry.phi
        raise KeyError(f"shape {shape} not in table")

    def max_abs_phi(self, size: int, connected: bool = True) -> float:
        values = [abs(e.phi) for e in self.entries if e.size == size and e.connected == connected]
        return max(values) if values else 0.0

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "shape_id": ";".join(f"{a},{b}" for a, b in e.shape),
                "size": e.size,
                "d_proxy": e.d_proxy,
                "connected": e.connected,
                "phi": e.phi,
                "beta": self.beta,
                "window": f"{self.window.hmin}:{self.window.hmax}",
            }
            for e in self.entries
        ]
        return pd.DataFrame(rows)


def canonical_shape(sites) -> list[tuple[int, int]]:
    """Traslada para que min x1 = min x2 = 0 y ordena (representante lexicográfico)"""
    sites = [tuple(int(c) for c in s) for s in sites]
    m1 = min(s[0] for s in sites)
    m2 = min(s[1] for s in sites)
    return sorted((s[0] - m1, s[1] - m2) for s in sites)


# ==================== ESCALERAS Y MONOTONÍA ====================


class StaircaseRatio(BaseModel):
    """log Z(a; b; L, M) − log Z_Λ con ventana compartida"""

    a: list[int]
    b: list[int]
    L: int
    M: int
    beta: float
    window: HeightWindow
    log_z_staircase: float
    log_z_zero: float
    log_ratio: float
    tau_hat: float | None = Field(None, description="−log_ratio/(β·n·(2L+1)) si n ≥ 1")


class MonotonicityRow(BaseModel):
    M: int
    joint_log_ratio: float
    singles_log_ratio_sum: float
    gap: float = Field(..., description="Δ(M) = conjunta − Σ individuales")
    shift_gap: float | None = Field(
        None, description="log Z(a'; b') − log Z(a; b) con el último escalón subido"
    )


class MonotonicityReport(BaseModel):
    a: list[int]
    b: list[int]
    L: int
    beta: float
    window: HeightWindow
    rows: list[MonotonicityRow]
    gap_sign_at_largest_M: Literal["nonpositive", "positive"]
    gap_trend: Literal["non-increasing", "mixed", "single"]
    shift_trend: Literal["non-negative", "mixed", "unavailable"]
    tolerance: float


# ==================== TENSIÓN SUPERFICIAL Y ANCLAJE ====================


class SurfaceTensionResult(BaseModel):
    """τ̂ a L finito a partir de Z^ξ / Z"""

    L: int
    beta: float
    window: HeightWindow
    log_z_xi: float
    log_z_zero: float
    log_ratio: float
    tau_hat: float
    normalization: Literal["interface", "definition"]
    exploratory: bool = Field(default=False, description="β < 1: fuera del régimen de baja temperatura")


class PinningResult(BaseModel):
    """−(1/L) log ℙ(η = 0 en el conjunto de anclaje)"""

    L: int
    beta: float
    window: HeightWindow
    pin_set: Literal["internal", "external"]
    pinned_sites: int
    log_probability: float
    rate: float


class NestedContourResult(BaseModel):
    """ℙ(∩ 𝒞_{γ_i, i}) exacto"""

    n_contours: int
    log_probability: float
    probability: float
    infeasible: bool
    method: Literal["brute", "transfer"]


class FlipStage(BaseModel):
    """Un volteo de borde del telescopio ξ → 0"""

    stage: int
    site: tuple[int, int]
    log_ratio: float = Field(..., description="log Z_{k+1} − log Z_k")


class FlipTelescope(BaseModel):
    L: int
    beta: float
    window: HeightWindow
    stages: list[FlipStage]
    total_log_ratio: float = Field(..., description="log Z^ξ − log Z (suma de etapas con signo)")


class ContourFactorization(BaseModel):
    """Z(γ₁…γₙ) calculada directo y como e^{−βΣ|γ_i|} ∏ Z_{S_i} por estratos"""

    n_contours: int
    log_direct: float
    log_factorized: float
    stratum_sizes: list[int]
    contour_length: int
