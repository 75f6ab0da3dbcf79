# -*- coding: utf-8 -*-
"""
SOS LAB - SAMPLING SCHEMAS
Parámetros de cadenas, observables y estimaciones con error.
"""

import math
from enum import Enum
from typing import Literal

from pydantic import BaseModel, Field, computed_field, model_validator

from backend.app.core.config import get_settings


class SweepOrder(str, Enum):
    """Orden de actualización sistemática"""

    RASTER = "raster"
    CHECKERBOARD = "checkerboard"
    AUTO = "auto"  # raster hasta settings.raster_max_sites, checkerboard arriba


class RandomSeed(BaseModel):
    """(seed, stream): cada par es un flujo independiente y reproducible"""

    seed: int = Field(..., ge=0, lt=2**64)
    stream: int = Field(default=0, ge=0, lt=2**64)

    def child(self, stream: int) -> "RandomSeed":
        return RandomSeed(seed=self.seed, stream=stream)


class MCParams(BaseModel):
    """Presupuesto de una cadena o de cada etapa de un estimador"""

    sweeps: int = Field(default=2000, gt=0, description="Sweeps medidos tras el burn-in")
    burnin: int | None = Field(None, ge=0, description="None → 10·L (×2 con piso)")
    observables_every: int = Field(default=1, gt=0)
    order: SweepOrder = Field(default=SweepOrder.AUTO)
    seed: int = Field(default_factory=lambda: get_settings().default_seed, ge=0, lt=2**64)
    target_relative_error: float | None = Field(
        None, description="None → settings.target_relative_error"
    )
    max_sweeps: int | None = Field(None, gt=0, description="None → settings.max_stage_sweeps")
    n_batches: int = Field(default=20, ge=2, description="Lotes para el error estándar")


class Observables(BaseModel):
    """Medición de una configuración de la cadena"""

    sweep: int
    mean_height: float
    center_height: int
    level_line_counts: dict[int, int] = Field(default_factory=dict)
    high_circuit: bool | None = None
    L: int | None = None
    beta: float
    probes: dict[str, float] = Field(default_factory=dict)

    @computed_field
    @property
    def H_of_L(self) -> int | None:
        """H(L) = ⌊log L/(4β)⌋, recalculada siempre desde (L, β)"""
        if self.L is None or self.L < 1:
            return None
        return math.floor(math.log(self.L) / (4 * self.beta))


class OrderViolation(BaseModel):
    sweep: int
    site: tuple[int, int]
    low: int
    high: int


class CouplingReport(BaseModel):
    """Acoplamiento monótono: violaciones del orden y distancia sup por sweep"""

    sweeps: int
    violations: list[OrderViolation] = Field(default_factory=list)
    sup_distance: list[int] = Field(default_factory=list)
    identical: bool
    coalesced_at: int | None = Field(None, description="Primer sweep con trayectorias iguales")


class StageEstimate(BaseModel):
    """Una etapa de un telescopio (condicional o volteo)"""

    stage: int
    label: str
    estimate: float = Field(..., description="Probabilidad condicional o razón ⟨e^{−βΔℋ}⟩")
    log_value: float
    std_error: float = Field(..., ge=0, description="Error estándar en escala log")
    n_samples: int
    ess: float | None = None
    sweeps: int
    flagged: bool = False


class EstimateWithError(BaseModel):
    value: float
    std_error: float = Field(..., ge=0)
    n_samples: int
    method: Literal["telescoping_sites", "telescoping_rows", "boundary_flip", "exact"]
    components: list[StageEstimate] = Field(default_factory=list)
    flags: list[str] = Field(default_factory=list)
    seed: RandomSeed | None = None
    exploratory: bool = False

    @model_validator(mode="after")
    def validate_components(self):
        if self.components:
            total = sum(c.log_value for c in self.components)
            if not math.isclose(total, self.value, rel_tol=1e-9, abs_tol=1e-9):
                raise ValueError("stage log values must add up to the estimate")
        return self


class SurfaceTensionEstimate(BaseModel):
    """τ̂ por perturbación de energía libre sobre volteos de borde"""

    L: int
    beta: float
    log_ratio: EstimateWithError = Field(..., description="log Z^ξ − log Z")
    tau_hat: float
    se_tau: float
    normalization: Literal["interface", "definition"]


class ScalingRow(BaseModel):
    L: int
    beta: float
    log_p: float
    se: float
    rate: float = Field(..., description="−log_p / (L log L)")
    tau_hat: float
    se_tau: float
    H_L: int
    fkg_lower_bound: float = Field(..., description="Σ_x log ℙ(η(x) ≥ 0)")
    fkg_lower_bound_se: float
    fkg_consistent: bool
    exact_log_p: float | None = None
