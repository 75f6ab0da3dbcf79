# -*- coding: utf-8 -*-
"""
SOS LAB - CORE CONFIGURATION
Guards de cómputo exacto, objetivos de Monte Carlo y rutas de logs.
Todo se puede sobreescribir desde el entorno (prefijo SOS_) o desde .env
"""

from pathlib import Path
from typing import Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Configuración centralizada del laboratorio SOS.
    Carga variables desde el entorno y .env (nunca hardcodeadas en los módulos)
    """

    model_config = SettingsConfigDict(
        env_prefix="SOS_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # ==================== GUARDS DE CÓMPUTO EXACTO ====================
    brute_state_limit: int = Field(
        default=10**8,
        description="Máximo de configuraciones enumeradas por partition_brute",
    )
    transfer_state_limit: int = Field(
        default=10**6,
        description="Máximo de estados de fila en la matriz de transferencia",
    )
    fkg_pair_limit: int = Field(
        default=10**7,
        description="Máximo de pares (η, η') revisados por verify_fkg",
    )
    potential_max_sites: int = Field(
        default=6,
        description="Tamaño máximo de forma V en la extracción de potenciales",
    )
    brute_chunk_size: int = Field(
        default=1 << 18,
        description="Configuraciones por bloque vectorizado en la enumeración",
    )

    # ==================== MONTE CARLO ====================
    target_relative_error: float = Field(
        default=0.02,
        description="Error relativo objetivo por etapa en el telescopio de positividad",
    )
    min_effective_sample_size: float = Field(
        default=100.0,
        description="ESS mínimo aceptado por etapa de volteo de borde",
    )
    burnin_per_L: int = Field(
        default=10, description="Burn-in por defecto: burnin_per_L · L sweeps"
    )
    max_stage_sweeps: int = Field(
        default=200_000,
        description="Tope de sweeps por etapa cuando se adapta al error objetivo",
    )
    raster_max_sites: int = Field(
        default=1024,
        description="Con orden auto, regiones más grandes se barren en checkerboard vectorizado",
    )
    default_seed: int = Field(default=20240607, ge=0, lt=2**64)

    # ==================== SYSTEM SETTINGS ====================
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(
        default="INFO", description="Nivel del handler de consola"
    )
    logs_dir_override: Path | None = Field(
        default=None,
        validation_alias="SOS_LOGS_DIR",
        description="Directorio de logs (por defecto <raíz>/logs)",
    )

    # ==================== PATHS ====================
    @property
    def project_root(self) -> Path:
        """Raíz del proyecto"""
        return Path(__file__).parent.parent.parent.parent

    @property
    def logs_dir(self) -> Path:
        """Directorio de logs forenses"""
        path = self.logs_dir_override or (self.project_root / "logs")
        path.mkdir(parents=True, exist_ok=True)
        return path

    def guard_limits(self) -> dict[str, int]:
        """Guards activos, para incrustar en cada salida"""
        return {
            "brute_state_limit": self.brute_state_limit,
            "transfer_state_limit": self.transfer_state_limit,
            "fkg_pair_limit": self.fkg_pair_limit,
            "potential_max_sites": self.potential_max_sites,
        }

    # ==================== VALIDATORS ====================
    @field_validator(
        "brute_state_limit",
        "transfer_state_limit",
        "fkg_pair_limit",
        "potential_max_sites",
        "brute_chunk_size",
        "burnin_per_L",
        "max_stage_sweeps",
        "raster_max_sites",
    )
    @classmethod
    def validate_positive(cls, v):
        if v <= 0:
            raise ValueError("Los límites deben ser positivos")
        return v

    @field_validator("target_relative_error")
    @classmethod
    def validate_relative_error(cls, v):
        if not 0 < v < 1:
            raise ValueError("El error relativo objetivo debe estar entre 0 y 1")
        return v


# Singleton global
_settings: Settings | None = None


def get_settings() -> Settings:
    """
    Obtiene la configuración global (patrón singleton)
    """
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


def reset_settings() -> None:
    """Descarta el singleton (tests y cambios de entorno en caliente)"""
    global _settings
    _settings = None
