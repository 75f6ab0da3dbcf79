# -*- coding: utf-8 -*-
"""
SOS LAB - EXPERIMENT SCHEMAS
Configuración efectiva de cada corrida (se incrusta en cada archivo de salida).
"""

from enum import Enum
from typing import Any

from pydantic import BaseModel, Field


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class ExperimentConfig(BaseModel):
    """Todo lo que determina una salida: comando, parámetros y defaults aplicados"""

    command: str
    parameters: dict[str, Any] = Field(default_factory=dict)
    defaults_applied: list[str] = Field(
        default_factory=list, description="Parámetros que tomaron su valor por defecto"
    )

    def echo(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "parameters": dict(sorted(self.parameters.items())),
            "defaults_applied": sorted(self.defaults_applied),
        }
