# -*- coding: utf-8 -*-
"""
SOS LAB - FORENSIC LOGGER
Logging forense de cada cómputo: guards, defaults aplicados y banderas numéricas.
"Ningún default es silencioso. Cada número sabe de dónde vino."
"""

import json
import logging
from datetime import datetime, timezone
from typing import Any

from backend.app.core.config import get_settings


class ForensicLogger:
    """
    Logger especializado por módulo del laboratorio.
    Archivo diario en logs_dir + consola; los eventos estructurados van en JSON.
    """

    def __init__(self, module_name: str):
        self.module_name = module_name
        settings = get_settings()

        self.logger = logging.getLogger(f"SOS.{module_name}")
        self.logger.setLevel(logging.DEBUG)

        # Un mismo módulo puede importarse varias veces (tests, recargas)
        if self.logger.handlers:
            return

        log_file = (
            settings.logs_dir
            / f"{module_name.lower()}_{datetime.now().strftime('%Y%m%d')}.log"
        )
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setLevel(logging.DEBUG)

        console_handler = logging.StreamHandler()
        console_handler.setLevel(getattr(logging, settings.log_level))

        formatter = logging.Formatter(
            "[%(asctime)s] [%(name)s] [%(levelname)s] %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )
        file_handler.setFormatter(formatter)
        console_handler.setFormatter(formatter)

        self.logger.addHandler(file_handler)
        self.logger.addHandler(console_handler)

    def log_event(self, event_type: str, data: dict[str, Any]) -> None:
        """
        Registra un evento con contexto completo (parámetros, guard, resultado).
        """
        log_entry = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "event_type": event_type,
            "module": self.module_name,
            **data,
        }
        self.logger.info(
            f"EVENT: {json.dumps(log_entry, ensure_ascii=False, default=str)}"
        )

    def log_guard_rejection(self, guard: str, requested: float, limit: float) -> None:
        """Log específico para cómputos rechazados por un guard"""
        self.logger.warning(
            f"GUARD_REJECTION: {guard} | Requested: {requested:.6g} | Limit: {limit:.6g}"
        )

    def log_default_applied(self, parameter: str, value: Any, reason: str) -> None:
        """Los defaults se anuncian, nunca se aplican en silencio"""
        self.logger.info(f"DEFAULT: {parameter}={value} | {reason}")

    def log_numerical_flag(self, flag: str, context: dict[str, Any]) -> None:
        """Bandera numérica (etapa vacía, ESS bajo, etc.)"""
        self.logger.warning(
            f"NUMERICAL_FLAG: {flag} | Context: {json.dumps(context, default=str)}"
        )


# Instancias globales para cada módulo
lattice_logger = ForensicLogger("LATTICE")
contours_logger = ForensicLogger("CONTOURS")
exact_logger = ForensicLogger("EXACT")
mc_logger = ForensicLogger("MC")
free_energy_logger = ForensicLogger("FREE_ENERGY")
runner_logger = ForensicLogger("RUNNER")
