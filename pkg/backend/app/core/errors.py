# -*- coding: utf-8 -*-
"""
SOS LAB - ERRORES TIPADOS
Cada error lleva un motivo legible por máquina y un código de salida de la CLI.
"""

from enum import Enum, IntEnum


class ExitCode(IntEnum):
    """Códigos de salida del runner"""

    OK = 0
    PRECONDITION = 2
    GUARD = 3
    NUMERICAL_FLAG = 4


class ErrorReason(str, Enum):
    """Motivos de rechazo (van al stderr en JSON)"""

    INVALID_REGION = "INVALID_REGION"
    INVALID_STAIRCASE = "INVALID_STAIRCASE"
    INVALID_PARAMETER = "INVALID_PARAMETER"
    INVALID_CONTOUR = "INVALID_CONTOUR"
    SITE_OUTSIDE_REGION = "SITE_OUTSIDE_REGION"
    UNBOUNDED_LEVEL_SET = "UNBOUNDED_LEVEL_SET"
    UNORDERED_COUPLING = "UNORDERED_COUPLING"
    BRUTE_GUARD = "BRUTE_GUARD"
    TRANSFER_GUARD = "TRANSFER_GUARD"
    FKG_GUARD = "FKG_GUARD"
    POTENTIAL_GUARD = "POTENTIAL_GUARD"
    ZERO_STAGE = "ZERO_STAGE"
    LOW_ESS = "LOW_ESS"


class SOSLabError(Exception):
    """Base de todos los errores del laboratorio"""

    exit_code: ExitCode = ExitCode.PRECONDITION

    def __init__(self, reason: ErrorReason, message: str):
        super().__init__(message)
        self.reason = reason
        self.message = message

    def to_dict(self) -> dict[str, str | int]:
        return {
            "error": self.reason.value,
            "message": self.message,
            "exit_code": int(self.exit_code),
        }


class PreconditionError(SOSLabError):
    """Parámetros fuera del dominio de la operación"""

    exit_code = ExitCode.PRECONDITION


class UnboundedLevelSetError(PreconditionError):
    """El conjunto de nivel toca el soporte de la condición de borde"""

    def __init__(self, message: str):
        super().__init__(ErrorReason.UNBOUNDED_LEVEL_SET, message)


class GuardExceededError(SOSLabError):
    """El cómputo pedido excede un guard de tamaño"""

    exit_code = ExitCode.GUARD

    def __init__(self, reason: ErrorReason, message: str, requested: float, limit: float):
        super().__init__(reason, message)
        self.requested = requested
        self.limit = limit


class NumericalFlagError(SOSLabError):
    """Estimador degenerado (etapa sin muestras positivas, ESS insuficiente)"""

    exit_code = ExitCode.NUMERICAL_FLAG


def enforce_guard(
    reason: ErrorReason, requested: float, limit: float, logger=None
) -> None:
    """
    Lanza GuardExceededError si requested > limit.
    El rechazo queda en el log forense del módulo que lo pidió.
    """
    if requested <= limit:
        return
    if logger is not None:
        logger.log_guard_rejection(reason.value, requested, limit)
    raise GuardExceededError(
        reason,
        f"{reason.value}: {requested:.6g} states requested, limit {limit:.6g}",
        requested,
        limit,
    )
