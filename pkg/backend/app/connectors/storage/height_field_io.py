# -*- coding: utf-8 -*-
"""
SOS LAB - STORAGE: Campos de altura en texto
Línea 1: "W H hoff"; luego H líneas de W enteros separados por espacios, la
primera es la fila superior. η = valor + hoff. Round-trip exacto.
"""

from pathlib import Path
from typing import Callable, TextIO

import numpy as np

from backend.app.core.errors import ErrorReason, PreconditionError
from backend.app.core.forensic_logger import lattice_logger
from backend.app.services.lattice.boundary import BoundaryCondition
from backend.app.services.lattice.geometry import Region, RegionKind, Site, build_region, rectangle
from backend.app.services.lattice.height_field import HeightConfig

BCFactory = Callable[[Region], BoundaryCondition]


def format_height_field(config: HeightConfig, hoff: int = 0) -> str:
    region = config.region
    if not region.is_rectangle:
        raise PreconditionError(ErrorReason.INVALID_REGION, "height-field files need a rectangular region")
    lines = [f"{region.width} {region.height} {hoff}"]
    for x2 in range(region.x2_max, region.x2_min - 1, -1):
        row = [config.height(Site(x1, x2)) - hoff for x1 in range(region.x1_min, region.x1_max + 1)]
        lines.append(" ".join(str(v) for v in row))
    return "\n".join(lines) + "\n"


def write_height_field(config: HeightConfig, target: Path | str | TextIO, hoff: int = 0) -> None:
    text = format_height_field(config, hoff)
    if hasattr(target, "write"):
        target.write(text)
        return
    Path(target).write_text(text, encoding="utf-8")
    lattice_logger.logger.info(f"💾 campo de alturas escrito en {target}")


def region_for_shape(width: int, height: int) -> Region:
    """Rectángulo anclado en (−⌊W/2⌋, −⌊H/2⌋): centrado cuando W y H son impares"""
    if width % 2 and height % 2:
        return rectangle(width // 2, height // 2)
    x1_min, x2_min = -(width // 2), -(height // 2)
    sites = [Site(x1_min + i, x2_min + j) for j in range(height) for i in range(width)]
    return build_region(RegionKind.CUSTOM, sites=sites)


def parse_height_field(
    text: str, region: Region | None = None, bc_factory: BCFactory = BoundaryCondition.zero
) -> HeightConfig:
    lines = [line.split() for line in text.splitlines() if line.strip()]
    if not lines or len(lines[0]) != 3:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, "height-field header must be 'W H hoff'")
    try:
        width, height, hoff = (int(v) for v in lines[0])
        rows = np.array([[int(v) for v in line] for line in lines[1:]], dtype=np.int64)
    except ValueError as exc:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"non-integer entry in height field: {exc}")
    if width < 1 or height < 1 or rows.shape != (height, width):
        raise PreconditionError(
            ErrorReason.INVALID_PARAMETER,
            f"height field declares {width}x{height} but has shape {rows.shape}",
        )

    region = region or region_for_shape(width, height)
    if region.width != width or region.height != height or not region.is_rectangle:
        raise PreconditionError(ErrorReason.INVALID_REGION, "region does not match the height-field shape")

    # Fila superior primero → invertir para el orden raster (x2 ascendente)
    values = rows[::-1].reshape(-1) + hoff
    return HeightConfig.from_values(region, bc_factory(region), values)


def read_height_field(
    source: Path | str | TextIO, region: Region | None = None, bc_factory: BCFactory = BoundaryCondition.zero
) -> HeightConfig:
    text = source.read() if hasattr(source, "read") else Path(source).read_text(encoding="utf-8")
    return parse_height_field(text, region, bc_factory)
