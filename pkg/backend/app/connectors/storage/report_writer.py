# -*- coding: utf-8 -*-
"""
SOS LAB - STORAGE: Salidas de experimentos
CSV (pandas, '%.17g', '.' decimal) con cabecera "# config: {...}" y JSON con
la clave "config". Escritura atómica: archivo temporal + os.replace.
Sin ruta, la salida va a stdout.
"""

import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Any

import pandas as pd

from backend.app.core.forensic_logger import runner_logger
from backend.app.domain.schemas.experiment import ExperimentConfig

CONFIG_PREFIX = "# config: "


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    handle = tempfile.NamedTemporaryFile(
        "w", encoding="utf-8", newline="", dir=path.parent, prefix=f".{path.name}.", delete=False
    )
    try:
        with handle:
            handle.write(text)
        os.replace(handle.name, path)
    except BaseException:
        Path(handle.name).unlink(missing_ok=True)
        raise
    runner_logger.logger.info(f"💾 salida escrita en {path}")


def _emit(text: str, path: Path | str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        _atomic_write(Path(path), text)


def config_line(config: ExperimentConfig) -> str:
    return CONFIG_PREFIX + json.dumps(config.echo(), sort_keys=True)


def format_table(frame: pd.DataFrame, config: ExperimentConfig) -> str:
    body = frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")
    return config_line(config) + "\n" + body


def write_table(frame: pd.DataFrame, path: Path | str | None, config: ExperimentConfig) -> None:
    _emit(format_table(frame, config), path)


def format_json(result: Any, config: ExperimentConfig) -> str:
    return json.dumps({"config": config.echo(), "result": result}, sort_keys=True, indent=2) + "\n"


def write_json(result: Any, path: Path | str | None, config: ExperimentConfig) -> None:
    _emit(format_json(result, config), path)


def read_output_config(path: Path | str) -> dict:
    """Recupera la configuración incrustada en un CSV o JSON producido por el runner"""
    text = Path(path).read_text(encoding="utf-8")
    first = text.splitlines()[0] if text else ""
    if first.startswith(CONFIG_PREFIX):
        return json.loads(first[len(CONFIG_PREFIX):])
    return json.loads(text)["config"]


def read_table(path: Path | str) -> pd.DataFrame:
    return pd.read_csv(path, skiprows=1)
