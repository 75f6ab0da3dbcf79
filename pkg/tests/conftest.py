# -*- coding: utf-8 -*-
"""
Fixtures comunes. Los logs forenses van a un directorio temporal: la variable
se fija antes de importar cualquier módulo del laboratorio.
"""

import os
import sys
import tempfile

os.environ.setdefault("SOS_LOGS_DIR", tempfile.mkdtemp(prefix="sos_logs_"))

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import pytest

from backend.app.core.config import reset_settings
from backend.app.domain.schemas.exact import HeightWindow
from backend.app.domain.schemas.sampling import MCParams
from backend.app.services.lattice.boundary import BoundaryCondition
from backend.app.services.lattice.geometry import box


@pytest.fixture(autouse=True)
def fresh_settings():
    """Cada test ve el entorno actual (monkeypatch de SOS_* incluido)"""
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def box1():
    return box(1)


@pytest.fixture
def zero_bc_box1(box1):
    return BoundaryCondition.zero(box1)


@pytest.fixture
def small_window():
    return HeightWindow(hmin=-2, hmax=2)


@pytest.fixture
def quick_params():
    return MCParams(sweeps=400, burnin=20, seed=7, max_sweeps=800)
