# -*- coding: utf-8 -*-
"""
SOS LAB - SYSTEM RUNNER
Punto de entrada de línea de comandos: carga .env y delega en la CLI.

Uso:
    python system_runner.py enumerate --L 1 --beta 1.0
    python system_runner.py tau0 --L 3 --mc --sweeps 4000 --out tau.json
"""

import os
import sys

# Agregar el directorio raíz al path
sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from dotenv import load_dotenv

load_dotenv()

from backend.app.api.cli import main

if __name__ == "__main__":
    sys.exit(main())
