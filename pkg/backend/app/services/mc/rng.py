# -*- coding: utf-8 -*-
"""
SOS LAB - MC: Flujos aleatorios por contador
Philox con clave (seed, stream) y contador posicionado por sweep: el uniforme
de cada sitio depende sólo de (seed, stream, sweep, posición raster), así que
dos cadenas acopladas con el mismo stream ven exactamente los mismos números.
"""

import numpy as np

from backend.app.domain.schemas.sampling import RandomSeed


class CounterStream:
    def __init__(self, seed: RandomSeed):
        self.seed = seed
        self._key = np.array([seed.seed, seed.stream], dtype=np.uint64)

    def uniforms(self, sweep: int, n: int) -> np.ndarray:
        """n uniformes en [0, 1) para el sweep dado (índice = posición raster)"""
        counter = np.array([0, 0, sweep, 0], dtype=np.uint64)
        generator = np.random.Generator(np.random.Philox(key=self._key, counter=counter))
        return generator.random(n)

    def child(self, stream: int) -> "CounterStream":
        return CounterStream(self.seed.child(stream))

    def __repr__(self) -> str:
        return f"CounterStream(seed={self.seed.seed}, stream={self.seed.stream})"
