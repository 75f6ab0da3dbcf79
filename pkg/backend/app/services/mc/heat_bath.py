# -*- coding: utf-8 -*-
"""
SOS LAB - MC: Heat-bath de un sitio
Ley condicional exacta de η(x) dados sus q vecinos:
    ℙ(h) ∝ exp(−β Σ_y |h − η(y)|)   sobre Z (o Z ≥ piso)
Entre el mínimo y el máximo de los vecinos se enumeran los pesos; fuera de ese
rango la ley es geométrica de razón r = e^{−qβ} y sus masas van en forma cerrada.
La inversa de la CDF recorre las alturas en orden creciente, de modo que es
monótona en el uniforme y en los vecinos (acoplamiento monótono).
"""

import math
from typing import Sequence

import numpy as np

ONE_BELOW = float(np.nextafter(1.0, 0.0))


class HeightLaw:
    """Ley condicional de un sitio, en escala relativa al mínimo de energía"""

    def __init__(self, neighbors: Sequence[int], beta: float, floor: int | None = None):
        self.neighbors = sorted(int(h) for h in neighbors)
        self.beta = beta
        self.floor = floor
        q = len(self.neighbors)
        self.lo, self.hi = self.neighbors[0], self.neighbors[-1]
        self.log_r = -beta * q
        self.r = math.exp(self.log_r)

        k_star = self.neighbors[(q - 1) // 2]
        if floor is not None:
            k_star = max(k_star, floor)
        self._f0 = self.energy(k_star)

        self.start = self.lo if floor is None else max(self.lo, floor)
        self.middle = [(k, self.weight(k)) for k in range(self.start, self.hi + 1)]
        self.middle_mass = sum(w for _, w in self.middle)

        self.upper_start = self.hi + 1 if floor is None else max(self.hi + 1, floor)
        self.upper_mass = self.weight(self.upper_start) / (1 - self.r)

        if floor is None:
            self.lower_count = math.inf
        else:
            self.lower_count = max(self.lo - floor, 0)
        if self.lower_count > 0:
            tail = 1 - self.r**self.lower_count if self.lower_count != math.inf else 1.0
            self.lower_mass = self.weight(self.lo - 1) * tail / (1 - self.r)
        else:
            self.lower_mass = 0.0

        self.normalizer = self.lower_mass + self.middle_mass + self.upper_mass

    def energy(self, k: int) -> int:
        return sum(abs(k - h) for h in self.neighbors)

    def weight(self, k: int) -> float:
        """Peso sin normalizar exp(−β(E(k) − E_min))"""
        return math.exp(-self.beta * (self.energy(k) - self._f0))

    def pmf(self, k: int) -> float:
        if self.floor is not None and k < self.floor:
            return 0.0
        return self.weight(k) / self.normalizer

    def cdf(self, k: int) -> float:
        """ℙ(h ≤ k)"""
        if self.floor is not None and k < self.floor:
            return 0.0
        if k < self.lo:
            count = math.inf if self.floor is None else k - self.floor + 1
            tail = 1 - self.r**count if count != math.inf else 1.0
            return self.weight(k) * tail / (1 - self.r) / self.normalizer
        if k <= self.hi:
            partial = sum(w for h, w in self.middle if h <= k)
            return (self.lower_mass + partial) / self.normalizer
        return 1.0 - self.weight(k + 1) / (1 - self.r) / self.normalizer

    def sample(self, u: float) -> int:
        """Inversa de la CDF en u ∈ [0, 1)"""
        x = u * self.normalizer
        if x < self.lower_mass:
            y = (self.lower_mass - x) / self.lower_mass
            tail = 1 - self.r**self.lower_count if self.lower_count != math.inf else 1.0
            j = math.floor(math.log1p(-min(y * tail, ONE_BELOW)) / self.log_r)
            if self.lower_count != math.inf:
                j = min(j, self.lower_count - 1)
            return self.lo - 1 - max(j, 0)

        x -= self.lower_mass
        if x < self.middle_mass:
            for k, w in self.middle:
                if x < w:
                    return k
                x -= w
            return self.middle[-1][0]

        x -= self.middle_mass
        v = min(x / self.upper_mass, ONE_BELOW)
        j = math.floor(math.log1p(-v) / self.log_r)
        return self.upper_start + max(j, 0)


def sample_heights(
    neighbors: np.ndarray,
    beta: float,
    u: np.ndarray,
    floors: np.ndarray | None = None,
    has_floor: np.ndarray | None = None,
) -> np.ndarray:
    """
    Versión vectorizada de HeightLaw.sample para n sitios a la vez.
    neighbors: (n, q) enteros; floors/has_floor: piso por sitio (opcional).
    """
    s = np.sort(np.asarray(neighbors, dtype=np.int64), axis=1)
    n, q = s.shape
    u = np.asarray(u, dtype=np.float64)
    if floors is None:
        floors = np.zeros(n, dtype=np.int64)
        has_floor = np.zeros(n, dtype=bool)
    elif has_floor is None:
        has_floor = np.ones(n, dtype=bool)

    lo, hi = s[:, 0], s[:, -1]
    log_r = -beta * q
    r = np.exp(log_r)

    def energy(k: np.ndarray) -> np.ndarray:
        return np.abs(k[..., None] - s.reshape((n,) + (1,) * (k.ndim - 1) + (q,))).sum(axis=-1)

    k_star = np.where(has_floor, np.maximum(s[:, (q - 1) // 2], floors), s[:, (q - 1) // 2])
    f0 = energy(k_star)

    def weight(k: np.ndarray) -> np.ndarray:
        return np.exp(-beta * (energy(k) - (f0 if k.ndim == 1 else f0[:, None])))

    start = np.where(has_floor, np.maximum(lo, floors), lo)
    width = max(int((hi - start + 1).max()), 1)
    ks = start[:, None] + np.arange(width)[None, :]
    middle = np.where(ks <= hi[:, None], weight(ks), 0.0)
    cumulative = np.cumsum(middle, axis=1)
    middle_mass = cumulative[:, -1]

    upper_start = np.where(has_floor, np.maximum(hi + 1, floors), hi + 1)
    upper_mass = weight(upper_start) / (1 - r)

    lower_count = np.where(has_floor, np.maximum(lo - floors, 0), np.iinfo(np.int64).max)
    lower_tail = np.where(has_floor, 1 - np.power(r, lower_count.astype(np.float64)), 1.0)
    lower_mass = np.where(lower_count > 0, weight(lo - 1) * lower_tail / (1 - r), 0.0)

    x = u * (lower_mass + middle_mass + upper_mass)
    result = np.empty(n, dtype=np.int64)

    with np.errstate(divide="ignore", invalid="ignore"):
        in_lower = x < lower_mass
        y = np.where(in_lower, (lower_mass - x) / np.where(in_lower, lower_mass, 1.0), 0.0)
        j = np.floor(np.log1p(-np.minimum(y * lower_tail, ONE_BELOW)) / log_r)
        j = np.clip(np.nan_to_num(j), 0, np.maximum(lower_count - 1, 0)).astype(np.int64)
        result[in_lower] = (lo - 1 - j)[in_lower]

        x_mid = x - lower_mass
        in_middle = ~in_lower & (x_mid < middle_mass)
        index = np.minimum((cumulative <= x_mid[:, None]).sum(axis=1), width - 1)
        result[in_middle] = (start + index)[in_middle]

        in_upper = ~in_lower & ~in_middle
        v = np.minimum((x_mid - middle_mass) / np.where(in_upper, upper_mass, 1.0), ONE_BELOW)
        v = np.clip(v, 0.0, ONE_BELOW)
        j = np.maximum(np.floor(np.log1p(-v) / log_r), 0).astype(np.int64)
        result[in_upper] = (upper_start + j)[in_upper]

    return result
