# -*- coding: utf-8 -*-
"""
SOS LAB - LATTICE: Geometría
Sitios, enlaces y regiones finitas de Z², con sus bordes ∂Λ y ∂_*Λ.
"""

from enum import Enum
from typing import Iterable, NamedTuple

from backend.app.core.errors import ErrorReason, PreconditionError
from backend.app.core.forensic_logger import lattice_logger

# Alto por defecto de strip(L) en múltiplos del ancho 2L+1
STRIP_ASPECT = 2


class Site(NamedTuple):
    """Sitio x = (x1, x2) de Z²"""

    x1: int
    x2: int

    def shift(self, d1: int, d2: int) -> "Site":
        return Site(self.x1 + d1, self.x2 + d2)

    def neighbors(self) -> tuple["Site", "Site", "Site", "Site"]:
        """Vecinos en orden E, N, W, S"""
        return (
            Site(self.x1 + 1, self.x2),
            Site(self.x1, self.x2 + 1),
            Site(self.x1 - 1, self.x2),
            Site(self.x1, self.x2 - 1),
        )


class Bond(NamedTuple):
    """Enlace no orientado xy (normalizado: a < b en orden lexicográfico)"""

    a: Site
    b: Site

    @classmethod
    def of(cls, x: Site, y: Site) -> "Bond":
        return cls(x, y) if x < y else cls(y, x)


class RegionKind(str, Enum):
    BOX = "box"
    RECTANGLE = "rectangle"
    STRIP = "strip"
    CUSTOM = "custom"


class Region:
    """
    Dominio finito Λ.
    Guarda los sitios como conjunto (pertenencia O(1)) y como tupla en orden raster:
    x2 ascendente y, dentro de cada fila, x1 ascendente (desde abajo a la izquierda).
    """

    def __init__(self, kind: RegionKind, sites: Iterable[Site], params: dict | None = None):
        site_set = frozenset(Site(int(s[0]), int(s[1])) for s in sites)
        if not site_set:
            raise PreconditionError(ErrorReason.INVALID_REGION, "region must be nonempty")

        self.kind = kind
        self.params = dict(params or {})
        self.sites = site_set
        self.order: tuple[Site, ...] = tuple(sorted(site_set, key=lambda s: (s.x2, s.x1)))
        self.index: dict[Site, int] = {s: i for i, s in enumerate(self.order)}

        xs = [s.x1 for s in site_set]
        ys = [s.x2 for s in site_set]
        self.x1_min, self.x1_max = min(xs), max(xs)
        self.x2_min, self.x2_max = min(ys), max(ys)

    # ==================== PROPIEDADES ====================

    @property
    def width(self) -> int:
        return self.x1_max - self.x1_min + 1

    @property
    def height(self) -> int:
        return self.x2_max - self.x2_min + 1

    @property
    def is_rectangle(self) -> bool:
        """¿La región llena exactamente su caja envolvente?"""
        return len(self.sites) == self.width * self.height

    @property
    def L(self) -> int | None:
        """Semi-lado horizontal para box/rectangle/strip"""
        return self.params.get("L")

    def rows(self) -> list[list[Site]]:
        """Filas (x2 constante) en orden raster; sólo tiene sentido en rectángulos"""
        return [
            [Site(x1, x2) for x1 in range(self.x1_min, self.x1_max + 1)]
            for x2 in range(self.x2_min, self.x2_max + 1)
        ]

    def __contains__(self, site) -> bool:
        return Site(*site) in self.sites

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self):
        return iter(self.order)

    def __eq__(self, other) -> bool:
        return isinstance(other, Region) and self.sites == other.sites

    def __hash__(self) -> int:
        return hash(self.sites)

    def __repr__(self) -> str:
        return f"Region({self.kind.value}, {self.params or len(self.sites)} sites)"


# ==================== CONSTRUCTORES ====================


def _rectangle_sites(L: int, M: int) -> list[Site]:
    return [Site(x1, x2) for x2 in range(-M, M + 1) for x1 in range(-L, L + 1)]


def build_region(
    kind: RegionKind | str,
    L: int | None = None,
    M: int | None = None,
    sites: Iterable | None = None,
) -> Region:
    """
    Construye Λ:
    - box(L) = [−L, L]²
    - rectangle(L, M) = [−L, L] × [−M, M]
    - strip(L, M) = truncación finita de la franja [−L, L] × Z a altura M
      (M por defecto: STRIP_ASPECT · (2L+1), la franja es más alta que ancha)
    - custom(sites) = cualquier conjunto finito no vacío
    """
    kind = RegionKind(kind)

    if kind == RegionKind.CUSTOM:
        if sites is None:
            raise PreconditionError(ErrorReason.INVALID_REGION, "custom region needs sites")
        return Region(kind, sites)

    if L is None or L < 0:
        raise PreconditionError(ErrorReason.INVALID_REGION, f"L must be >= 0, got {L}")

    if kind == RegionKind.BOX:
        return Region(kind, _rectangle_sites(L, L), {"L": L, "M": L})

    if kind == RegionKind.STRIP and M is None:
        M = STRIP_ASPECT * (2 * L + 1)
        lattice_logger.log_default_applied("M", M, f"strip({L}) truncated at |x2| <= {M}")
    if M is None or M < 0:
        raise PreconditionError(ErrorReason.INVALID_REGION, f"M must be >= 0, got {M}")
    return Region(kind, _rectangle_sites(L, M), {"L": L, "M": M})


def box(L: int) -> Region:
    return build_region(RegionKind.BOX, L=L)


def rectangle(L: int, M: int) -> Region:
    return build_region(RegionKind.RECTANGLE, L=L, M=M)


def strip(L: int, M: int | None = None) -> Region:
    return build_region(RegionKind.STRIP, L=L, M=M)


# ==================== ENLACES Y BORDES ====================


def bonds(region: Region) -> list[Bond]:
    """
    ℬ_Λ: cada par de vecinos con al menos un extremo en Λ, una sola vez.
    Orden determinista (lexicográfico).
    """
    found: set[Bond] = set()
    for site in region.order:
        for nb in site.neighbors():
            found.add(Bond.of(site, nb))
    return sorted(found)


def external_boundary(region: Region) -> frozenset[Site]:
    """∂Λ: sitios de Λᶜ adyacentes a Λ"""
    return frozenset(
        nb for site in region.order for nb in site.neighbors() if nb not in region.sites
    )


def boundaries(region: Region) -> tuple[frozenset[Site], frozenset[Site]]:
    """
    (∂Λ, ∂_*Λ).
    ∂_*Λ: sitios de Λ a distancia 1 de ∂Λ, o a distancia √2 de ∂Λ en dirección
    suroeste o noreste (sólo esas dos diagonales).
    """
    outer = external_boundary(region)
    inner = set()
    for site in region.order:
        if any(nb in outer for nb in site.neighbors()):
            inner.add(site)
        elif site.shift(1, 1) in outer or site.shift(-1, -1) in outer:
            inner.add(site)
    return outer, frozenset(inner)
