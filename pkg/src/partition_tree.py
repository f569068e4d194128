"""
Partition Tree - Árbol de Particiones
=====================================
Dominios caja, árbol de particiones N-ario por el lado más largo y sus
parámetros geométricos (N, rho, v1, v2).

Todo el árbol vive en el cubo unidad normalizado; BoxDomain traduce entre
coordenadas de usuario y normalizadas. Los nodos se materializan bajo
demanda y sus límites se calculan exactamente con fracciones.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoxDomain:
    """Caja [lower, upper] en coordenadas de usuario."""
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lower) != len(upper) or not lower:
            raise ValueError(f"Límites de dimensión inconsistente: {lower} vs {upper}")
        if not all(np.isfinite(lower + upper)):
            raise ValueError("Los límites del dominio deben ser finitos")
        if any(lo >= hi for lo, hi in zip(lower, upper)):
            raise ValueError(f"Se requiere lower < upper en cada eje: {lower} vs {upper}")
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @classmethod
    def unit(cls, dim: int) -> 'BoxDomain':
        return cls((0.0,) * dim, (1.0,) * dim)

    @classmethod
    def cube(cls, lower: float, upper: float, dim: int) -> 'BoxDomain':
        return cls((lower,) * dim, (upper,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def sides(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def max_side(self) -> float:
        """Diámetro bajo l_inf."""
        return float(self.sides.max())

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lower) + np.asarray(self.upper)) / 2.0

    def to_user(self, z) -> np.ndarray:
        """Coordenadas normalizadas [0,1]^D a coordenadas de usuario."""
        return np.asarray(self.lower) + np.asarray(z, dtype=float) * self.sides

    def to_unit(self, x) -> np.ndarray:
        """Coordenadas de usuario a [0,1]^D."""
        return (np.asarray(x, dtype=float) - np.asarray(self.lower)) / self.sides

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= np.asarray(self.lower)) and np.all(x <= np.asarray(self.upper)))

    def product(self, other: 'BoxDomain') -> 'BoxDomain':
        """Producto cartesiano self x other (ejes de self primero)."""
        return BoxDomain(self.lower + other.lower, self.upper + other.upper)


@dataclass(frozen=True)
class PartitionParams:
    """
    Parámetros del árbol en la caja normalizada: aridad N y dimensión D.

    rho = N^(-1/D), v1 = N^((D-1)/D)/2, v2 = 1/(2N).
    """
    n_split: int
    dim: int

    def __post_init__(self):
        if int(self.n_split) != self.n_split or self.n_split < 2:
            raise ValueError(f"n_split debe ser un entero >= 2, recibido {self.n_split}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim debe ser un entero >= 1, recibido {self.dim}")

    @property
    def rho(self) -> float:
        return self.n_split ** (-1.0 / self.dim)

    @property
    def v1(self) -> float:
        return self.n_split ** ((self.dim - 1.0) / self.dim) / 2.0

    @property
    def v2(self) -> float:
        return 1.0 / (2.0 * self.n_split)

    @property
    def is_odd(self) -> bool:
        return self.n_split % 2 == 1


@dataclass(frozen=True)
class PartitionNode:
    """
    Nodo (h, i) con su celda en la caja normalizada.

    La celda en el eje j es [offsets[j], offsets[j] + 1) / N^levels[j].
    """
    depth: int
    index: int
    levels: Tuple[int, ...]
    offsets: Tuple[int, ...]
    n_split: int

    @property
    def key(self) -> Tuple[int, int]:
        return (self.depth, self.index)

    @property
    def parent_key(self) -> Optional[Tuple[int, int]]:
        if self.depth == 0:
            return None
        return (self.depth - 1, (self.index - 1) // self.n_split + 1)

    @property
    def lower_exact(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(k, self.n_split ** s) for k, s in zip(self.offsets, self.levels))

    @property
    def upper_exact(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(k + 1, self.n_split ** s) for k, s in zip(self.offsets, self.levels))

    @property
    def sides_exact(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(1, self.n_split ** s) for s in self.levels)

    @property
    def volume_exact(self) -> Fraction:
        return Fraction(1, self.n_split ** sum(self.levels))

    @property
    def lower(self) -> np.ndarray:
        return np.array([k / self.n_split ** s for k, s in zip(self.offsets, self.levels)])

    @property
    def upper(self) -> np.ndarray:
        return np.array([(k + 1) / self.n_split ** s for k, s in zip(self.offsets, self.levels)])

    @property
    def center(self) -> np.ndarray:
        """Centro de la celda en coordenadas normalizadas."""
        return np.array([(2 * k + 1) / (2 * self.n_split ** s)
                         for k, s in zip(self.offsets, self.levels)])

    @property
    def outer_radius_exact(self) -> Fraction:
        """Radio l_inf de la bola centrada más pequeña que contiene la celda."""
        return max(self.sides_exact) / 2

    @property
    def inner_radius_exact(self) -> Fraction:
        """Radio l_inf de la bola centrada más grande contenida en la celda."""
        return min(self.sides_exact) / 2


def root(domain: BoxDomain, n_split: int = 3) -> PartitionNode:
    """Nodo raíz: profundidad 0, índice 1, celda = dominio completo."""
    dim = domain.dim
    return PartitionNode(0, 1, (0,) * dim, (0,) * dim, n_split)


def children(node: PartitionNode, params: PartitionParams) -> List[PartitionNode]:
    """
    Hijos de un nodo: N franjas iguales del lado más largo (empates al eje menor).

    Args:
        node (PartitionNode): Nodo a expandir
        params (PartitionParams): Parámetros del árbol

    Returns:
        List[PartitionNode]: N hijos con índices N(i-1)+1 ... N i en orden
    """
    N = params.n_split
    if node.n_split != N:
        raise ValueError(f"Nodo construido con N={node.n_split}, parámetros con N={N}")

    axis = min(range(len(node.levels)), key=lambda j: node.levels[j])
    result = []
    for c in range(N):
        levels = list(node.levels)
        offsets = list(node.offsets)
        levels[axis] += 1
        offsets[axis] = offsets[axis] * N + c
        result.append(PartitionNode(node.depth + 1, N * (node.index - 1) + c + 1,
                                    tuple(levels), tuple(offsets), N))
    return result


def cell_radius(h: int, params: PartitionParams) -> float:
    """Radio exterior garantizado v1 * rho^h a profundidad h."""
    return params.v1 * params.rho ** h


def nodes_at_depth(start: PartitionNode, params: PartitionParams, depth: int) -> Iterator[PartitionNode]:
    """Todos los descendientes de `start` a la profundidad indicada, en orden."""
    if start.depth == depth:
        yield start
        return
    for child in children(start, params):
        yield from nodes_at_depth(child, params, depth)


def ancestor_keys(node: PartitionNode) -> Iterator[Tuple[int, int]]:
    """Claves (h, i) de todos los ancestros estrictos."""
    key = node.parent_key
    while key is not None:
        yield key
        depth, index = key
        key = None if depth == 0 else (depth - 1, (index - 1) // node.n_split + 1)


def check_tiling(nodes: Sequence[PartitionNode]) -> bool:
    """
    Comprueba exactamente que las celdas embaldosan el cubo unidad.

    Las celdas de un mismo árbol son anidadas o disjuntas, así que basta con
    que ningún nodo sea ancestro de otro y que el volumen total sea 1.
    """
    keys = {node.key for node in nodes}
    if len(keys) != len(nodes):
        return False
    for node in nodes:
        if any(k in keys for k in ancestor_keys(node)):
            return False
    return sum((node.volume_exact for node in nodes), Fraction(0)) == 1


def contains_ball(node: PartitionNode, center: Sequence[Fraction], radius: Fraction) -> bool:
    """¿La bola cerrada l_inf B(center, radius) cabe en la celda cerrada?"""
    return all(lo <= c - radius and c + radius <= hi
               for lo, hi, c in zip(node.lower_exact, node.upper_exact, center))


def inside_ball(node: PartitionNode, center: Sequence[Fraction], radius: Fraction) -> bool:
    """¿La celda cabe en la bola cerrada l_inf B(center, radius)?"""
    return all(c - radius <= lo and hi <= c + radius
               for lo, hi, c in zip(node.lower_exact, node.upper_exact, center))


def center_exact(node: PartitionNode) -> Tuple[Fraction, ...]:
    return tuple((lo + hi) / 2 for lo, hi in zip(node.lower_exact, node.upper_exact))
