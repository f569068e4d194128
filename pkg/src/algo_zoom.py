"""
Algo Zoom - Bandido GP de Zoom Bayesiano
========================================
Conjunto de puntos activos con radios de confianza r_k = 2^-k (caja
normalizada), índice J = mu + beta sigma + W(r), reducción del radio cuando
la incertidumbre cae por debajo de W, y oráculo de recubrimiento exacto por
subdivisión recursiva de cajas bajo l_inf.
"""

import time
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from algo_tree import BudgetExhausted, InvariantViolation
from confidence import ConfidenceConfig, beta_zoom, w_cap, zoom_r_min, zoom_repeat_budget
from env import Environment
from gp_core import KernelSpec, PosteriorState
from partition_tree import BoxDomain
from regret_trace import RegretTrace

logger = logging.getLogger(__name__)


@dataclass
class ActivePoint:
    """Punto activo en coordenadas normalizadas con nivel de radio k."""
    x: np.ndarray
    k: int = 0
    evals: int = 0
    order: int = 0
    r0: float = 1.0

    @property
    def radius(self) -> float:
        return self.r0 * 2.0 ** (-self.k)


@dataclass(frozen=True)
class Covered:
    pass


@dataclass(frozen=True)
class Uncovered:
    point: np.ndarray


@dataclass(frozen=True)
class Added:
    point: np.ndarray


@dataclass(frozen=True)
class Shrunk:
    point: np.ndarray
    k: int


@dataclass(frozen=True)
class Evaluated:
    x: np.ndarray
    y: float
    k: int


def _box_candidates(lo: np.ndarray, hi: np.ndarray) -> List[np.ndarray]:
    """Centro seguido de las 2^D esquinas de la caja."""
    dim = lo.shape[0]
    points = [(lo + hi) / 2.0]
    for mask in range(2 ** dim):
        corner = np.array([hi[j] if (mask >> j) & 1 else lo[j] for j in range(dim)])
        points.append(corner)
    return points


def covering_check(active: List[ActivePoint], domain: BoxDomain, eps: float,
                   region: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> Union[Covered, Uncovered]:
    """
    ¿Cubren las bolas cerradas l_inf B(x, r(x)) el dominio (o una región suya)?

    Recorre en profundidad subdividiendo en 2^D hijos, visitando primero la
    mitad superior de cada eje. Una caja contenida en alguna bola queda
    cubierta; una caja que no toca ninguna bola devuelve su centro como
    testigo; una caja de lado < eps devuelve el primero de su centro y
    esquinas que no esté cubierto (o se da por cubierta).

    Args:
        active (List[ActivePoint]): Puntos activos, en las coordenadas de `domain`
        domain (BoxDomain): Dominio
        eps (float): Resolución mínima (> 0)
        region: (lo, hi) opcional a comprobar en lugar del dominio completo

    Returns:
        Covered | Uncovered: Resultado con testigo si hay hueco
    """
    if eps <= 0:
        raise ValueError(f"eps debe ser positivo, recibido {eps}")

    if region is None:
        lo0, hi0 = np.asarray(domain.lower), np.asarray(domain.upper)
    else:
        lo0 = np.maximum(np.asarray(region[0], dtype=float), np.asarray(domain.lower))
        hi0 = np.minimum(np.asarray(region[1], dtype=float), np.asarray(domain.upper))
        if np.any(lo0 > hi0):
            return Covered()

    if not active:
        return Uncovered((lo0 + hi0) / 2.0)

    centers = np.array([p.x for p in active], dtype=float)
    radii = np.array([p.radius for p in active])[:, None]
    ball_lo = centers - radii
    ball_hi = centers + radii
    dim = lo0.shape[0]

    def point_covered(z: np.ndarray) -> bool:
        return bool(np.any(np.all((ball_lo <= z) & (z <= ball_hi), axis=1)))

    stack = [(lo0, hi0)]
    while stack:
        lo, hi = stack.pop()
        if np.any(np.all((ball_lo <= lo) & (hi <= ball_hi), axis=1)):
            continue
        if not np.any(np.all((ball_lo <= hi) & (lo <= ball_hi), axis=1)):
            return Uncovered((lo + hi) / 2.0)
        if np.max(hi - lo) < eps:
            for candidate in _box_candidates(lo, hi):
                if not point_covered(candidate):
                    return Uncovered(candidate)
            continue

        mid = (lo + hi) / 2.0
        boxes = []
        for mask in range(2 ** dim):
            upper_half = np.array([(mask >> j) & 1 for j in range(dim)], dtype=bool)
            boxes.append((np.where(upper_half, mid, lo), np.where(upper_half, hi, mid)))
        stack.extend(boxes)

    return Covered()


def packing_number(dim: int, radius: float) -> int:
    """Máximo de puntos del cubo unidad separados más de `radius` en l_inf: ceil(1/r)^D."""
    return int(np.ceil(1.0 / radius - 1e-12)) ** dim


class ZoomBandit:
    """
    Estado y bucle del algoritmo de zoom.

    Tras cada reducción sólo se vuelve a comprobar la caja de la bola
    anterior, que es lo único que puede haber quedado descubierto.
    """

    def __init__(self, kernel: KernelSpec, domain: BoxDomain, cfg: ConfidenceConfig,
                 debug: bool = False,
                 monitor: Optional[Callable[[Dict[str, object]], None]] = None,
                 metadata: Optional[Dict[str, object]] = None):
        """
        Inicializa el conjunto activo vacío.

        Args:
            kernel (KernelSpec): Kernel del GP
            domain (BoxDomain): Dominio de usuario
            cfg (ConfidenceConfig): Parámetros de confianza
            debug (bool): Comprobación exhaustiva del recubrimiento cada ronda
            monitor (callable): Recibe un dict por cada selección
            metadata (dict): Metadatos extra de la traza
        """
        self.kernel = kernel
        self.domain = domain
        self.unit = BoxDomain.unit(domain.dim)
        self.cfg = cfg
        self.n = cfg.n
        self.beta = beta_zoom(cfg)
        self.r_min = zoom_r_min(cfg)
        self.eps = self.r_min / 4.0
        self.debug = debug
        self.monitor = monitor

        self.posterior = PosteriorState(kernel, noise_var=cfg.sigma ** 2, debug=debug)
        self.active: List[ActivePoint] = []
        self.t = 0
        self.n_e = 0
        self.level_evals: Dict[Tuple[int, int], int] = {}
        self.evaluated_levels: List[Tuple[float, int]] = []

        self._dirty: Optional[Tuple[np.ndarray, np.ndarray]] = (np.zeros(domain.dim), np.ones(domain.dim))
        self._w_cache: Dict[int, float] = {}
        self._stats_cache: Dict[int, Tuple[float, float]] = {}
        self._next_order = 0

        trace_meta = {'algorithm': 'zoom', 'beta': f"{self.beta:.17g}",
                      'r_min': f"{self.r_min:.17g}", 'theory_scale': cfg.theory_scale}
        trace_meta.update(metadata or {})
        self.trace = RegretTrace(domain.dim, trace_meta)

        logger.info(f"ZoomBandit: n={self.n}, beta={self.beta:.3f}, r_min={self.r_min:.4f}, D={domain.dim}")

    def w(self, k: int) -> float:
        if k not in self._w_cache:
            self._w_cache[k] = w_cap(self.cfg, k)
        return self._w_cache[k]

    def user_point(self, point: ActivePoint) -> np.ndarray:
        return self.domain.to_user(point.x)

    def _stats(self) -> np.ndarray:
        missing = [p for p in self.active if p.order not in self._stats_cache]
        if missing:
            mu, sigma = self.posterior.query_many(np.array([self.user_point(p) for p in missing]))
            for p, m, s in zip(missing, mu, sigma):
                self._stats_cache[p.order] = (float(m), float(s))
        return np.array([self._stats_cache[p.order] for p in self.active])

    def index_j(self, point: ActivePoint) -> float:
        """J = mu + beta sigma + W(r(x))."""
        mu, sigma = self.posterior.query(self.user_point(point))
        return mu + self.beta * sigma + self.w(point.k)

    def repeat_budget(self, k: int) -> int:
        return zoom_repeat_budget(self.cfg, k, self.beta)

    def repeat_overruns(self) -> List[Tuple[int, int, int]]:
        """
        Niveles evaluados más de q_k + 1 veces antes de reducir el radio.

        Los niveles con radio menor que r_min no se pueden reducir y no cuentan.

        Returns:
            List[Tuple[int, int, int]]: (orden del punto, k, evaluaciones)
        """
        overruns = []
        for (order, k), count in sorted(self.level_evals.items()):
            if self.active[order].r0 * 2.0 ** (-k) < self.r_min:
                continue
            if count > self.repeat_budget(k) + 1:
                overruns.append((order, k, count))
        return overruns

    def suboptimality_ok(self) -> bool:
        """Todo punto evaluado cumplió Delta(x) <= 5 W(r(x))."""
        return all(delta <= 5.0 * self.w(k) + 1e-12 for delta, k in self.evaluated_levels)

    def _add(self, z: np.ndarray) -> Added:
        point = ActivePoint(np.asarray(z, dtype=float), k=0, order=self._next_order)
        self._next_order += 1
        self.active.append(point)
        logger.debug(f"t={self.t}: añadido punto activo {self.domain.to_user(z).tolist()}")
        return Added(self.domain.to_user(z))

    def step(self, env: Environment):
        """
        Una ronda: reparar el recubrimiento, o reducir un radio, o evaluar.

        Args:
            env (Environment): Entorno

        Returns:
            Added | Shrunk | Evaluated: Acción tomada
        """
        if self.n_e >= self.n:
            raise BudgetExhausted(f"Presupuesto de {self.n} evaluaciones agotado")

        begin = time.perf_counter_ns()
        self.t += 1

        if self._dirty is not None:
            result = covering_check(self.active, self.unit, self.eps, region=self._dirty)
            self._dirty = None
            if isinstance(result, Uncovered):
                return self._add(result.point)

        if self.debug:
            full = covering_check(self.active, self.unit, self.eps)
            if isinstance(full, Uncovered):
                raise InvariantViolation(f"Dominio no cubierto en t={self.t}: hueco en {full.point.tolist()}")

        stats = self._stats()
        scores = stats[:, 0] + self.beta * stats[:, 1] + np.array([self.w(p.k) for p in self.active])
        position = max(range(len(self.active)),
                       key=lambda i: (scores[i], self.active[i].k, -self.active[i].order))
        point = self.active[position]
        mu, sigma = stats[position]

        if self.monitor is not None:
            self.monitor({'t': self.t, 'x': self.user_point(point), 'mu': mu, 'sigma': sigma,
                          'beta': self.beta, 'k': point.k})

        if self.beta * sigma <= self.w(point.k) and point.radius >= self.r_min:
            old = point.radius
            point.k += 1
            self._dirty = (point.x - old, point.x + old)
            logger.debug(f"t={self.t}: radio reducido a 2^-{point.k} en {self.user_point(point).tolist()}")
            return Shrunk(self.user_point(point), point.k)

        return self._evaluate(point, env, begin)

    def _evaluate(self, point: ActivePoint, env: Environment, begin: int) -> Evaluated:
        x = self.user_point(point)
        y = env.query(x)
        self.posterior.update(x, y)
        self.n_e += 1
        point.evals += 1
        key = (point.order, point.k)
        self.level_evals[key] = self.level_evals.get(key, 0) + 1
        self._stats_cache.clear()

        recommendation = self.recommendation()
        f_x = env.true_value(x)
        best = env.best_value()
        delta = best - f_x
        self.evaluated_levels.append((delta, point.k))
        self.trace.add_evaluation(self.t, self.n_e, x, y, delta, best - env.true_value(recommendation),
                                  len(self.active), point.k,
                                  wall_ns=time.perf_counter_ns() - begin)
        return Evaluated(x, y, point.k)

    def recommendation(self) -> np.ndarray:
        """Punto activo de menor radio; en empate, mayor media a posteriori."""
        if not self.active:
            return self.domain.center
        deepest = max(p.k for p in self.active)
        candidates = [p for p in self.active if p.k == deepest]
        if len(candidates) == 1:
            return self.user_point(candidates[0])
        mu, _ = self.posterior.query_many(np.array([self.user_point(p) for p in candidates]))
        return self.user_point(candidates[int(np.argmax(mu))])

    def run(self, env: Environment) -> Tuple[RegretTrace, np.ndarray]:
        """
        Ejecuta hasta agotar el presupuesto.

        Returns:
            Tuple[RegretTrace, np.ndarray]: (traza, recomendación)
        """
        while self.n_e < self.n:
            self.step(env)

        logger.info(f"ZoomBandit terminado: t={self.t}, activos={len(self.active)}, "
                    f"R_n={self.trace.cumulative_regret:.4f}")
        return self.trace, self.recommendation()

    def separation_ok(self) -> bool:
        """
        Separación del conjunto activo en su estado actual.

        Cada punto está a distancia l_inf estrictamente mayor que el radio
        actual de todo punto añadido antes que él. Los radios sólo decrecen,
        así que esto se sigue de que cada punto nuevo cae fuera de todas las bolas.
        """
        for i, earlier in enumerate(self.active):
            for later in self.active[i + 1:]:
                if np.max(np.abs(later.x - earlier.x)) <= earlier.radius:
                    return False
        return True


def run(env: Environment, kernel: KernelSpec, cfg: ConfidenceConfig,
        debug: bool = False) -> Tuple[RegretTrace, np.ndarray]:
    """Ejecución completa del algoritmo de zoom sobre el dominio del entorno."""
    return ZoomBandit(kernel, env.domain, cfg, debug=debug).run(env)
