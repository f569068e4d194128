"""
Baselines - Estrategias de Referencia
=====================================
GP-UCB sobre una discretización uniforme fija y búsqueda aleatoria uniforme.
Ambas escriben la misma RegretTrace que los algoritmos adaptativos y GP-UCB
usa el mismo motor de posterior (gp_core).
"""

import time
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from confidence import ConfidenceConfig, beta_union
from env import Environment
from gp_core import MAX_DENSE_POINTS, GridTooLargeError, KernelSpec, PosteriorState
from partition_tree import BoxDomain
from regret_trace import RegretTrace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UniformGrid:
    """Centros de las res^D celdas iguales del dominio."""
    domain: BoxDomain
    resolution: int

    def __post_init__(self):
        if self.resolution < 1:
            raise ValueError(f"La resolución debe ser >= 1, recibido {self.resolution}")

    @property
    def size(self) -> int:
        return self.resolution ** self.domain.dim

    @property
    def points(self) -> np.ndarray:
        axis = (np.arange(self.resolution) + 0.5) / self.resolution
        mesh = np.meshgrid(*([axis] * self.domain.dim), indexing='ij')
        unit = np.stack([m.reshape(-1) for m in mesh], axis=1)
        return self.domain.to_user(unit)

    @property
    def covering_radius(self) -> float:
        """Radio l-infinito con el que las bolas centradas en la rejilla cubren el dominio."""
        return float(self.domain.max_side / (2.0 * self.resolution))


def theoretical_grid_size(t: int, dim: int) -> int:
    """Tamaño t^(2D) de la rejilla creciente de GP-UCB en la ronda t (entero exacto)."""
    return int(t) ** (2 * int(dim))


def run_gp_ucb(env: Environment, kernel: KernelSpec, cfg: ConfidenceConfig,
               n: Optional[int] = None, grid: Optional[UniformGrid] = None) -> RegretTrace:
    """
    GP-UCB sobre una rejilla fija.

    Args:
        env (Environment): Entorno
        kernel (KernelSpec): Kernel del GP
        cfg (ConfidenceConfig): Configuración (u, sigma, presupuesto)
        n (int): Evaluaciones; por defecto cfg.n
        grid (UniformGrid): Rejilla de candidatos; por defecto 32 puntos por eje

    Returns:
        RegretTrace: Traza de la ejecución
    """
    n = cfg.n if n is None else n
    grid = grid or UniformGrid(env.domain, 32)
    if grid.size > MAX_DENSE_POINTS:
        raise GridTooLargeError(f"Rejilla de GP-UCB de {grid.size} puntos excede {MAX_DENSE_POINTS}")

    points = grid.points
    beta = beta_union(cfg, grid.size)
    posterior = PosteriorState(kernel, noise_var=cfg.sigma ** 2)
    trace = RegretTrace(env.domain.dim, {'algorithm': 'gp_ucb', 'beta': f"{beta:.17g}",
                                         'grid_size': grid.size})

    logger.info(f"GP-UCB: |rejilla|={grid.size}, beta={beta:.3f}; la rejilla creciente "
                f"requeriría t^(2D)={theoretical_grid_size(n, env.domain.dim)} puntos en t={n}")

    for t in range(1, n + 1):
        begin = time.perf_counter_ns()
        mu, sigma = posterior.query_many(points)
        x = points[int(np.argmax(mu + beta * sigma))]
        y = env.query(x)
        posterior.update(x, y)

        evaluated_mu, _ = posterior.query_many(posterior.points)
        recommendation = posterior.points[int(np.argmax(evaluated_mu))]
        best = env.best_value()
        trace.add_evaluation(t, t, x, y, best - env.true_value(x),
                             best - env.true_value(recommendation), grid.size, 0,
                             wall_ns=time.perf_counter_ns() - begin)

    if len(trace):
        per_round = trace.total_wall_ns / len(trace) / 1e6
        logger.info(f"GP-UCB terminado: R_n={trace.cumulative_regret:.4f}, "
                    f"{per_round:.2f} ms por ronda con {grid.size} candidatos")
    return trace


def run_random(env: Environment, n: int, seed: int) -> RegretTrace:
    """
    Búsqueda aleatoria uniforme; el regret simple es el del mejor punto visto.

    Args:
        env (Environment): Entorno
        n (int): Evaluaciones
        seed (int): Semilla de las consultas

    Returns:
        RegretTrace: Traza (vacía si n = 0)
    """
    rng = np.random.default_rng(seed)
    domain = env.domain
    trace = RegretTrace(domain.dim, {'algorithm': 'random'})

    best_delta = np.inf
    for t in range(1, n + 1):
        begin = time.perf_counter_ns()
        x = domain.to_user(rng.random(domain.dim))
        y = env.query(x)
        delta = env.best_value() - env.true_value(x)
        best_delta = min(best_delta, delta)
        trace.add_evaluation(t, t, x, y, delta, best_delta, t, 0,
                             wall_ns=time.perf_counter_ns() - begin)

    logger.debug(f"Búsqueda aleatoria: {n} consultas, S_n={trace.simple_regret:.4f}")
    return trace
