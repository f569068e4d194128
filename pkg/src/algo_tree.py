"""
Algo Tree - Bandido GP por Árbol de Particiones
===============================================
Algoritmo adaptativo sobre un árbol N-ario (N impar): en cada ronda elige la
hoja de mayor índice optimista y decide entre refinarla (si la incertidumbre
en su centro ya es menor que la variación de la celda) o evaluarla.

Criterio de refinamiento: beta_n * sigma_{t-1}(x) <= V_h y h < h_max
(con igualdad se refina).
"""

import time
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from confidence import ConfidenceConfig, beta_n, v_h, q_h
from env import Environment
from gp_core import KernelSpec, PosteriorState
from partition_tree import PartitionNode, check_tiling, children, root
from regret_trace import RegretTrace

logger = logging.getLogger(__name__)


class BudgetExhausted(RuntimeError):
    """Se pidió un paso con el presupuesto de evaluaciones agotado."""


class InvariantViolation(RuntimeError):
    """Un invariante interno comprobado en modo depuración no se cumple."""


@dataclass
class LeafRecord:
    """Hoja activa y el centro (coordenadas de usuario) de su padre."""
    node: PartitionNode
    parent_center: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Refined:
    node: PartitionNode


@dataclass(frozen=True)
class Evaluated:
    x: np.ndarray
    y: float
    node: PartitionNode


@dataclass
class AnytimePhase:
    """Resultado de una fase del truco de duplicación."""
    phase: int
    budget: int
    beta: float
    recommendation: np.ndarray
    trace: RegretTrace = field(repr=False)


class TreeBandit:
    """
    Estado y bucle del algoritmo de árbol.

    En modo depuración se comprueba en cada refinado que las hojas embaldosan
    el dominio y que |L_t| <= (N-1) h_max n + 1.
    """

    def __init__(self, kernel: KernelSpec, domain, cfg: ConfidenceConfig,
                 posterior: Optional[PosteriorState] = None, debug: bool = False,
                 monitor: Optional[Callable[[Dict[str, object]], None]] = None,
                 metadata: Optional[Dict[str, object]] = None):
        """
        Inicializa el árbol con la raíz como única hoja.

        Args:
            kernel (KernelSpec): Kernel del GP
            domain (BoxDomain): Dominio de usuario
            cfg (ConfidenceConfig): Parámetros de confianza (N impar)
            posterior (PosteriorState): Posterior previo a reutilizar
            debug (bool): Comprobar el embaldosado en cada ronda
            monitor (callable): Recibe un dict por cada selección
            metadata (dict): Metadatos extra para la traza
        """
        if not cfg.params.is_odd or cfg.params.n_split < 3:
            raise ValueError(f"El algoritmo de árbol requiere N impar >= 3, recibido {cfg.params.n_split}")
        if cfg.params.dim != domain.dim:
            raise ValueError(f"Dimensión de parámetros {cfg.params.dim} distinta del dominio {domain.dim}")

        self.kernel = kernel
        self.domain = domain
        self.cfg = cfg
        self.params = cfg.params
        self.n = cfg.n
        self.beta = beta_n(cfg)
        self.h_max = cfg.h_max
        self.debug = debug
        self.monitor = monitor

        if posterior is None:
            posterior = PosteriorState(kernel, noise_var=cfg.sigma ** 2, debug=debug)
        self.posterior = posterior
        self.leaves: List[LeafRecord] = [LeafRecord(root(domain, self.params.n_split))]
        self.t = 0
        self.n_e = 0
        self.expansions = 0
        self.deepest_expanded: Optional[PartitionNode] = None
        self.eval_counts: Dict[Tuple[int, int], int] = {}
        self.selections: List[Dict[str, float]] = []

        self._v_cache: Dict[int, float] = {}
        self._stats_cache: Dict[Tuple[int, int], Tuple[float, float, float]] = {}

        trace_meta = {'algorithm': 'tree', 'beta': f"{self.beta:.17g}", 'h_max': self.h_max,
                      'n_split': self.params.n_split, 'theory_scale': cfg.theory_scale}
        trace_meta.update(metadata or {})
        self.trace = RegretTrace(domain.dim, trace_meta)

        logger.info(f"TreeBandit: n={self.n}, beta={self.beta:.3f}, h_max={self.h_max}, "
                    f"N={self.params.n_split}, D={domain.dim}")

    def v(self, h: int) -> float:
        """V_h en caché; V_{-1} no se usa."""
        if h not in self._v_cache:
            self._v_cache[h] = v_h(self.cfg, h)
        return self._v_cache[h]

    def center(self, node: PartitionNode) -> np.ndarray:
        return self.domain.to_user(node.center)

    def _leaf_stats(self) -> np.ndarray:
        """(índice, mu, sigma) de todas las hojas; sólo se recalculan las nuevas."""
        missing = [leaf for leaf in self.leaves if leaf.node.key not in self._stats_cache]
        if missing:
            centers = np.array([self.center(leaf.node) for leaf in missing])
            mu, sigma = self.posterior.query_many(centers)
            own = mu + self.beta * sigma

            with_parent = [i for i, leaf in enumerate(missing) if leaf.parent_center is not None]
            capped = own.copy()
            if with_parent:
                parents = np.array([missing[i].parent_center for i in with_parent])
                mu_p, sigma_p = self.posterior.query_many(parents)
                for j, i in enumerate(with_parent):
                    h = missing[i].node.depth
                    capped[i] = min(own[i], mu_p[j] + self.beta * sigma_p[j] + self.v(h - 1))

            for i, leaf in enumerate(missing):
                index = capped[i] + self.v(leaf.node.depth)
                self._stats_cache[leaf.node.key] = (float(index), float(mu[i]), float(sigma[i]))

        return np.array([self._stats_cache[leaf.node.key] for leaf in self.leaves])

    def index_i(self, leaf: LeafRecord) -> float:
        """
        Índice I_t = min(UCB propio, UCB del padre + V_{h-1}) + V_h.

        Args:
            leaf (LeafRecord): Hoja activa

        Returns:
            float: Índice de la hoja
        """
        mu, sigma = self.posterior.query(self.center(leaf.node))
        upper = mu + self.beta * sigma
        if leaf.parent_center is not None:
            mu_p, sigma_p = self.posterior.query(leaf.parent_center)
            upper = min(upper, mu_p + self.beta * sigma_p + self.v(leaf.node.depth - 1))
        return upper + self.v(leaf.node.depth)

    def _select(self) -> Tuple[int, np.ndarray]:
        stats = self._leaf_stats()
        best = max(range(len(self.leaves)),
                   key=lambda i: (stats[i, 0], self.leaves[i].node.depth, -self.leaves[i].node.index))
        return best, stats

    def step(self, env: Environment):
        """
        Una ronda: refinar la hoja seleccionada o evaluarla.

        Args:
            env (Environment): Entorno a consultar

        Returns:
            Refined | Evaluated: Acción tomada
        """
        if self.n_e >= self.n:
            raise BudgetExhausted(f"Presupuesto de {self.n} evaluaciones agotado")

        begin = time.perf_counter_ns()
        self.t += 1
        position, stats = self._select()
        leaf = self.leaves[position]
        node = leaf.node
        index, mu, sigma = stats[position]
        self.selections.append({'t': self.t, 'selected': float(index), 'max': float(stats[:, 0].max())})

        if self.monitor is not None:
            self.monitor({'t': self.t, 'x': self.center(node), 'mu': mu, 'sigma': sigma,
                          'beta': self.beta, 'node': node})

        h = node.depth
        if self.beta * sigma <= self.v(h) and h < self.h_max:
            return self._refine(position)
        return self._evaluate(position, env, begin)

    def _refine(self, position: int) -> Refined:
        leaf = self.leaves.pop(position)
        node = leaf.node
        parent_center = self.center(node)
        self.leaves.extend(LeafRecord(child, parent_center) for child in children(node, self.params))
        self._stats_cache.pop(node.key, None)
        self.expansions += 1
        if self.deepest_expanded is None or node.depth >= self.deepest_expanded.depth:
            self.deepest_expanded = node

        logger.debug(f"t={self.t}: refinado nodo {node.key}, {len(self.leaves)} hojas")
        if self.debug and not check_tiling([l.node for l in self.leaves]):
            raise InvariantViolation(f"Las hojas dejaron de embaldosar el dominio tras t={self.t}")
        if self.debug and len(self.leaves) > self.leaf_limit:
            raise InvariantViolation(f"{len(self.leaves)} hojas superan la cota {self.leaf_limit} en t={self.t}")
        return Refined(node)

    def _evaluate(self, position: int, env: Environment, begin: int) -> Evaluated:
        node = self.leaves[position].node
        x = self.center(node)
        y = env.query(x)
        self.posterior.update(x, y)
        self.n_e += 1
        self.eval_counts[node.key] = self.eval_counts.get(node.key, 0) + 1
        self._stats_cache.clear()

        recommendation = self.recommendation()
        f_x = env.true_value(x)
        f_rec = env.true_value(recommendation)
        best = env.best_value()
        self.trace.add_evaluation(self.t, self.n_e, x, y, best - f_x, best - f_rec,
                                  len(self.leaves), node.depth,
                                  wall_ns=time.perf_counter_ns() - begin)

        logger.debug(f"t={self.t}: evaluado {node.key} en {x.tolist()}, y={y:.4f}")
        return Evaluated(x, y, node)

    def recommendation(self) -> np.ndarray:
        """Centro del nodo expandido más profundo (el más reciente en empates)."""
        node = self.deepest_expanded or root(self.domain, self.params.n_split)
        return self.center(node)

    @property
    def leaf_limit(self) -> int:
        """Cota (N-1) h_max n + 1 del número de hojas."""
        return (self.params.n_split - 1) * max(self.h_max, 1) * self.n + 1

    def repeat_budget(self, h: int) -> int:
        """q_h con el beta de esta ejecución."""
        return q_h(self.cfg, h, beta=self.beta)

    def run(self, env: Environment) -> Tuple[RegretTrace, np.ndarray]:
        """
        Ejecuta hasta agotar el presupuesto.

        Args:
            env (Environment): Entorno

        Returns:
            Tuple[RegretTrace, np.ndarray]: (traza, recomendación)
        """
        while self.n_e < self.n:
            self.step(env)

        logger.info(f"TreeBandit terminado: t={self.t}, hojas={len(self.leaves)}, "
                    f"R_n={self.trace.cumulative_regret:.4f}")
        return self.trace, self.recommendation()


def run(env: Environment, kernel: KernelSpec, cfg: ConfidenceConfig,
        debug: bool = False) -> Tuple[RegretTrace, np.ndarray]:
    """Ejecución completa del algoritmo de árbol sobre el dominio del entorno."""
    return TreeBandit(kernel, env.domain, cfg, debug=debug).run(env)


def run_anytime(env: Environment, kernel: KernelSpec,
                cfg_factory: Callable[[int], ConfidenceConfig],
                n0: int = 4, phases: Optional[int] = None) -> Iterator[AnytimePhase]:
    """
    Truco de duplicación: fases con presupuestos n0 * 2^j.

    Cada fase recalcula beta y V para su presupuesto y conserva el posterior.

    Args:
        env (Environment): Entorno
        kernel (KernelSpec): Kernel
        cfg_factory (callable): Presupuesto -> ConfidenceConfig
        n0 (int): Presupuesto de la primera fase
        phases (int): Número de fases; None para un flujo sin fin

    Yields:
        AnytimePhase: Resultado de cada fase
    """
    posterior: Optional[PosteriorState] = None
    j = 0
    while phases is None or j < phases:
        budget = n0 * 2 ** j
        bandit = TreeBandit(kernel, env.domain, cfg_factory(budget), posterior=posterior)
        trace, recommendation = bandit.run(env)
        posterior = bandit.posterior
        yield AnytimePhase(j, budget, bandit.beta, recommendation, trace)
        j += 1
