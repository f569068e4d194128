"""
Algo Contextual - Bandido GP Contextual por Árbol Binario
=========================================================
Árbol binario de particiones sobre el producto contexto x acción. Para cada
contexto recibido se restringe a las hojas relevantes (las que contienen el
contexto), se refina hasta que la hoja elegida deba evaluarse y se juega
exactamente una acción.

Cada nodo expandido guarda su punto candidato x-barra (el representante
elegido al expandirlo), que sustituye al centro del padre en el índice.
"""

import math
import time
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from algo_tree import InvariantViolation
from confidence import ConfidenceConfig, beta_n, v_h
from env import ContextualEnvironment
from gp_core import KernelSpec, PosteriorState
from partition_tree import BoxDomain, PartitionNode, check_tiling, children, root
from regret_trace import RegretTrace

logger = logging.getLogger(__name__)

XBAR_TOL = 1e-9


@dataclass(frozen=True)
class ContextualRound:
    context: np.ndarray
    action: np.ndarray
    reward: float
    delta_c: float
    depth: int
    refinements: int


class ContextualBandit:
    """Estado del algoritmo contextual (N = 2, beta en modo 'worst')."""

    def __init__(self, kernel: KernelSpec, context_domain: BoxDomain, action_domain: BoxDomain,
                 cfg: ConfidenceConfig, debug: bool = False,
                 metadata: Optional[Dict[str, object]] = None):
        """
        Inicializa el árbol sobre el dominio producto.

        Args:
            kernel (KernelSpec): Kernel sobre (contexto, acción)
            context_domain (BoxDomain): Dominio de contextos
            action_domain (BoxDomain): Dominio de acciones
            cfg (ConfidenceConfig): Parámetros (N = 2, dimensión D_c + D_a)
            debug (bool): Comprobaciones por ronda (embaldosado, propiedad de x-barra)
            metadata (dict): Metadatos extra de la traza
        """
        if cfg.params.n_split != 2:
            raise ValueError(f"El algoritmo contextual usa un árbol binario, recibido N={cfg.params.n_split}")
        self.context_domain = context_domain
        self.action_domain = action_domain
        self.domain = context_domain.product(action_domain)
        if cfg.params.dim != self.domain.dim:
            raise ValueError(f"Dimensión de parámetros {cfg.params.dim} distinta de {self.domain.dim}")

        self.kernel = kernel
        self.cfg = cfg
        self.params = cfg.params
        self.d_c = context_domain.dim
        self.beta = beta_n(cfg)
        self.h_max = cfg.h_max
        self.debug = debug

        self.posterior = PosteriorState(kernel, noise_var=cfg.sigma ** 2, debug=debug)
        self.leaves: List[PartitionNode] = [root(self.domain, 2)]
        self.xbar: Dict[Tuple[int, int], np.ndarray] = {}
        self._xbar_depth: Dict[Tuple[int, int], int] = {}
        self.t = 0
        self.tau = 0
        self.evaluations_per_context: List[int] = []

        self._v_cache: Dict[int, float] = {}
        trace_meta = {'algorithm': 'contextual', 'beta': f"{self.beta:.17g}", 'h_max': self.h_max,
                      'theory_scale': cfg.theory_scale}
        trace_meta.update(metadata or {})
        self.trace = RegretTrace(self.domain.dim, trace_meta)

        logger.info(f"ContextualBandit: beta={self.beta:.3f}, h_max={self.h_max}, "
                    f"D_c={self.d_c}, D_a={action_domain.dim}")

    def v(self, h: int) -> float:
        if h not in self._v_cache:
            self._v_cache[h] = v_h(self.cfg, h)
        return self._v_cache[h]

    def g_cell(self, h: int) -> float:
        """g(v1 rho^h)."""
        return self.cfg.envelope.g(self.params.v1 * self.params.rho ** h)

    def delta_c_bound(self, h: int) -> float:
        """(9/2) V_{h-1} + 2 beta g(v1 rho^{h-1}); sin cota en la raíz."""
        if h == 0:
            return math.inf
        return 4.5 * self.v(h - 1) + 2.0 * self.beta * self.g_cell(h - 1)

    def relevant_leaves(self, context) -> List[Tuple[PartitionNode, np.ndarray]]:
        """
        Hojas cuya rebanada de contexto contiene el contexto, con su representante.

        Args:
            context: Contexto en coordenadas de usuario

        Returns:
            List[Tuple[PartitionNode, np.ndarray]]: (hoja, punto (contexto, acción-centro))
        """
        context = np.asarray(context, dtype=float).reshape(-1)
        if context.shape[0] != self.d_c or not self.context_domain.contains(context):
            raise ValueError(f"Contexto fuera del dominio de contextos: {context.tolist()}")

        z = self.context_domain.to_unit(context)
        result = []
        for node in self.leaves:
            lo, hi = node.lower[:self.d_c], node.upper[:self.d_c]
            inside = (lo <= z) & ((z < hi) | ((z == hi) & (hi == 1.0)))
            if np.all(inside):
                unit_point = np.concatenate([z, node.center[self.d_c:]])
                result.append((node, self.domain.to_user(unit_point)))
        return result

    def _parent_point(self, node: PartitionNode) -> np.ndarray:
        key = node.parent_key
        if key not in self.xbar:
            raise InvariantViolation(f"Falta x-barra del padre {key} del nodo {node.key}")
        return self.xbar[key]

    def index_ic(self, node: PartitionNode, point: np.ndarray) -> float:
        """
        min(UCB en el representante, UCB en x-barra del padre + V_{h-1}) + V_h.
        """
        mu, sigma = self.posterior.query(point)
        upper = mu + self.beta * sigma
        if node.depth > 0:
            mu_p, sigma_p = self.posterior.query(self._parent_point(node))
            upper = min(upper, mu_p + self.beta * sigma_p + self.v(node.depth - 1))
        return upper + self.v(node.depth)

    def _indices(self, relevant: List[Tuple[PartitionNode, np.ndarray]]) -> Tuple[np.ndarray, np.ndarray]:
        points = np.array([p for _, p in relevant])
        mu, sigma = self.posterior.query_many(points)
        upper = mu + self.beta * sigma

        non_root = [i for i, (node, _) in enumerate(relevant) if node.depth > 0]
        if non_root:
            parents = np.array([self._parent_point(relevant[i][0]) for i in non_root])
            mu_p, sigma_p = self.posterior.query_many(parents)
            for j, i in enumerate(non_root):
                h = relevant[i][0].depth
                upper[i] = min(upper[i], mu_p[j] + self.beta * sigma_p[j] + self.v(h - 1))

        depths = np.array([node.depth for node, _ in relevant])
        return upper + np.array([self.v(h) for h in depths]), sigma

    def _check_xbar(self):
        if not self.xbar:
            return
        keys = list(self.xbar)
        _, sigma = self.posterior.query_many(np.array([self.xbar[k] for k in keys]))
        for key, s in zip(keys, sigma):
            h = self._xbar_depth[key]
            if self.beta * s > self.v(h) + self.beta * self.g_cell(h) + XBAR_TOL:
                raise InvariantViolation(f"Propiedad de x-barra violada en el nodo {key}")

    def serve_context(self, env: ContextualEnvironment, context) -> ContextualRound:
        """
        Atiende un contexto: refina hasta que toque evaluar y juega una acción.

        Args:
            env (ContextualEnvironment): Entorno contextual
            context: Contexto observado

        Returns:
            ContextualRound: Ronda jugada
        """
        begin = time.perf_counter_ns()
        context = np.asarray(context, dtype=float).reshape(-1)
        self.tau += 1
        refinements = 0
        iterations = 0

        while True:
            iterations += 1
            if iterations > max(self.h_max, 1) * len(self.leaves) + 1:
                raise InvariantViolation(f"Bucle interno sin evaluar tras {iterations} iteraciones "
                                         f"en el contexto {self.tau}")
            self.t += 1
            relevant = self.relevant_leaves(context)
            indices, sigma = self._indices(relevant)
            best = max(range(len(relevant)),
                       key=lambda i: (indices[i], relevant[i][0].depth, -relevant[i][0].index))
            node, point = relevant[best]
            h = node.depth

            if self.beta * sigma[best] <= self.v(h) + self.beta * self.g_cell(h) and h < self.h_max:
                self.leaves.remove(node)
                self.leaves.extend(children(node, self.params))
                self.xbar[node.key] = point
                self._xbar_depth[node.key] = h
                refinements += 1
                if self.debug and not check_tiling(self.leaves):
                    raise InvariantViolation(f"Las hojas dejaron de embaldosar el dominio en t={self.t}")
                continue

            action = point[self.d_c:]
            reward = env.query(context, action)
            self.posterior.update(point, reward)
            delta_c = env.best_action_value(context) - env.true_value(context, action)
            self.evaluations_per_context.append(1)
            self.trace.add_evaluation(self.t, self.tau, point, reward, delta_c, np.nan,
                                      len(self.leaves), h, wall_ns=time.perf_counter_ns() - begin)
            if self.debug:
                self._check_xbar()

            logger.debug(f"Contexto {self.tau}: acción {action.tolist()} a profundidad {h}, "
                         f"{refinements} refinamientos, delta_c={delta_c:.4f}")
            return ContextualRound(context, action, reward, delta_c, h, refinements)

    def run(self, env: ContextualEnvironment, n: int) -> RegretTrace:
        """
        Atiende n contextos del flujo del entorno.

        Args:
            env (ContextualEnvironment): Entorno
            n (int): Número de contextos

        Returns:
            RegretTrace: Traza con R_n^c acumulado
        """
        for _ in range(n):
            self.serve_context(env, env.next_context())

        logger.info(f"ContextualBandit terminado: {self.tau} contextos, hojas={len(self.leaves)}, "
                    f"R_n^c={self.trace.cumulative_regret:.4f}")
        return self.trace


def run(env, kernel: KernelSpec, cfg: ConfidenceConfig, n: int, debug: bool = False) -> RegretTrace:
    """Ejecución completa sobre los dominios del entorno contextual."""
    bandit = ContextualBandit(kernel, env.context_domain, env.action_domain, cfg, debug=debug)
    return bandit.run(env, n)
