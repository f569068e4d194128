"""
Confidence - Cotas de Confianza por Encadenamiento
==================================================
Constantes de encadenamiento (C1..C4), cotas de variación w_b, V_h y W(r_k),
multiplicadores beta_n, profundidad máxima h_max y presupuesto de
repeticiones q_h. Todas son funciones puras de ConfidenceConfig.
"""

from __future__ import annotations

import math
import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Optional, Tuple

from gp_core import KernelSpec, SmoothnessEnvelope, envelope
from partition_tree import BoxDomain, PartitionParams

logger = logging.getLogger(__name__)

BETA_MODES = ('tight_odd_n', 'worst')
SERIES_TERMS = 200


@lru_cache(maxsize=None)
def chaining_series() -> Tuple[float, float]:
    """
    Sumas alpha1 = sum 2^-(n-1) sqrt(log n) y alpha2 = sum 2^-(n-1) sqrt(n).

    La cola tras 200 términos es menor que 2^-190, muy por debajo de 1e-12.
    """
    alpha1 = math.fsum(2.0 ** (-(n - 1)) * math.sqrt(math.log(n)) for n in range(1, SERIES_TERMS + 1))
    alpha2 = math.fsum(2.0 ** (-(n - 1)) * math.sqrt(n) for n in range(1, SERIES_TERMS + 1))
    return alpha1, alpha2


@dataclass(frozen=True)
class ChainingConstants:
    """Constantes C1 (recubrimiento), C2, C3 y la familia C4(k)."""
    alpha1: float
    alpha2: float
    c1_cov: float
    c2: float
    c3: float
    d1_prime: float

    def c4_of(self, k: int) -> float:
        """C4 del nivel k: C2 + 2 log(max(k,1)^2 pi^2 / 6)."""
        k = max(int(k), 1)
        return self.c2 + 2.0 * math.log(k * k * math.pi ** 2 / 6.0)


def chaining_constants(env: SmoothnessEnvelope, d1: int) -> ChainingConstants:
    """
    Constantes de encadenamiento para una caja normalizada de dimensión d1.

    Args:
        env (SmoothnessEnvelope): Envolvente del kernel
        d1 (int): Dimensión métrica D1 bajo l_inf

    Returns:
        ChainingConstants: Constantes calculadas
    """
    alpha1, alpha2 = chaining_series()
    d1_prime = d1 / env.alpha
    c1_cov = max(1.0, env.c_k ** d1_prime)
    c2 = 2.0 * math.log(2.0 * c1_cov ** 2 * math.pi ** 2 / 6.0)
    c3 = alpha1 + alpha2 * math.sqrt(d1_prime * math.log(2.0))
    return ChainingConstants(alpha1, alpha2, c1_cov, c2, c3, d1_prime)


@dataclass
class ConfidenceConfig:
    """
    Parámetros de confianza de una ejecución.

    theory_scale multiplica V_h y W(r_k); vale 1 en validación.
    """
    u: float
    n: int
    sigma: float
    d1: int
    envelope: SmoothnessEnvelope
    params: PartitionParams
    theory_scale: float = 1.0
    beta_mode: str = 'tight_odd_n'

    def __post_init__(self):
        if self.u < 0:
            raise ValueError(f"u debe ser >= 0, recibido {self.u}")
        if self.n < 1:
            raise ValueError(f"El presupuesto n debe ser >= 1, recibido {self.n}")
        if self.sigma < 0:
            raise ValueError(f"sigma debe ser >= 0, recibido {self.sigma}")
        if self.theory_scale <= 0:
            raise ValueError(f"theory_scale debe ser positivo, recibido {self.theory_scale}")
        if self.beta_mode not in BETA_MODES:
            raise ValueError(f"beta_mode desconocido: {self.beta_mode!r} (use {BETA_MODES})")
        if self.theory_scale != 1.0:
            logger.warning(f"theory_scale = {self.theory_scale}: V_h y W(r_k) escalados "
                           f"respecto a las constantes teóricas")

    @cached_property
    def constants(self) -> ChainingConstants:
        return chaining_constants(self.envelope, self.d1)

    @cached_property
    def h_max(self) -> int:
        return h_max(self)

    @cached_property
    def beta(self) -> float:
        return beta_n(self)


def make_confidence_config(kernel: KernelSpec, domain: BoxDomain, n: int, sigma: float,
                           u: float = 2.0, n_split: int = 3, theory_scale: float = 1.0,
                           beta_mode: str = 'tight_odd_n') -> ConfidenceConfig:
    """
    Construye la configuración de confianza para un kernel y un dominio.

    Args:
        kernel (KernelSpec): Kernel del GP
        domain (BoxDomain): Dominio de usuario
        n (int): Presupuesto de evaluaciones
        sigma (float): Desviación del ruido
        u (float): Exponente de fallo
        n_split (int): Aridad del árbol
        theory_scale (float): Multiplicador de V_h y W
        beta_mode (str): 'tight_odd_n' o 'worst'

    Returns:
        ConfidenceConfig: Configuración lista para los algoritmos
    """
    env = envelope(kernel, dim=domain.dim, scale=domain.max_side)
    params = PartitionParams(n_split, domain.dim)
    return ConfidenceConfig(u=u, n=n, sigma=sigma, d1=domain.dim, envelope=env, params=params,
                            theory_scale=theory_scale, beta_mode=beta_mode)


def h_max(cfg: ConfidenceConfig) -> int:
    """ceil(log n / (2 alpha log(1/rho)) * (1 + 1/alpha)); 0 para n = 1."""
    alpha = cfg.envelope.alpha
    log_inv_rho = -math.log(cfg.params.rho)
    value = math.log(cfg.n) / (2.0 * alpha * log_inv_rho) * (1.0 + 1.0 / alpha)
    return max(0, math.ceil(value - 1e-12))


def packing_constant_worst(params: PartitionParams) -> float:
    """Constante de empaquetamiento (4N)^D de la caja normalizada."""
    return float((4 * params.n_split) ** params.dim)


def beta_n(cfg: ConfidenceConfig, mode: Optional[str] = None,
           depth_cap: Optional[int] = None) -> float:
    """
    Multiplicador beta_n del algoritmo de árbol.

    Args:
        cfg (ConfidenceConfig): Configuración
        mode (str): 'tight_odd_n' o 'worst'; por defecto cfg.beta_mode
        depth_cap (int): h_max a usar; por defecto el de la configuración

    Returns:
        float: beta_n
    """
    mode = mode or cfg.beta_mode
    hm = max(cfg.h_max if depth_cap is None else depth_cap, 1)
    n = cfg.n
    if mode == 'tight_odd_n':
        N = cfg.params.n_split
        return math.sqrt(2.0 * (cfg.u + math.log(2.0 * N * hm * hm * n * n)))
    if mode == 'worst':
        C = packing_constant_worst(cfg.params)
        log_inv_rho = -math.log(cfg.params.rho)
        return math.sqrt(2.0 * (cfg.u + math.log(2.0 * hm * n * C) + cfg.d1 * hm * log_inv_rho))
    raise ValueError(f"beta_mode desconocido: {mode!r}")


def beta_zoom(cfg: ConfidenceConfig) -> float:
    """beta_n del algoritmo de zoom: sqrt(2(u + 2 log 2^D + (D/alpha + 1) log n))."""
    C = 2.0 ** cfg.d1
    exponent = cfg.d1 / cfg.envelope.alpha + 1.0
    return math.sqrt(2.0 * (cfg.u + 2.0 * math.log(C) + exponent * math.log(cfg.n)))


def beta_union(cfg: ConfidenceConfig, n_candidates: int) -> float:
    """beta_n por unión sobre rondas y candidatos: sqrt(2(u + log(2 n |grid|)))."""
    return math.sqrt(2.0 * (cfg.u + math.log(2.0 * cfg.n * max(n_candidates, 1))))


def v_h(cfg: ConfidenceConfig, h: int) -> float:
    """
    Cota de variación V_h de la función dentro de una celda de profundidad h.

    Args:
        cfg (ConfidenceConfig): Configuración
        h (int): Profundidad

    Returns:
        float: V_h (escalado por theory_scale)
    """
    g = cfg.envelope.g(cfg.params.v1 * cfg.params.rho ** h)
    if g <= 0.0:
        return 0.0
    const = cfg.constants
    inner = (2.0 * cfg.u + const.c4_of(h) + h * math.log(cfg.params.n_split)
             + 2.0 * cfg.d1 * math.log(1.0 / g))
    return cfg.theory_scale * 4.0 * g * (math.sqrt(max(0.0, inner)) + const.c3)


def w_ball(cfg: ConfidenceConfig, b: float, u: Optional[float] = None) -> float:
    """Cota de encadenamiento para una bola-d de radio b."""
    if b <= 0:
        raise ValueError(f"El radio b debe ser positivo, recibido {b}")
    u = cfg.u if u is None else u
    const = cfg.constants
    inner = const.c2 + 2.0 * u + 2.0 * const.d1_prime * math.log(1.0 / b)
    return 4.0 * b * (math.sqrt(max(0.0, inner)) + const.c3)


def zoom_level_cardinality(cfg: ConfidenceConfig, k: int) -> int:
    """|X_k|: centros de una red l_inf de radio 2^-k del cubo unidad."""
    return math.ceil(2.0 ** (k - 1)) ** cfg.d1


def w_cap(cfg: ConfidenceConfig, k: int, r_k: Optional[float] = None) -> float:
    """
    Cota W(r_k) del algoritmo de zoom para el nivel k.

    Args:
        cfg (ConfidenceConfig): Configuración
        k (int): Nivel de radio, r_k = 2^-k en la caja normalizada
        r_k (float): Radio explícito; por defecto 2^-k

    Returns:
        float: W(r_k) (escalado por theory_scale)
    """
    if k < 0:
        raise ValueError(f"El nivel k debe ser >= 0, recibido {k}")
    r_k = 2.0 ** (-k) if r_k is None else r_k
    g = cfg.envelope.g(r_k)
    if g <= 0.0:
        return 0.0
    const = cfg.constants
    inner = (const.c4_of(k) + 2.0 * cfg.u + 2.0 * math.log(zoom_level_cardinality(cfg, k))
             + 2.0 * cfg.d1 * math.log(2.0 ** k))
    return cfg.theory_scale * 8.0 * g * (math.sqrt(max(0.0, inner)) + const.c3)


def q_h(cfg: ConfidenceConfig, h: int, beta: Optional[float] = None) -> int:
    """Máximo de evaluaciones de una hoja antes de expandirla: ceil(sigma^2 beta^2 / V_h^2)."""
    if cfg.sigma == 0:
        return 1
    beta = cfg.beta if beta is None else beta
    v = v_h(cfg, h)
    return max(1, math.ceil(cfg.sigma ** 2 * beta ** 2 / v ** 2))


def zoom_r_min(cfg: ConfidenceConfig) -> float:
    """Radio mínimo n^(-1/(2 alpha)) en la caja normalizada."""
    return cfg.n ** (-1.0 / (2.0 * cfg.envelope.alpha))


def zoom_repeat_budget(cfg: ConfidenceConfig, k: int, beta: float) -> int:
    """ceil(sigma^2 beta^2 / (2 W(r_k)^2)), 1 sin ruido."""
    if cfg.sigma == 0:
        return 1
    w = w_cap(cfg, k)
    return max(1, math.ceil(cfg.sigma ** 2 * beta ** 2 / (2.0 * w * w)))
