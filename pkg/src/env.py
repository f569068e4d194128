"""
Env - Entornos Sintéticos
=========================
Funciones objetivo con verdad conocida: muestras de GP sobre rejilla con
revelado perezoso fuera de ella, los dos procesos de juguete con máximo
exacto y sus estrategias de referencia, y entornos contextuales sobre un
producto contexto x acción.

El ruido de observación sale de un flujo aleatorio independiente del de la
función, de modo que la misma f puede reejecutarse con otro ruido.
"""

import copy
import math
import time
import logging
from abc import ABC, abstractmethod
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from gp_core import (KernelSpec, LazySampler, factorize_grid, info_gain_from_gram,
                     MAX_DENSE_POINTS, GridTooLargeError, as_point)
from partition_tree import BoxDomain
from regret_trace import RegretTrace

logger = logging.getLogger(__name__)

TOY1_I_MAX = 20
TOY2_DEPTH_MAX = 12
TOY2_BEST_GRID_LEVELS = 10


def spawn_streams(seed: int, count: int = 3) -> List[np.random.SeedSequence]:
    """Flujos independientes (función, ruido, contextos) derivados de una semilla."""
    return np.random.SeedSequence(seed).spawn(count)


def bump(z) -> np.ndarray:
    """phi(z) = sin(pi z) en [0, 1] y 0 fuera: continua, unimodal, phi(1/2) = 1."""
    z = np.asarray(z, dtype=float)
    inside = (z >= 0.0) & (z <= 1.0)
    return np.where(inside, np.sin(np.pi * np.clip(z, 0.0, 1.0)), 0.0)


def axis_grid(domain: BoxDomain, resolution: int) -> np.ndarray:
    """Producto cartesiano de linspace(lower, upper, resolution) por eje."""
    axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(domain.lower, domain.upper)]
    return np.array(list(product(*axes)), dtype=float)


class Environment(ABC):
    """
    Interfaz de entorno: query(x) = f(x) + eta, eta ~ N(0, sigma^2).

    true_value es determinista; best_value devuelve f(x*) exacto o una
    aproximación por rejilla, según best_value_mode.
    """

    best_value_mode = 'exact'

    def __init__(self, domain: BoxDomain, sigma: float, noise_seed=None):
        if sigma < 0:
            raise ValueError(f"sigma debe ser >= 0, recibido {sigma}")
        self.domain = domain
        self.sigma = float(sigma)
        self._noise_rng = np.random.default_rng(noise_seed)

    @abstractmethod
    def true_value(self, x) -> float:
        """f(x) sin ruido."""

    @abstractmethod
    def best_value(self) -> float:
        """f(x*) (o su aproximación de rejilla)."""

    def query(self, x) -> float:
        """Observación ruidosa en x."""
        value = self.true_value(x)
        if self.sigma == 0:
            return value
        return value + self.sigma * float(self._noise_rng.standard_normal())

    def regret(self, x) -> float:
        return self.best_value() - self.true_value(x)

    def with_noise_seed(self, noise_seed) -> 'Environment':
        """Copia con la misma función y un flujo de ruido nuevo."""
        clone = copy.deepcopy(self)
        clone._noise_rng = np.random.default_rng(noise_seed)
        return clone


class GridGPEnv(Environment):
    """
    Muestra de GP fijada en una rejilla y extendida perezosamente fuera de ella.
    """

    best_value_mode = 'grid'

    def __init__(self, kernel: KernelSpec, domain: BoxDomain, grid_res: int, sigma: float,
                 seed: int, jitter: Optional[float] = None):
        """
        Inicializa el entorno muestreando la rejilla.

        Args:
            kernel (KernelSpec): Kernel del GP
            domain (BoxDomain): Dominio de usuario
            grid_res (int): Puntos por eje
            sigma (float): Desviación del ruido
            seed (int): Semilla (función y ruido se derivan de ella)
            jitter (float): Jitter inicial de la factorización
        """
        if grid_res < 1:
            raise ValueError(f"grid_res debe ser >= 1, recibido {grid_res}")
        size = grid_res ** domain.dim
        if size > MAX_DENSE_POINTS:
            raise GridTooLargeError(
                f"Rejilla de {size} puntos excede {MAX_DENSE_POINTS}; use grid_res <= "
                f"{int(MAX_DENSE_POINTS ** (1.0 / domain.dim))} en D={domain.dim}")

        function_seq, noise_seq, lazy_seq = spawn_streams(seed)
        super().__init__(domain, sigma, noise_seq)
        self.kernel = kernel
        self.seed = seed
        self.grid = axis_grid(domain, grid_res)

        chol, used_jitter = factorize_grid(kernel, self.grid, jitter)
        self.grid_values = chol @ np.random.default_rng(function_seq).standard_normal(size)
        self.sampler = LazySampler.conditioned_on_grid(kernel, self.grid, self.grid_values,
                                                       chol, used_jitter, lazy_seq)
        logger.debug(f"GridGPEnv: {size} puntos, kernel {kernel.describe()}, semilla {seed}")

    def true_value(self, x) -> float:
        return self.sampler.sample(as_point(x))

    def best_value(self) -> float:
        return self.sampler.max_revealed


def make_grid_gp(kernel: KernelSpec, domain: BoxDomain, grid_res: int, sigma: float,
                 seed: int, jitter: Optional[float] = None) -> GridGPEnv:
    """Entorno de GP sobre rejilla con revelado perezoso."""
    return GridGPEnv(kernel, domain, grid_res, sigma, seed, jitter=jitter)


# Ejemplo de juguete 1

def toy1_amplitudes(delta: float, count: int) -> np.ndarray:
    """a_1 = 1/Phi^-1((1+delta)/2); a_i = 1/(2 sqrt(2 log(pi^2 i^2/(6 delta)))) para i >= 2."""
    if not 0 < delta < 1:
        raise ValueError(f"delta debe estar en (0, 1), recibido {delta}")
    a = np.empty(count)
    a[0] = 1.0 / norm.ppf((1.0 + delta) / 2.0)
    i = np.arange(2, count + 1, dtype=float)
    a[1:] = 1.0 / (2.0 * np.sqrt(2.0 * np.log(np.pi ** 2 * i ** 2 / (6.0 * delta))))
    return a


def toy1_default_sigma(delta: float) -> float:
    """Ruido con P(|eta| <= 1/2) = 1 - delta."""
    return 1.0 / (2.0 * norm.ppf(1.0 - delta / 2.0))


class ToyEnv1(Environment):
    """
    f(x) = sum_i a_i X_i (phi(x/b_i - 1) - phi(x/b_i - 2)), b_i = 3^-i, en [0, 1].

    Los soportes (3^-i, 3^-i+1] son disjuntos, así que f(x*) = max_i a_i |X_i|.
    """

    def __init__(self, delta: float = 0.05, seed: int = 0, sigma: Optional[float] = None,
                 i_max: int = TOY1_I_MAX):
        function_seq, noise_seq, _ = spawn_streams(seed)
        sigma = toy1_default_sigma(delta) if sigma is None else sigma
        super().__init__(BoxDomain.unit(1), sigma, noise_seq)
        self.delta = delta
        self.i_max = i_max
        self.amplitudes = toy1_amplitudes(delta, i_max)
        self.scales = 3.0 ** -np.arange(1, i_max + 1, dtype=float)
        self.draws = np.random.default_rng(function_seq).standard_normal(i_max)

    def features(self, x) -> np.ndarray:
        """psi_i(x) = phi(x/b_i - 1) - phi(x/b_i - 2) para cada nivel: forma (len(x), i_max)."""
        x = np.asarray(x, dtype=float).reshape(-1, 1)
        z = x / self.scales[None, :]
        return bump(z - 1.0) - bump(z - 2.0)

    def values(self, x) -> np.ndarray:
        return self.features(x) @ (self.amplitudes * self.draws)

    def true_value(self, x) -> float:
        return float(self.values(as_point(x)[0])[0])

    def best_value(self) -> float:
        return float(np.max(self.amplitudes * np.abs(self.draws)))

    def best_point(self) -> float:
        i = int(np.argmax(self.amplitudes * np.abs(self.draws)))
        return self.scales[i] * (1.5 if self.draws[i] >= 0 else 2.5)

    def peak_points(self, n: int) -> np.ndarray:
        """Picos 1.5 * 3^-i de los primeros n niveles, forma (n, 1)."""
        if n > self.i_max:
            raise ValueError(f"n={n} excede la truncación i_max={self.i_max}")
        return (1.5 * self.scales[:n]).reshape(-1, 1)

    def covariance_gram(self, X, Y=None) -> np.ndarray:
        """Cov(f(x), f(y)) = sum_i a_i^2 psi_i(x) psi_i(y)."""
        Fx = self.features(X)
        Fy = Fx if Y is None else self.features(Y)
        return (Fx * self.amplitudes ** 2) @ Fy.T

    def events(self, eta1: float) -> Dict[str, bool]:
        """Eventos que garantizan el acierto: a1|X1| >= 1, a_i|X_i| <= 1/2 para i >= 2 y |eta1| <= 1/2."""
        scaled = self.amplitudes * np.abs(self.draws)
        return {
            'first_level_large': bool(scaled[0] >= 1.0),
            'deep_levels_small': bool(np.all(scaled[1:] <= 0.5)),
            'small_noise': bool(abs(eta1) <= 0.5),
        }


def toy1_value(env: ToyEnv1, x: float) -> float:
    """Valor exacto de la serie truncada en x."""
    return env.true_value(x)


def toy1_one_shot(env: ToyEnv1) -> Dict[str, object]:
    """
    Estrategia de una evaluación: observar en 1/2 y recomendar 1/2 o 5/6 por el signo.

    Returns:
        Dict: observación, recomendación, éxito y eventos de acierto
    """
    y = env.query(0.5)
    eta1 = y - env.true_value(0.5)
    recommendation = 0.5 if y > 0 else 5.0 / 6.0
    regret = env.best_value() - env.true_value(recommendation)
    events = env.events(eta1)
    result = {
        'observation': y,
        'recommendation': recommendation,
        'simple_regret': regret,
        'success': bool(regret <= 1e-12),
        **events,
    }
    logger.debug(f"Toy1 una evaluación: y={y:.4f}, recomendado {recommendation:.4f}, "
                 f"eventos {events}")
    return result


def toy1_gamma_lower(env: ToyEnv1, n: int, sigma: float, halved: bool = True) -> float:
    """
    Cota inferior de la ganancia de información: sum_{i<=n} log(1 + a_i^2/sigma^2).

    Args:
        env (ToyEnv1): Entorno (aporta las amplitudes)
        n (int): Número de observaciones, n <= i_max
        sigma (float): Desviación del ruido
        halved (bool): Con el factor 1/2 de la información mutua (nats)

    Returns:
        float: Cota inferior
    """
    if n > env.i_max:
        raise ValueError(f"n={n} excede la truncación i_max={env.i_max}")
    total = float(np.sum(np.log1p(env.amplitudes[:n] ** 2 / sigma ** 2)))
    return 0.5 * total if halved else total


def toy1_gamma_closed_form(n: int, sigma: float, delta: float, halved: bool = True) -> float:
    """n * min(1/2, 1/(16 sigma^2 log(pi^2 n^2/(3 delta)))), opcionalmente en nats."""
    bound = n * min(0.5, 1.0 / (16.0 * sigma ** 2 * math.log(math.pi ** 2 * n ** 2 / (3.0 * delta))))
    return 0.5 * bound if halved else bound


def toy1_gamma_computed(env: ToyEnv1, n: int, sigma: float) -> float:
    """Información mutua exacta de observar los n picos con ruido sigma^2."""
    gram = env.covariance_gram(env.peak_points(n))
    return info_gain_from_gram(gram, sigma ** 2)


# Ejemplo de juguete 2

def toy2_amplitudes(delta: float, count: int) -> np.ndarray:
    """a_i = 1/(i^2 sqrt(2 log(pi^2 i^2/(3 delta))))."""
    if not 0 < delta < 1:
        raise ValueError(f"delta debe estar en (0, 1), recibido {delta}")
    i = np.arange(1, count + 1, dtype=float)
    return 1.0 / (i ** 2 * np.sqrt(2.0 * np.log(np.pi ** 2 * i ** 2 / (3.0 * delta))))


def ternary_bump(z: np.ndarray) -> np.ndarray:
    """phi_1: phi(3z) en [0,1/3), phi(3z-1) en [1/3,2/3), -phi(3z-2) en [2/3,1]."""
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    left = (z >= 0.0) & (z < 1.0 / 3.0)
    middle = (z >= 1.0 / 3.0) & (z < 2.0 / 3.0)
    right = (z >= 2.0 / 3.0) & (z <= 1.0)
    out[left] = bump(3.0 * z[left])
    out[middle] = bump(3.0 * z[middle] - 1.0)
    out[right] = -bump(3.0 * z[right] - 2.0)
    return out


class ToyEnv2(Environment):
    """
    Proceso recursivo f_i(x) = a_i X_i phi_1(x) + f_{i+1}(3x) + f_{i+1}(3(x - 2/3)).

    La recursión se corta en depth_max; la cola se registra como cota de error.
    """

    best_value_mode = 'grid'

    def __init__(self, delta: float = 0.05, seed: int = 0, sigma: Optional[float] = None,
                 n_for_sigma: Optional[int] = None, depth_max: int = TOY2_DEPTH_MAX):
        """
        Inicializa el proceso.

        Args:
            delta (float): Nivel de confianza de los eventos
            seed (int): Semilla
            sigma (float): Ruido explícito; por defecto a_n / sqrt(2)
            n_for_sigma (int): n de la regla sigma = a_n/sqrt(2) (por defecto depth_max)
            depth_max (int): Profundidad de truncación
        """
        function_seq, noise_seq, _ = spawn_streams(seed)
        self.delta = delta
        self.depth_max = depth_max
        self.amplitudes = toy2_amplitudes(delta, depth_max)
        if sigma is None:
            n = n_for_sigma or depth_max
            sigma = float(toy2_amplitudes(delta, n)[-1] / math.sqrt(2.0))
        super().__init__(BoxDomain.unit(1), sigma, noise_seq)
        self.draws = np.random.default_rng(function_seq).standard_normal(depth_max)
        self.tail_bound = float(np.sum(toy2_amplitudes(delta, depth_max + 2000)[depth_max:]) * 5.0)
        self._best: Optional[float] = None
        logger.debug(f"ToyEnv2: profundidad {depth_max}, cota de cola {self.tail_bound:.2e}")

    def values(self, x) -> np.ndarray:
        """Evaluación vectorizada descendiendo por la rama izquierda o derecha."""
        z = np.asarray(x, dtype=float).reshape(-1).copy()
        total = np.zeros_like(z)
        alive = (z >= 0.0) & (z <= 1.0)
        for level in range(self.depth_max):
            coef = self.amplitudes[level] * self.draws[level]
            total[alive] += coef * ternary_bump(z[alive])
            left = alive & (z <= 1.0 / 3.0)
            right = alive & (z >= 2.0 / 3.0)
            z = np.where(left, 3.0 * z, np.where(right, 3.0 * (z - 2.0 / 3.0), z))
            alive = left | right
        return total

    def true_value(self, x) -> float:
        return float(self.values(as_point(x)[0])[0])

    def descent_path(self) -> List[Tuple[float, float]]:
        """Regiones (inicio, ancho) siguiendo el signo de a_i X_i."""
        start, width = 0.0, 1.0
        path = []
        for level in range(self.depth_max):
            path.append((start, width))
            if self.draws[level] > 0:
                width /= 3.0
            else:
                start += 2.0 * width / 3.0
                width /= 3.0
        return path

    def best_value(self) -> float:
        if self._best is None:
            grid = np.linspace(0.0, 1.0, 2 * 3 ** TOY2_BEST_GRID_LEVELS + 1)
            candidates = [grid]
            for start, width in self.descent_path():
                candidates.append(start + width * np.array([1.0 / 6.0, 0.5, 5.0 / 6.0]))
            self._best = float(np.max(self.values(np.concatenate(candidates))))
        return self._best

    def levels_bounded(self) -> bool:
        """|X_i| <= sqrt(2 log(pi^2 i^2/(3 delta))) para todo i <= depth_max."""
        i = np.arange(1, self.depth_max + 1, dtype=float)
        limits = np.sqrt(2.0 * np.log(np.pi ** 2 * i ** 2 / (3.0 * self.delta)))
        return bool(np.all(np.abs(self.draws) <= limits))


def toy2_value(env: ToyEnv2, x: float) -> float:
    """Valor exacto de la recursión truncada en x."""
    return env.true_value(x)


def toy2_oracle_strategy(env: ToyEnv2, n: int) -> RegretTrace:
    """
    Estrategia de lectura de signos: evaluar el punto medio del tercio central y
    descender a la izquierda o derecha según el signo estimado de a_t X_t.

    Args:
        env (ToyEnv2): Entorno
        n (int): Número de evaluaciones (<= depth_max)

    Returns:
        RegretTrace: Traza con metadatos levels_bounded y noise_bounded
    """
    if n > env.depth_max:
        raise ValueError(f"n={n} excede la profundidad de truncación {env.depth_max}")

    trace = RegretTrace(1, {'algorithm': 'toy2_oracle', 'best_value_mode': env.best_value_mode,
                            'tail_bound': f"{env.tail_bound:.6g}"})
    best = env.best_value()
    start, width = 0.0, 1.0
    regions: List[Tuple[float, float]] = []
    estimates: List[float] = []
    noise_ok = True
    sign_errors = 0

    for t in range(1, n + 1):
        begin = time.perf_counter_ns()
        x = start + width / 2.0
        y = env.query(x)
        f_x = env.true_value(x)
        noise_ok = noise_ok and abs(y - f_x) <= 1.0 / (math.sqrt(2.0) * t * t)

        ancestors = sum(amp * float(ternary_bump(np.array([(x - s) / w]))[0])
                        for amp, (s, w) in zip(estimates, regions))
        estimate = y - ancestors
        regions.append((start, width))
        estimates.append(estimate)

        if (estimate > 0) != (env.draws[t - 1] > 0):
            sign_errors += 1
        if estimate > 0:
            width /= 3.0
        else:
            start += 2.0 * width / 3.0
            width /= 3.0

        delta = best - f_x
        trace.add_evaluation(t, t, [x], y, delta, delta, 1, t - 1,
                             wall_ns=time.perf_counter_ns() - begin)

    trace.metadata.update({'levels_bounded': env.levels_bounded(), 'noise_bounded': noise_ok,
                           'sign_errors': sign_errors})
    logger.info(f"Estrategia oráculo toy2: R_n={trace.cumulative_regret:.4f}, "
                f"niveles acotados={env.levels_bounded()}, ruido acotado={noise_ok}, "
                f"errores de signo={sign_errors}")
    return trace


# Entornos contextuales

class ContextualEnvironment(ABC):
    """Interfaz contextual: next_context, query(x_c, x_a) y best_action_value(x_c)."""

    @abstractmethod
    def next_context(self) -> np.ndarray:
        """Siguiente contexto del flujo."""

    @abstractmethod
    def query(self, context, action) -> float:
        """Recompensa ruidosa."""

    @abstractmethod
    def true_value(self, context, action) -> float:
        """f(x_c, x_a) sin ruido."""

    @abstractmethod
    def best_action_value(self, context) -> float:
        """sup sobre acciones de f(x_c, .) (aproximado por rejilla)."""


class ContextualGridEnv(ContextualEnvironment):
    """
    Muestra de GP sobre la rejilla producto contextos x acciones.

    Los contextos se sortean uniformemente entre los nodos de contexto de la
    rejilla, así que el óptimo por contexto se evalúa sobre su rebanada exacta.
    """

    best_value_mode = 'grid'

    def __init__(self, kernel: KernelSpec, context_domain: BoxDomain, action_domain: BoxDomain,
                 context_res: int, action_res: int, sigma: float, seed: int):
        size = context_res ** context_domain.dim * action_res ** action_domain.dim
        if size > MAX_DENSE_POINTS:
            raise GridTooLargeError(
                f"Rejilla producto de {size} puntos excede {MAX_DENSE_POINTS}; "
                f"reduzca context_res o action_res")
        if sigma < 0:
            raise ValueError(f"sigma debe ser >= 0, recibido {sigma}")

        function_seq, noise_seq, context_seq, lazy_seq = spawn_streams(seed, 4)
        self.kernel = kernel
        self.sigma = float(sigma)
        self.context_domain = context_domain
        self.action_domain = action_domain
        self.domain = context_domain.product(action_domain)
        self.contexts = axis_grid(context_domain, context_res)
        self.actions = axis_grid(action_domain, action_res)
        self.grid = np.array([np.concatenate([c, a]) for c in self.contexts for a in self.actions])

        chol, used_jitter = factorize_grid(kernel, self.grid)
        values = chol @ np.random.default_rng(function_seq).standard_normal(size)
        self.sampler = LazySampler.conditioned_on_grid(kernel, self.grid, values, chol,
                                                       used_jitter, lazy_seq)
        slices = values.reshape(len(self.contexts), len(self.actions))
        self._best_by_context: Dict[Tuple[float, ...], float] = {
            tuple(float(v) for v in c): float(row.max()) for c, row in zip(self.contexts, slices)}
        self._noise_rng = np.random.default_rng(noise_seq)
        self._context_rng = np.random.default_rng(context_seq)
        logger.debug(f"ContextualGridEnv: {len(self.contexts)} contextos x {len(self.actions)} acciones")

    def next_context(self) -> np.ndarray:
        return self.contexts[int(self._context_rng.integers(len(self.contexts)))].copy()

    def _key(self, context) -> Tuple[float, ...]:
        return tuple(float(v) for v in as_point(context))

    def true_value(self, context, action) -> float:
        point = np.concatenate([as_point(context), as_point(action)])
        value = self.sampler.sample(point)
        key = self._key(context)
        best = self._best_by_context.get(key)
        if best is not None and value > best:
            self._best_by_context[key] = value
        return value

    def query(self, context, action) -> float:
        value = self.true_value(context, action)
        if self.sigma == 0:
            return value
        return value + self.sigma * float(self._noise_rng.standard_normal())

    def best_action_value(self, context) -> float:
        key = self._key(context)
        if key not in self._best_by_context:
            # contexto fuera de la rejilla: revelar su rebanada de acciones
            context = as_point(context)
            self._best_by_context[key] = -math.inf
            for action in self.actions:
                self.true_value(context, action)
        return self._best_by_context[key]


def make_contextual_env(kernel_c: KernelSpec, kernel_a: KernelSpec, composition: str = 'product',
                        dims: Sequence[int] = (1, 1), sigma: float = 0.1, seed: int = 0,
                        action_grid_res: int = 128, context_grid_res: int = 8,
                        context_domain: Optional[BoxDomain] = None,
                        action_domain: Optional[BoxDomain] = None) -> ContextualGridEnv:
    """
    Entorno contextual con kernel compuesto K_c (+ o *) K_a.

    Args:
        kernel_c (KernelSpec): Kernel atómico sobre los contextos
        kernel_a (KernelSpec): Kernel atómico sobre las acciones
        composition (str): 'product' o 'sum'
        dims: (D_c, D_a)
        sigma (float): Desviación del ruido
        seed (int): Semilla
        action_grid_res (int): Puntos por eje de acción
        context_grid_res (int): Puntos por eje de contexto

    Returns:
        ContextualGridEnv: Entorno listo
    """
    d_c, d_a = int(dims[0]), int(dims[1])
    context_domain = context_domain or BoxDomain.unit(d_c)
    action_domain = action_domain or BoxDomain.unit(d_a)

    k_c = KernelSpec(kernel_c.family, kernel_c.lengthscale, kernel_c.variance,
                     kernel_c.c1, kernel_c.c2, active_dims=tuple(range(d_c)))
    k_a = KernelSpec(kernel_a.family, kernel_a.lengthscale, kernel_a.variance,
                     kernel_a.c1, kernel_a.c2, active_dims=tuple(range(d_c, d_c + d_a)))

    if composition == 'product':
        kernel = k_c * k_a
    elif composition == 'sum':
        kernel = k_c + k_a
    else:
        raise ValueError(f"Composición desconocida: {composition!r} (use 'product' o 'sum')")

    return ContextualGridEnv(kernel, context_domain, action_domain, context_grid_res,
                             action_grid_res, sigma, seed)
