"""
GP Core - Núcleo de Procesos Gaussianos
=======================================
Funciones de covarianza de la clase K con su envolvente de suavidad, métrica
inducida, inferencia a posteriori exacta con factorización de Cholesky
incremental, muestreo conjunto sobre rejillas, muestreo perezoso consistente
y ganancia de información.

Convención de puntos: un punto es un vector 1-D de longitud D; un conjunto de
puntos es un arreglo 2-D de forma (n, D).
"""

from __future__ import annotations

import math
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

logger = logging.getLogger(__name__)

MAX_DENSE_POINTS = 4096
NOISELESS_JITTER = 1e-10
NEGATIVE_VARIANCE_TOL = 1e-6

ATOMIC_FAMILIES = ('se', 'matern12', 'matern32', 'matern52', 'rq', 'triangle')
COMPOSITE_FAMILIES = ('sum', 'product')
FAMILIES = ATOMIC_FAMILIES + COMPOSITE_FAMILIES


class KernelSpecError(ValueError):
    """Parámetros de kernel inválidos (se detectan al construir)."""


class SingularGramError(RuntimeError):
    """Pivote no positivo al extender o factorizar una matriz de Gram."""


class GridTooLargeError(ValueError):
    """La rejilla excede el presupuesto de factorización densa."""


def as_point(x) -> np.ndarray:
    """Convierte un escalar o secuencia en un punto 1-D de floats."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return arr.reshape(1)
    return arr.reshape(-1)


def as_points(X) -> np.ndarray:
    """
    Convierte la entrada en un arreglo (n, D).

    Un arreglo 1-D se interpreta como un único punto.
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(1, -1)
    return arr


@dataclass(frozen=True)
class KernelSpec:
    """
    Función de covarianza isotrópica o compuesta.

    Las familias atómicas se evalúan sobre la distancia euclídea escalada por
    la longitud característica; 'sum' y 'product' combinan dos kernels.
    `active_dims` restringe un kernel atómico a un subconjunto de coordenadas.
    """
    family: str
    lengthscale: float = 1.0
    variance: float = 1.0
    c1: float = 1.0
    c2: float = 1.0
    left: Optional['KernelSpec'] = None
    right: Optional['KernelSpec'] = None
    active_dims: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise KernelSpecError(f"Familia de kernel desconocida: {self.family!r}")

        if self.family in COMPOSITE_FAMILIES:
            if self.left is None or self.right is None:
                raise KernelSpecError(f"El kernel '{self.family}' requiere dos componentes")
            return

        for name in ('lengthscale', 'variance'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise KernelSpecError(f"{name} debe ser positivo y finito, recibido {value}")

        if self.family == 'rq' and not (self.c1 > 0 and self.c2 > 0):
            raise KernelSpecError(f"Cuadrático racional requiere c1, c2 > 0 (c1={self.c1}, c2={self.c2})")

        if self.active_dims is not None:
            dims = tuple(int(d) for d in self.active_dims)
            if not dims or min(dims) < 0 or len(set(dims)) != len(dims):
                raise KernelSpecError(f"active_dims inválido: {self.active_dims}")
            object.__setattr__(self, 'active_dims', dims)

    # Constructores

    @classmethod
    def squared_exponential(cls, lengthscale: float = 1.0, variance: float = 1.0,
                            active_dims=None) -> 'KernelSpec':
        return cls('se', lengthscale, variance, active_dims=active_dims)

    @classmethod
    def matern(cls, nu: float, lengthscale: float = 1.0, variance: float = 1.0,
               active_dims=None) -> 'KernelSpec':
        names = {0.5: 'matern12', 1.5: 'matern32', 2.5: 'matern52'}
        if nu not in names:
            raise KernelSpecError(f"nu de Matérn no soportado: {nu} (use 0.5, 1.5 o 2.5)")
        return cls(names[nu], lengthscale, variance, active_dims=active_dims)

    @classmethod
    def rational_quadratic(cls, c1: float = 1.0, c2: float = 1.0, lengthscale: float = 1.0,
                           variance: float = 1.0, active_dims=None) -> 'KernelSpec':
        return cls('rq', lengthscale, variance, c1=c1, c2=c2, active_dims=active_dims)

    @classmethod
    def triangle(cls, lengthscale: float = 1.0, variance: float = 1.0,
                 active_dims=None) -> 'KernelSpec':
        return cls('triangle', lengthscale, variance, active_dims=active_dims)

    @classmethod
    def from_name(cls, family: str, lengthscale: float = 1.0, variance: float = 1.0,
                  c1: float = 1.0, c2: float = 1.0, active_dims=None) -> 'KernelSpec':
        """Construye un kernel atómico a partir del nombre usado en config.ini."""
        family = family.strip().lower()
        if family not in ATOMIC_FAMILIES:
            raise KernelSpecError(f"Familia atómica desconocida: {family!r}")
        return cls(family, lengthscale, variance, c1=c1, c2=c2, active_dims=active_dims)

    def __add__(self, other: 'KernelSpec') -> 'KernelSpec':
        return KernelSpec('sum', left=self, right=other)

    def __mul__(self, other: 'KernelSpec') -> 'KernelSpec':
        return KernelSpec('product', left=self, right=other)

    @property
    def is_composite(self) -> bool:
        return self.family in COMPOSITE_FAMILIES

    @property
    def prior_variance(self) -> float:
        """K(x, x): la varianza para atómicos, suma o producto para compuestos."""
        if self.family == 'sum':
            return self.left.prior_variance + self.right.prior_variance
        if self.family == 'product':
            return self.left.prior_variance * self.right.prior_variance
        return self.variance

    def describe(self) -> str:
        if self.family == 'sum':
            return f"({self.left.describe()} + {self.right.describe()})"
        if self.family == 'product':
            return f"({self.left.describe()} * {self.right.describe()})"
        extra = f", c1={self.c1}, c2={self.c2}" if self.family == 'rq' else ""
        dims = f", dims={list(self.active_dims)}" if self.active_dims else ""
        return f"{self.family}(l={self.lengthscale}, s2={self.variance}{extra}{dims})"


def _profile(k: KernelSpec, r: np.ndarray) -> np.ndarray:
    """Perfil radial normalizado K(r)/s² con r ya dividido por la escala."""
    if k.family == 'se':
        return np.exp(-0.5 * r ** 2)
    if k.family == 'matern12':
        return np.exp(-r)
    if k.family == 'matern32':
        a = math.sqrt(3.0) * r
        return (1.0 + a) * np.exp(-a)
    if k.family == 'matern52':
        a = math.sqrt(5.0) * r
        return (1.0 + a + a ** 2 / 3.0) * np.exp(-a)
    if k.family == 'rq':
        return (1.0 + k.c1 * r ** 2) ** (-k.c2)
    raise KernelSpecError(f"Sin perfil radial para {k.family}")


def gram(k: KernelSpec, X, Y=None) -> np.ndarray:
    """
    Matriz de covarianza entre dos conjuntos de puntos.

    Args:
        k (KernelSpec): Kernel
        X: Puntos (n, D)
        Y: Puntos (m, D); por defecto X

    Returns:
        np.ndarray: Matriz (n, m)
    """
    X = as_points(X)
    Y = X if Y is None else as_points(Y)

    if k.family == 'sum':
        return gram(k.left, X, Y) + gram(k.right, X, Y)
    if k.family == 'product':
        return gram(k.left, X, Y) * gram(k.right, X, Y)

    if k.active_dims is not None:
        X = X[:, k.active_dims]
        Y = Y[:, k.active_dims]

    if k.family == 'triangle':
        # producto de tiendas 1-D
        out = np.ones((X.shape[0], Y.shape[0]))
        for j in range(X.shape[1]):
            diff = np.abs(X[:, j, None] - Y[None, :, j])
            out *= np.maximum(0.0, 1.0 - diff / k.lengthscale)
        return k.variance * out

    r = cdist(X, Y) / k.lengthscale
    return k.variance * _profile(k, r)


def kernel_eval(k: KernelSpec, x1, x2) -> float:
    """K(x1, x2) para dos puntos."""
    return float(gram(k, as_point(x1)[None, :], as_point(x2)[None, :])[0, 0])


def kernel_diag(k: KernelSpec, X) -> np.ndarray:
    """Varianzas a priori K(x, x) de cada punto (kernels estacionarios)."""
    return np.full(as_points(X).shape[0], k.prior_variance)


def induced_metric(k: KernelSpec, x1, x2) -> float:
    """
    Métrica canónica d(x1, x2) = sqrt(K11 + K22 - 2 K12), recortada en 0.
    """
    k12 = kernel_eval(k, x1, x2)
    k11 = kernel_eval(k, x1, x1)
    k22 = kernel_eval(k, x2, x2)
    return math.sqrt(max(0.0, k11 + k22 - 2.0 * k12))


@dataclass(frozen=True)
class SmoothnessEnvelope:
    """
    Envolvente (g, alpha, C_K, delta_K): d(x, y) <= g(l_inf(x, y)) y
    g(r) <= C_K r^alpha para r <= delta_K.
    """
    alpha: float
    c_k: float
    delta_k: float
    g: Callable[[float], float] = field(compare=False, repr=False)

    def __call__(self, r: float) -> float:
        return self.g(r)


def envelope(k: KernelSpec, dim: int = 1, scale: float = 1.0) -> SmoothnessEnvelope:
    """
    Envolvente de suavidad del kernel en unidades l_inf de la caja normalizada.

    La distancia euclídea entre puntos a distancia l_inf r es a lo sumo
    sqrt(D) r; `scale` es el lado mayor del dominio de usuario.

    Args:
        k (KernelSpec): Kernel
        dim (int): Dimensión D del dominio
        scale (float): Factor de escala de la caja normalizada al usuario

    Returns:
        SmoothnessEnvelope: Envolvente con g, alpha, C_K y delta_K
    """
    if k.is_composite:
        e1 = envelope(k.left, dim, scale)
        e2 = envelope(k.right, dim, scale)
        alpha = min(e1.alpha, e2.alpha)
        delta = min(e1.delta_k, e2.delta_k)
        if e1.alpha != e2.alpha:
            delta = min(delta, 1.0)

        if k.family == 'sum':
            def g_sum(r: float) -> float:
                return math.hypot(e1.g(r), e2.g(r))
            return SmoothnessEnvelope(alpha, math.hypot(e1.c_k, e2.c_k), delta, g_sum)

        v1, v2 = k.left.prior_variance, k.right.prior_variance

        def g_prod(r: float) -> float:
            return math.sqrt(v2 * e1.g(r) ** 2 + v1 * e2.g(r) ** 2)
        c_prod = math.sqrt(v2 * e1.c_k ** 2 + v1 * e2.c_k ** 2)
        return SmoothnessEnvelope(alpha, c_prod, delta, g_prod)

    d_eff = len(k.active_dims) if k.active_dims else dim
    s = math.sqrt(k.variance)
    ell = k.lengthscale

    if k.family in ('matern12', 'triangle'):
        # d^2 <= 2 s^2 r_eff / l, con r_eff euclídea (Matérn) o l1 (tiendas)
        factor = (math.sqrt(d_eff) if k.family == 'matern12' else d_eff) * scale
        c = s * math.sqrt(2.0 * factor / ell)
        return SmoothnessEnvelope(0.5, c, math.inf, lambda r: c * math.sqrt(max(r, 0.0)))

    slopes = {
        'se': s / ell,
        'matern32': s * math.sqrt(3.0) / ell,
        'matern52': s * math.sqrt(5.0 / 3.0) / ell,
        'rq': s * math.sqrt(2.0 * k.c1 * k.c2) / ell,
    }
    c = slopes[k.family] * math.sqrt(d_eff) * scale
    return SmoothnessEnvelope(1.0, c, math.inf, lambda r: c * max(r, 0.0))


def gaussian_tail_bound(a: float, d: float) -> float:
    """Cota P(|f(x1) - f(x2)| >= a) <= 2 exp(-a^2 / (2 d^2))."""
    if d <= 0:
        return 0.0 if a > 0 else 1.0
    return min(1.0, 2.0 * math.exp(-a * a / (2.0 * d * d)))


class PosteriorState:
    """
    Posterior exacto de un GP de media cero con factor de Cholesky incremental.

    Mantiene L (triangular inferior) de K + (sigma^2 + jitter) I y
    w = L^{-1} y. Cada actualización añade una fila en O(t^2). Un único
    escritor; las consultas son de sólo lectura.
    """

    def __init__(self, kernel: KernelSpec, noise_var: float = 0.0,
                 jitter: Optional[float] = None, debug: bool = False,
                 capacity: int = 64):
        """
        Inicializa el posterior vacío.

        Args:
            kernel (KernelSpec): Kernel del GP
            noise_var (float): Varianza del ruido sigma^2 >= 0
            jitter (float): Término diagonal adicional; por defecto
                1e-10 * varianza cuando sigma^2 = 0
            debug (bool): Activa la aserción de varianza negativa
            capacity (int): Capacidad inicial reservada
        """
        if not (noise_var >= 0 and math.isfinite(noise_var)):
            raise ValueError(f"noise_var debe ser >= 0, recibido {noise_var}")

        self.kernel = kernel
        self.noise_var = float(noise_var)
        if jitter is None:
            jitter = NOISELESS_JITTER * kernel.prior_variance if noise_var == 0 else 0.0
        self.jitter = float(jitter)
        self.debug = debug

        self._capacity = max(1, capacity)
        self._dim: Optional[int] = None
        self._X = np.empty((0, 0))
        self._L = np.zeros((0, 0))
        self._w = np.zeros(0)
        self._y = np.zeros(0)
        self._extra = np.zeros(0)
        self._n = 0

    def __len__(self) -> int:
        return self._n

    @property
    def points(self) -> np.ndarray:
        return self._X[:self._n].copy()

    @property
    def observations(self) -> np.ndarray:
        return self._y[:self._n].copy()

    @property
    def chol(self) -> np.ndarray:
        return self._L[:self._n, :self._n].copy()

    @property
    def alpha_vec(self) -> np.ndarray:
        return self._w[:self._n].copy()

    def _allocate(self, dim: int, capacity: int):
        X = np.zeros((capacity, dim))
        L = np.zeros((capacity, capacity))
        w = np.zeros(capacity)
        y = np.zeros(capacity)
        extra = np.zeros(capacity)
        n = self._n
        if n:
            X[:n] = self._X[:n]
            L[:n, :n] = self._L[:n, :n]
            w[:n] = self._w[:n]
            y[:n] = self._y[:n]
            extra[:n] = self._extra[:n]
        self._X, self._L, self._w, self._y, self._extra = X, L, w, y, extra
        self._capacity = capacity

    def _check_dim(self, dim: int):
        if self._dim is None:
            self._dim = dim
            self._allocate(dim, self._capacity)
        elif dim != self._dim:
            raise ValueError(f"Dimensión del punto {dim} distinta de la del posterior {self._dim}")

    def update(self, x, y: float, extra_jitter: float = 0.0) -> 'PosteriorState':
        """
        Añade la observación (x, y) extendiendo el factor en una fila.

        Args:
            x: Punto consultado
            y (float): Observación
            extra_jitter (float): Jitter diagonal adicional sólo para esta fila

        Returns:
            PosteriorState: El propio estado, actualizado

        Raises:
            SingularGramError: Si el pivote resulta no positivo
        """
        y = float(y)
        if not math.isfinite(y):
            raise ValueError(f"Observación no finita: {y}")

        x = as_point(x)
        self._check_dim(x.shape[0])
        n = self._n

        kxx = self.kernel.prior_variance
        if n:
            kvec = gram(self.kernel, self._X[:n], x[None, :])[:, 0]
            l_row = linalg.solve_triangular(self._L[:n, :n], kvec, lower=True, check_finite=False)
        else:
            l_row = np.zeros(0)

        pivot = kxx + self.noise_var + self.jitter + extra_jitter - float(l_row @ l_row)
        if not pivot > 0.0:
            raise SingularGramError(
                f"Pivote no positivo ({pivot:.3e}) al añadir el punto {x.tolist()}; "
                f"reintente con un jitter mayor (actual {self.jitter + extra_jitter:.1e})")

        if n == self._capacity:
            self._allocate(self._dim, 2 * self._capacity)

        d = math.sqrt(pivot)
        self._L[n, :n] = l_row
        self._L[n, n] = d
        self._w[n] = (y - float(l_row @ self._w[:n])) / d
        self._X[n] = x
        self._y[n] = y
        self._extra[n] = extra_jitter
        self._n = n + 1
        return self

    def query_many(self, X) -> Tuple[np.ndarray, np.ndarray]:
        """
        Media y desviación estándar a posteriori en varios puntos.

        Args:
            X: Puntos (m, D)

        Returns:
            Tuple[np.ndarray, np.ndarray]: (mu, sigma), cada uno de forma (m,)
        """
        X = as_points(X)
        prior = kernel_diag(self.kernel, X)
        n = self._n
        if n == 0:
            return np.zeros(X.shape[0]), np.sqrt(prior)

        K_star = gram(self.kernel, self._X[:n], X)
        V = linalg.solve_triangular(self._L[:n, :n], K_star, lower=True, check_finite=False)
        mu = V.T @ self._w[:n]
        var = prior - np.einsum('ij,ij->j', V, V)

        if self.debug and np.any(var < -NEGATIVE_VARIANCE_TOL):
            raise AssertionError(f"Varianza a posteriori negativa: {var.min():.3e}")

        return mu, np.sqrt(np.maximum(var, 0.0))

    def query(self, x) -> Tuple[float, float]:
        """(mu, sigma) en un punto."""
        mu, sigma = self.query_many(as_point(x)[None, :])
        return float(mu[0]), float(sigma[0])

    def dense_query_many(self, X) -> Tuple[np.ndarray, np.ndarray]:
        """
        Oráculo denso: refactoriza el sistema completo desde cero.

        Se usa en las pruebas para contrastar el factor incremental.
        """
        X = as_points(X)
        prior = kernel_diag(self.kernel, X)
        n = self._n
        if n == 0:
            return np.zeros(X.shape[0]), np.sqrt(prior)

        P = self._X[:n]
        K = gram(self.kernel, P)
        K[np.diag_indices(n)] += self.noise_var + self.jitter + self._extra[:n]
        factor = linalg.cho_factor(K, lower=True)
        K_star = gram(self.kernel, P, X)
        mu = K_star.T @ linalg.cho_solve(factor, self._y[:n])
        var = prior - np.einsum('ij,ij->j', K_star, linalg.cho_solve(factor, K_star))
        return mu, np.sqrt(np.maximum(var, 0.0))

    @classmethod
    def from_factor(cls, kernel: KernelSpec, points, values, chol: np.ndarray,
                    noise_var: float = 0.0, jitter: Optional[float] = None,
                    debug: bool = False) -> 'PosteriorState':
        """
        Construye el posterior a partir de un factor de Cholesky ya calculado.

        Args:
            kernel (KernelSpec): Kernel
            points: Puntos (n, D)
            values: Observaciones (n,)
            chol (np.ndarray): Factor triangular inferior de
                gram(points) + (noise_var + jitter) I
            noise_var (float): Varianza del ruido
            jitter (float): Jitter con el que se factorizó

        Returns:
            PosteriorState: Posterior equivalente a n actualizaciones
        """
        P = as_points(points)
        values = np.asarray(values, dtype=float).reshape(-1)
        n = P.shape[0]
        if chol.shape != (n, n) or values.shape[0] != n:
            raise ValueError("Dimensiones inconsistentes entre puntos, valores y factor")

        state = cls(kernel, noise_var=noise_var, jitter=jitter, debug=debug,
                    capacity=max(64, 2 * n))
        state._check_dim(P.shape[1])
        state._L[:n, :n] = chol
        state._X[:n] = P
        state._y[:n] = values
        state._w[:n] = linalg.solve_triangular(chol, values, lower=True, check_finite=False)
        state._n = n
        return state


def factorize_grid(k: KernelSpec, grid, jitter: Optional[float] = None) -> Tuple[np.ndarray, float]:
    """
    Factor de Cholesky de la matriz de Gram de una rejilla con jitter creciente.

    Args:
        k (KernelSpec): Kernel
        grid: Puntos (G, D), G <= 4096
        jitter (float): Jitter inicial; por defecto 1e-10 * varianza

    Returns:
        Tuple[np.ndarray, float]: (factor inferior, jitter usado)
    """
    G = as_points(grid)
    if G.shape[0] > MAX_DENSE_POINTS:
        raise GridTooLargeError(
            f"Rejilla de {G.shape[0]} puntos excede el máximo de {MAX_DENSE_POINTS}; "
            f"reduzca la resolución (p. ej. {int(MAX_DENSE_POINTS ** (1.0 / G.shape[1]))} por eje)")

    K = gram(k, G)
    base = NOISELESS_JITTER * k.prior_variance if jitter is None else jitter
    for factor in (1.0, 1e2, 1e4, 1e6):
        used = base * factor
        try:
            chol = linalg.cholesky(K + used * np.eye(K.shape[0]), lower=True, check_finite=False)
            if factor > 1.0:
                logger.warning(f"Jitter escalado a {used:.1e} para factorizar {K.shape[0]} puntos")
            return chol, used
        except linalg.LinAlgError:
            continue

    raise SingularGramError(f"No se pudo factorizar la rejilla de {K.shape[0]} puntos "
                            f"ni con jitter {base * 1e6:.1e}")


def sample_grid(k: KernelSpec, grid, seed, size: Optional[int] = None,
                jitter: Optional[float] = None) -> np.ndarray:
    """
    Muestra conjunta de N(0, Gram + jitter I) sobre una rejilla.

    Args:
        k (KernelSpec): Kernel
        grid: Puntos (G, D)
        seed: Semilla o SeedSequence
        size (int): Número de funciones; None devuelve un vector (G,)

    Returns:
        np.ndarray: (G,) o (G, size)
    """
    chol, _ = factorize_grid(k, grid, jitter)
    rng = np.random.default_rng(seed)
    shape = chol.shape[0] if size is None else (chol.shape[0], size)
    return chol @ rng.standard_normal(shape)


def _point_key(x: np.ndarray) -> Tuple[float, ...]:
    return tuple(float(v) for v in x)


class LazySampler:
    """
    Revela una muestra de GP punto a punto, condicionando en lo ya revelado.

    Repetir una consulta devuelve el valor en caché.
    """

    RETRY_JITTERS = (0.0, 1e-8, 1e-6)

    def __init__(self, kernel: KernelSpec, seed, posterior: Optional[PosteriorState] = None,
                 jitter: Optional[float] = None):
        self.kernel = kernel
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        if posterior is None:
            posterior = PosteriorState(kernel, noise_var=0.0, jitter=jitter)
        self._posterior = posterior
        self.revealed: Dict[Tuple[float, ...], float] = {}
        self.max_revealed = -math.inf

        for x, v in zip(posterior.points, posterior.observations):
            self._remember(x, float(v))

    @classmethod
    def conditioned_on_grid(cls, kernel: KernelSpec, grid, values, chol: np.ndarray,
                            jitter: float, seed) -> 'LazySampler':
        """Sampler cuyo estado ya conoce los valores de una rejilla."""
        posterior = PosteriorState.from_factor(kernel, grid, values, chol,
                                               noise_var=0.0, jitter=jitter)
        return cls(kernel, seed, posterior=posterior)

    def _remember(self, x: np.ndarray, value: float):
        self.revealed[_point_key(x)] = value
        if value > self.max_revealed:
            self.max_revealed = value

    def sample(self, x) -> float:
        """
        Valor f(x) de la muestra, muestreado condicionalmente si es nuevo.

        Args:
            x: Punto

        Returns:
            float: f(x)
        """
        x = as_point(x)
        key = _point_key(x)
        if key in self.revealed:
            return self.revealed[key]

        mu, sigma = self._posterior.query(x)
        value = mu + sigma * float(self._rng.standard_normal())

        scale = self.kernel.prior_variance
        for extra in self.RETRY_JITTERS:
            try:
                self._posterior.update(x, value, extra_jitter=extra * scale)
                break
            except SingularGramError:
                logger.debug(f"Reintento de condicionamiento en {key} con jitter extra {extra:.0e}")
        else:
            raise SingularGramError(f"No se pudo condicionar el sampler en {key}")

        self._remember(x, value)
        return value


def sample_lazy(sampler: LazySampler, x) -> float:
    """f(x) consistente con todo lo revelado por el sampler."""
    return sampler.sample(x)


def info_gain_from_gram(K: np.ndarray, noise_var: float) -> float:
    """1/2 log det(I + K / sigma^2) vía Cholesky."""
    if noise_var <= 0:
        raise ValueError(f"noise_var debe ser positivo, recibido {noise_var}")
    K = np.asarray(K, dtype=float)
    if K.size == 0:
        return 0.0
    M = np.eye(K.shape[0]) + K / noise_var
    L = linalg.cholesky(M, lower=True, check_finite=False)
    return float(np.sum(np.log(np.diag(L))))


def info_gain(k: KernelSpec, points: Iterable, noise_var: float) -> float:
    """
    Información mutua I(f; y) de observar el GP en `points` con ruido sigma^2.

    Args:
        k (KernelSpec): Kernel
        points: Puntos (n, D); lista vacía da 0
        noise_var (float): sigma^2 > 0

    Returns:
        float: 1/2 log det(I + sigma^-2 Gram), en nats
    """
    P = np.asarray(points, dtype=float)
    if P.size == 0:
        if noise_var <= 0:
            raise ValueError(f"noise_var debe ser positivo, recibido {noise_var}")
        return 0.0
    return info_gain_from_gram(gram(k, as_points(P)), noise_var)
