"""
Bench Runner - Orquestador de Experimentos
==========================================
Módulo que coordina las ejecuciones por semilla de un experimento: construye
el entorno y el algoritmo desde la configuración, escribe una traza CSV por
semilla y un resumen con medianas y rangos intercuartílicos en los puntos de
control, la pendiente log-log del regret y el tiempo de pared total.
"""

import math
import time
import logging
import configparser
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import algo_contextual
import algo_tree
import algo_zoom
from baselines import UniformGrid, run_gp_ucb, run_random
from confidence import make_confidence_config
from env import (ToyEnv1, ToyEnv2, make_contextual_env, make_grid_gp, toy1_gamma_closed_form,
                 toy1_gamma_computed, toy1_gamma_lower, toy2_oracle_strategy)
from gp_core import ATOMIC_FAMILIES, KernelSpec
from partition_tree import BoxDomain
from plotting import plot_regret_curves
from regret_trace import RegretTrace
from utils import (config_hash, format_duration, resolve_workers, sanitize_filename, save_config,
                   summary_filename, trace_filename, validate_output_dir)

logger = logging.getLogger(__name__)

ALGORITHMS = ('tree', 'zoom', 'contextual', 'gp_ucb', 'random', 'toy2_oracle')
ENVIRONMENTS = ('grid_gp', 'toy1', 'toy2')
BETA_MODES = ('tight_odd_n', 'worst')
COMPOSITIONS = ('product', 'sum')
TOY2_MAX_BUDGET = 30
SUMMARY_HEADER = "# gp-bandits-summary schema=1"
SLOPE_MIN_N = 2


class ConfigError(ValueError):
    """Configuración inválida; `key` nombra la clave culpable (Sección.clave)."""

    def __init__(self, key: str, message: str):
        super().__init__(f"[{key}] {message}")
        self.key = key


def _int_list(text: str) -> Tuple[int, ...]:
    return tuple(int(part) for part in text.replace(';', ',').split(',') if part.strip())


def _join(values: Sequence) -> str:
    return ", ".join(str(v) for v in values)


def _float_text(value: float) -> str:
    return repr(float(value))


@dataclass(frozen=True)
class ExperimentConfig:
    """Parámetros de un experimento; ida y vuelta exacta con configparser."""
    name: str = 'experimento'
    algorithm: str = 'tree'
    budget: int = 200
    seeds: Tuple[int, ...] = (0, 1, 2)
    u: float = 2.0
    theory_scale: float = 1.0
    beta_mode: str = 'tight_odd_n'
    n_split: int = 3
    ucb_grid_res: int = 64
    checkpoints: Tuple[int, ...] = (50, 100, 200)
    output_directory: str = 'results'

    environment: str = 'grid_gp'
    kernel: str = 'matern52'
    lengthscale: float = 0.2
    variance: float = 1.0
    rq_c1: float = 1.0
    rq_c2: float = 1.0
    dim: int = 1
    lower: float = 0.0
    upper: float = 1.0
    sigma: float = 0.1
    grid_res: int = 256
    toy_delta: float = 0.05
    context_kernel: str = 'se'
    action_kernel: str = 'matern32'
    composition: str = 'product'
    context_dim: int = 1
    action_dim: int = 1
    context_res: int = 8
    action_res: int = 128

    debug_mode: bool = False
    jitter: Optional[float] = None

    SECTIONS = {
        'Experiment': ('name', 'algorithm', 'budget', 'seeds', 'u', 'theory_scale', 'beta_mode',
                       'n_split', 'ucb_grid_res', 'checkpoints', 'output_directory'),
        'Environment': ('environment', 'kernel', 'lengthscale', 'variance', 'rq_c1', 'rq_c2',
                        'dim', 'lower', 'upper', 'sigma', 'grid_res', 'toy_delta',
                        'context_kernel', 'action_kernel', 'composition', 'context_dim',
                        'action_dim', 'context_res', 'action_res'),
        'Advanced': ('debug_mode', 'jitter'),
    }

    def __post_init__(self):
        self.validate()

    def validate(self):
        """Lanza ConfigError con la clave del primer valor inválido."""
        checks = [
            ('Experiment.algorithm', self.algorithm in ALGORITHMS,
             f"algoritmo desconocido {self.algorithm!r}; opciones: {', '.join(ALGORITHMS)}"),
            ('Experiment.budget', self.budget >= 1, f"el presupuesto debe ser >= 1, recibido {self.budget}"),
            ('Experiment.seeds', len(self.seeds) > 0, "se requiere al menos una semilla"),
            ('Experiment.seeds', len(set(self.seeds)) == len(self.seeds), "semillas repetidas"),
            ('Experiment.u', self.u > 0, f"u debe ser > 0, recibido {self.u}"),
            ('Experiment.theory_scale', self.theory_scale > 0,
             f"theory_scale debe ser > 0, recibido {self.theory_scale}"),
            ('Experiment.beta_mode', self.beta_mode in BETA_MODES, f"modo de beta desconocido {self.beta_mode!r}"),
            ('Experiment.n_split', self.n_split >= 2, f"N debe ser >= 2, recibido {self.n_split}"),
            ('Experiment.ucb_grid_res', self.ucb_grid_res >= 1, "ucb_grid_res debe ser >= 1"),
            ('Experiment.checkpoints', all(c >= 1 for c in self.checkpoints), "puntos de control deben ser >= 1"),
            ('Environment.environment', self.environment in ENVIRONMENTS,
             f"entorno desconocido {self.environment!r}; opciones: {', '.join(ENVIRONMENTS)}"),
            ('Environment.kernel', self.kernel in ATOMIC_FAMILIES, f"kernel desconocido {self.kernel!r}"),
            ('Environment.lengthscale', self.lengthscale > 0, "lengthscale debe ser > 0"),
            ('Environment.variance', self.variance > 0, "variance debe ser > 0"),
            ('Environment.dim', self.dim >= 1, "dim debe ser >= 1"),
            ('Environment.upper', self.upper > self.lower, "se requiere lower < upper"),
            ('Environment.sigma', self.sigma >= 0, "sigma debe ser >= 0"),
            ('Environment.grid_res', self.grid_res >= 1, "grid_res debe ser >= 1"),
            ('Environment.toy_delta', 0 < self.toy_delta < 1, "toy_delta debe estar en (0, 1)"),
            ('Environment.context_kernel', self.context_kernel in ATOMIC_FAMILIES,
             f"kernel de contexto desconocido {self.context_kernel!r}"),
            ('Environment.action_kernel', self.action_kernel in ATOMIC_FAMILIES,
             f"kernel de acción desconocido {self.action_kernel!r}"),
            ('Environment.composition', self.composition in COMPOSITIONS,
             f"composición desconocida {self.composition!r}"),
            ('Environment.context_dim', self.context_dim >= 1, "context_dim debe ser >= 1"),
            ('Environment.action_dim', self.action_dim >= 1, "action_dim debe ser >= 1"),
            ('Advanced.jitter', self.jitter is None or self.jitter >= 0, "jitter debe ser >= 0"),
        ]
        for key, ok, message in checks:
            if not ok:
                raise ConfigError(key, message)

        if self.algorithm == 'tree' and (self.n_split % 2 == 0 or self.n_split < 3):
            raise ConfigError('Experiment.n_split', f"el algoritmo de árbol requiere N impar >= 3, "
                                                    f"recibido {self.n_split}")
        if self.algorithm == 'toy2_oracle' and self.budget > TOY2_MAX_BUDGET:
            raise ConfigError('Experiment.budget', f"toy2_oracle admite como máximo "
                                                   f"{TOY2_MAX_BUDGET} evaluaciones")

    @classmethod
    def from_config(cls, config: configparser.ConfigParser) -> 'ExperimentConfig':
        """
        Construye la configuración desde un ConfigParser (con valores por defecto).

        Args:
            config (configparser.ConfigParser): Configuración cargada

        Returns:
            ExperimentConfig: Configuración validada
        """
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for section, keys in cls.SECTIONS.items():
            for key in keys:
                if not config.has_option(section, key):
                    continue
                raw = config.get(section, key).strip()
                try:
                    values[key] = cls._parse(key, raw, types[key])
                except ValueError as e:
                    raise ConfigError(f"{section}.{key}", f"valor inválido {raw!r}: {e}") from e
        return cls(**values)

    @staticmethod
    def _parse(key: str, raw: str, annotation):
        if key in ('seeds', 'checkpoints'):
            return _int_list(raw)
        if key == 'jitter':
            return None if raw.lower() in ('', 'auto', 'none') else float(raw)
        if key == 'debug_mode':
            lowered = raw.lower()
            if lowered not in ('true', 'false', '1', '0', 'yes', 'no', 'on', 'off'):
                raise ValueError("se esperaba un booleano")
            return lowered in ('true', '1', 'yes', 'on')
        if annotation in (int, 'int'):
            return int(raw)
        if annotation in (float, 'float'):
            return float(raw)
        return raw

    def to_config(self) -> configparser.ConfigParser:
        """ConfigParser con las secciones del experimento (inversa de from_config)."""
        config = configparser.ConfigParser()
        for section, keys in self.SECTIONS.items():
            config[section] = {}
            for key in keys:
                value = getattr(self, key)
                if isinstance(value, tuple):
                    text = _join(value)
                elif isinstance(value, bool):
                    text = str(value)
                elif isinstance(value, float):
                    text = _float_text(value)
                elif value is None:
                    text = 'auto'
                else:
                    text = str(value)
                config[section][key] = text
        return config

    @property
    def hash(self) -> str:
        return config_hash(self.to_config())

    @property
    def domain(self) -> BoxDomain:
        return BoxDomain.cube(self.lower, self.upper, self.dim)

    def kernel_spec(self) -> KernelSpec:
        return KernelSpec.from_name(self.kernel, lengthscale=self.lengthscale,
                                    variance=self.variance, c1=self.rq_c1, c2=self.rq_c2)

    def effective_checkpoints(self) -> List[int]:
        points = sorted({c for c in self.checkpoints if c <= self.budget} | {self.budget})
        return points


def build_environment(cfg: ExperimentConfig, seed: int):
    """
    Entorno de una semilla según la configuración.

    Args:
        cfg (ExperimentConfig): Configuración
        seed (int): Semilla de la función y del ruido

    Returns:
        Environment | ContextualGridEnv: Entorno listo
    """
    if cfg.algorithm == 'contextual':
        k_c = KernelSpec.from_name(cfg.context_kernel, lengthscale=cfg.lengthscale, variance=cfg.variance)
        k_a = KernelSpec.from_name(cfg.action_kernel, lengthscale=cfg.lengthscale, variance=cfg.variance)
        return make_contextual_env(k_c, k_a, cfg.composition, (cfg.context_dim, cfg.action_dim),
                                   cfg.sigma, seed, action_grid_res=cfg.action_res,
                                   context_grid_res=cfg.context_res)
    if cfg.algorithm == 'toy2_oracle' or cfg.environment == 'toy2':
        if cfg.algorithm == 'toy2_oracle':
            return ToyEnv2(cfg.toy_delta, seed, n_for_sigma=cfg.budget,
                           depth_max=max(cfg.budget, 12))
        return ToyEnv2(cfg.toy_delta, seed)
    if cfg.environment == 'toy1':
        return ToyEnv1(cfg.toy_delta, seed)
    return make_grid_gp(cfg.kernel_spec(), cfg.domain, cfg.grid_res, cfg.sigma, seed, jitter=cfg.jitter)


def run_single(cfg: ExperimentConfig, seed: int) -> RegretTrace:
    """
    Ejecuta una semilla y devuelve su traza (sin escribirla).

    Args:
        cfg (ExperimentConfig): Configuración
        seed (int): Semilla

    Returns:
        RegretTrace: Traza con metadatos de la ejecución
    """
    env = build_environment(cfg, seed)
    kernel = cfg.kernel_spec()

    if cfg.algorithm == 'toy2_oracle':
        trace = toy2_oracle_strategy(env, cfg.budget)
    elif cfg.algorithm == 'random':
        trace = run_random(env, cfg.budget, seed)
    elif cfg.algorithm == 'contextual':
        conf = make_confidence_config(env.kernel, env.domain, cfg.budget, cfg.sigma, u=cfg.u,
                                      n_split=2, theory_scale=cfg.theory_scale, beta_mode='worst')
        trace = algo_contextual.run(env, env.kernel, conf, cfg.budget, debug=cfg.debug_mode)
    else:
        conf = make_confidence_config(kernel, env.domain, cfg.budget, env.sigma, u=cfg.u,
                                      n_split=cfg.n_split, theory_scale=cfg.theory_scale,
                                      beta_mode=cfg.beta_mode)
        if cfg.algorithm == 'tree':
            trace, _ = algo_tree.run(env, kernel, conf, debug=cfg.debug_mode)
        elif cfg.algorithm == 'zoom':
            trace, _ = algo_zoom.run(env, kernel, conf, debug=cfg.debug_mode)
        else:
            trace = run_gp_ucb(env, kernel, conf, cfg.budget, UniformGrid(env.domain, cfg.ucb_grid_res))

    trace.metadata.update({'config_hash': cfg.hash, 'seed': seed,
                           'best_value_mode': env.best_value_mode,
                           'environment': 'contextual' if cfg.algorithm == 'contextual' else cfg.environment})
    return trace


def loglog_slope(values: Sequence[float], min_n: int = SLOPE_MIN_N) -> float:
    """Pendiente por mínimos cuadrados de log(valor) frente a log(n); nan si no hay datos."""
    y = np.asarray(values, dtype=float)
    n = np.arange(1, len(y) + 1, dtype=float)
    keep = np.isfinite(y) & (y > 0) & (n >= min_n)
    if keep.sum() < 2:
        return math.nan
    slope, _ = np.polyfit(np.log(n[keep]), np.log(y[keep]), 1)
    return float(slope)


def _iqr(values: np.ndarray) -> float:
    q75, q25 = np.nanpercentile(values, [75, 25])
    return float(q75 - q25)


def summarize(traces: Sequence[RegretTrace], checkpoints: Sequence[int]) -> Tuple[pd.DataFrame, float]:
    """
    Tabla de medianas/IQR en los puntos de control y pendiente log-log.

    La pendiente se ajusta sobre la mediana de S_n; si S_n no está definido
    (contextual) se usa R_n/n.

    Args:
        traces: Trazas de las semillas
        checkpoints: Presupuestos de control

    Returns:
        Tuple[pd.DataFrame, float]: (tabla, pendiente)
    """
    length = min(len(t) for t in traces)
    cumulative = np.array([t.column('cumulative_regret')[:length] for t in traces])
    simple = np.array([t.column('simple_regret')[:length] for t in traces])
    active = np.array([t.column('active_count')[:length] for t in traces])

    rows = []
    for c in checkpoints:
        if c > length:
            continue
        r, s = cumulative[:, c - 1], simple[:, c - 1]
        rows.append({
            'n': c,
            'median_R': float(np.median(r)),
            'iqr_R': _iqr(r),
            'median_R_over_n': float(np.median(r)) / c,
            'median_S': float(np.median(s)) if np.all(np.isfinite(s)) else math.nan,
            'iqr_S': _iqr(s) if np.all(np.isfinite(s)) else math.nan,
            'median_active': float(np.median(active[:, c - 1])),
        })

    if length and np.all(np.isfinite(simple)):
        curve = np.median(simple, axis=0)
    else:
        curve = np.median(cumulative, axis=0) / np.arange(1, length + 1)
    return pd.DataFrame(rows), loglog_slope(curve)


class ExperimentRunner:
    """
    Ejecuta un experimento completo: una tarea por semilla, fusión por orden de semilla.
    """

    def __init__(self, config: ExperimentConfig, max_workers: Optional[int] = None,
                 write_timing: bool = True):
        """
        Inicializa el orquestador.

        Args:
            config (ExperimentConfig): Configuración validada
            max_workers (int): Workers; por defecto GPBANDITS_WORKERS o 1
            write_timing (bool): Escribir los CSV de tiempos junto a las trazas
        """
        self.config = config
        self.max_workers = max_workers or resolve_workers()
        self.write_timing = write_timing
        self.output_dir = Path(config.output_directory)

        self.stats = {
            'runs_completed': 0,
            'runs_failed': 0,
            'total_wall_ns': 0,
            'start_time': None,
            'end_time': None
        }

    def _run_seed(self, seed: int) -> Tuple[int, RegretTrace]:
        logger.info(f"Ejecutando {self.config.algorithm} semilla {seed}")
        return seed, run_single(self.config, seed)

    def run_experiment(self) -> Dict:
        """
        Ejecuta todas las semillas, escribe las trazas y el resumen.

        Returns:
            Dict: Resultado con rutas, tabla resumen, pendiente y tiempos
        """
        cfg = self.config
        try:
            is_valid, errors = validate_output_dir(str(self.output_dir))
            if not is_valid:
                raise ConfigError('Experiment.output_directory', "; ".join(errors))

            self.stats['start_time'] = time.time()
            workers = min(self.max_workers, len(cfg.seeds))
            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as executor:
                    results = list(executor.map(self._run_seed, cfg.seeds))
            else:
                results = [self._run_seed(seed) for seed in cfg.seeds]

            trace_paths = []
            traces = []
            for seed, trace in results:
                path = trace_filename(self.output_dir, cfg.name, cfg.algorithm, seed)
                trace.to_csv(path, timing=self.write_timing)
                trace_paths.append(str(path))
                traces.append(trace)
                self.stats['runs_completed'] += 1
                self.stats['total_wall_ns'] += trace.total_wall_ns

            table, slope = summarize(traces, cfg.effective_checkpoints())
            self.stats['end_time'] = time.time()
            wall_time = self.stats['end_time'] - self.stats['start_time']

            summary_path = summary_filename(self.output_dir, cfg.name, cfg.algorithm)
            with open(summary_path, 'w', encoding='utf-8', newline='') as handle:
                handle.write(SUMMARY_HEADER + "\n")
                handle.write(f"# config_hash={cfg.hash}\n")
                handle.write(f"# algorithm={cfg.algorithm}\n")
                handle.write(f"# seeds={_join(cfg.seeds)}\n")
                handle.write(f"# slope={slope!r}\n")
                handle.write(f"# wall_time_s={wall_time:.3f}\n")
                table.to_csv(handle, index=False, float_format='%.10g', lineterminator="\n")

            config_path = self.output_dir / f"{sanitize_filename(f'{cfg.name}_{cfg.algorithm}_config')}.ini"
            save_config(cfg.to_config(), str(config_path))

            rounds = sum(len(trace) for trace in traces)
            algorithm_ns = sum(trace.total_wall_ns for trace in traces)
            logger.info(f"Experimento {cfg.name} ({cfg.algorithm}) terminado en "
                        f"{format_duration(wall_time * 1e9)} "
                        f"({format_duration(algorithm_ns / max(rounds, 1))} por ronda): pendiente={slope:.3f}")
            return {
                'success': True,
                'config_hash': cfg.hash,
                'traces': trace_paths,
                'summary': str(summary_path),
                'config_file': str(config_path),
                'summary_table': table,
                'slope': slope,
                'wall_time': wall_time,
                'stats': self.get_stats()
            }

        except ConfigError as e:
            logger.error(f"Configuración inválida ({e.key}): {e}")
            self.stats['runs_failed'] += 1
            return {'success': False, 'error': str(e), 'key': e.key}
        except Exception as e:
            logger.error(f"Error ejecutando el experimento {cfg.name}: {e}")
            self.stats['runs_failed'] += 1
            return {'success': False, 'error': str(e)}

    def get_stats(self) -> Dict:
        stats = self.stats.copy()
        stats['total_wall_time_s'] = stats['total_wall_ns'] / 1e9
        return stats


def load_traces(cfg: ExperimentConfig) -> List[RegretTrace]:
    """Lee las trazas de todas las semillas; FileNotFoundError nombra el archivo que falta."""
    return [RegretTrace.from_csv(trace_filename(Path(cfg.output_directory), cfg.name,
                                                cfg.algorithm, seed))
            for seed in cfg.seeds]


def compare(configs: Sequence[ExperimentConfig], plot_path: Optional[str] = None) -> Dict:
    """
    Tabla comparativa en puntos de control comunes y gráfico opcional.

    Args:
        configs: Configuraciones cuyas trazas ya existen
        plot_path (str): Ruta del SVG con la mediana de R_n por algoritmo

    Returns:
        Dict: {'success', 'table', 'common_budget', 'plot'} o {'success': False, 'error'}
    """
    try:
        loaded: Dict[str, List[RegretTrace]] = {}
        for cfg in configs:
            label = f"{cfg.name}:{cfg.algorithm}"
            loaded[label] = load_traces(cfg)

        lengths = {label: min(len(t) for t in traces) for label, traces in loaded.items()}
        common = min(lengths.values())
        if len(set(lengths.values())) > 1:
            logger.warning(f"Presupuestos distintos {lengths}; se alinea al prefijo común n={common}")

        checkpoints = sorted({c for cfg in configs for c in cfg.checkpoints if c <= common} | {common})
        frames = []
        curves = {}
        for label, traces in loaded.items():
            table, slope = summarize(traces, checkpoints)
            table.insert(0, 'label', label)
            table['slope'] = slope
            frames.append(table)
            curves[label] = np.median(
                np.array([t.column('cumulative_regret')[:common] for t in traces]), axis=0)

        result = {'success': True, 'table': pd.concat(frames, ignore_index=True),
                  'common_budget': common, 'plot': None}
        if plot_path:
            result['plot'] = str(plot_regret_curves(curves, plot_path,
                                                    title="Regret acumulado (mediana)",
                                                    ylabel="R_n"))
        return result

    except FileNotFoundError as e:
        logger.error(f"Traza no encontrada: {e}")
        return {'success': False, 'error': str(e)}
    except Exception as e:
        logger.error(f"Error en la comparación: {e}")
        return {'success': False, 'error': str(e)}


def toy_gamma_report(delta: float, sigma: float, n_list: Sequence[int]) -> pd.DataFrame:
    """
    Cotas de ganancia de información del ejemplo 1 (en nats).

    Args:
        delta (float): Nivel de confianza
        sigma (float): Desviación del ruido
        n_list: Valores de n

    Returns:
        pd.DataFrame: n, closed_form, series, computed, computed_over_n
    """
    n_list = sorted(int(n) for n in n_list)
    env = ToyEnv1(delta, seed=0, sigma=sigma, i_max=max(n_list))
    rows = []
    for n in n_list:
        computed = toy1_gamma_computed(env, n, sigma)
        rows.append({
            'n': n,
            'closed_form': toy1_gamma_closed_form(n, sigma, delta),
            'series': toy1_gamma_lower(env, n, sigma),
            'computed': computed,
            'computed_over_n': computed / n,
        })
    table = pd.DataFrame(rows)
    logger.info(f"Informe gamma_n (delta={delta}, sigma={sigma}) para n={n_list}")
    return table
