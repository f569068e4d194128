"""
Utils - Utilidades Generales
============================
Funciones de utilidad compartidas: logging, configuración INI, nombres de
archivos de salida, validación de directorios y número de workers.
"""

import os
import hashlib
import logging
from typing import Optional, Tuple, List
from pathlib import Path
from datetime import datetime
import configparser

logger = logging.getLogger(__name__)

WORKERS_ENV_VAR = "GPBANDITS_WORKERS"

DEFAULT_CONFIG = {
    'Experiment': {
        'name': 'experimento',
        'algorithm': 'tree',
        'budget': '200',
        'seeds': '0, 1, 2',
        'u': '2.0',
        'theory_scale': '1.0',
        'beta_mode': 'tight_odd_n',
        'n_split': '3',
        'ucb_grid_res': '64',
        'checkpoints': '50, 100, 200',
        'output_directory': 'results'
    },
    'Environment': {
        'environment': 'grid_gp',
        'kernel': 'matern52',
        'lengthscale': '0.2',
        'variance': '1.0',
        'rq_c1': '1.0',
        'rq_c2': '1.0',
        'dim': '1',
        'lower': '0.0',
        'upper': '1.0',
        'sigma': '0.1',
        'grid_res': '256',
        'toy_delta': '0.05',
        'context_kernel': 'se',
        'action_kernel': 'matern32',
        'composition': 'product',
        'context_dim': '1',
        'action_dim': '1',
        'context_res': '8',
        'action_res': '128'
    },
    'Processing': {
        'max_workers': '4',
        'parallel_processing': 'True'
    },
    'Logging': {
        'level': 'INFO',
        'log_directory': 'logs',
        'max_log_files': '10'
    },
    'Advanced': {
        'debug_mode': 'False',
        'jitter': 'auto'
    }
}


def trace_filename(output_dir: Path, name: str, algorithm: str, seed: int,
                   suffix: str = "") -> Path:
    """
    Genera la ruta del CSV de traza de una semilla.

    Args:
        output_dir (Path): Directorio de salida
        name (str): Nombre del experimento
        algorithm (str): Algoritmo ejecutado
        seed (int): Semilla de la ejecución
        suffix (str): Sufijo opcional (p. ej. "_timing")

    Returns:
        Path: Ruta completa del archivo
    """
    base_name = sanitize_filename(f"{name}_{algorithm}_seed{seed}{suffix}")
    return Path(output_dir) / f"{base_name}.csv"


def summary_filename(output_dir: Path, name: str, algorithm: str) -> Path:
    """Ruta del CSV de resumen de un experimento."""
    base_name = sanitize_filename(f"{name}_{algorithm}_summary")
    return Path(output_dir) / f"{base_name}.csv"


def validate_output_dir(path: str) -> Tuple[bool, List[str]]:
    """
    Valida (y crea si hace falta) un directorio de salida escribible.

    Args:
        path (str): Directorio a validar

    Returns:
        Tuple[bool, List[str]]: (es_válido, lista_de_errores)
    """
    errors = []

    if not path:
        errors.append("Ruta vacía proporcionada")
        return False, errors

    path_obj = Path(path)

    if path_obj.exists() and not path_obj.is_dir():
        errors.append(f"Existe como archivo, no como directorio: {path}")
        return False, errors

    try:
        path_obj.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        errors.append(f"No se pudo crear el directorio {path}: {e}")
        return False, errors

    if not os.access(str(path_obj), os.W_OK):
        errors.append(f"Sin permisos de escritura: {path}")

    return len(errors) == 0, errors


def format_duration(nanoseconds: float) -> str:
    """
    Formatea un tiempo medido con perf_counter_ns.

    Args:
        nanoseconds (float): Duración en nanosegundos

    Returns:
        str: Duración con la unidad adecuada ('850 ns', '12.5 µs', '4.25 ms', '2.5 s', '2m 5s', '2h 1m')
    """
    if nanoseconds < 1e3:
        return f"{int(nanoseconds)} ns"
    if nanoseconds < 1e6:
        return f"{nanoseconds / 1e3:.1f} µs"
    if nanoseconds < 1e9:
        return f"{nanoseconds / 1e6:.2f} ms"
    seconds = nanoseconds / 1e9
    if seconds < 60:
        return f"{seconds:.1f} s"
    if seconds < 3600:
        return f"{int(seconds // 60)}m {int(seconds % 60)}s"
    return f"{int(seconds // 3600)}h {int((seconds % 3600) // 60)}m"


def setup_logging(log_dir: str = "logs", log_level: str = "INFO") -> str:
    """
    Configura el sistema de logging.

    Args:
        log_dir (str): Directorio para archivos de log
        log_level (str): Nivel de logging

    Returns:
        str: Ruta del archivo de log
    """
    log_path = Path(log_dir)
    log_path.mkdir(parents=True, exist_ok=True)

    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    log_file = log_path / f"gp_bandits_{timestamp}.log"

    log_format = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    date_format = '%Y-%m-%d %H:%M:%S'

    logging.basicConfig(
        level=getattr(logging, log_level.upper(), logging.INFO),
        format=log_format,
        datefmt=date_format,
        handlers=[
            logging.FileHandler(str(log_file), encoding='utf-8'),
            logging.StreamHandler()
        ],
        force=True
    )

    logger.info(f"Sistema de logging configurado: {log_file}")
    return str(log_file)


def load_config(config_path: str = "config.ini") -> configparser.ConfigParser:
    """
    Carga configuración desde archivo INI sobre los valores por defecto.

    Args:
        config_path (str): Ruta del archivo de configuración

    Returns:
        configparser.ConfigParser: Objeto de configuración
    """
    config = configparser.ConfigParser()
    config.read_dict(DEFAULT_CONFIG)

    if config_path and os.path.exists(config_path):
        try:
            config.read(config_path, encoding='utf-8')
            logger.info(f"Configuración cargada desde: {config_path}")
        except configparser.Error as e:
            logger.warning(f"Error al cargar configuración: {e}. Usando valores por defecto.")
    else:
        logger.info("Archivo de configuración no encontrado. Usando valores por defecto.")

    return config


def save_config(config: configparser.ConfigParser, config_path: str = "config.ini") -> bool:
    """
    Guarda configuración en archivo INI.

    Args:
        config (configparser.ConfigParser): Objeto de configuración
        config_path (str): Ruta del archivo de configuración

    Returns:
        bool: True si se guardó exitosamente
    """
    try:
        with open(config_path, 'w', encoding='utf-8') as config_file:
            config.write(config_file)

        logger.info(f"Configuración guardada en: {config_path}")
        return True

    except OSError as e:
        logger.error(f"Error al guardar configuración: {e}")
        return False


def config_hash(config: configparser.ConfigParser) -> str:
    """
    Huella estable de una configuración (secciones y claves ordenadas).

    Args:
        config (configparser.ConfigParser): Configuración a resumir

    Returns:
        str: Primeros 16 caracteres hexadecimales del SHA-256
    """
    lines = []
    for section in sorted(config.sections()):
        for key in sorted(config[section]):
            lines.append(f"{section}.{key}={config[section][key].strip()}")
    digest = hashlib.sha256("\n".join(lines).encode('utf-8')).hexdigest()
    return digest[:16]


def resolve_workers(config: Optional[configparser.ConfigParser] = None) -> int:
    """
    Número de workers para las semillas: variable de entorno o [Processing].

    Args:
        config (configparser.ConfigParser): Configuración opcional

    Returns:
        int: Número de workers (>= 1)
    """
    env_value = os.environ.get(WORKERS_ENV_VAR)
    if env_value:
        try:
            return max(1, int(env_value))
        except ValueError:
            logger.warning(f"{WORKERS_ENV_VAR} no es un entero válido: {env_value!r}")

    if config is not None and config.has_section('Processing'):
        if not config.getboolean('Processing', 'parallel_processing', fallback=True):
            return 1
        return max(1, config.getint('Processing', 'max_workers', fallback=1))

    return 1


def sanitize_filename(filename: str) -> str:
    """
    Limpia un nombre de archivo eliminando caracteres no válidos.

    Args:
        filename (str): Nombre de archivo original

    Returns:
        str: Nombre de archivo limpio
    """
    invalid_chars = '<>:"/\\|?* '

    clean_name = filename.strip()
    for char in invalid_chars:
        clean_name = clean_name.replace(char, '_')

    if len(clean_name) > 200:
        clean_name = clean_name[:200]

    return clean_name
