"""
Regret Trace - Traza de Regret por Ronda
========================================
Registro por evaluación de consulta, observación, regret instantáneo,
regret acumulado y simple, con metadatos de cabecera y serialización CSV
versionada. Los tiempos de pared se guardan en un archivo aparte para que
el CSV principal sea idéntico byte a byte entre ejecuciones.
"""

import math
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SCHEMA_HEADER = f"# gp-bandits-trace schema={SCHEMA_VERSION}"
FLOAT_FORMAT = '%.17g'


class RegretTrace:
    """
    Filas de una ejecución y sus metadatos.

    cumulative_regret es la suma prefija exacta de delta.
    """

    def __init__(self, dim: int, metadata: Optional[Dict[str, object]] = None):
        """
        Inicializa una traza vacía.

        Args:
            dim (int): Dimensión de los puntos consultados
            metadata (dict): Metadatos de cabecera (hash, semilla, modo del óptimo...)
        """
        self.dim = dim
        self.metadata: Dict[str, object] = dict(metadata or {})
        self._rows: List[Dict[str, float]] = []
        self._wall_ns: List[int] = []
        self._cumulative = 0.0

    def __len__(self) -> int:
        return len(self._rows)

    @property
    def columns(self) -> List[str]:
        return (['t', 'n_e'] + [f"x_{j}" for j in range(self.dim)]
                + ['y', 'delta', 'cumulative_regret', 'simple_regret', 'active_count', 'level'])

    def add_evaluation(self, t: int, n_e: int, x: Sequence[float], y: float, delta: float,
                       simple_regret: float, active_count: int, level: int,
                       wall_ns: int = 0) -> Dict[str, float]:
        """
        Añade la fila de una evaluación.

        Args:
            t (int): Ronda (refinamientos incluidos)
            n_e (int): Número de evaluaciones tras ésta
            x: Punto consultado (coordenadas de usuario)
            y (float): Observación ruidosa
            delta (float): f(x*) - f(x)
            simple_regret (float): Regret simple de la recomendación actual
            active_count (int): Hojas o puntos activos
            level (int): Profundidad h o nivel de radio k del punto
            wall_ns (int): Tiempo de pared de la ronda

        Returns:
            Dict[str, float]: La fila añadida
        """
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dim:
            raise ValueError(f"Punto de dimensión {x.shape[0]}, traza de dimensión {self.dim}")

        self._cumulative += float(delta)
        row = {'t': int(t), 'n_e': int(n_e)}
        row.update({f"x_{j}": float(v) for j, v in enumerate(x)})
        row.update({
            'y': float(y),
            'delta': float(delta),
            'cumulative_regret': self._cumulative,
            'simple_regret': float(simple_regret),
            'active_count': int(active_count),
            'level': int(level),
        })
        self._rows.append(row)
        self._wall_ns.append(int(wall_ns))
        return row

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self._rows, columns=self.columns)

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self._rows], dtype=float)

    @property
    def cumulative_regret(self) -> float:
        return self._cumulative

    @property
    def simple_regret(self) -> float:
        return self._rows[-1]['simple_regret'] if self._rows else math.nan

    @property
    def total_wall_ns(self) -> int:
        return int(sum(self._wall_ns))

    def to_csv(self, path: Union[str, Path], timing: bool = True) -> Path:
        """
        Escribe la traza con cabecera de metadatos y, opcionalmente, los tiempos.

        Args:
            path: Ruta del CSV principal
            timing (bool): Escribir también <nombre>_timing.csv

        Returns:
            Path: Ruta escrita
        """
        path = Path(path)
        with open(path, 'w', encoding='utf-8', newline='') as handle:
            handle.write(SCHEMA_HEADER + "\n")
            for key in sorted(self.metadata):
                handle.write(f"# {key}={self.metadata[key]}\n")
            self.to_frame().to_csv(handle, index=False, float_format=FLOAT_FORMAT,
                                   lineterminator="\n")

        if timing:
            timing_path = path.with_name(f"{path.stem}_timing.csv")
            pd.DataFrame({'t': [row['t'] for row in self._rows], 'wall_ns': self._wall_ns}) \
                .to_csv(timing_path, index=False, lineterminator="\n")

        logger.debug(f"Traza escrita: {path} ({len(self)} filas)")
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> 'RegretTrace':
        """
        Lee una traza escrita por to_csv.

        Args:
            path: Ruta del CSV

        Returns:
            RegretTrace: Traza reconstruida (sin tiempos)
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"No existe la traza: {path}")

        metadata: Dict[str, object] = {}
        header_lines = 0
        with open(path, 'r', encoding='utf-8') as handle:
            first = handle.readline().rstrip("\n")
            if not first.startswith("# gp-bandits-trace"):
                raise ValueError(f"Cabecera de traza no reconocida en {path}: {first!r}")
            version = int(first.split("schema=")[1])
            if version != SCHEMA_VERSION:
                raise ValueError(f"Versión de esquema {version} no soportada en {path}")
            header_lines = 1
            for line in handle:
                if not line.startswith("# "):
                    break
                key, _, value = line[2:].rstrip("\n").partition("=")
                metadata[key] = value
                header_lines += 1

        frame = pd.read_csv(path, skiprows=header_lines)
        dim = sum(1 for col in frame.columns if col.startswith("x_"))
        trace = cls(dim, metadata)
        for record in frame.to_dict('records'):
            x = [record[f"x_{j}"] for j in range(dim)]
            trace.add_evaluation(record['t'], record['n_e'], x, record['y'], record['delta'],
                                 record['simple_regret'], record['active_count'], record['level'])
        return trace
