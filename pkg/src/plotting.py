"""
Plotting - Curvas de Regret en SVG
==================================
Dibuja curvas de regret (mediana por algoritmo) con reportlab.graphics y las
guarda como SVG.
"""

import logging
from pathlib import Path
from typing import Dict, Sequence, Union

import numpy as np
from reportlab.graphics import renderSVG
from reportlab.graphics.shapes import Drawing, Line, PolyLine, Rect, String
from reportlab.lib import colors

logger = logging.getLogger(__name__)

WIDTH = 520
HEIGHT = 340
MARGIN_LEFT = 60
MARGIN_BOTTOM = 45
MARGIN_TOP = 30
MARGIN_RIGHT = 130

PALETTE = [colors.HexColor(code) for code in
           ('#1f77b4', '#d62728', '#2ca02c', '#ff7f0e', '#9467bd', '#8c564b')]


def _ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, count)


def plot_regret_curves(curves: Dict[str, Sequence[float]], path: Union[str, Path],
                       title: str = "Regret", ylabel: str = "R_n",
                       log_scale: bool = False) -> Path:
    """
    Guarda una figura SVG con una curva por algoritmo.

    Args:
        curves (dict): Etiqueta -> valores por n = 1..len
        path: Ruta del SVG
        title (str): Título
        ylabel (str): Etiqueta del eje vertical
        log_scale (bool): Ejes log10-log10 (se descartan valores <= 0)

    Returns:
        Path: Ruta escrita
    """
    if not curves:
        raise ValueError("No hay curvas que dibujar")

    series = {}
    for label, values in curves.items():
        y = np.asarray(values, dtype=float)
        x = np.arange(1, len(y) + 1, dtype=float)
        keep = np.isfinite(y)
        if log_scale:
            keep &= y > 0
            x, y = np.log10(x[keep]), np.log10(y[keep])
        else:
            x, y = x[keep], y[keep]
        if len(x):
            series[label] = (x, y)

    if not series:
        raise ValueError("Ninguna curva tiene valores representables")

    x_lo = min(s[0].min() for s in series.values())
    x_hi = max(s[0].max() for s in series.values())
    y_lo = min(s[1].min() for s in series.values())
    y_hi = max(s[1].max() for s in series.values())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_BOTTOM - MARGIN_TOP

    def sx(v):
        return MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v):
        return MARGIN_BOTTOM + (v - y_lo) / (y_hi - y_lo) * plot_h

    drawing = Drawing(WIDTH, HEIGHT)
    drawing.add(Rect(0, 0, WIDTH, HEIGHT, fillColor=colors.white, strokeColor=None))
    drawing.add(Rect(MARGIN_LEFT, MARGIN_BOTTOM, plot_w, plot_h,
                     fillColor=None, strokeColor=colors.black, strokeWidth=0.8))
    drawing.add(String(WIDTH / 2, HEIGHT - 18, title, fontSize=12, textAnchor='middle'))

    prefix = "log10 " if log_scale else ""
    drawing.add(String(MARGIN_LEFT + plot_w / 2, 10, f"{prefix}n", fontSize=9, textAnchor='middle'))
    drawing.add(String(8, HEIGHT - MARGIN_TOP + 8, f"{prefix}{ylabel}", fontSize=9))

    for v in _ticks(x_lo, x_hi):
        drawing.add(Line(sx(v), MARGIN_BOTTOM, sx(v), MARGIN_BOTTOM - 4))
        drawing.add(String(sx(v), MARGIN_BOTTOM - 14, f"{v:.3g}", fontSize=7, textAnchor='middle'))
    for v in _ticks(y_lo, y_hi):
        drawing.add(Line(MARGIN_LEFT - 4, sy(v), MARGIN_LEFT, sy(v)))
        drawing.add(String(MARGIN_LEFT - 6, sy(v) - 2, f"{v:.3g}", fontSize=7, textAnchor='end'))

    for i, (label, (x, y)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        points = []
        for xv, yv in zip(x, y):
            points.extend([float(sx(xv)), float(sy(yv))])
        if len(points) == 2:
            points.extend(points)
        drawing.add(PolyLine(points, strokeColor=color, strokeWidth=1.4))

        legend_y = HEIGHT - MARGIN_TOP - 14 * (i + 1)
        legend_x = WIDTH - MARGIN_RIGHT + 12
        drawing.add(Line(legend_x, legend_y + 3, legend_x + 18, legend_y + 3,
                         strokeColor=color, strokeWidth=2))
        drawing.add(String(legend_x + 22, legend_y, label, fontSize=8))

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    renderSVG.drawToFile(drawing, str(path))
    logger.info(f"Gráfico de regret guardado: {path}")
    return path
