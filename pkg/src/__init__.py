# src/__init__.py
"""
GP Bandits - Módulos principales
================================
Optimización de funciones muestreadas de un proceso gaussiano con
discretización adaptativa (árbol y zooming), variante contextual y
bancos de prueba.

Los módulos se importan por nombre desde main.py y las pruebas, que
agregan este directorio al path.
"""

__version__ = "1.0.0"

__all__ = [
    'gp_core', 'partition_tree', 'confidence', 'regret_trace', 'env',
    'algo_tree', 'algo_zoom', 'algo_contextual', 'baselines',
    'bench_runner', 'plotting', 'validation', 'utils',
]
