"""
GP Bandits - Archivo Principal
==============================
Línea de comandos para ejecutar experimentos de bandidos GP con
discretización adaptativa, comparar algoritmos, emitir el informe de
ganancia de información del ejemplo 1 y lanzar las comprobaciones de
aceptación.

Uso:
    python main.py run [--config config.ini]
    python main.py compare config_a.ini config_b.ini [--plot regret.svg]
    python main.py toy-gamma [--delta 0.05] [--sigma 1.0] [--n 10 50 100 200]
    python main.py validate [--criteria 1 2 ...] [--quick]
"""

import sys
import os
import argparse
import logging
from pathlib import Path

# Agregar el directorio src al path para importaciones
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

# Configurar logging temprano
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s'
)


def setup_directories(config):
    """Crear directorios de resultados y logs si no existen."""
    base_dir = Path(__file__).parent
    directories = [config.get('Experiment', 'output_directory'),
                   config.get('Logging', 'log_directory')]

    for directory in directories:
        dir_path = Path(directory) if Path(directory).is_absolute() else base_dir / directory
        try:
            if dir_path.exists() and not dir_path.is_dir():
                print(f"⚠️ Advertencia: {dir_path} existe como archivo")
                continue
            dir_path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            print(f"⚠️ Error creando directorio {directory}: {e}")


def check_dependencies():
    """Verificar que todas las dependencias estén instaladas."""
    required_modules = [
        ('numpy', 'numpy'),
        ('scipy', 'scipy'),
        ('pandas', 'pandas'),
        ('reportlab', 'reportlab')
    ]

    missing_modules = []

    for module_import, module_name in required_modules:
        try:
            __import__(module_import)
        except ImportError:
            missing_modules.append(module_name)
            print(f"❌ {module_name}")

    if missing_modules:
        print("\n❌ Módulos faltantes:")
        for module in missing_modules:
            print(f"   - {module}")
        print("\n📦 Instala las dependencias:")
        print("   pip install -r requirements.txt")
        return False

    return True


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='gp-bandits',
                                     description="Bandidos GP con discretización adaptativa")
    parser.add_argument('--config', default='config.ini', help="Archivo de configuración INI")
    parser.add_argument('--log-level', default=None, help="Nivel de logging (sobrescribe [Logging])")
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help="Ejecutar el experimento de la configuración")
    run.add_argument('--algorithm', help="Sobrescribe [Experiment] algorithm")
    run.add_argument('--budget', type=int, help="Sobrescribe [Experiment] budget")
    run.add_argument('--seeds', help="Sobrescribe [Experiment] seeds (p. ej. '0,1,2')")
    run.add_argument('--workers', type=int, help="Número de workers")

    compare = sub.add_parser('compare', help="Comparar experimentos ya ejecutados")
    compare.add_argument('configs', nargs='+', help="Archivos de configuración a comparar")
    compare.add_argument('--plot', help="Ruta del SVG con las curvas de regret")
    compare.add_argument('--run', action='store_true', help="Ejecutar antes los experimentos")

    gamma = sub.add_parser('toy-gamma', help="Informe de ganancia de información del ejemplo 1")
    gamma.add_argument('--delta', type=float, default=0.05)
    gamma.add_argument('--sigma', type=float, default=1.0)
    gamma.add_argument('--n', type=int, nargs='+', default=[10, 20, 50, 100, 200])
    gamma.add_argument('--output', help="CSV de salida opcional")

    validate = sub.add_parser('validate', help="Comprobaciones de aceptación")
    validate.add_argument('--criteria', type=int, nargs='*', help="Criterios a ejecutar (todos por defecto)")
    validate.add_argument('--quick', action='store_true', help="Tamaños reducidos")
    return parser


def _experiment_from(path: str, overrides=None):
    from utils import load_config
    from bench_runner import ExperimentConfig

    config = load_config(path)
    for key, value in (overrides or {}).items():
        if value is not None:
            config.set('Experiment', key, str(value))
    return ExperimentConfig.from_config(config)


def cmd_run(args, config) -> int:
    from bench_runner import ExperimentRunner, ConfigError
    from utils import resolve_workers

    try:
        experiment = _experiment_from(args.config, {'algorithm': args.algorithm,
                                                    'budget': args.budget, 'seeds': args.seeds})
    except ConfigError as e:
        print(f"❌ Configuración inválida en {e.key}: {e}")
        return 2

    print(f"🚀 Ejecutando {experiment.algorithm} con n={experiment.budget} "
          f"y semillas {list(experiment.seeds)} (hash {experiment.hash})")
    runner = ExperimentRunner(experiment, max_workers=args.workers or resolve_workers(config))
    result = runner.run_experiment()
    if not result['success']:
        print(f"❌ Error: {result['error']}")
        return 1

    print(result['summary_table'].to_string(index=False))
    print(f"✅ {len(result['traces'])} trazas y resumen en {result['summary']} "
          f"(pendiente {result['slope']:.3f})")
    return 0


def cmd_compare(args, config) -> int:
    from bench_runner import ExperimentRunner, ConfigError, compare
    from utils import resolve_workers

    try:
        experiments = [_experiment_from(path) for path in args.configs]
    except ConfigError as e:
        print(f"❌ Configuración inválida en {e.key}: {e}")
        return 2

    if args.run:
        for experiment in experiments:
            result = ExperimentRunner(experiment, max_workers=resolve_workers(config)).run_experiment()
            if not result['success']:
                print(f"❌ Error en {experiment.name}: {result['error']}")
                return 1

    result = compare(experiments, plot_path=args.plot)
    if not result['success']:
        print(f"❌ Error: {result['error']}")
        return 1

    print(result['table'].to_string(index=False))
    if result['plot']:
        print(f"📈 Gráfico guardado en {result['plot']}")
    return 0


def cmd_toy_gamma(args, config) -> int:
    from bench_runner import toy_gamma_report

    table = toy_gamma_report(args.delta, args.sigma, args.n)
    print(table.to_string(index=False, float_format=lambda v: f"{v:.6g}"))
    if args.output:
        table.to_csv(args.output, index=False)
        print(f"✅ Informe guardado en {args.output}")
    return 0


def cmd_validate(args, config) -> int:
    from validation import run_validation

    outcome = run_validation(args.criteria, quick=args.quick)
    if 'error' in outcome:
        print(f"❌ {outcome['error']}")
        return 2

    for criterion, result in outcome['results'].items():
        mark = "✅" if result['success'] else "❌"
        details = {k: v for k, v in result.items() if k not in ('success', 'criterion', 'name')}
        print(f"{mark} {criterion:>2}. {result['name']}: {details}")
    return 0 if outcome['success'] else 1


COMMANDS = {
    'run': cmd_run,
    'compare': cmd_compare,
    'toy-gamma': cmd_toy_gamma,
    'validate': cmd_validate,
}


def main(argv=None) -> int:
    """Función principal de la aplicación."""
    args = build_parser().parse_args(argv)

    try:
        if not check_dependencies():
            return 1

        from utils import load_config, setup_logging

        config = load_config(args.config)
        setup_directories(config)
        setup_logging(config.get('Logging', 'log_directory'),
                      args.log_level or config.get('Logging', 'level'))

        return COMMANDS[args.command](args, config)

    except KeyboardInterrupt:
        print("\n🛑 Ejecución interrumpida por el usuario")
        return 130
    except Exception as e:
        print(f"❌ Error crítico: {e}")
        logging.exception("Error crítico en main")
        return 1


if __name__ == "__main__":
    sys.exit(main())
