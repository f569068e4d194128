"""
Validation - Comprobaciones de Aceptación
=========================================
Una función por criterio de aceptación. Cada una recibe los tamaños como
parámetros (los valores por defecto son los completos; las pruebas usan
tamaños reducidos) y devuelve un diccionario con 'success' y las métricas
medidas, al estilo de los orquestadores del proyecto.
"""

import math
import time
import logging
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from algo_contextual import ContextualBandit
from algo_tree import InvariantViolation, TreeBandit
from algo_zoom import ZoomBandit, packing_number
from baselines import run_random, theoretical_grid_size
from bench_runner import toy_gamma_report
from confidence import make_confidence_config, v_h, w_ball, w_cap
from env import ToyEnv1, ToyEnv2, make_contextual_env, make_grid_gp, toy1_one_shot, toy2_oracle_strategy
from gp_core import ATOMIC_FAMILIES, KernelSpec, PosteriorState, envelope, induced_metric, sample_grid
from partition_tree import BoxDomain, PartitionParams, nodes_at_depth, root

logger = logging.getLogger(__name__)

MC_SLACK = 0.03


def _timed(name: str, criterion: int):
    """Decora una comprobación: mide el tiempo y convierte excepciones en resultados fallidos."""
    def decorator(check: Callable[..., Dict]) -> Callable[..., Dict]:
        def wrapper(*args, **kwargs) -> Dict:
            begin = time.perf_counter()
            try:
                result = check(*args, **kwargs)
            except Exception as e:
                logger.error(f"Criterio {criterion} ({name}) falló con error: {e}")
                result = {'success': False, 'error': str(e)}
            result.update({'criterion': criterion, 'name': name,
                           'elapsed_s': time.perf_counter() - begin})
            status = "OK" if result['success'] else "FALLO"
            logger.info(f"Criterio {criterion} ({name}): {status} en {result['elapsed_s']:.1f} s")
            return result
        wrapper.__name__ = check.__name__
        wrapper.__doc__ = check.__doc__
        return wrapper
    return decorator


def _random_kernel(rng: np.random.Generator, family: str) -> KernelSpec:
    return KernelSpec.from_name(family, lengthscale=float(rng.uniform(0.1, 0.4)),
                                variance=float(rng.uniform(0.5, 2.0)),
                                c1=float(rng.uniform(0.5, 2.0)), c2=float(rng.uniform(0.5, 2.0)))


@_timed("equivalencia del posterior incremental", 1)
def check_posterior_oracle(n_configs: int = 200, max_t: int = 60, tol: float = 1e-8,
                           seed: int = 0) -> Dict:
    """
    Posterior incremental frente a refactorización densa en configuraciones aleatorias.

    Sin ruido el sistema está mal condicionado; esas configuraciones usan
    t <= 4 puntos estratificados en el primer eje. Se comparan medias y varianzas.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_configs):
        family = ATOMIC_FAMILIES[i % len(ATOMIC_FAMILIES)]
        sigma = (0.0, 0.1, 1.0)[i % 3]
        dim = int(rng.integers(1, 3))
        kernel = _random_kernel(rng, family)
        t = int(rng.integers(1, (4 if sigma == 0 else max_t) + 1))
        points = rng.random((t, dim))
        if sigma == 0:
            points[:, 0] = (rng.permutation(t) + 0.4 + 0.2 * rng.random(t)) / t

        state = PosteriorState(kernel, noise_var=sigma ** 2)
        for x in points:
            state.update(x, float(rng.standard_normal()))

        test = rng.random((20, dim))
        mu, sd = state.query_many(test)
        mu_d, sd_d = state.dense_query_many(test)
        worst = max(worst, float(np.max(np.abs(mu - mu_d))), float(np.max(np.abs(sd ** 2 - sd_d ** 2))))

    return {'success': worst <= tol, 'max_abs_error': worst, 'configs': n_configs}


@_timed("cotas de varianza a posteriori", 2)
def check_variance_bounds(max_repeats: int = 50, n_ball_configs: int = 100, sigma: float = 0.1,
                          seed: int = 0) -> Dict:
    """sigma_t(x) <= sigma/sqrt(m) con m repeticiones, y <= sigma/sqrt(n) + g(r) con n puntos en B(x, r)."""
    rng = np.random.default_rng(seed)
    part1_worst = -math.inf
    for family in ATOMIC_FAMILIES:
        kernel = KernelSpec.from_name(family, lengthscale=0.3)
        x = np.array([0.4])
        state = PosteriorState(kernel, noise_var=sigma ** 2)
        for m in range(1, max_repeats + 1):
            state.update(x, 0.0)
            _, sd = state.query(x)
            part1_worst = max(part1_worst, sd - sigma / math.sqrt(m))

    part2_worst = -math.inf
    for i in range(n_ball_configs):
        family = ATOMIC_FAMILIES[i % len(ATOMIC_FAMILIES)]
        kernel = KernelSpec.from_name(family, lengthscale=float(rng.uniform(0.2, 1.0)))
        g = envelope(kernel, dim=1)
        center = float(rng.uniform(0.2, 0.8))
        radius = float(rng.uniform(0.005, 0.2))
        count = int(rng.integers(1, 30))
        state = PosteriorState(kernel, noise_var=sigma ** 2)
        for z in rng.uniform(center - radius, center + radius, count):
            state.update([z], 0.0)
        _, sd = state.query([center])
        part2_worst = max(part2_worst, sd - (sigma / math.sqrt(count) + g(radius)))

    return {'success': part1_worst <= 1e-10 and part2_worst <= 1e-10,
            'part1_max_excess': part1_worst, 'part2_max_excess': part2_worst}


@_timed("cobertura de beta_n", 3)
def check_beta_coverage(runs: int = 300, n: int = 60, u: float = 2.0, sigma: float = 0.1,
                        grid_res: int = 256) -> Dict:
    """Fracción de ejecuciones del árbol con algún |f(x) - mu| > beta sigma en un punto seleccionado."""
    kernel = KernelSpec.matern(1.5, lengthscale=0.2)
    failures = 0
    for seed in range(runs):
        env = make_grid_gp(kernel, BoxDomain.unit(1), grid_res, sigma, seed)
        cfg = make_confidence_config(kernel, env.domain, n, sigma, u=u)
        violated = []

        def monitor(event, env=env, violated=violated):
            if abs(env.true_value(event['x']) - event['mu']) > event['beta'] * event['sigma']:
                violated.append(event['t'])

        TreeBandit(kernel, env.domain, cfg, monitor=monitor).run(env)
        failures += bool(violated)

    frequency = failures / runs
    limit = math.exp(-u) + MC_SLACK
    return {'success': frequency <= limit, 'failure_frequency': frequency, 'limit': limit, 'runs': runs}


@_timed("cobertura de V_h y W(r_k)", 4)
def check_variation_coverage(functions: int = 500, grid_points: int = 2048, u: float = 2.0,
                             max_depth: int = 6, max_level: int = 6, centers_per_level: int = 50,
                             ball_radius: float = 0.3, seed: int = 0) -> Dict:
    """
    Variación de funciones muestreadas dentro de las celdas (V_h), de bolas l_inf
    de radio 2^-k con centros aleatorios (W) y de una bola-d alrededor de 1/2.

    Las funciones se muestrean conjuntamente en la rejilla, los centros de las
    celdas ternarias hasta max_depth y los centros aleatorios de cada nivel.
    """
    kernel = KernelSpec.matern(1.5, lengthscale=0.4)
    domain = BoxDomain.unit(1)
    cfg = make_confidence_config(kernel, domain, 100, 0.1, u=u)
    params = PartitionParams(3, 1)
    rng = np.random.default_rng(seed)

    grid = np.linspace(0.0, 1.0, grid_points)
    cells = [node for h in range(max_depth + 1) for node in nodes_at_depth(root(domain), params, h)]
    net = [(k, float(c)) for k in range(max_level + 1) for c in rng.uniform(0.0, 1.0, centers_per_level)]
    extra = np.array([node.center[0] for node in cells] + [c for _, c in net] + [0.5])
    points, inverse = np.unique(np.concatenate([grid, extra]), return_inverse=True)
    samples = sample_grid(kernel, points[:, None], seed, size=functions)

    grid_idx = inverse[:grid_points]
    center_idx = inverse[grid_points:grid_points + len(cells)]
    net_idx = inverse[grid_points + len(cells):-1]
    half_idx = inverse[-1]

    cell_masks = [(grid >= node.lower[0]) & (grid <= node.upper[0]) for node in cells]
    ball_masks = [np.abs(grid - c) <= 2.0 ** -k for k, c in net]
    d_mask = np.array([induced_metric(kernel, [0.5], [z]) <= ball_radius for z in grid])
    v_limits = np.array([v_h(cfg, node.depth) for node in cells])
    w_limits = np.array([w_cap(cfg, k) for k, _ in net])
    b_limit = w_ball(cfg, ball_radius)

    v_fail = w_fail = b_fail = 0
    for f in samples.T:
        on_grid = f[grid_idx]
        v_fail += any(np.max(np.abs(on_grid[mask] - f[ci])) > lim
                      for mask, ci, lim in zip(cell_masks, center_idx, v_limits))
        w_fail += any(np.max(np.abs(on_grid[mask] - f[ni])) > lim
                      for mask, ni, lim in zip(ball_masks, net_idx, w_limits))
        b_fail += bool(np.max(np.abs(on_grid[d_mask] - f[half_idx])) > b_limit)

    limit = math.exp(-u) + MC_SLACK
    frequencies = {'v_violation_frequency': v_fail / functions,
                   'w_violation_frequency': w_fail / functions,
                   'ball_violation_frequency': b_fail / functions}
    return {'success': all(freq <= limit for freq in frequencies.values()), **frequencies,
            'limit': limit, 'sampled_points': len(points)}


@_timed("evaluaciones por hoja del árbol", 5)
def check_tree_evaluations(runs: int = 100, n: int = 60, u: float = 2.0, sigma: float = 0.1,
                           grid_res: int = 256) -> Dict:
    """(a) ninguna hoja supera q_h + 1 evaluaciones antes de expandirse; (b) Delta <= (2N+1) V_h."""
    kernel = KernelSpec.matern(1.5, lengthscale=0.2)
    repeat_ok = True
    good_runs = 0
    for seed in range(runs):
        env = make_grid_gp(kernel, BoxDomain.unit(1), grid_res, sigma, seed)
        cfg = make_confidence_config(kernel, env.domain, n, sigma, u=u)
        bandit = TreeBandit(kernel, env.domain, cfg)
        trace, _ = bandit.run(env)

        for (h, _), count in bandit.eval_counts.items():
            if h >= bandit.h_max:
                continue
            if count > bandit.repeat_budget(h) + 1:
                repeat_ok = False

        factor = 2 * cfg.params.n_split + 1
        deltas, levels = trace.column('delta'), trace.column('level').astype(int)
        good_runs += all(d <= factor * bandit.v(h) + 1e-12 for d, h in zip(deltas, levels))

    fraction = good_runs / runs
    limit = 1.0 - 2.0 * math.exp(-u) - MC_SLACK
    return {'success': repeat_ok and fraction >= limit, 'repeat_bound_ok': repeat_ok,
            'good_run_fraction': fraction, 'limit': limit}


@_timed("recubrimiento del zoom", 6)
def check_zoom_covering(runs: int = 20, n: int = 60, dims: Sequence[int] = (1, 2),
                        sigma: float = 0.1, suboptimality_runs: int = 300, u: float = 2.0) -> Dict:
    """
    Invariantes del zoom.

    Recubrimiento tras cada ronda (modo depuración), separación, tamaño del
    conjunto activo y q_k + 1 evaluaciones por nivel en cada ejecución; además,
    fracción de ejecuciones (Matérn 3/2, D = 1) en las que todo punto evaluado
    cumplió Delta(x) <= 5 W(r(x)), frente a 1 - 2 e^-u.
    """
    kernel = KernelSpec.matern(1.5, lengthscale=0.3)
    failures: List[str] = []
    for dim in dims:
        grid_res = 256 if dim == 1 else 32
        for seed in range(runs):
            env = make_grid_gp(kernel, BoxDomain.unit(dim), grid_res, sigma, seed)
            cfg = make_confidence_config(kernel, env.domain, n, sigma)
            bandit = ZoomBandit(kernel, env.domain, cfg, debug=True)
            try:
                bandit.run(env)
            except InvariantViolation as e:
                failures.append(f"D={dim} semilla={seed}: {e}")
                continue
            if not bandit.separation_ok():
                failures.append(f"D={dim} semilla={seed}: separación")
            if len(bandit.active) > packing_number(dim, bandit.r_min / 2.0):
                failures.append(f"D={dim} semilla={seed}: {len(bandit.active)} puntos activos")
            for order, k, count in bandit.repeat_overruns():
                failures.append(f"D={dim} semilla={seed}: punto {order} evaluado {count} veces en el nivel {k}")

    good_runs = 0
    for seed in range(suboptimality_runs):
        env = make_grid_gp(kernel, BoxDomain.unit(1), 256, sigma, seed)
        cfg = make_confidence_config(kernel, env.domain, n, sigma, u=u)
        bandit = ZoomBandit(kernel, env.domain, cfg)
        bandit.run(env)
        good_runs += bandit.suboptimality_ok()

    fraction = good_runs / max(suboptimality_runs, 1)
    limit = 1.0 - 2.0 * math.exp(-u) - MC_SLACK
    return {'success': not failures and fraction >= limit, 'failures': failures,
            'good_run_fraction': fraction, 'limit': limit}


@_timed("ejemplo de juguete 1", 7)
def check_toy1(seeds: int = 2000, delta: float = 0.05, sigma_gamma: float = 1.0,
               n_list: Sequence[int] = (10, 20, 50, 100, 200)) -> Dict:
    """Identificación con una evaluación y orden de las columnas del informe de gamma_n."""
    successes = sum(toy1_one_shot(ToyEnv1(delta, seed))['success'] for seed in range(seeds))
    frequency = successes / seeds
    limit = 1.0 - 3.0 * delta - MC_SLACK

    table = toy_gamma_report(delta, sigma_gamma, n_list)
    ordered = bool(np.all(table['closed_form'] <= table['series'] + 1e-9)
                   and np.all(table['series'] <= table['computed'] + 1e-9))
    floor = np.array([0.4 * min(0.5, 1.0 / (16.0 * sigma_gamma ** 2 *
                                            math.log(math.pi ** 2 * n ** 2 / (3.0 * delta))))
                      for n in table['n']])
    linear = bool(np.all(table['computed_over_n'] >= floor))
    return {'success': frequency >= limit and ordered and linear,
            'identification_frequency': frequency, 'limit': limit,
            'gamma_ordered': ordered, 'gamma_linear': linear}


@_timed("ejemplo de juguete 2", 8)
def check_toy2(seeds: int = 500, n: int = 10, delta: float = 0.05) -> Dict:
    """Regret de la estrategia oráculo con niveles y ruido acotados, y frecuencia de ese evento."""
    held = 0
    regret_ok = True
    bound = 2.0 * math.log(n) + 0.1
    for seed in range(seeds):
        env = ToyEnv2(delta, seed, n_for_sigma=n, depth_max=max(n, 12))
        trace = toy2_oracle_strategy(env, n)
        if trace.metadata['levels_bounded'] and trace.metadata['noise_bounded']:
            held += 1
            regret_ok = regret_ok and trace.cumulative_regret <= bound

    frequency = held / seeds
    limit = 1.0 - 2.0 * delta - MC_SLACK
    return {'success': regret_ok and frequency >= limit, 'event_frequency': frequency,
            'limit': limit, 'regret_within_bound': regret_ok}


def _median_at(traces, column: str, n: int) -> float:
    return float(np.median([t.column(column)[n - 1] for t in traces]))


@_timed("dominancia de regret", 9)
def check_regret_dominance(seeds: int = 20, n: int = 200, sigma: float = 0.1,
                           theory_scale: float = 0.2, checkpoints: Sequence[int] = (50, 100, 200),
                           grid_res: int = 256) -> Dict:
    """Árbol y zoom frente a búsqueda aleatoria: S_n mediano y R_n/n decreciente."""
    kernel = KernelSpec.matern(2.5, lengthscale=0.2)
    checkpoints = [c for c in checkpoints if c <= n]
    traces: Dict[str, list] = {'tree': [], 'zoom': [], 'random': []}
    for seed in range(seeds):
        env = make_grid_gp(kernel, BoxDomain.unit(1), grid_res, sigma, seed)
        cfg = make_confidence_config(kernel, env.domain, n, sigma, theory_scale=theory_scale)
        traces['tree'].append(TreeBandit(kernel, env.domain, cfg).run(env.with_noise_seed(seed))[0])
        traces['zoom'].append(ZoomBandit(kernel, env.domain, cfg).run(env.with_noise_seed(seed))[0])
        traces['random'].append(run_random(env.with_noise_seed(seed), n, seed))

    report = {}
    success = True
    first, last = checkpoints[0], checkpoints[-1]
    for name in ('tree', 'zoom'):
        s_ok = all(_median_at(traces[name], 'simple_regret', c)
                   <= _median_at(traces['random'], 'simple_regret', c) for c in checkpoints)
        sub_ok = (_median_at(traces[name], 'cumulative_regret', last) / last
                  < _median_at(traces[name], 'cumulative_regret', first) / first)
        report[name] = {'simple_regret_dominates': s_ok, 'sublinear': sub_ok,
                        'median_S': {c: _median_at(traces[name], 'simple_regret', c) for c in checkpoints}}
        success = success and s_ok and sub_ok
    report['random_median_S'] = {c: _median_at(traces['random'], 'simple_regret', c) for c in checkpoints}
    return {'success': success, **report}


@_timed("escalado computacional", 10)
def check_scaling(n: int = 100, dims: Sequence[int] = (1, 6), sigma: float = 0.1,
                  max_ratio: float = 10.0) -> Dict:
    """Hojas <= (N-1) h_max n + 1, tiempo en D alta frente a D=1 y tamaño t^(2D) de GP-UCB."""
    kernel = KernelSpec.matern(1.5, lengthscale=0.3)
    times = {}
    leaves_ok = True
    for dim in dims:
        grid_res = min(256, int(round(4096 ** (1.0 / dim))))
        while grid_res ** dim > 4096:
            grid_res -= 1
        env = make_grid_gp(kernel, BoxDomain.unit(dim), grid_res, sigma, 0)
        cfg = make_confidence_config(kernel, env.domain, n, sigma)
        bandit = TreeBandit(kernel, env.domain, cfg)
        begin = time.perf_counter()
        trace, _ = bandit.run(env)
        times[dim] = time.perf_counter() - begin
        peak = max(len(bandit.leaves), int(trace.column('active_count').max()) if len(trace) else 1)
        leaves_ok = leaves_ok and peak <= bandit.leaf_limit

    ratio = times[max(dims)] / max(times[min(dims)], 1e-9)
    grid_size = theoretical_grid_size(100, 6)
    logger.info(f"GP-UCB necesitaría una rejilla de {grid_size:.3e} puntos en t=100, D=6")
    return {'success': leaves_ok and ratio <= max_ratio and grid_size >= 10 ** 24,
            'leaves_ok': leaves_ok, 'time_ratio': ratio, 'times_s': times,
            'gp_ucb_grid_size': grid_size}


@_timed("contextual", 11)
def check_contextual(seeds: int = 10, n: int = 150, first: int = 50, sigma: float = 0.1,
                     u: float = 2.0) -> Dict:
    """
    R_n^c/n decreciente entre first y n; exactamente una evaluación por contexto;
    fracción de semillas con Delta^c <= (9/2) V_{h-1} + 2 beta g(v1 rho^{h-1}) en todas las rondas.
    """
    k_c = KernelSpec.squared_exponential(lengthscale=0.3)
    k_a = KernelSpec.matern(1.5, lengthscale=0.3)
    ratios_first, ratios_last = [], []
    one_each = True
    good_runs = 0
    for seed in range(seeds):
        env = make_contextual_env(k_c, k_a, 'product', (1, 1), sigma, seed,
                                  action_grid_res=128, context_grid_res=8)
        cfg = make_confidence_config(env.kernel, env.domain, n, sigma, u=u, n_split=2,
                                     beta_mode='worst')
        bandit = ContextualBandit(env.kernel, env.context_domain, env.action_domain, cfg)
        trace = bandit.run(env, n)
        one_each = one_each and len(trace) == n and len(bandit.evaluations_per_context) == n
        deltas, depths = trace.column('delta'), trace.column('level').astype(int)
        good_runs += all(d <= bandit.delta_c_bound(h) + 1e-12 for d, h in zip(deltas, depths))
        regret = trace.column('cumulative_regret')
        ratios_first.append(regret[first - 1] / first)
        ratios_last.append(regret[n - 1] / n)

    med_first, med_last = float(np.median(ratios_first)), float(np.median(ratios_last))
    fraction = good_runs / max(seeds, 1)
    limit = 1.0 - 2.0 * math.exp(-u) - MC_SLACK
    return {'success': one_each and med_last < med_first and fraction >= limit,
            'one_evaluation_per_context': one_each, 'median_ratio_first': med_first,
            'median_ratio_last': med_last, 'good_run_fraction': fraction, 'limit': limit}


CHECKS: Dict[int, Callable[..., Dict]] = {
    1: check_posterior_oracle,
    2: check_variance_bounds,
    3: check_beta_coverage,
    4: check_variation_coverage,
    5: check_tree_evaluations,
    6: check_zoom_covering,
    7: check_toy1,
    8: check_toy2,
    9: check_regret_dominance,
    10: check_scaling,
    11: check_contextual,
}

QUICK_SIZES: Dict[int, Dict] = {
    1: {'n_configs': 30, 'max_t': 30},
    2: {'max_repeats': 20, 'n_ball_configs': 20},
    3: {'runs': 20, 'n': 30},
    4: {'functions': 100, 'grid_points': 512},
    5: {'runs': 20, 'n': 30},
    6: {'runs': 3, 'n': 30, 'suboptimality_runs': 20},
    7: {'seeds': 300, 'n_list': (10, 50)},
    8: {'seeds': 100},
    9: {'seeds': 5, 'n': 100, 'checkpoints': (50, 100)},
    10: {'n': 40, 'max_ratio': 50.0},
    11: {'seeds': 4, 'n': 80, 'first': 20},
}


def run_validation(criteria: Optional[Sequence[int]] = None, quick: bool = False) -> Dict:
    """
    Ejecuta los criterios indicados (todos por defecto).

    Args:
        criteria: Números de criterio
        quick (bool): Usar tamaños reducidos

    Returns:
        Dict: {'success', 'results': {criterio: resultado}}
    """
    selected = sorted(criteria) if criteria else sorted(CHECKS)
    unknown = [c for c in selected if c not in CHECKS]
    if unknown:
        return {'success': False, 'error': f"Criterios desconocidos: {unknown}", 'results': {}}

    results = {}
    for c in selected:
        kwargs = QUICK_SIZES.get(c, {}) if quick else {}
        results[c] = CHECKS[c](**kwargs)
    return {'success': all(r['success'] for r in results.values()), 'results': results}
