import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .certify import kkt_certificate
from .config import ExperimentConfig, load_experiment_config, solver_config_from_section
from .create_instances import build_instance, instance_from_json, instance_hash, save_instance
from .errors import HingePenaltyError
from .outputs import (CERTIFICATE_FILE, RUN_FILE, TRAJECTORY_FILE, read_json, read_trajectory, trajectory_points,
                      write_json, write_run, write_summary)
from .regularity import box_grid, regularity_report
from .solver import config_from_schedule, solve

logger = logging.getLogger('hinge_penalty.run_experiments')

EXIT_OK = 0
EXIT_CELL_FAILED = 3
INSTANCE_FILE = 'instance.json'
SUMMARY_COLUMNS = ['cell', 'kind', 'beta', 'seed', 'status', 'T', 'output_t', 'final_max_violation', 'final_f',
                   'certified_epsilon', 'wall_time', 'error']
SWEEP_COLUMNS = ['cell', 'epsilon_target', 'multipliers', 'status', 'T', 'gamma', 'eta', 'certified_epsilon',
                 'final_max_violation', 'wall_time', 'error']
DEFAULT_PL_GRID = (-10.0, 10.0, 1e-3)


def run_cell(instance_spec: Dict[str, Any], section: Dict[str, Any], seed: int, cell_dir: str,
             certification: Dict[str, Any], epoch_length: int, provenance: Dict[str, Any]) -> Dict[str, Any]:
    """One isolated solver run: build, solve, write, certify. Module level so worker processes can pickle it."""
    started = time.perf_counter()
    problem = build_instance(instance_spec)
    config = solver_config_from_section(section, seed)
    if config.schedule_epsilon is not None:
        config = config_from_schedule(problem, config, config.schedule_epsilon)
    if config.theta is None and certification.get('theta') is not None:
        config = replace(config, theta=certification['theta'])
    result = solve(problem, config)
    write_run(Path(cell_dir), result, {**provenance, 'instance_hash': instance_hash(problem), 'seed': seed},
              epoch_length)
    row = {
        'cell': config.name, 'kind': config.kind, 'beta': config.beta, 'seed': seed, 'status': result.status,
        'T': config.T, 'output_t': result.output_t, 'final_max_violation': result.final_record.max_violation,
        'final_f': result.final_record.f, 'certified_epsilon': None, 'gamma': config.gamma2, 'eta': config.eta,
        'error': None,
    }
    if certification.get('enabled', True) and problem.has_exact:
        certificate = kkt_certificate(problem, result.output_x, config.beta, theta=config.theta, kind=config.kind,
                                      inner_iters=certification.get('prox_iters', 10_000),
                                      tol=certification.get('tol', 1e-6),
                                      activation_tol=certification.get('activation_tol', 1e-5))
        write_json(Path(cell_dir) / CERTIFICATE_FILE, {'t': result.output_t, **certificate.to_dict()})
        row['certified_epsilon'] = certificate.epsilon
    row['wall_time'] = time.perf_counter() - started
    return row


def _safe_cell(args) -> Dict[str, Any]:
    instance_spec, section, seed, cell_dir = args[:4]
    try:
        return run_cell(*args)
    except Exception as e:
        logger.error(f"Cell '{section.get('name')}' failed: {e}")
        return {'cell': section.get('name'), 'kind': section.get('kind', 'hinge'), 'beta': section.get('beta'),
                'seed': seed, 'status': 'failed', 'error': f"{type(e).__name__}: {e}"}


def run_cells(jobs: Sequence[tuple], workers: int) -> List[Dict[str, Any]]:
    """Run cells sequentially or in a process pool; rows come back in job order either way."""
    if workers <= 1 or len(jobs) <= 1:
        return [_safe_cell(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_safe_cell, jobs))


class ExperimentRunner:
    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.out = Path(config.output_dir)
        self.instance_spec = config.instance_spec()

    def provenance(self) -> Dict[str, Any]:
        return {'config_hash': self.config.config_hash, 'config_source': self.config.source}

    def prepare(self):
        self.out.mkdir(parents=True, exist_ok=True)
        save_instance(build_instance(self.instance_spec), str(self.out / INSTANCE_FILE))

    def job(self, section: Dict[str, Any], seed: int) -> tuple:
        return (self.instance_spec, section, seed, str(self.out / section['name']), self.config.certification,
                self.config.epoch_length, self.provenance())

    def seed_for_section(self, section: Dict[str, Any]) -> int:
        return section['seed'] if section.get('seed') is not None else self.config.seed_for(section['name'])

    def run(self) -> List[Dict[str, Any]]:
        self.prepare()
        jobs = [self.job(section, self.seed_for_section(section)) for section in self.config.solvers]
        rows = run_cells(jobs, self.config.workers)
        write_summary(self.out / 'summary.csv', rows, SUMMARY_COLUMNS)
        return rows

    def compare(self) -> List[Dict[str, Any]]:
        settings = self.config.compare
        base = self.config.solver_section(settings.get('base'))
        base_seed = self.seed_for_section(base)
        self.prepare()
        jobs = []
        for kind in settings['kinds']:
            for beta in settings['betas']:
                name = f"{kind}-beta{beta:g}"
                seed = base_seed if self.config.paired else self.config.seed_for(name)
                jobs.append(self.job({**base, 'name': name, 'kind': kind, 'beta': beta}, seed))
        logger.info(f"Comparing {len(jobs)} cells (paired={self.config.paired})")
        rows = run_cells(jobs, self.config.workers)
        write_summary(self.out / 'compare.csv', rows, SUMMARY_COLUMNS)
        return rows

    def sweep(self) -> List[Dict[str, Any]]:
        settings = self.config.sweep
        if not settings['epsilons'] or not settings['multipliers']:
            logger.info("Sweep grid is empty, nothing to do")
            return []
        base = self.config.solver_section(settings.get('base'))
        problem = build_instance(self.instance_spec)
        self.prepare()
        cells, rows = [], []
        for epsilon in settings['epsilons']:
            for index, multipliers in enumerate(settings['multipliers']):
                name = f"{base['name']}-eps{epsilon:g}-c{index}"
                section = {**base, 'name': name, 'schedule_epsilon': epsilon, 'schedule_multipliers': multipliers}
                seed = self.seed_for_section(base) if self.config.paired else self.config.seed_for(name)
                try:
                    scheduled = config_from_schedule(problem, solver_config_from_section(section, seed), epsilon)
                except HingePenaltyError as e:
                    logger.error(f"Sweep cell '{name}' has no valid schedule: {e}")
                    cells.append((name, epsilon, multipliers, None, {'status': 'failed', 'error': str(e)}))
                    continue
                if scheduled.T > settings['max_iterations']:
                    logger.warning(f"Sweep cell '{name}' needs T={scheduled.T} > max_iterations, skipped")
                    cells.append((name, epsilon, multipliers, None,
                                  {'status': 'skipped', 'T': scheduled.T, 'gamma': scheduled.gamma2,
                                   'eta': scheduled.eta}))
                    continue
                cells.append((name, epsilon, multipliers, self.job(section, seed), None))
        results = iter(run_cells([cell[3] for cell in cells if cell[3] is not None], self.config.workers))
        for name, epsilon, multipliers, job, placeholder in cells:
            row = placeholder if job is None else next(results)
            rows.append({**row, 'cell': name, 'epsilon_target': epsilon, 'multipliers': str(multipliers)})
        write_summary(self.out / 'sweep.csv', rows, SWEEP_COLUMNS)
        return rows


def _exit_status(rows: Sequence[Dict[str, Any]]) -> int:
    bad = [row['cell'] for row in rows if row.get('status') in ('aborted', 'failed')]
    if bad:
        logger.error(f"{len(bad)} cell(s) aborted or failed: {bad}")
        return EXIT_CELL_FAILED
    return EXIT_OK


def _command(action: Callable[[ExperimentRunner], List[Dict[str, Any]]]):
    def command(config_path: str, output_dir: Optional[str] = None, workers: Optional[int] = None,
                seed_override: Optional[int] = None, stride: Optional[int] = None) -> int:
        config = load_experiment_config(config_path, output_dir, workers, seed_override, stride)
        return _exit_status(action(ExperimentRunner(config)))
    return command


cmd_run = _command(ExperimentRunner.run)
cmd_compare = _command(ExperimentRunner.compare)
cmd_sweep = _command(ExperimentRunner.sweep)


def _snapshot_rows(count: int, stride: Optional[int], limit: int) -> List[int]:
    if stride:
        rows = list(range(0, count, stride))
    else:
        rows = sorted(set(np.linspace(0, count - 1, min(limit, count)).round().astype(int).tolist()))
    if count - 1 not in rows:
        rows.append(count - 1)
    return rows[-limit:] if len(rows) > limit else rows


def cmd_certify(run_path: str, instance_path: str, theta: Optional[float] = None, tol: float = 1e-6,
                prox_iters: int = 10_000, activation_tol: float = 1e-5, snapshot_stride: Optional[int] = None,
                max_snapshots: int = 20, sigma_floor: float = 1e-8, pl_grid: Optional[Sequence[float]] = None,
                output_dir: Optional[str] = None) -> int:
    """Certificates for a run's output iterate and trajectory snapshots, plus the regularity report."""
    run_dir = Path(run_path)
    if run_dir.is_file():
        run_dir = run_dir.parent
    metadata = read_json(run_dir / RUN_FILE)
    problem = instance_from_json(read_json(Path(instance_path)))
    problem.require_exact()
    out = Path(output_dir) if output_dir else run_dir
    beta, kind = metadata['beta'], metadata['kind']
    frame = read_trajectory(run_dir / TRAJECTORY_FILE)
    points = trajectory_points(frame)

    def certify(label, x):
        certificate = kkt_certificate(problem, x, beta, theta=theta, kind=kind, inner_iters=prox_iters, tol=tol,
                                      activation_tol=activation_tol)
        return {'label': label, **certificate.to_dict()}

    certificates = [certify(f"output_t{metadata['output_t']}", metadata['output_x'])]
    for row in _snapshot_rows(len(points), snapshot_stride, max_snapshots):
        certificates.append(certify(f"t{int(frame['t'].iloc[row])}", points[row]))
    write_json(out / 'certificates.json', {'run': metadata['name'], 'certificates': certificates})

    grid = None
    if problem.m == 1 and (pl_grid is not None or problem.dimension == 1):
        low, high, step = pl_grid if pl_grid is not None else DEFAULT_PL_GRID
        grid = box_grid(low, high, step, problem.dimension)
    labelled = [(f"t{int(t)}", x) for t, x in zip(frame['t'], points)]
    report = regularity_report(problem, labelled, sigma_floor, grid)
    write_json(out / 'regularity.json', report.to_dict())
    write_summary(out / 'regularity.csv', report.table().to_dict('records'),
                  ['label', 'violating', 'sigma_min', 'delta', 'below_floor'])
    best = min(c['epsilon'] for c in certificates)
    logger.info(f"Certified {len(certificates)} points of '{metadata['name']}': output epsilon="
                f"{certificates[0]['epsilon']:.3g}, best snapshot epsilon={best:.3g}, "
                f"all regularity points vacuous={report.all_vacuous}")
    return EXIT_OK
