"""
End-to-end checks of the solver, certificates and experiment harness on the catalog instances.

These run the real solver for thousands of iterations and take a few minutes in total. Iteration
counts and seed counts are smaller than a full experiment; tolerances are set for those sizes.
"""
import json
import math
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from hinge_penalty.certify import kkt_certificate
from hinge_penalty.cli import main
from hinge_penalty.create_instances import (fit_unconstrained, make_exemplar_1d, make_fairness_instance,
                                            make_fcco_instance, make_quadratic_instance)
from hinge_penalty.regularity import box_grid, frvp_min_singular, pl_regularity_estimate
from hinge_penalty.solver import SolverConfig, config_from_schedule, solve

ROOT2 = math.sqrt(2.0)


class TestExemplarConvergence(unittest.TestCase):
    def test_noisy_runs_certify_near_the_solution(self):
        problem = make_exemplar_1d(noise=0.05)
        for seed in range(3):
            config = SolverConfig(beta=4.0, eta=1e-3, T=20_000, seed=seed, stride=200, x0=[0.0],
                                  eta_decay_milestones=(0.5, 0.75), output_rule='best_diagnostic',
                                  name=f'exemplar-{seed}')
            result = solve(problem, config)
            self.assertEqual(result.status, 'completed')
            certificate = kkt_certificate(problem, result.output_x, 4.0)
            self.assertLessEqual(certificate.epsilon, 0.15, msg=f"seed={seed}")
            self.assertLessEqual(certificate.feasibility, 1e-2)
            self.assertLess(abs(certificate.x_bar[0] + ROOT2), 0.1)

    def test_hinge_is_exact_and_squared_hinge_is_not(self):
        problem = make_exemplar_1d(noise=0.0)

        def run(kind, beta):
            config = SolverConfig(beta=beta, eta=2e-4, T=30_000, seed=0, stride=100, x0=[0.0], kind=kind,
                                  output_rule='final', name=f'{kind}-{beta}')
            return solve(problem, config)

        hinge = run('hinge', 4.0)
        trailing = [r.max_violation for r in hinge.records if r.t >= 27_000]
        self.assertLessEqual(max(trailing), 1e-2)

        betas = [4.0, 16.0, 64.0]
        violations = [run('squared_hinge', beta).final_record.max_violation for beta in betas]
        self.assertTrue(all(v > 0 for v in violations))
        self.assertTrue(violations[0] > violations[1] > violations[2])
        slope = np.polyfit(np.log(betas), np.log(violations), 1)[0]
        self.assertLess(abs(slope + 1.0), 0.3)


class TestVarianceReduction(unittest.TestCase):
    def test_msvr_tracks_constraints_better_than_plugin(self):
        problem = make_quadratic_instance(2, 5, seed=11, noise=0.5)
        base = SolverConfig(beta=1.0, eta=1.0, T=0, batch_constraints=2, batch_constraint_samples=4,
                            output_rule='final')
        scheduled = config_from_schedule(problem, base, 0.5)
        self.assertAlmostEqual(scheduled.gamma2, 0.25)
        self.assertAlmostEqual(scheduled.eta, 0.05)

        def trailing_error(estimator, seed):
            config = replace(scheduled, T=600, stride=1, schedule_epsilon=None, estimator=estimator, seed=seed,
                             name=f'{estimator}-{seed}')
            records = solve(problem, config).records
            return np.nanmean([r.tracker_sq_constraints for r in records if r.t >= 400])

        wins = sum(trailing_error('msvr', seed) < trailing_error('plugin', seed) for seed in range(20))
        self.assertGreaterEqual(wins, 18)


class TestCompositionalObjective(unittest.TestCase):
    def test_monotone_instance_certifies(self):
        problem = make_fcco_instance(4, 2, 'monotone', seed=3)
        beta = max(10.0, 2.0 * problem.m * float(problem.known_solution.multipliers.max()) + 1.0)
        for seed in range(10):
            config = SolverConfig(beta=beta, eta=0.05, T=4000, seed=seed, stride=40, eta_decay_milestones=(0.5, 0.75),
                                  output_rule='best_diagnostic', name=f'fcco-{seed}')
            result = solve(problem, config)
            self.assertEqual(result.status, 'completed')
            certificate = kkt_certificate(problem, result.output_x, beta)
            self.assertLessEqual(certificate.epsilon, 0.2, msg=f"seed={seed}")


class TestRegularity(unittest.TestCase):
    def test_exemplar_pl_estimate(self):
        estimate = pl_regularity_estimate(make_exemplar_1d(), box_grid(-10.0, 10.0, 1e-3))
        self.assertLess(abs(estimate.delta - 2.0), 0.04)

    def test_frvp_holds_along_a_solver_run(self):
        problem = make_quadratic_instance(5, 3, seed=2)
        # the box corner is outside every shell
        config = SolverConfig(beta=5.0, eta=1e-3, T=2000, seed=0, stride=20, x0=[3.0] * 5, output_rule='final',
                              name='frvp')
        checked = 0
        for record in solve(problem, config).records:
            result = frvp_min_singular(problem, record.x, label=f't={record.t}')
            if result.violating:
                checked += 1
                self.assertGreater(result.sigma_min, 0.0, msg=result.label)
        self.assertGreater(checked, 0)


class TestFairness(unittest.TestCase):
    def test_constraints_hold_at_output(self):
        problem = make_fairness_instance(500, [float(t) for t in range(-3, 4)], kappa=0.005, seed=1)
        self.assertEqual(problem.m, 14)
        config = SolverConfig(beta=20.0, eta=0.05, T=3000, seed=0, stride=100, gamma2=0.05, batch_outer=32,
                              batch_constraint_samples=256, eta_decay_milestones=(0.5, 0.75), output_rule='final',
                              name='fairness')
        result = solve(problem, config)
        self.assertEqual(result.status, 'completed')
        h_values, _ = problem.exact_constraints(result.output_x)
        self.assertLessEqual(float(h_values.max()), 1e-3)
        f_value, _ = problem.exact_objective(result.output_x)
        f_unconstrained, _ = problem.exact_objective(fit_unconstrained(problem))
        self.assertLess(f_value, -0.55)
        self.assertLessEqual(f_value - f_unconstrained, 0.05)


class TestCommandLine(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)
        self.config = self.root / 'experiment.json'
        self.config.write_text(json.dumps({
            'schema_version': 1,
            'instance': {'kind': 'exemplar_1d', 'noise': 0.05},
            'workers': 1,
            'master_seed': 3,
            'solvers': [{'name': 'base', 'beta': 4.0, 'eta': 1e-3, 'T': 500, 'stride': 50, 'x0': [2.0]},
                        {'name': 'scheduled', 'beta': 1.0, 'schedule_epsilon': 0.5}],
            'compare': {'base': 'base', 'betas': [1, 4, 16]},
            'sweep': {'base': 'scheduled', 'epsilons': [0.5, 0.25]},
            'certification': {'prox_iters': 500},
        }), encoding='utf-8')

    def cli(self, *args):
        return main([str(a) for a in args])

    def test_full_workflow_is_reproducible(self):
        for name in ('a', 'b'):
            out = self.root / name
            self.assertEqual(self.cli('run', '--config', self.config, '--out', out), 0)
            self.assertEqual(self.cli('certify', '--run', out / 'base', '--instance', out / 'instance.json',
                                      '--prox-iters', 500, '--max-snapshots', 3), 0)
            self.assertEqual(self.cli('plot', out / 'base' / 'trajectory.csv', out / 'base' / 'constraints.csv',
                                      '--out', out / 'plots'), 0)
        for relative in ('base/trajectory.csv', 'base/constraints.csv', 'plots/base_objective.svg',
                         'plots/base_constraints.svg'):
            self.assertEqual((self.root / 'a' / relative).read_bytes(), (self.root / 'b' / relative).read_bytes(),
                             msg=relative)

    def test_compare_and_sweep(self):
        out = self.root / 'grid'
        self.assertEqual(self.cli('compare', '--config', self.config, '--out', out), 0)
        self.assertEqual(len(pd.read_csv(out / 'compare.csv')), 6)
        self.assertEqual(self.cli('sweep', '--config', self.config, '--out', out), 0)
        sweep = pd.read_csv(out / 'sweep.csv')
        self.assertEqual(sweep['T'].iloc[1] / sweep['T'].iloc[0], 64)


if __name__ == '__main__':
    unittest.main()
