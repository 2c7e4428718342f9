import json
import os
import tempfile
import unittest
from unittest.mock import patch

from hinge_penalty.config import derive_seed, load_experiment_config, solver_config_from_section
from hinge_penalty.errors import ConfigError

VALID = """{
  "schema_version": 1,
  "instance": {"kind": "exemplar_1d", "noise": 0.05},
  "master_seed": 7,
  "solvers": [
    {"name": "hinge", "beta": 4.0, "eta": 0.001, "T": 1000},
    {"name": "scheduled", "beta": 1.0, "schedule_epsilon": 0.5, "seed": 3}
  ]
}
"""


class ConfigTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def write(self, text, name='config.json'):
        path = os.path.join(self.tmp.name, name)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
        return path


class TestLoadExperimentConfig(ConfigTestCase):
    def test_valid_config_and_defaults(self):
        config = load_experiment_config(self.write(VALID))
        self.assertEqual(config.instance_spec(), {'kind': 'exemplar_1d', 'noise': 0.05})
        self.assertEqual(config.epoch_length, 400)
        self.assertTrue(config.paired)
        self.assertEqual(config.output_dir, 'runs')
        self.assertEqual(config.compare['kinds'], ['hinge', 'squared_hinge'])
        self.assertEqual(config.sweep['multipliers'], [{}])
        self.assertTrue(config.certification['enabled'])
        self.assertEqual(config.solvers[0]['gamma2'], 0.5)
        self.assertEqual(len(config.config_hash), 16)

    def test_cli_overrides(self):
        config = load_experiment_config(self.write(VALID), output_dir='elsewhere', workers=3, seed_override=11,
                                        stride=5)
        self.assertEqual((config.output_dir, config.workers, config.master_seed), ('elsewhere', 3, 11))
        self.assertTrue(all(s['stride'] == 5 and s['seed'] is None for s in config.solvers))

    def test_workers_from_environment(self):
        with patch.dict(os.environ, {'HPO_WORKERS': '4'}):
            self.assertEqual(load_experiment_config(self.write(VALID)).workers, 4)

    def test_unknown_top_level_key(self):
        text = VALID.replace('"master_seed": 7,', '"master_seed": 7,\n  "seeed": 3,')
        with self.assertRaises(ConfigError) as ctx:
            load_experiment_config(self.write(text))
        self.assertEqual(ctx.exception.line, 5)
        self.assertIn('seeed', str(ctx.exception))

    def test_unknown_solver_key(self):
        text = VALID.replace('"eta": 0.001,', '"eta": 0.001, "gamma3": 0.1,')
        with self.assertRaises(ConfigError) as ctx:
            load_experiment_config(self.write(text))
        self.assertEqual(ctx.exception.line, 6)

    def test_wrong_type(self):
        with self.assertRaises(ConfigError):
            load_experiment_config(self.write(VALID.replace('"master_seed": 7', '"master_seed": "seven"')))

    def test_invalid_json(self):
        with self.assertRaises(ConfigError) as ctx:
            load_experiment_config(self.write(VALID.replace('"T": 1000}', '"T": 1000')))
        self.assertIsNotNone(ctx.exception.line)

    def test_unsupported_schema_version(self):
        with self.assertRaises(ConfigError):
            load_experiment_config(self.write(VALID.replace('"schema_version": 1', '"schema_version": 2')))

    def test_duplicate_solver_names(self):
        with self.assertRaises(ConfigError):
            load_experiment_config(self.write(VALID.replace('"name": "scheduled"', '"name": "hinge"')))

    def test_instance_and_path_are_exclusive(self):
        text = VALID.replace('"master_seed": 7,', '"master_seed": 7,\n  "instance_path": "instance.json",')
        with self.assertRaises(ConfigError):
            load_experiment_config(self.write(text))

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_experiment_config(os.path.join(self.tmp.name, 'absent.json'))

    def test_instance_document_path(self):
        self.write(json.dumps({'schema_version': 1, 'kind': 'quadratic', 'dimension': 2,
                               'params': {'dim': 2, 'm': 1, 'seed': 4}}), name='instance.json')
        text = VALID.replace('"instance": {"kind": "exemplar_1d", "noise": 0.05}', '"instance_path": "instance.json"')
        config = load_experiment_config(self.write(text))
        self.assertEqual(config.instance_spec(), {'kind': 'quadratic', 'dim': 2, 'm': 1, 'seed': 4})


class TestSolverSections(ConfigTestCase):
    def test_solver_config(self):
        config = load_experiment_config(self.write(VALID))
        solver = solver_config_from_section(config.solver_section('hinge'), config.seed_for('hinge'))
        self.assertEqual((solver.beta, solver.eta, solver.T), (4.0, 0.001, 1000))
        self.assertEqual(solver.seed, derive_seed(7, 'hinge'))
        explicit = solver_config_from_section(config.solver_section('scheduled'), config.seed_for('scheduled'))
        self.assertEqual(explicit.seed, 3)

    def test_missing_step_size(self):
        with self.assertRaises(ConfigError):
            solver_config_from_section({'name': 'bare', 'beta': 1.0, 'T': 10}, 0)

    def test_unknown_section(self):
        with self.assertRaises(ConfigError):
            load_experiment_config(self.write(VALID)).solver_section('nope')

    def test_seed_derivation_is_stable(self):
        self.assertEqual(derive_seed(7, 'hinge'), derive_seed(7, 'hinge'))
        self.assertNotEqual(derive_seed(7, 'hinge'), derive_seed(8, 'hinge'))
        self.assertGreaterEqual(derive_seed(7, 'hinge'), 0)


if __name__ == '__main__':
    unittest.main()
