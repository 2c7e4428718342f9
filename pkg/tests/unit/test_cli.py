import json
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from hinge_penalty.cli import main
from hinge_penalty.errors import MissingExactEvaluatorError


class TestCli(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def write(self, name, text):
        path = self.root / name
        path.write_text(text, encoding='utf-8')
        return str(path)

    def test_run_and_plot(self):
        config = self.write('experiment.json', json.dumps({
            'schema_version': 1,
            'instance': {'kind': 'exemplar_1d', 'noise': 0.0},
            'workers': 1,
            'solvers': [{'name': 'hinge', 'beta': 4.0, 'eta': 1e-3, 'T': 100, 'x0': [2.0]}],
            'certification': {'enabled': False},
        }))
        out = self.root / 'runs'
        self.assertEqual(main(['run', '--config', config, '--out', str(out), '--stride', '10']), 0)
        self.assertEqual(main(['plot', str(out / 'hinge' / 'trajectory.csv'), '--out', str(self.root / 'plots')]), 0)
        self.assertTrue((self.root / 'plots' / 'hinge_objective.svg').exists())

    def test_config_error_exit_code(self):
        config = self.write('bad.json', '{"schema_version": 1, "solverz": []}')
        with patch('sys.stderr') as stderr:
            self.assertEqual(main(['run', '--config', config]), 2)
        printed = ''.join(c.args[0] for c in stderr.write.call_args_list)
        self.assertIn('ERROR: config', printed)

    def test_malformed_csv_exit_code(self):
        csv = self.write('trajectory.csv', 't,x_1\n')
        with patch('sys.stderr'):
            self.assertEqual(main(['plot', csv, '--out', str(self.root / 'plots')]), 5)

    def test_missing_exact_evaluator_exit_code(self):
        with patch('hinge_penalty.cli.cmd_certify', side_effect=MissingExactEvaluatorError('no exact evaluator')), \
                patch('sys.stderr'):
            self.assertEqual(main(['certify', '--run', 'r', '--instance', 'i']), 4)

    def test_unexpected_error_exit_code(self):
        with patch('hinge_penalty.cli.cmd_plot', side_effect=ValueError('bad')), patch('sys.stderr'):
            self.assertEqual(main(['plot', 'x.csv', '--out', 'o']), 1)


if __name__ == '__main__':
    unittest.main()
