import json
import math
import tempfile
import unittest
from pathlib import Path

import numpy as np

from hinge_penalty.create_instances import make_exemplar_1d
from hinge_penalty.errors import MalformedCsvError, SerializationError
from hinge_penalty.outputs import (CONSTRAINTS_FILE, RUN_FILE, TRAJECTORY_FILE, jsonable, read_json, read_trajectory,
                                   trajectory_points, write_json, write_run)
from hinge_penalty.solver import SolverConfig, solve


class TestJsonable(unittest.TestCase):
    def test_numpy_values(self):
        converted = jsonable({'a': np.float64(1.5), 'b': np.arange(3), 'c': np.bool_(True), 1: (np.int32(2),)})
        self.assertEqual(converted, {'a': 1.5, 'b': [0, 1, 2], 'c': True, '1': [2]})
        self.assertIs(type(converted['b'][0]), int)

    def test_non_finite(self):
        self.assertEqual(jsonable([math.nan, math.inf, np.float32(-np.inf), 0.25]), [None, None, None, 0.25])


class TestJsonDocuments(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def test_schema_version_is_stamped(self):
        path = self.root / 'nested' / 'doc.json'
        write_json(path, {'value': np.float64(2.0)})
        self.assertEqual(read_json(path), {'schema_version': 1, 'value': 2.0})

    def test_wrong_schema_version(self):
        path = self.root / 'doc.json'
        path.write_text(json.dumps({'schema_version': 2}), encoding='utf-8')
        with self.assertRaises(SerializationError):
            read_json(path)

    def test_unreadable(self):
        path = self.root / 'doc.json'
        path.write_text('{', encoding='utf-8')
        with self.assertRaises(SerializationError):
            read_json(path)
        with self.assertRaises(SerializationError):
            read_json(self.root / 'absent.json')


class TestRunFiles(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.result = solve(make_exemplar_1d(0.0), SolverConfig(beta=4.0, eta=1e-3, T=50, seed=1, stride=10,
                                                               x0=[2.0], name='tiny'))

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def test_write_and_read_back(self):
        cell = write_run(self.root / 'tiny', self.result, {'seed': 1}, epoch_length=10)
        frame = read_trajectory(cell / TRAJECTORY_FILE)
        self.assertEqual(list(frame['t']), [record.t for record in self.result.records])
        np.testing.assert_array_equal(trajectory_points(frame)[-1], self.result.x_final)
        constraints = read_trajectory(cell / CONSTRAINTS_FILE, required=['t', 'epoch', 'h_1'])
        self.assertEqual(constraints['epoch'].iloc[-1], 5.0)
        document = read_json(cell / RUN_FILE)
        self.assertEqual(document['name'], 'tiny')
        self.assertEqual(document['provenance']['seed'], 1)
        self.assertIn('code_version', document['provenance'])

    def test_csv_is_reproducible(self):
        first = write_run(self.root / 'a', self.result, {}) / TRAJECTORY_FILE
        second = write_run(self.root / 'b', self.result, {}) / TRAJECTORY_FILE
        self.assertEqual(first.read_bytes(), second.read_bytes())


class TestReadTrajectoryErrors(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.path = Path(self.tmp.name) / 'trajectory.csv'

    def assertMalformed(self, text=None, required=('t',)):
        if text is not None:
            self.path.write_text(text, encoding='utf-8')
        with self.assertRaises(MalformedCsvError) as ctx:
            read_trajectory(self.path, required=list(required))
        self.assertEqual(ctx.exception.context['path'], str(self.path))

    def test_missing_file(self):
        self.assertMalformed()

    def test_empty_file(self):
        self.assertMalformed('')

    def test_header_only(self):
        self.assertMalformed('t,x_1\n')

    def test_missing_column(self):
        self.assertMalformed('t,x_1\n1,0.5\n', required=('t', 'max_violation'))

    def test_non_numeric(self):
        self.assertMalformed('t,x_1\n1,abc\n')


if __name__ == '__main__':
    unittest.main()
