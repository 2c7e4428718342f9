import math
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from hinge_penalty.errors import DimensionMismatchError, InvalidArgumentError, MissingExactEvaluatorError
from hinge_penalty.oracles import (AffineInnerOracle, ConstrainedProblem, FccoObjective, FunctionOracle,
                                   GroupMeanOracle, OuterFunction, ProblemConstants, QuadraticOracle, eval_oracle,
                                   exact_full_eval, softplus_outer, square_outer)
from hinge_penalty.create_instances import make_exemplar_1d, make_quadratic_instance
from hinge_penalty.streams import StreamKey, StreamRole

ROOT2 = math.sqrt(2.0)


def key(index=0, iteration=0, seed=0):
    return StreamKey(seed, StreamRole.CONSTRAINT, index, iteration)


class TestEval(unittest.TestCase):
    def test_exemplar_constraint_noise_free(self):
        problem = make_exemplar_1d(0.0)
        value, grad = eval_oracle(problem.constraints[0], [2.0], 7, key())
        # |2^2 - 1| - 1
        self.assertEqual(value, 2.0)
        np.testing.assert_array_equal(grad, [4.0])

    def test_noise_free_known_solution_is_exact(self):
        problem = make_exemplar_1d(0.0)
        value, _ = eval_oracle(problem.objective, problem.known_solution.point, 3, key())
        self.assertEqual(value, -ROOT2)

    def test_noisy_mean_concentrates(self):
        oracle = make_exemplar_1d(0.1).constraints[0]
        means = [eval_oracle(oracle, [2.0], 10_000, key(iteration=i))[0] for i in range(100)]
        self.assertLess(abs(np.mean(means) - 2.0), 3 * 0.1 / 1000)

    def test_value_variance_matches_batch_size(self):
        oracle = make_exemplar_1d(0.2).constraints[0]
        values = [eval_oracle(oracle, [0.3], 4, key(iteration=i))[0] for i in range(2000)]
        self.assertLess(np.var(values), 1.2 * 0.2 ** 2 / 4)

    def test_dimension_mismatch(self):
        oracle = make_exemplar_1d(0.0).constraints[0]
        with self.assertRaises(DimensionMismatchError):
            eval_oracle(oracle, [1.0, 2.0], 1, key())

    def test_zero_batch(self):
        oracle = make_exemplar_1d(0.0).constraints[0]
        with self.assertRaises(InvalidArgumentError):
            eval_oracle(oracle, [1.0], 0, key())

    def test_fixed_samples_are_deterministic(self):
        oracle = make_exemplar_1d(0.3).constraints[0]
        first_value, first_grad = eval_oracle(oracle, [0.4], 5, key(2, 9))
        second_value, second_grad = eval_oracle(oracle, [0.4], 5, key(2, 9))
        self.assertEqual(first_value, second_value)
        np.testing.assert_array_equal(first_grad, second_grad)


class TestExactFullEval(unittest.TestCase):
    def setUp(self):
        self.problem = make_exemplar_1d(0.0)

    def test_at_solution(self):
        f, h, df, J = exact_full_eval(self.problem, [-ROOT2])
        self.assertAlmostEqual(f, -ROOT2)
        self.assertAlmostEqual(h[0], 0.0, places=12)
        np.testing.assert_array_equal(df, [1.0])
        self.assertAlmostEqual(J[0, 0], -2 * ROOT2, places=12)

    def test_at_origin(self):
        _, h, _, J = exact_full_eval(self.problem, [0.0])
        self.assertEqual(h[0], -1.0)
        self.assertEqual(J[0, 0], 0.0)

    def test_kink_tie_break(self):
        _, h, _, J = exact_full_eval(self.problem, [1.0])
        self.assertEqual(h[0], -1.0)
        self.assertEqual(J[0, 0], 0.0)

    def test_missing_exact(self):
        objective = FunctionOracle(lambda x: (x[0], np.ones(1)), 1, exact_available=False)
        constraint = FunctionOracle(lambda x: (x[0] - 1.0, np.ones(1)), 1)
        problem = ConstrainedProblem(objective, [constraint], ProblemConstants(0, 0, 1, 1, 1), x0=[0.0])
        self.assertFalse(problem.has_exact)
        with self.assertRaises(MissingExactEvaluatorError):
            exact_full_eval(problem, [0.0])


class TestProblemContract(unittest.TestCase):
    def test_needs_a_constraint(self):
        objective = FunctionOracle(lambda x: (x[0], np.ones(1)), 1)
        with self.assertRaises(InvalidArgumentError):
            ConstrainedProblem(objective, [], ProblemConstants(0, 0, 1, 1, 1), x0=[0.0])

    def test_dimensions_must_agree(self):
        objective = QuadraticOracle(np.eye(2), np.zeros(2), 0.0)
        constraint = FunctionOracle(lambda x: (x[0], np.ones(1)), 1)
        with self.assertRaises(DimensionMismatchError):
            ConstrainedProblem(objective, [constraint], ProblemConstants(0, 0, 1, 1, 1), x0=[0.0, 0.0])

    def test_unbiased_against_exact(self):
        problem = make_quadratic_instance(2, 2, seed=4, noise=0.5)
        rng = np.random.default_rng(0)
        for i in range(5):
            x = rng.uniform(-1, 1, 2)
            for k, oracle in enumerate(problem.constraints):
                values, _ = oracle.evaluate(x, oracle.draw(key(k, i).generator(), 10_000))
                exact = oracle.exact(x)[0]
                self.assertLess(abs(values.mean() - exact), 4 * values.std() / 100)

    def test_group_mean_subsampling_is_unbiased(self):
        features = np.random.default_rng(1).standard_normal((40, 2))
        oracle = GroupMeanOracle(features, threshold=0.5)
        w = np.array([0.7, -0.2])
        values, _ = oracle.evaluate(w, oracle.draw(key().generator(), 20_000))
        self.assertLess(abs(values.mean() - oracle.exact(w)[0]), 4 * values.std() / math.sqrt(20_000))


class TestConformance(unittest.TestCase):
    problem = make_quadratic_instance(2, 2, seed=3)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4))
    def test_lipschitz(self, coords):
        radius = self.problem.constants.box_radius
        x, y = np.array(coords[:2]) * radius, np.array(coords[2:]) * radius
        gap = np.linalg.norm(x - y)
        fx, fy = self.problem.exact_objective(x)[0], self.problem.exact_objective(y)[0]
        self.assertLessEqual(abs(fx - fy), self.problem.constants.lipschitz_f * gap + 1e-9)
        hx, _ = self.problem.exact_constraints(x)
        hy, _ = self.problem.exact_constraints(y)
        self.assertTrue(np.all(np.abs(hx - hy) <= self.problem.constants.lipschitz_h * gap + 1e-9))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4))
    def test_weak_convexity(self, coords):
        radius = self.problem.constants.box_radius
        x, y = np.array(coords[:2]) * radius, np.array(coords[2:]) * radius
        hx, _ = self.problem.exact_constraints(x)
        hy, Jy = self.problem.exact_constraints(y)
        curvature = 0.5 * self.problem.constants.rho1 * np.sum((x - y) ** 2)
        self.assertTrue(np.all(hx >= hy + Jy @ (x - y) - curvature - 1e-9))
        fx = self.problem.exact_objective(x)[0]
        fy, gy = self.problem.exact_objective(y)
        self.assertGreaterEqual(fx, fy + gy @ (x - y) - 0.5 * self.problem.constants.rho0 * np.sum((x - y) ** 2)
                                - 1e-9)


class TestFccoObjective(unittest.TestCase):
    def test_softplus_of_identity(self):
        inner = [AffineInnerOracle([1.0]), AffineInnerOracle([1.0])]
        fcco = FccoObjective([softplus_outer(), softplus_outer()], inner)
        value, grad = fcco.exact(np.zeros(1))
        self.assertAlmostEqual(value, math.log(2.0))
        self.assertAlmostEqual(grad[0], 0.5)
        self.assertEqual(fcco.condition, 'monotone')

    def test_square_of_zero(self):
        inner = [AffineInnerOracle([0.0]), AffineInnerOracle([0.0])]
        fcco = FccoObjective([square_outer(), square_outer()], inner)
        value, grad = fcco.exact(np.array([3.0]))
        self.assertEqual(value, 0.0)
        np.testing.assert_array_equal(grad, [0.0])
        self.assertEqual(fcco.condition, 'smooth')

    def test_mixed_tagging_rejected(self):
        kink = OuterFunction('abs', np.abs, np.sign, monotone_nondecreasing=False, smooth=False)
        with self.assertRaises(InvalidArgumentError):
            FccoObjective([softplus_outer(), kink], [AffineInnerOracle([1.0]), AffineInnerOracle([1.0])])

    def test_requested_condition_must_hold(self):
        with self.assertRaises(InvalidArgumentError):
            FccoObjective([square_outer(), square_outer()], [AffineInnerOracle([1.0]), AffineInnerOracle([1.0])],
                          condition='monotone')


if __name__ == '__main__':
    unittest.main()
