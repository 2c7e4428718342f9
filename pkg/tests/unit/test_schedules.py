import math
import unittest

from hinge_penalty.create_instances import make_exemplar_1d, make_fcco_instance
from hinge_penalty.errors import InvalidArgumentError, ScheduleError
from hinge_penalty.schedules import (SETTING_I, SETTING_II_MONOTONE, SETTING_II_SMOOTH, BatchSizes,
                                     ScheduleMultipliers, schedule_from_theorem, setting_for)

UNIT = BatchSizes()


class TestSettingI(unittest.TestCase):
    def test_worked_example(self):
        coarse = schedule_from_theorem(SETTING_I, 0.5, 1.0, UNIT, m=1)
        fine = schedule_from_theorem(SETTING_I, 0.25, 1.0, UNIT, m=1)
        self.assertEqual(coarse.T, 64)
        self.assertEqual(fine.T, 4096)
        self.assertEqual(coarse.gamma2, 0.0625)
        self.assertEqual(coarse.eta, 0.0625)
        self.assertIsNone(coarse.gamma1)
        self.assertEqual(coarse.flags, [])

    def test_halving_epsilon_scales_rates(self):
        batches = BatchSizes(constraints=2, constraint_samples=4)
        coarse = schedule_from_theorem(SETTING_I, 0.5, 2.0, batches, m=4)
        fine = schedule_from_theorem(SETTING_I, 0.25, 2.0, batches, m=4)
        self.assertEqual(fine.T, 64 * coarse.T)
        self.assertAlmostEqual(fine.eta * 16, coarse.eta)
        self.assertAlmostEqual(fine.gamma2 * 16, coarse.gamma2)

    def test_full_constraint_block_step_independent_of_m(self):
        steps = [schedule_from_theorem(SETTING_I, 0.5, 2.0, BatchSizes(constraints=m), m=m).eta for m in (1, 3, 7)]
        for eta in steps[1:]:
            self.assertAlmostEqual(eta, steps[0])

    def test_multipliers(self):
        base = schedule_from_theorem(SETTING_I, 0.5, 1.0, UNIT, m=1)
        scaled = schedule_from_theorem(SETTING_I, 0.5, 1.0, UNIT, m=1,
                                       multipliers=ScheduleMultipliers(c_gamma=2.0, c_eta=0.5, c_T=3.0))
        self.assertEqual(scaled.gamma2, 2 * base.gamma2)
        self.assertEqual(scaled.eta, 0.5 * base.eta)
        self.assertEqual(scaled.T, 3 * base.T)

    def test_large_gamma_is_clamped_and_flagged(self):
        with self.assertLogs('hinge_penalty.schedules', level='WARNING'):
            schedule = schedule_from_theorem(SETTING_I, 0.5, 1.0, BatchSizes(constraint_samples=1000), m=1)
        self.assertEqual(schedule.gamma2, 0.5)
        self.assertIn('gamma2_clamped', schedule.flags)


class TestSettingII(unittest.TestCase):
    def test_monotone(self):
        batches = BatchSizes(outer=2, constraints=1, inner=4, constraint_samples=4)
        schedule = schedule_from_theorem(SETTING_II_MONOTONE, 0.5, 2.0, batches, m=1, n=4)
        # min(4, 4/4) eps^4 / beta^2
        self.assertAlmostEqual(schedule.gamma1, 0.0625 / 4)
        self.assertEqual(schedule.gamma1, schedule.gamma2)
        # min(2/4, 1/2) * min(2, 2/2) * eps^4 / beta^3
        self.assertAlmostEqual(schedule.eta, 0.5 * 1.0 * 0.0625 / 8)
        # max(1, 2, 1/4) * max(2, 2) * 8 / eps^6
        self.assertEqual(schedule.T, math.ceil(2 * 2 * 8 * 64))

    def test_smooth(self):
        schedule = schedule_from_theorem(SETTING_II_SMOOTH, 0.5, 1.0, UNIT, m=1, n=2)
        self.assertAlmostEqual(schedule.gamma2, 0.0625)
        self.assertAlmostEqual(schedule.eta, 0.0625)
        # max(64, 2*16, 2*16)
        self.assertEqual(schedule.T, 64)

    def test_halving_epsilon_multiplies_T_by_64(self):
        batches = BatchSizes(outer=2, inner=4, constraint_samples=4)
        coarse = schedule_from_theorem(SETTING_II_MONOTONE, 0.5, 2.0, batches, m=2, n=8)
        fine = schedule_from_theorem(SETTING_II_MONOTONE, 0.25, 2.0, batches, m=2, n=8)
        self.assertEqual(fine.T, 64 * coarse.T)


class TestValidation(unittest.TestCase):
    def test_bad_epsilon(self):
        with self.assertRaises(InvalidArgumentError):
            schedule_from_theorem(SETTING_I, 0.0, 1.0, UNIT, m=1)

    def test_unknown_setting(self):
        with self.assertRaises(InvalidArgumentError):
            schedule_from_theorem('III', 0.5, 1.0, UNIT, m=1)

    def test_underflow(self):
        with self.assertRaises(ScheduleError):
            schedule_from_theorem(SETTING_I, 1e-100, 1.0, UNIT, m=1)

    def test_multipliers_from_dict(self):
        self.assertEqual(ScheduleMultipliers.from_dict(None), ScheduleMultipliers())
        with self.assertRaises(InvalidArgumentError):
            ScheduleMultipliers.from_dict({'c_beta': 1.0})
        with self.assertRaises(InvalidArgumentError):
            ScheduleMultipliers.from_dict({'c_eta': 0.0})

    def test_setting_for(self):
        self.assertEqual(setting_for(make_exemplar_1d()), SETTING_I)
        self.assertEqual(setting_for(make_fcco_instance(4, 2, 'monotone', seed=3)), SETTING_II_MONOTONE)


if __name__ == '__main__':
    unittest.main()
