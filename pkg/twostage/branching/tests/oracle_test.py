from unittest import TestCase, main

from ... import __core__
from ...lattice import Rates
from ...tests.utils import assertWithinSE
from .. import (
    BranchingOutcome,
    OracleBracket,
    estimate_branching_survival,
    product_residual,
    simulate_branching,
    survival_closed_form,
    truncated_survival_oracle,
    truncated_survival_sweep,
)

RATES = Rates(3.0, 1.0, 2.0)


class SimulationTest(TestCase):

    def testEmptyStartIsExtinct(self):
        self.assertIs(simulate_branching((0, 0), RATES, seed=1), BranchingOutcome.EXTINCT)

    def testHorizonCensors(self):
        outcomes = {simulate_branching((5, 5), RATES, seed=2, key=(r,), horizon=0.01) for r in range(20)}
        self.assertIn(BranchingOutcome.CENSORED, outcomes)

    def testCapHittingMatchesClosedForm(self):
        for initial, expected in (((1, 0), 1 / 3), ((0, 1), 2 / 9)):
            est = estimate_branching_survival(initial, RATES, replicas=6000, seed=3, cap=300)
            assertWithinSE(self, est.point, expected, est.std_error)


class TruncatedOracleTest(TestCase):

    def testMatchesClosedForm(self):
        for initial in ((1, 0), (0, 1), (1, 1)):
            value = truncated_survival_oracle(initial, RATES, cap=400).upper
            self.assertAlmostEqual(value, survival_closed_form(*initial, RATES), delta=1e-3)

    def testDecreasingInCap(self):
        values = [truncated_survival_oracle((1, 0), RATES, cap=k).upper for k in (5, 10, 20, 40)]
        self.assertEqual(values, sorted(values, reverse=True))
        self.assertGreaterEqual(values[-1], 1 / 3 - 1e-9)

    def testSubcriticalVanishes(self):
        self.assertLess(truncated_survival_oracle((1, 0), RATES, 1.5, cap=300).upper, 1e-6)

    def testProductStructure(self):
        p10 = truncated_survival_oracle((1, 0), RATES, cap=200).upper
        p01 = truncated_survival_oracle((0, 1), RATES, cap=200).upper
        p23 = truncated_survival_oracle((2, 3), RATES, cap=200).upper
        self.assertLessEqual(abs(product_residual(2, 3, RATES, single=(p10, p01, p23))), 1e-3)

    def testTwoSidedBracket(self):
        for initial in ((1, 0), (0, 1), (2, 3)):
            bracket = truncated_survival_oracle(initial, RATES, cap=100)
            self.assertIsInstance(bracket, OracleBracket)
            self.assertEqual(bracket.lower, 0.0)
            self.assertLessEqual(bracket.lower, survival_closed_form(*initial, RATES))
            self.assertGreaterEqual(bracket.upper, survival_closed_form(*initial, RATES) - 1e-9)
        self.assertEqual(truncated_survival_oracle((0, 0), RATES, cap=5), (0.0, 0.0))
        self.assertEqual(truncated_survival_oracle((3, 2), RATES, cap=5), (0.0, 1.0))

    def testSweepSettles(self):
        value, increment, cap = truncated_survival_sweep((1, 0), RATES)
        self.assertLess(increment, 1e-6)
        self.assertAlmostEqual(value, 1 / 3, delta=1e-5)

    def testBudget(self):
        with self.assertRaises(__core__.SizeError):
            truncated_survival_oracle((1, 0), RATES, cap=100, budget=1000)
        with self.assertRaises(__core__.ParameterError):
            truncated_survival_oracle((5, 5), RATES, cap=3)


if __name__ == '__main__':
    main()
