from unittest import TestCase, main

from ... import __core__
from ...lattice import Rates
from .. import bracket_critical

RATES = Rates(1.0, 1.0, 2.0)
FAST_PROMOTION = Rates(1.0, 1.0, 50.0)


class BracketTest(TestCase):

    def testZeroGridIsDegenerate(self):
        bracket = bracket_critical(1, RATES, [0.0, 0.0], L=5, horizon=2.0, replicas=50, seed=1)
        self.assertTrue(bracket.degenerate)
        self.assertIsNone(bracket.lam_hi)
        self.assertEqual([p[1] for p in bracket.points], [0.0, 0.0])

    def testCrossingOnRing(self):
        bracket = bracket_critical(1, FAST_PROMOTION, [6.0, 0.2], L=12, horizon=5.0, replicas=100, seed=2,
                                   threshold=0.2)
        self.assertFalse(bracket.degenerate)
        self.assertEqual((bracket.lam_lo, bracket.lam_hi), (0.2, 6.0))
        points = dict((lam, p) for lam, p, _ in bracket.points)
        self.assertLess(points[0.2], 0.2)
        self.assertGreaterEqual(points[6.0], 0.2)

    def testHorizonGate(self):
        bracket = bracket_critical(1, FAST_PROMOTION, [0.2, 6.0], L=12, horizon=5.0, replicas=100, seed=3,
                                   threshold=0.2, check_horizon=True)
        self.assertTrue(bracket.gates["horizon"])

    def testBudget(self):
        with self.assertRaises(__core__.BudgetExceeded) as caught:
            bracket_critical(10, RATES, [0.1, 0.2], horizon=100.0, replicas=10 ** 6, budget=1e6)
        self.assertEqual(caught.exception.code, 9)

    def testEmptyGrid(self):
        with self.assertRaises(__core__.ParameterError):
            bracket_critical(2, RATES, [])


if __name__ == '__main__':
    main()
