import math
from unittest import TestCase, main

import numpy as np

from ... import __core__
from ...lattice import Rates
from .. import (
    h_from_table,
    h_lambda,
    kesten_value,
    lambda_tilde,
    srw_hit_prob,
    srw_table,
    theta_hit_prob,
    theta_residuals,
)
from .. import _theta_weights

RATES = Rates(3.0, 1.0, 2.0)
ORIGIN10 = (0,) * 10


class ThetaTableTest(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.table = theta_hit_prob(10, RATES, R=4)

    def testOriginEntries(self):
        self.assertEqual(self.table.value(ORIGIN10, 1), 1.0)
        self.assertTrue(math.isnan(self.table.value(ORIGIN10, 3)))
        e1 = (1,) + (0,) * 9
        self.assertAlmostEqual(self.table.value(ORIGIN10, 2), self.table.value(e1, 1), places=14)

    def testRecursions(self):
        self.assertLessEqual(theta_residuals(self.table, RATES), 1e-10)

    def testFirstComponentsAgree(self):
        values = self.table.values[1:]
        np.testing.assert_allclose(values[:, 0], values[:, 1], atol=1e-14)

    def testProbabilities(self):
        finite = self.table.values[~np.isnan(self.table.values)]
        self.assertTrue(((finite >= 0) & (finite <= 1)).all())
        self.assertTrue((self.table.upper[1:] >= self.table.lower[1:] - 1e-14).all())

    def testIndependentOfLambda(self):
        other = theta_hit_prob(10, RATES, lam=0.01, R=4)
        np.testing.assert_array_equal(np.nan_to_num(other.values), np.nan_to_num(self.table.values))

    def testPrintedVariantRecursions(self):
        printed = theta_hit_prob(10, RATES, R=4, variant="printed")
        self.assertLessEqual(theta_residuals(printed, RATES), 1e-10)
        finite = printed.values[~np.isnan(printed.values)]
        self.assertTrue(((finite >= 0) & (finite <= 1)).all())
        self.assertGreaterEqual(printed.values[1, 0], self.table.values[1, 0] - 1e-14)

    def testPrintedStepProbabilitiesSumToOne(self):
        for lam in (0.0, 0.15, 3.0, 50.0):
            denom, weight = _theta_weights(RATES, lam, "printed")
            self.assertAlmostEqual((1.0 + weight) / denom, 1.0, places=15)
            self.assertEqual(weight, RATES.s + lam)

    def testPrintedWithoutLambdaIsCorrected(self):
        printed = theta_hit_prob(10, RATES, lam=0.0, R=4, variant="printed")
        np.testing.assert_allclose(np.nan_to_num(printed.values), np.nan_to_num(self.table.values), atol=1e-14)

    def testDominatedBySimpleWalk(self):
        theta = theta_hit_prob(3, RATES, R=8)
        srw = srw_table(3, 8)
        for k in range(1, len(theta.ball)):
            self.assertLessEqual(theta.lower[k, 0], srw.lower[k] + 1e-12)
            self.assertLessEqual(theta.values[k, 0], srw.values[k] + 1e-12)

    def testUnknownVariant(self):
        with self.assertRaises(__core__.ParameterError):
            theta_hit_prob(3, RATES, R=2, variant="other")


class ThetaMonteCarloTest(TestCase):

    def testWithinBracket(self):
        mc = theta_hit_prob(3, RATES, method="monte_carlo", R=1, replicas=3000, max_steps=4000, seed=11)
        exact = theta_hit_prob(3, RATES, R=12)
        self.assertEqual(mc.value((0, 0, 0), 1), 1.0)
        for offset, i in (((1, 0, 0), 1), ((1, 0, 0), 2), ((1, 0, 0), 3), ((0, 0, 0), 2)):
            k = exact.ball.find(offset)
            se = mc.std_error[mc.ball.find(offset), i - 1]
            value = mc.value(offset, i)
            self.assertGreaterEqual(value, exact.lower[k, i - 1] - 3 * se - 0.01)
            self.assertLessEqual(value, exact.upper[k, i - 1] + 3 * se)


class DerivedQuantitiesTest(TestCase):

    def testLimitOfH(self):
        self.assertAlmostEqual(h_lambda(0.0, 0.0, RATES, math.inf, 10), 0.5, places=15)

    def testHandEvaluation(self):
        table = theta_hit_prob(10, RATES, R=4)
        lam = RATES.lam / 20
        g_o2 = table.value(ORIGIN10, 2)
        g_e12 = table.value((1,) + (0,) * 9, 2)
        b = 4.0 / (20 * lam)
        expected = (2.0 * (1.0 - 2.0 * g_o2) - 2.0 * g_e12 - b) / (2.0 + 2.0 + b)
        h = h_from_table(table, RATES, lam)
        self.assertAlmostEqual(h, expected, delta=1e-12)
        self.assertGreater(h, 0.0)
        self.assertLessEqual(h, 1.0 - 2.0 * g_o2)

    def testSignFollowsLambdaTilde(self):
        table = theta_hit_prob(10, RATES, R=4)
        self.assertLess(h_from_table(table, RATES, 0.05), 0.0)
        self.assertGreater(h_from_table(table, RATES, 0.2), 0.0)

    def testLambdaTilde(self):
        self.assertAlmostEqual(lambda_tilde(10, RATES, 0.055), 4.0 / 33.4, places=12)
        self.assertAlmostEqual(lambda_tilde(10, RATES, kesten_value(10)), 0.119760479, places=8)
        self.assertAlmostEqual(lambda_tilde(7, RATES, 0.0), 4.0 / 28.0, places=15)

    def testDimensionTooSmall(self):
        srw = srw_hit_prob(3, (1, 0, 0), method="green_integral").value
        with self.assertRaises(__core__.DimensionTooSmall) as caught:
            lambda_tilde(3, RATES, srw)
        self.assertEqual(caught.exception.code, 8)


if __name__ == '__main__':
    main()
