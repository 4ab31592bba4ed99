import math
import warnings
from unittest import TestCase, main

from ... import __core__
from .. import green_function, kesten_value, srw_hit_prob, srw_table

RETURN_3D = 0.340537


class GreenIntegralTest(TestCase):

    def testThreeDimensionalReturn(self):
        self.assertAlmostEqual(green_function(3), 1.516386, delta=1e-5)
        self.assertAlmostEqual(srw_hit_prob(3, (1, 0, 0), method="green_integral").value, RETURN_3D, delta=1e-5)

    def testNeighborIdentity(self):
        # G(O) = 1 + G(e_1): the origin is harmonic apart from the first visit
        for d in (3, 6):
            self.assertAlmostEqual(green_function(d), 1.0 + green_function(d, (1,) + (0,) * (d - 1)), places=8)

    def testSymmetric(self):
        self.assertAlmostEqual(green_function(3, (0, -2, 1)), green_function(3, (2, 1, 0)), places=12)

    def testDecreasingInDimension(self):
        values = [srw_hit_prob(d, (1,) + (0,) * (d - 1), method="green_integral").value for d in range(3, 16)]
        for a, b in zip(values, values[1:]):
            self.assertGreater(a, b)

    def testKestenTrend(self):
        for d in range(5, 16):
            exact = srw_hit_prob(d, (1,) + (0,) * (d - 1), method="green_integral").value
            self.assertLess(d ** 3 * abs(exact - kesten_value(d)), 4.0)

    def testKestenValue(self):
        self.assertAlmostEqual(kesten_value(10), 0.055, places=15)

    def testRecurrent(self):
        with self.assertRaises(__core__.DimensionTooSmall):
            green_function(2)


class LinearSolveTest(TestCase):

    def testRecurrentDimensions(self):
        for d, x in ((1, (1,)), (2, (1, 0))):
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                hit = srw_hit_prob(d, x)
            self.assertEqual(hit.value, 1.0)
            self.assertTrue(any(issubclass(w.category, __core__.RecurrenceWarning) for w in caught))

    def testOrigin(self):
        self.assertEqual(srw_hit_prob(4, (0, 0, 0, 0)).value, 1.0)

    def testBracketContainsExactValue(self):
        table = srw_table(3, 30)
        k = table.ball.unit
        self.assertLessEqual(table.lower[k], RETURN_3D)
        self.assertGreaterEqual(table.upper[k], RETURN_3D)
        self.assertAlmostEqual(table.values[k], RETURN_3D, delta=1e-4)
        self.assertTrue((table.lower <= table.values + 1e-12).all())
        self.assertTrue((table.values <= table.upper + 1e-12).all())

    def testBracketNarrowsWithRadius(self):
        widths = [srw_hit_prob(3, (1, 0, 0), R=R).width for R in (10, 20, 40)]
        self.assertEqual(widths, sorted(widths, reverse=True))

    def testLinearSolveValueIsExactExitSolve(self):
        hit = srw_hit_prob(3, (1, 0, 0), R=12)
        table = srw_table(3, 12)
        k = table.ball.unit
        self.assertEqual(hit.value, float(table.values[k]))
        self.assertAlmostEqual(hit.width, table.upper[k] - table.lower[k], places=15)
        self.assertLessEqual(table.lower[k] - 1e-12, hit.value)
        self.assertLessEqual(hit.value, table.upper[k] + 1e-12)

    def testHighDimension(self):
        hit = srw_hit_prob(10, (1,) + (0,) * 9, R=6)
        self.assertLess(abs(hit.value - kesten_value(10)) / kesten_value(10), 0.1)
        self.assertLess(hit.width, 1e-3)

    def testTableRows(self):
        rows = srw_table(3, 3).rows()
        self.assertEqual(rows[0], ("0 0 0", 0, 1.0, 0.0))


class MonteCarloTest(TestCase):

    def testCappedWalksAreBiasedLow(self):
        hit = srw_hit_prob(3, (1, 0, 0), method="monte_carlo", replicas=6000, max_steps=3000, seed=5)
        self.assertIsNone(hit.width)
        self.assertLessEqual(hit.value, RETURN_3D + 3 * hit.std_error)
        self.assertGreater(hit.value, RETURN_3D - 0.05)

    def testIndependentOfWorkers(self):
        one = srw_hit_prob(3, (1, 0, 0), method="monte_carlo", replicas=3000, max_steps=200, seed=9, workers=1)
        two = srw_hit_prob(3, (1, 0, 0), method="monte_carlo", replicas=3000, max_steps=200, seed=9, workers=2)
        self.assertEqual(one, two)

    def testUnknownMethod(self):
        with self.assertRaises(__core__.ParameterError):
            srw_hit_prob(3, (1, 0, 0), method="guess")

    def testStandardError(self):
        hit = srw_hit_prob(4, (2, 0, 0, 0), method="monte_carlo", replicas=1000, max_steps=100, seed=1)
        self.assertAlmostEqual(hit.std_error, math.sqrt(hit.value * (1 - hit.value) / 1000), places=15)


if __name__ == '__main__':
    main()
