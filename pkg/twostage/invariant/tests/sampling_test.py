from unittest import TestCase, main

import numpy as np

from ... import __core__
from ...lattice import FULLY, HEALTHY, Configuration, Rates, TorusSpec
from ...tests.utils import assertWithinSE, combined_se
from .. import (
    NuSampler,
    NuSamples,
    PiQuery,
    b_tilde_estimate,
    doubling_gate,
    dual_pi,
    estimate_pi,
    one_minus_pi_upper,
    product_gap,
    product_prediction,
    reach_count_estimate,
    sample_nu,
    set_family,
    six_bounds,
    stationarity_gate,
)

RATES = Rates(8.0, 1.0, 2.0)
SPEC = TorusSpec(4, 3)


class SamplerTest(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.sampler = NuSampler(SPEC, RATES, burn_in=4.0, samples=40, thinning=1.0, seed=11, chains=4)
        cls.samples = sample_nu(cls.sampler)

    def testShapeAndMetadata(self):
        self.assertEqual(len(self.samples), 160)
        self.assertEqual(self.samples.states.shape, (160, 81))
        self.assertEqual(list(np.bincount(self.samples.chain)), [40] * 4)
        self.assertIn("quasi-stationary", self.samples.metadata["caveat"])
        self.assertEqual(self.samples.metadata["lambda_over_2d"], 1.0)

    def testConfigurationsMatchStates(self):
        config = self.samples[3]
        self.assertIsInstance(config, Configuration)
        np.testing.assert_array_equal(config.to_states(SPEC), self.samples.states[3])

    def testDeterministic(self):
        again = sample_nu(self.sampler)
        np.testing.assert_array_equal(again.states, self.samples.states)

    def testStationarityGate(self):
        self.assertTrue(stationarity_gate(self.samples).passed)
        self.assertIs(self.samples.require_stationary(), self.samples)

    def testDoublingGate(self):
        result = doubling_gate(self.sampler, k=4.0)
        self.assertTrue(result.passed)
        self.assertGreaterEqual(result.statistic, 0.0)

    def testDriftFailsGate(self):
        sampler = NuSampler(TorusSpec(1, 10), RATES, samples=10, seed=0)
        states = np.zeros((10, 10), dtype=np.int8)
        for k in range(10):
            states[k, :k] = FULLY
        drifting = NuSamples(sampler, states, np.zeros(10, dtype=int))
        self.assertFalse(stationarity_gate(drifting).passed)
        with self.assertRaises(__core__.GateFailure) as caught:
            drifting.require_stationary()
        self.assertEqual(caught.exception.code, 11)

    def testEmptyQuery(self):
        est = estimate_pi(self.samples, PiQuery())
        self.assertEqual((est.point, est.std_error), (1.0, 0.0))

    def testSingleSiteWithoutTranslation(self):
        est = estimate_pi(self.samples, PiQuery((5,), ()), translate=False)
        self.assertAlmostEqual(est.point, np.mean(self.samples.states[:, 5] != FULLY), places=14)
        est = estimate_pi(self.samples, PiQuery((), (5,)), translate=False)
        self.assertAlmostEqual(est.point, np.mean(self.samples.states[:, 5] == HEALTHY), places=14)

    def testGapRows(self):
        report = product_gap(1, 1, self.samples)
        self.assertEqual([row.family for row in report.rows], ["clustered", "spread", "mixed"])
        self.assertEqual(report.gap, max(row.gap for row in report.rows))
        for row in report.rows:
            self.assertEqual(row.prediction, 0.125)
            self.assertAlmostEqual(row.gap, abs(row.estimate - 0.125), places=14)

    def testDualAgreesWithDirect(self):
        for k, (m, n) in enumerate(((0, 1), (1, 0), (1, 1))):
            pair = set_family(SPEC, m, n, ("clustered",))["clustered"]
            query = PiQuery(pair.A, pair.B)
            direct = estimate_pi(self.samples, query)
            dual = dual_pi(query, SPEC, RATES, horizon=4.0, replicas=800, seed=21, family=k)
            assertWithinSE(self, dual.point, direct.point, combined_se(dual.std_error, direct.std_error))

    def testEmptyDual(self):
        self.assertEqual(dual_pi(PiQuery(), SPEC, RATES, horizon=1.0, replicas=10).point, 1.0)

    def testSandwich(self):
        for m, n in ((0, 1), (1, 0), (1, 1)):
            pair = set_family(SPEC, m, n, ("clustered",))["clustered"]
            est = estimate_pi(self.samples, PiQuery(pair.A, pair.B)).complement()
            b_tilde, _ = b_tilde_estimate(1, self.samples)
            lower = six_bounds(5, n, m, SPEC.d, RATES, b_tilde=b_tilde.point)
            self.assertLessEqual(est.point, one_minus_pi_upper(m, n, RATES) + 3 * est.std_error)
            self.assertGreaterEqual(est.point + 3 * combined_se(est.std_error, b_tilde.std_error), lower.composite)

    def testReachCountAboveBranching(self):
        query = PiQuery((0,), (1,))
        est = reach_count_estimate(query, SPEC, RATES, 5, replicas=400, seed=31)
        floor = six_bounds(5, 1, 1, SPEC.d, RATES).branching_factor
        self.assertGreaterEqual(est.point + 3 * est.std_error, floor)


class RegimeTest(TestCase):

    def testSubcriticalDiesOut(self):
        sampler = NuSampler(TorusSpec(2, 3), Rates(1.0, 1.0, 2.0), burn_in=30.0, samples=5, seed=1)
        with self.assertRaises(__core__.ExtinctionDuringSampling) as caught:
            sample_nu(sampler)
        self.assertEqual(caught.exception.code, 10)

    def testLargeRateApproachesProduct(self):
        rates = Rates(100.0, 1.0, 2.0)
        samples = sample_nu(NuSampler(SPEC, rates, burn_in=2.0, samples=20, thinning=0.25, seed=2))
        prediction = product_prediction(rates.lam, rates.delta, rates.gamma)
        self.assertAlmostEqual(samples.occupancy(FULLY).mean(), prediction.p2, delta=0.05)
        self.assertLess(samples.occupancy(HEALTHY).mean(), 0.05)

    def testOccupancyIncreasesWithRate(self):
        means = []
        for k, lam in enumerate((6.0, 10.0, 20.0)):
            samples = sample_nu(NuSampler(SPEC, Rates(lam, 1.0, 2.0), burn_in=3.0, samples=20, seed=40 + k, chains=2))
            occupancy = samples.occupancy()
            means.append((occupancy.mean(), occupancy.std(ddof=1) / np.sqrt(len(occupancy))))
        for (m1, se1), (m2, se2) in zip(means, means[1:]):
            self.assertGreaterEqual(m2 + 2 * combined_se(se1, se2), m1)

    def testGapShrinksWithDimension(self):
        low = sample_nu(NuSampler(TorusSpec(2, 5), RATES, burn_in=4.0, samples=40, seed=50, chains=2))
        high = sample_nu(NuSampler(SPEC, RATES, burn_in=4.0, samples=40, seed=51, chains=2))
        for m, n in ((1, 0), (0, 1)):
            self.assertGreater(product_gap(m, n, low).gap, product_gap(m, n, high).gap)


if __name__ == '__main__':
    main()
