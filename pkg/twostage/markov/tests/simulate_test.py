from unittest import TestCase, main

import numpy as np

from ... import __core__
from ...lattice import Configuration, Rates, TorusSpec, unit
from ...tests.utils import assertWithinSE
from .. import ProcessKind, estimate_survival, first_jump_estimates, simulate


class SimulateTest(TestCase):

    def testEmptyIsExtinctAtZero(self):
        run = simulate(ProcessKind.TWO_STAGE, TorusSpec(2, 5), Rates(1.0, 1.0, 2.0), Configuration(), 5.0, seed=1,
                       checkpoints=(0.0, 1.0))
        self.assertEqual(run.extinction_time, 0.0)
        self.assertEqual(list(run.fully_counts), [0, 0])

    def testUnboundedRunRejected(self):
        with self.assertRaises(__core__.ParameterError):
            simulate(ProcessKind.TWO_STAGE, TorusSpec(1, 5), Rates(1.0, 1.0, 2.0), Configuration({0}), None)

    def testPureDeathMeanIsOne(self):
        spec, rates = TorusSpec(2, 5), Rates(0.0, 1.0, 2.0)
        times = [
            simulate(ProcessKind.TWO_STAGE, spec, rates, Configuration({0}), 100.0, seed=11, key=(r,)).extinction_time
            for r in range(20000)
        ]
        assertWithinSE(self, np.mean(times), 1.0, np.std(times) / np.sqrt(len(times)))

    def testPromotionBeforeDeath(self):
        spec, rates = TorusSpec(2, 5), Rates(0.0, 1.0, 2.0)
        promoted = [
            simulate(ProcessKind.TWO_STAGE, spec, rates, Configuration((), {0}), 100.0, seed=12, key=(r,)).events == 2
            for r in range(20000)
        ]
        p = np.mean(promoted)
        assertWithinSE(self, p, 0.5, np.sqrt(0.25 / len(promoted)))

    def testDeterministicGivenSeed(self):
        spec, rates = TorusSpec(2, 7), Rates(0.6, 1.0, 2.0)
        a = simulate(ProcessKind.TWO_STAGE, spec, rates, Configuration({0}), 5.0, seed=3, key=(7,), checkpoints=(1, 2, 3))
        b = simulate(ProcessKind.TWO_STAGE, spec, rates, Configuration({0}), 5.0, seed=3, key=(7,), checkpoints=(1, 2, 3))
        self.assertEqual(a.extinction_time, b.extinction_time)
        self.assertEqual(a.final, b.final)
        np.testing.assert_array_equal(a.fully_counts, b.fully_counts)

    def testCheckpointsAndSnapshotsAgree(self):
        spec, rates = TorusSpec(2, 9), Rates(2.0, 1.0, 2.0)
        times = (0.0, 0.5, 1.0, 1.5)
        run = simulate(ProcessKind.TWO_STAGE, spec, rates, Configuration({0}), 1.5, seed=4,
                       checkpoints=times, snapshots=times)
        self.assertEqual(len(run.snapshots), 4)
        for config, f, s in zip(run.snapshots, run.fully_counts, run.semi_counts):
            self.assertEqual(config.counts(), (f, s))
        self.assertEqual(run.snapshots[0], Configuration({0}))

    def testStopAtCount(self):
        spec, rates = TorusSpec(2, 9), Rates(5.0, 1.0, 2.0)
        run = simulate(ProcessKind.ON_OFF, spec, rates, Configuration({0}), None, seed=5, stop_at_count=10)
        if run.extinction_time is None:
            self.assertEqual(sum(run.final.counts()), 10)
            self.assertIsNotNone(run.count_reached_time)


class EstimateSurvivalTest(TestCase):

    def testPureDeathDiesOut(self):
        est = estimate_survival(ProcessKind.TWO_STAGE, TorusSpec(2, 5), Rates(0.0, 1.0, 2.0),
                                Configuration({0}), horizon=30.0, replicas=500, seed=2)
        self.assertEqual(est.point, 0.0)
        self.assertEqual(est.replicas, 500)

    def testStrongInfectionSurvives(self):
        est = estimate_survival(ProcessKind.TWO_STAGE, TorusSpec(1, 30), Rates(20.0, 1.0, 20.0),
                                Configuration({0}), horizon=1.0, replicas=300, seed=2)
        self.assertGreater(est.point, 0.8)

    def testWorkersDoNotChangeResult(self):
        args = (ProcessKind.TWO_STAGE, TorusSpec(2, 5), Rates(0.8, 1.0, 2.0), Configuration({0}), 3.0, 200, 9)
        self.assertEqual(estimate_survival(*args, workers=1).point, estimate_survival(*args, workers=2).point)

    def testReplicasMustBePositive(self):
        with self.assertRaises(__core__.ParameterError):
            estimate_survival(ProcessKind.TWO_STAGE, TorusSpec(1, 5), Rates(1.0, 1.0, 2.0), Configuration({0}), 1.0, 0, 1)


class FirstJumpTest(TestCase):

    def testFirstJumpIdentities(self):
        est = first_jump_estimates(TorusSpec(2, 5), Rates(0.6, 1.0, 2.0), horizon=None, replicas=3000,
                                   seed=21, stop_at_count=6)
        self.assertTrue(est.checks["q1_first_jump"].holds())
        self.assertTrue(est.checks["alpha_first_jump"].holds())

    def testSubmodularInequalities(self):
        est = first_jump_estimates(TorusSpec(2, 5), Rates(0.6, 1.0, 2.0), horizon=2.0, replicas=1500, seed=22)
        self.assertTrue(est.checks["k2_submodular"].holds())
        self.assertTrue(est.checks["q3_submodular"].holds())
        self.assertEqual(set(est.estimates), {"alpha", "q1", "k1", "k2", "q2", "q3"})


if __name__ == '__main__':
    main()
