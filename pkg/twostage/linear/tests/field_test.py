from unittest import TestCase, main

import numpy as np
from scipy.stats import ks_2samp

from ... import __core__
from ...lattice import Configuration, Rates, TorusSpec
from ...markov import ProcessKind, simulate
from ...tests.utils import assertWithinSE
from .. import build_G, integrate_moments, simulate_linear_field

RATES = Rates(0.5, 1.0, 2.0)


class FieldMomentsTest(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.field_run = simulate_linear_field(TorusSpec(2, 11), RATES, times=(0.5, 1.0, 2.0), replicas=3000, seed=4)

    def testFirstMomentsAreOne(self):
        for j in range(3):
            for quantity in ("zeta", "g"):
                est = self.field_run.estimate(quantity, j)
                assertWithinSE(self, est.point, 1.0, est.std_error)

    def testSecondMomentMatchesOperator(self):
        est = self.field_run.estimate("zeta2", 1)
        F = integrate_moments(build_G(2, 5, RATES), 1.0)
        assertWithinSE(self, est.point, F.origin, est.std_error)

    def testNonnegative(self):
        self.assertTrue((self.field_run.zeta_origin >= 0).all())
        self.assertTrue((self.field_run.g_origin >= 0).all())
        self.assertTrue((self.field_run.fully_counts <= self.field_run.infected_counts).all())


class FieldProjectionTest(TestCase):

    def testProjectionIsTheTwoStageProcess(self):
        spec = TorusSpec(2, 5)
        field = simulate_linear_field(spec, RATES, horizon=1.0, replicas=2000, seed=8)
        direct = [
            simulate(ProcessKind.TWO_STAGE, spec, RATES, Configuration.all_fully(spec), 1.0,
                     seed=8, key=(r,), checkpoints=(1.0,)).fully_counts[0]
            for r in range(2000)
        ]
        self.assertGreater(ks_2samp(field.fully_counts[:, 0], direct).pvalue, 0.01)


class FieldStreamsTest(TestCase):

    def testDeterministicAndWorkerIndependent(self):
        spec = TorusSpec(1, 9)
        a = simulate_linear_field(spec, RATES, horizon=0.5, replicas=1500, seed=3)
        b = simulate_linear_field(spec, RATES, horizon=0.5, replicas=1500, seed=3, workers=2)
        np.testing.assert_array_equal(a.zeta_origin, b.zeta_origin)
        np.testing.assert_array_equal(a.infected_counts, b.infected_counts)

    def testRejectsBadInput(self):
        with self.assertRaises(__core__.ParameterError):
            simulate_linear_field(TorusSpec(1, 5), RATES, lam=0.0)
        with self.assertRaises(__core__.ParameterError):
            simulate_linear_field(TorusSpec(1, 5), RATES, times=(-1.0,))


if __name__ == '__main__':
    main()
