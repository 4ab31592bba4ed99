from unittest import TestCase, main

import numpy as np
from scipy import stats

from ...lattice import Configuration, Rates, TorusSpec, unit
from ...markov import ProcessKind, simulate
from .. import (
    GraphicalTimeline,
    coupled_submodularity,
    evolve_coupled,
    path_infected_set,
    sample_timeline,
    survival_indicator,
)


class PathOracleTest(TestCase):

    def testSweepMatchesPathSearch(self):
        spec, rates = TorusSpec(1, 5), Rates(1.5, 0.8, 1.2)
        pairs = [({0}, set()), (set(), {0}), ({0}, {2}), ({1, 3}, {4})]
        for seed in range(300):
            timeline = sample_timeline(spec, rates, 2.0, seed)
            trajectory = evolve_coupled(timeline, pairs, times=[0.7, 1.3, 2.0])
            for j, t in enumerate(trajectory.times):
                for p, (C, D) in enumerate(pairs):
                    self.assertEqual(trajectory.infected_set(p, j), path_infected_set(timeline, C, D, t))

    def testSweepMatchesPathSearchOnTwelveMarks(self):
        spec = TorusSpec(1, 4)
        timeline = GraphicalTimeline.from_marks(
            spec, 3.0,
            deaths={1: [2.5], 3: [1.9]},
            stars={1: [0.6], 2: [1.1]},
            diamonds={1: [0.9], 2: [0.5], 3: [1.4]},
            arrows={(0, 1): [0.3, 0.8], (1, 2): [1.0], (2, 3): [1.2], (0, 3): [0.2]},
        )
        pairs = [({0}, set()), (set(), {0}), ({2}, set())]
        times = [0.25, 0.7, 0.95, 1.25, 1.5, 2.0, 2.9]
        trajectory = evolve_coupled(timeline, pairs, times=times)
        for j, t in enumerate(times):
            for p, (C, D) in enumerate(pairs):
                self.assertEqual(trajectory.infected_set(p, j), path_infected_set(timeline, C, D, t), (p, t))


class CouplingTest(TestCase):

    def testMonotoneInInitialCondition(self):
        spec, rates = TorusSpec(2, 5), Rates(0.8, 1.0, 2.0)
        pairs = [(set(), {0}), ({0}, set()), ({0}, {1}), ({0, 1, 5}, {2})]
        for seed in range(200):
            trajectory = evolve_coupled(sample_timeline(spec, rates, 3.0, seed), pairs, times=[0.5, 1.0, 2.0, 3.0])
            for j in range(4):
                sets = [trajectory.infected_set(p, j) for p in range(4)]
                self.assertLessEqual(sets[0], sets[1])
                self.assertLessEqual(sets[1], sets[2])
                self.assertLessEqual(sets[2], sets[3])

    def testSurvivalIndicator(self):
        timeline = sample_timeline(TorusSpec(2, 5), Rates(0.8, 1.0, 2.0), 2.0, seed=1)
        trajectory = evolve_coupled(timeline, [(set(), set()), ({0}, set())])
        self.assertEqual(survival_indicator(trajectory, 0, 0.0), 0)
        self.assertEqual(survival_indicator(trajectory, 0, 1.5), 0)
        self.assertEqual(survival_indicator(trajectory, 1, 0.0), 1)

    def testSubmodularityHoldsOnEverySample(self):
        spec, rates = TorusSpec(2, 5), Rates(0.7, 1.0, 2.0)
        o, e1, e2 = 0, unit(spec, 0, 1), unit(spec, 1, 1)
        violations = 0
        for seed in range(2000):
            check = coupled_submodularity(sample_timeline(spec, rates, 2.0, seed), {o}, {e1}, {o}, {e2}, [0.5, 1.0, 2.0])
            violations += check.violations
            check = coupled_submodularity(sample_timeline(spec, rates, 2.0, seed), {o, e1}, set(), {o}, {e2}, [1.0, 2.0])
            violations += check.violations
        self.assertEqual(violations, 0)

    def testSameLawAsDirectSimulator(self):
        spec, rates = TorusSpec(2, 7), Rates(0.5, 1.0, 2.0)
        n = 3000
        graphical_sizes = [
            len(evolve_coupled(sample_timeline(spec, rates, 1.0, seed), [({0}, set())], times=[1.0]).infected_set(0, 0))
            for seed in range(n)
        ]
        direct_sizes = [
            len(simulate(ProcessKind.TWO_STAGE, spec, rates, Configuration({0}), 1.0, seed=77, key=(r,)).final.infected())
            for r in range(n)
        ]
        self.assertGreater(stats.ks_2samp(graphical_sizes, direct_sizes).pvalue, 0.01)
        self.assertAlmostEqual(np.mean(graphical_sizes), np.mean(direct_sizes), delta=0.3)


if __name__ == '__main__':
    main()
