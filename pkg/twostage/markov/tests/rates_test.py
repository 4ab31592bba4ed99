from unittest import TestCase, main

import numpy as np

from ...lattice import Configuration, Rates, TorusSpec, neighbors
from .. import ProcessKind, event_rates, total_rate


class TotalRateTest(TestCase):

    def testSingleFullyTwoStage(self):
        spec = TorusSpec(2, 5)
        table = total_rate(ProcessKind.TWO_STAGE, Configuration({0}), spec, Rates(3.0, 1.0, 2.0))
        self.assertAlmostEqual(table.total, 13.0, places=12)
        self.assertEqual(table.by_transition["2->0"], 1.0)
        self.assertAlmostEqual(table.by_transition["0->1"], 12.0, places=12)

    def testSingleSemiTwoStage(self):
        spec = TorusSpec(2, 5)
        table = total_rate(ProcessKind.TWO_STAGE, Configuration((), {0}), spec, Rates(3.0, 1.0, 2.0))
        self.assertAlmostEqual(table.total, 4.0, places=12)

    def testSingleFullyOnOff(self):
        spec = TorusSpec(1, 3)
        table = total_rate(ProcessKind.ON_OFF, Configuration({0}), spec, Rates(3.0, 1.0, 2.0))
        self.assertAlmostEqual(table.total, 8.0, places=12)
        self.assertEqual(table.by_transition["2->1"], 1.0)

    def testInfectionCountsFullyNeighborsOnly(self):
        spec = TorusSpec(1, 5)
        rates = Rates(0.5, 1.0, 2.0)
        config = Configuration({0, 2}, {3})
        infections = {tr.site: tr.rate for tr in event_rates(ProcessKind.TWO_STAGE, config, spec, rates) if tr.old == 0}
        self.assertEqual(infections, {1: 1.0, 4: 0.5})


class SimulatorDecompositionTest(TestCase):

    def testClockRatesMatchTransitionTable(self):
        # Thinned per-site clocks give each real transition exactly its tabulated rate.
        spec = TorusSpec(2, 6)
        rates = Rates(0.7, 1.3, 2.1)
        rng = np.random.default_rng(5)
        states = rng.integers(0, 3, spec.size)
        config = Configuration.from_states(states, spec)
        for kind in ProcessKind:
            by = total_rate(kind, config, spec, rates).by_transition
            n_fully, n_semi = config.counts()
            healthy_pressure = sum(
                1 for x in config.fully for y in neighbors(spec, x) if y not in config.infected()
            )
            self.assertAlmostEqual(by.get("0->1", 0.0), rates.lam * healthy_pressure, places=10)
            self.assertAlmostEqual(by["2->0"], n_fully, places=10)
            self.assertAlmostEqual(by["1->2"], rates.gamma * n_semi, places=10)
            if kind is ProcessKind.TWO_STAGE:
                self.assertAlmostEqual(by["1->0"], (1 + rates.delta) * n_semi, places=10)
                self.assertNotIn("2->1", by)
            else:
                self.assertAlmostEqual(by["1->0"], n_semi, places=10)
                self.assertAlmostEqual(by["2->1"], rates.delta * n_fully, places=10)


if __name__ == '__main__':
    main()
