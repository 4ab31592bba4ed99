import itertools
from unittest import TestCase, main

from ... import __core__
from .. import (
    Configuration,
    OffsetBall,
    Rates,
    TorusSpec,
    canonical_offset,
    decode,
    encode,
    l1_distance,
    neighbor_table,
    neighbors,
    unit,
    validate,
    validate_rates,
)


class NeighborsTest(TestCase):

    def testRingOfThree(self):
        spec = TorusSpec(1, 3)
        self.assertEqual(sorted(decode(spec, y) for y in neighbors(spec, 0)), [(1,), (2,)])

    def testTorusWrap(self):
        spec = TorusSpec(2, 4)
        got = {decode(spec, y) for y in neighbors(spec, encode(spec, (0, 0)))}
        self.assertEqual(got, {(1, 0), (3, 0), (0, 1), (0, 3)})

    def testRegularAndDistinct(self):
        spec = TorusSpec(3, 5)
        for x in (0, 17, spec.size - 1):
            ys = neighbors(spec, x)
            self.assertEqual(len(ys), 6)
            self.assertEqual(len(set(ys)), 6)
            for y in ys:
                self.assertEqual(l1_distance(spec, x, y), 1)

    def testSymmetric(self):
        spec = TorusSpec(2, 3)
        for x in range(spec.size):
            for y in neighbors(spec, x):
                self.assertIn(x, neighbors(spec, y))

    def testTableIsReadOnly(self):
        table = neighbor_table(TorusSpec(2, 5))
        with self.assertRaises(ValueError):
            table[0, 0] = 3


class SiteArithmeticTest(TestCase):

    def testEncodeDecode(self):
        spec = TorusSpec(3, 4)
        for coords in itertools.product(range(4), repeat=3):
            self.assertEqual(decode(spec, encode(spec, coords)), coords)

    def testNegativeCoordinatesWrap(self):
        spec = TorusSpec(2, 5)
        self.assertEqual(decode(spec, unit(spec, 1, -1)), (0, 4))

    def testWraparoundDistance(self):
        spec = TorusSpec(2, 7)
        self.assertEqual(l1_distance(spec, encode(spec, (0, 0)), encode(spec, (6, 5))), 3)


class ValidateTest(TestCase):

    def testDerivedConstants(self):
        p = validate(Rates(3.0, 1.0, 2.0), TorusSpec(1, 3))
        self.assertEqual(p.s, 4.0)
        self.assertAlmostEqual(p.b, 2.0 / 3.0, places=15)

    def testZeroLambda(self):
        with self.assertRaises(__core__.ParameterError) as ctx:
            validate(Rates(0.0, 1.0, 2.0), TorusSpec(1, 3))
        self.assertEqual(ctx.exception.field, "lambda")
        self.assertEqual(ctx.exception.code, 2)
        self.assertIn("[TwoStageLab.validate.ParameterError]", str(ctx.exception))

    def testZeroLambdaWhenAllowed(self):
        rates = Rates(0.0, 1.0, 2.0)
        self.assertIs(validate_rates(rates, allow_zero_lambda=True), rates)
        with self.assertRaises(__core__.ParameterError) as ctx:
            validate_rates(rates)
        self.assertEqual(ctx.exception.field, "lambda")
        with self.assertRaises(__core__.ParameterError) as ctx:
            validate_rates(Rates(-1.0, 1.0, 2.0), allow_zero_lambda=True)
        self.assertEqual(ctx.exception.field, "lambda")

    def testNegativeGamma(self):
        with self.assertRaises(__core__.ParameterError) as ctx:
            validate(Rates(1.0, 1.0, -2.0), TorusSpec(2, 5))
        self.assertEqual(ctx.exception.field, "gamma")

    def testSideTwo(self):
        with self.assertRaises(__core__.ParameterError) as ctx:
            validate(Rates(1.0, 1.0, 2.0), TorusSpec(1, 2))
        self.assertEqual(ctx.exception.field, "L")


class ConfigurationTest(TestCase):

    def testOverlapRejected(self):
        with self.assertRaises(__core__.OverlapError):
            Configuration({1, 2}, {2})

    def testSetStateKeepsDisjoint(self):
        c = Configuration({1}, {2})
        c.set_state(2, 2)
        c.set_state(1, 1)
        self.assertEqual((c.fully, c.semi), ({2}, {1}))
        c.set_state(1, 0)
        self.assertEqual(c.counts(), (1, 0))

    def testStatesRoundTrip(self):
        spec = TorusSpec(1, 5)
        c = Configuration({0, 3}, {1}, spec)
        self.assertEqual(Configuration.from_states(c.to_states()), c)

    def testAllFully(self):
        spec = TorusSpec(2, 3)
        self.assertEqual(Configuration.all_fully(spec).counts(), (9, 0))


class OffsetBallTest(TestCase):

    def testCanonicalOffset(self):
        self.assertEqual(canonical_offset((0, -2, 1)), (2, 1, 0))
        self.assertEqual(canonical_offset((-1, 0)), (1, 0))

    def testOriginFirstAndUnit(self):
        ball = OffsetBall(4, 3)
        self.assertEqual(ball.offsets[0], (0, 0, 0, 0))
        self.assertEqual(ball.offsets[ball.unit], (1, 0, 0, 0))
        self.assertEqual(list(ball.norms), sorted(ball.norms))

    def testOrbitsCoverTheFullBall(self):
        for d, R in ((2, 3), (3, 2), (1, 4)):
            reduced = OffsetBall(d, R)
            full = OffsetBall(d, R, reduce_symmetry=False)
            self.assertEqual(sum(reduced.orbit_size(k) for k in range(len(reduced))), len(full))
            for offset in full.offsets:
                self.assertIn(canonical_offset(offset), reduced.index)

    def testPartitionCount(self):
        # partitions of 0..4 into at most 2 parts: 1 + 1 + 2 + 2 + 3
        self.assertEqual(len(OffsetBall(2, 4)), 9)

    def testNeighborTable(self):
        ball = OffsetBall(3, 3)
        for k in range(len(ball)):
            for j in range(6):
                inside, outside = ball.table[k, j], ball.exit_table[k, j]
                self.assertTrue((inside >= 0) != (outside >= 0))
                if inside >= 0:
                    self.assertEqual(abs(ball.norms[inside] - ball.norms[k]), 1)
                else:
                    self.assertEqual(sum(ball.exits[outside]), 4)
        self.assertTrue(all(ball.table[0] == ball.unit))

    def testInterior(self):
        ball = OffsetBall(2, 4)
        self.assertTrue(all(ball.norms[ball.interior()] < 3))

    def testLimits(self):
        with self.assertRaises(__core__.SizeError):
            OffsetBall(10, 5, reduce_symmetry=False)
        with self.assertRaises(__core__.ParameterError):
            OffsetBall(3, 0)


if __name__ == '__main__':
    main()
