"""
# Lattice

---

## Overview
The Lattice module is the ground floor of the TwoStageLab library. It provides the finite torus
that stands in for the infinite lattice, the arithmetic on its sites and the validated rate
parameters every other module consumes.

## Features
- `Rates:` The triple (lambda, delta, gamma) with the derived constants `s = 1 + delta + gamma`
and `b = s / (2 d lambda)`.
- `Torus:` A torus of side `L >= 3` in dimension `d`, so that every site has exactly `2d`
distinct neighbors.
- `Packed Sites:` Sites are integers in `[0, L^d)` (mixed radix over the coordinates); `encode`
and `decode` convert to and from coordinate tuples.
- `Wraparound Distance:` `l1_distance` measures `min(|a - b|, L - |a - b|)` per axis.
- `Configuration:` The pair of disjoint sets (fully infected, semi-infected).
- `Offset Balls:` `OffsetBall` enumerates the lattice offsets of l1 norm at most R, optionally one
representative per orbit of the coordinate permutations and sign flips, with a neighbor table
that records where a step leaves the ball.

## Usage
To use the functions provided by this module, import the module and call the desired function:

```python
from twostage import lattice

params = lattice.validate(lattice.Rates(3.0, 1.0, 2.0), lattice.TorusSpec(1, 3))
params.s, params.b
lattice.neighbors(lattice.TorusSpec(2, 4), 0)
```
"""

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np

from twostage import __core__

HEALTHY = 0
"""
State of a healthy site.
"""
SEMI = 1
"""
State of a semi-infected site.
"""
FULLY = 2
"""
State of a fully infected site.
"""


@dataclass(frozen=True)
class Rates:
    """
    Infection rate per fully infected neighbor, extra recovery rate of semi-infected sites and
    promotion rate from semi to fully infected.
    """
    lam: float
    delta: float
    gamma: float

    @property
    def s(self):
        return 1.0 + self.delta + self.gamma

    def b(self, d):
        return self.s / (2 * d * self.lam)

    def scaled(self, d):
        """The same rates with infection `lam / (2d)`."""
        return Rates(self.lam / (2 * d), self.delta, self.gamma)

    def with_lambda(self, lam):
        return Rates(lam, self.delta, self.gamma)


@dataclass(frozen=True)
class TorusSpec:
    d: int
    L: int

    @property
    def size(self):
        return self.L ** self.d

    @property
    def degree(self):
        return 2 * self.d


@dataclass(frozen=True)
class Parameters:
    """
    Validated parameter record with the derived constants cached.
    """
    rates: Rates
    spec: TorusSpec
    s: float
    b: float

    def echo(self):
        return {
            "lambda": self.rates.lam,
            "lambda_over_2d": self.rates.lam / (2 * self.spec.d),
            "delta": self.rates.delta,
            "gamma": self.rates.gamma,
            "d": self.spec.d,
            "L": self.spec.L,
            "s": self.s,
            "b": self.b,
        }


def _positive(operation, field, value):
    try:
        ok = math.isfinite(value) and value > 0
    except TypeError:
        ok = False
    if not ok:
        raise __core__.ParameterError(operation, f"'{field}' must be a positive real, got {value!r}.", field)


def validate_rates(rates, allow_zero_lambda=False):
    """
    Checks a `Rates` record on its own. A zero infection rate is accepted when asked for, which
    the pure-death sanity runs need.
    """
    if not (allow_zero_lambda and rates.lam == 0):
        _positive("validate", "lambda", rates.lam)
    _positive("validate", "delta", rates.delta)
    _positive("validate", "gamma", rates.gamma)
    return rates


def validate_spec(spec):
    if not isinstance(spec.d, (int, np.integer)) or spec.d < 1:
        raise __core__.ParameterError("validate", f"'d' must be a positive integer, got {spec.d!r}.", "d")
    if not isinstance(spec.L, (int, np.integer)) or spec.L < 3:
        raise __core__.ParameterError("validate", f"'L' must be an integer >= 3, got {spec.L!r}.", "L")
    return spec


def validate(rates, spec):
    """
    # lattice.validate(rates, spec)

    ---

    ### Overview
    Rejects non-positive rates and tori with `L < 3`, and returns the parameter record with
    `s = 1 + delta + gamma` and `b = s / (2 d lambda)` cached.

    ### Parameters:
    - rates (Rates): The infection, extra-recovery and promotion rates.
    - spec (TorusSpec): Dimension and side length of the torus.

    ### Returns:
    Parameters: The normalized record.

    ### Raises:
    - ParameterError: Naming the offending field (`lambda`, `delta`, `gamma`, `d` or `L`).

    ### Examples:

    ```python
    p = validate(Rates(3.0, 1.0, 2.0), TorusSpec(1, 3))
    p.s, p.b   # 4.0, 0.666...
    ```
    """
    validate_spec(spec)
    validate_rates(rates)
    return Parameters(rates=rates, spec=spec, s=rates.s, b=rates.b(spec.d))


@functools.lru_cache(maxsize=64)
def _radix(spec):
    return np.array([spec.L ** i for i in range(spec.d)], dtype=np.int64)


def encode(spec, coords):
    """Packs a coordinate tuple into a site index, reducing each coordinate modulo L."""
    index = 0
    for i, c in enumerate(coords):
        index += (int(c) % spec.L) * spec.L ** i
    return index


def decode(spec, x):
    """Unpacks a site index into its canonical coordinates in `[0, L)^d`."""
    coords = []
    for _ in range(spec.d):
        x, c = divmod(x, spec.L)
        coords.append(c)
    return tuple(coords)


def origin(spec):
    return 0


def unit(spec, i, sign=1):
    """The site `sign * e_i` (axes counted from 0)."""
    coords = [0] * spec.d
    coords[i] = sign
    return encode(spec, coords)


def neighbors(spec, x):
    """
    # lattice.neighbors(spec, x)

    ---

    ### Overview
    Lists the `2d` neighbors of a site in the order `+e_0, -e_0, +e_1, -e_1, ...`.

    ### Parameters:
    - spec (TorusSpec): The torus.
    - x (int): A packed site index.

    ### Returns:
    list: `2d` distinct packed site indices.

    ### Examples:

    ```python
    neighbors(TorusSpec(2, 4), 0)   # [1, 3, 4, 12]
    ```
    """
    return [int(y) for y in neighbor_table(spec)[x]]


@functools.lru_cache(maxsize=16)
def neighbor_table(spec):
    """
    Array of shape `(L^d, 2d)` whose row `x` holds the neighbors of `x`.
    """
    sites = np.arange(spec.size, dtype=np.int64)
    radix = _radix(spec)
    coords = (sites[:, None] // radix[None, :]) % spec.L
    table = np.empty((spec.size, 2 * spec.d), dtype=np.int64)
    for i in range(spec.d):
        for j, step in enumerate((1, -1)):
            shifted = (coords[:, i] + step) % spec.L
            table[:, 2 * i + j] = sites + (shifted - coords[:, i]) * radix[i]
    table.setflags(write=False)
    return table


def l1_distance(spec, x, y):
    """Wraparound l1 distance between two packed sites."""
    total = 0
    for a, b in zip(decode(spec, x), decode(spec, y)):
        gap = abs(a - b)
        total += min(gap, spec.L - gap)
    return total


def norm(spec, x):
    return l1_distance(spec, x, 0)


def translate(spec, x, shift):
    """The site `x + shift` where both are packed indices."""
    return encode(spec, [a + b for a, b in zip(decode(spec, x), decode(spec, shift))])


class Configuration:
    """
    Sparse configuration: the set of fully infected sites and the disjoint set of semi-infected
    sites. Every other site is healthy.
    """

    def __init__(self, fully=(), semi=(), spec=None):
        self.fully = set(int(x) for x in fully)
        self.semi = set(int(x) for x in semi)
        self.spec = spec
        overlap = self.fully & self.semi
        if overlap:
            raise __core__.OverlapError(
                "Configuration", f"Sites {sorted(overlap)} are both fully and semi-infected."
            )

    @classmethod
    def all_fully(cls, spec):
        return cls(range(spec.size), (), spec)

    @classmethod
    def from_states(cls, states, spec=None):
        states = np.asarray(states)
        return cls(np.flatnonzero(states == FULLY), np.flatnonzero(states == SEMI), spec)

    def to_states(self, spec=None):
        spec = spec or self.spec
        states = np.zeros(spec.size, dtype=np.int8)
        states[list(self.fully)] = FULLY
        states[list(self.semi)] = SEMI
        return states

    def state(self, x):
        if x in self.fully:
            return FULLY
        if x in self.semi:
            return SEMI
        return HEALTHY

    def set_state(self, x, state):
        self.fully.discard(x)
        self.semi.discard(x)
        if state == FULLY:
            self.fully.add(x)
        elif state == SEMI:
            self.semi.add(x)
        if __core__.DEBUG:
            self.check()

    def check(self):
        assert not (self.fully & self.semi), "fully and semi-infected sets intersect"

    def infected(self):
        return self.fully | self.semi

    def counts(self):
        return len(self.fully), len(self.semi)

    def is_empty(self):
        return not self.fully and not self.semi

    def copy(self):
        return Configuration(self.fully, self.semi, self.spec)

    def __eq__(self, other):
        return isinstance(other, Configuration) and self.fully == other.fully and self.semi == other.semi

    def __repr__(self):
        return f"Configuration(fully={sorted(self.fully)}, semi={sorted(self.semi)})"


def canonical_offset(offset):
    """Representative of an offset under coordinate permutations and sign flips."""
    return tuple(sorted((abs(int(c)) for c in offset), reverse=True))


def _partitions(n, parts, largest):
    # non-increasing tuples of positive integers summing to n
    if n == 0:
        yield ()
        return
    if parts == 0:
        return
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions(n - first, parts - 1, first):
            yield (first,) + rest


_FULL_BALL_LIMIT = 10 ** 6


class OffsetBall:
    """
    The offsets of `Z^d` with l1 norm at most `R`, ordered by norm, origin first.

    With `reduce_symmetry` every offset stands for its whole orbit under the hyperoctahedral
    group and is stored as its non-increasing tuple of absolute coordinates. `table[k, j]` is the
    index of the `j`-th neighbor of offset `k` (order `+e_0, -e_0, +e_1, ...`) or -1 when the step
    leaves the ball; `exit_table[k, j]` then indexes `exits`, the offsets of norm `R + 1`.
    """

    def __init__(self, d, R, reduce_symmetry=True):
        if d < 1 or R < 1:
            raise __core__.ParameterError("OffsetBall", f"Need d >= 1 and R >= 1, got d={d}, R={R}.", "R")
        self.d = d
        self.R = R
        self.reduce_symmetry = reduce_symmetry
        if reduce_symmetry:
            offsets = [p + (0,) * (d - len(p)) for n in range(R + 1) for p in _partitions(n, d, n)]
        else:
            if (2 * R + 1) ** d > _FULL_BALL_LIMIT:
                raise __core__.SizeError(
                    "OffsetBall", f"The unreduced ball of radius {R} in dimension {d} is too large."
                )
            offsets = sorted(
                (c for c in itertools.product(range(-R, R + 1), repeat=d) if sum(map(abs, c)) <= R),
                key=lambda c: (sum(map(abs, c)), c),
            )
        self.offsets = offsets
        self.index = {c: k for k, c in enumerate(offsets)}
        self.norms = np.array([sum(abs(c) for c in o) for o in offsets], dtype=np.int64)
        self.exits = []
        exit_index = {}
        self.table = np.full((len(offsets), 2 * d), -1, dtype=np.int64)
        self.exit_table = np.full((len(offsets), 2 * d), -1, dtype=np.int64)
        for k, c in enumerate(offsets):
            for i in range(d):
                for j, step in enumerate((1, -1)):
                    v = list(c)
                    v[i] += step
                    key = self.canon(v)
                    if key in self.index:
                        self.table[k, 2 * i + j] = self.index[key]
                    else:
                        if key not in exit_index:
                            exit_index[key] = len(self.exits)
                            self.exits.append(key)
                        self.exit_table[k, 2 * i + j] = exit_index[key]

    def __len__(self):
        return len(self.offsets)

    def canon(self, offset):
        if self.reduce_symmetry:
            return canonical_offset(offset)
        return tuple(int(c) for c in offset)

    def find(self, offset):
        """Index of an offset given in any representation, or `KeyError`."""
        return self.index[self.canon(offset)]

    @property
    def origin(self):
        return 0

    @property
    def unit(self):
        """Index of `e_1`."""
        return self.index[(1,) + (0,) * (self.d - 1)]

    def orbit_size(self, k):
        """Number of lattice offsets the entry `k` stands for."""
        if not self.reduce_symmetry:
            return 1
        c = self.offsets[k]
        size = math.factorial(self.d)
        for _, group in itertools.groupby(c):
            size //= math.factorial(len(list(group)))
        return size * 2 ** sum(1 for a in c if a)

    def interior(self, margin=1):
        """Mask of the offsets with norm below `R - margin`."""
        return self.norms < self.R - margin
