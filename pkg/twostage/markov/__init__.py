"""
# Markov

---

## Overview
The Markov module simulates the two-stage contact process and its dual on-off process exactly,
event by event, on a finite torus. It also estimates survival probabilities from replicas and
carries a brute-force oracle that exponentiates the full generator on tori of at most eight
sites.

## Features
- `Rate Tables:` `event_rates` lists every enabled transition of a configuration with its rate;
`total_rate` sums them by transition type. The simulator and the exact generator share them.
- `Direct Simulation:` `simulate` runs a next-event scheme over the infected sites only and
reports the extinction time (or censoring), counts at checkpoints, snapshots and the first time
the infected count reaches a target.
- `Survival Estimates:` `estimate_survival` runs replicas with per-replica streams, optionally
across worker processes, and reports the survivor fraction with its binomial standard error.
- `First-Jump Quantities:` `first_jump_estimates` estimates the survival probabilities from the
small initial configurations that enter the lower bound and checks the identities and
inequalities linking them.
- `Exact Distribution:` `exact_distribution` evolves the law of the chain over `3^n` states;
`duality_sides` evaluates both sides of the duality between the two processes.

## Detailed Functionality

### Rate tables
Per site, the two-stage process flips `2 -> 0` at rate 1, `1 -> 0` at rate `1 + delta`,
`1 -> 2` at rate `gamma` and `0 -> 1` at rate `lambda` times the number of fully infected
neighbors. The on-off process flips `{1, 2} -> 0` at rate 1, `2 -> 1` at rate `delta`,
`1 -> 2` at rate `gamma` and `0 -> 1` at rate `lambda` times the number of state-2 neighbors.

### Simulation scheme
Every fully infected site carries a clock of rate `1 + 2d lambda` (plus `delta` for the on-off
process) and every semi-infected site one of rate `(1 + delta) + gamma` (respectively
`1 + gamma`). A firing fully infected site either recovers, demotes, or tries to infect a
uniformly chosen neighbor; the attempt does nothing when that neighbor is already infected.
This is exact: the rate of each real transition is unchanged, and sites that cannot change are
never visited.

## Usage

```python
from twostage import lattice, markov

spec = lattice.TorusSpec(2, 5)
rates = lattice.Rates(0.5, 1.0, 2.0)
est = markov.estimate_survival(markov.ProcessKind.TWO_STAGE, spec, rates,
                               lattice.Configuration({0}), horizon=10.0, replicas=1000, seed=1)
```
"""

import enum
import functools
import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.sparse.linalg import expm_multiply

import twostage as ts
from twostage import __core__
from twostage import lattice

logger = __core__.get_logger(__name__)


class ProcessKind(enum.Enum):
    TWO_STAGE = "two-stage"
    ON_OFF = "on-off"


Transition = namedtuple("Transition", ["site", "old", "new", "rate"])

RateTable = namedtuple("RateTable", ["total", "by_transition"])


@dataclass
class Estimate:
    """Monte Carlo point estimate of a probability with its standard error and seed provenance."""
    point: float
    replicas: int
    std_error: float
    seed: object = None

    @classmethod
    def proportion(cls, successes, replicas, seed=None, **extra):
        p = successes / replicas if replicas else 0.0
        se = math.sqrt(p * (1.0 - p) / replicas) if replicas else 0.0
        return cls(point=p, replicas=replicas, std_error=se, seed=seed, **extra)

    def complement(self):
        return type(self)(**{**self.__dict__, "point": 1.0 - self.point})

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class SurvivalEstimate(Estimate):
    horizon: float = None
    policy: str = "alive-at-horizon; censored replicas count as survivors"


@dataclass
class RunSummary:
    extinction_time: float
    censored: bool
    final: lattice.Configuration
    checkpoints: np.ndarray
    fully_counts: np.ndarray
    semi_counts: np.ndarray
    snapshots: list = field(default_factory=list)
    count_reached_time: float = None
    events: int = 0

    @property
    def survived(self):
        """Alive at the horizon, or reached the target count before dying."""
        return self.extinction_time is None


def _rate_constants(kind, spec, rates):
    two_d_lam = 2 * spec.d * rates.lam
    if kind is ProcessKind.TWO_STAGE:
        return 1.0 + two_d_lam, 1.0, (1.0 + rates.delta) + rates.gamma, 1.0 + rates.delta
    return 1.0 + rates.delta + two_d_lam, 1.0, 1.0 + rates.gamma, 1.0


def event_rates(kind, config, spec, rates):
    """
    # markov.event_rates(kind, config, spec, rates)

    ---

    ### Overview
    Lists every transition with a positive rate out of `config`.

    ### Parameters:
    - kind (ProcessKind): Two-stage or on-off.
    - config (Configuration): The current configuration.
    - spec (TorusSpec): The torus.
    - rates (Rates): The rates.

    ### Returns:
    list: `Transition(site, old, new, rate)` records, sorted by site then target state.
    """
    table = lattice.neighbor_table(spec)
    out = []
    for x in config.fully:
        out.append(Transition(x, 2, 0, 1.0))
        if kind is ProcessKind.ON_OFF:
            out.append(Transition(x, 2, 1, rates.delta))
    for x in config.semi:
        out.append(Transition(x, 1, 0, 1.0 + rates.delta if kind is ProcessKind.TWO_STAGE else 1.0))
        out.append(Transition(x, 1, 2, rates.gamma))
    pressure = {}
    for x in config.fully:
        for y in table[x]:
            y = int(y)
            if y not in config.fully and y not in config.semi:
                pressure[y] = pressure.get(y, 0) + 1
    for y, count in pressure.items():
        if rates.lam > 0:
            out.append(Transition(y, 0, 1, rates.lam * count))
    return sorted(out, key=lambda tr: (tr.site, tr.new))


def total_rate(kind, config, spec, rates):
    """
    # markov.total_rate(kind, config, spec, rates)

    ---

    ### Overview
    Sums the enabled transition rates of `config`, overall and per transition type.

    ### Returns:
    RateTable: `total` and `by_transition`, a dict keyed by `"old->new"`.

    ### Examples:
    - A single fully infected origin on `TorusSpec(2, 5)` with `lambda = 3`: `1 + 4 * 3 = 13`.
    """
    by = {}
    for tr in event_rates(kind, config, spec, rates):
        key = f"{tr.old}->{tr.new}"
        by[key] = by.get(key, 0.0) + tr.rate
    return RateTable(sum(by.values()), by)


class _IndexedSet:
    """Set with O(1) insert, delete and uniform choice."""

    __slots__ = ("items", "where")

    def __init__(self, items=()):
        self.items = []
        self.where = {}
        for x in items:
            self.add(x)

    def add(self, x):
        self.where[x] = len(self.items)
        self.items.append(x)

    def remove(self, x):
        i = self.where.pop(x)
        last = self.items.pop()
        if i < len(self.items):
            self.items[i] = last
            self.where[last] = i

    def pick(self, u):
        n = len(self.items)
        return self.items[min(int(u * n), n - 1)]

    def __len__(self):
        return len(self.items)


class _Uniforms:
    """Draws uniforms from a generator in blocks."""

    __slots__ = ("rng", "buffer", "i")

    def __init__(self, rng, block=1024):
        self.rng = rng
        self.buffer = rng.random(block)
        self.i = 0

    def __call__(self):
        if self.i == len(self.buffer):
            self.buffer = self.rng.random(len(self.buffer))
            self.i = 0
        u = self.buffer[self.i]
        self.i += 1
        return u


@functools.lru_cache(maxsize=16)
def _neighbor_lists(spec):
    return tuple(tuple(row) for row in lattice.neighbor_table(spec).tolist())


def _stream(seed, key, rng):
    if rng is not None:
        return rng
    return __core__.generator(seed, ts.STREAM_MARKOV, *key)


def simulate(kind, spec, rates, initial, horizon, seed=0, key=(), checkpoints=(), snapshots=(),
             stop_at_count=None, rng=None):
    """
    # markov.simulate(kind, spec, rates, initial, horizon, seed, ...)

    ---

    ### Overview
    Runs one exact trajectory of the two-stage or on-off process from `initial` until extinction,
    the horizon or, when `stop_at_count` is given, the first time `|C_t| + |D_t|` reaches it.
    Extinction is absorbing.

    ### Parameters:
    - kind (ProcessKind): Two-stage or on-off.
    - spec (TorusSpec), rates (Rates): Torus and rates. `rates.lam` may be 0.
    - initial (Configuration): Starting pair (fully, semi).
    - horizon (float or None): Final time. `None` is allowed only with `stop_at_count`.
    - seed (int), key (tuple): The stream is `(seed, STREAM_MARKOV, *key)`.
    - checkpoints (iterable): Times at which `|C_t|` and `|D_t|` are recorded. Entries after a
    stop at the target count are -1.
    - snapshots (iterable): Times at which the configuration itself is copied.
    - stop_at_count (int): Optional target infected count.
    - rng (Generator): Overrides the keyed stream.

    ### Returns:
    RunSummary: Extinction time (None when censored or stopped), final configuration, counts,
    snapshots and the time the target count was reached.

    ### Raises:
    - ParameterError: If neither `horizon` nor `stop_at_count` bounds the run.
    """
    if horizon is None and not stop_at_count:
        raise __core__.ParameterError("simulate", "An unbounded run needs 'stop_at_count'.", "horizon")
    if horizon is not None and horizon <= 0:
        raise __core__.ParameterError("simulate", f"'horizon' must be positive, got {horizon}.", "horizon")
    uniform = _Uniforms(_stream(seed, key, rng))
    table = _neighbor_lists(spec)
    degree = 2 * spec.d
    r_fully, death_fully, r_semi, death_semi = _rate_constants(kind, spec, rates)
    demote = rates.delta if kind is ProcessKind.ON_OFF else 0.0
    state = bytearray(spec.size)
    fully = _IndexedSet(sorted(initial.fully))
    semi = _IndexedSet(sorted(initial.semi))
    for x in fully.items:
        state[x] = 2
    for x in semi.items:
        state[x] = 1

    ck = np.asarray(sorted(checkpoints), dtype=float)
    fully_counts = np.full(len(ck), -1, dtype=np.int64)
    semi_counts = np.full(len(ck), -1, dtype=np.int64)
    snap_times = sorted(snapshots)
    snaps = []
    ci = si = 0
    t = 0.0
    events = 0
    extinction = None
    reached = None
    censored = False

    while True:
        n_fully, n_semi = len(fully), len(semi)
        if n_fully + n_semi == 0:
            extinction = t
            break
        if stop_at_count and n_fully + n_semi >= stop_at_count:
            reached = t
            break
        total = n_fully * r_fully + n_semi * r_semi
        t_next = t - math.log(1.0 - uniform()) / total
        while ci < len(ck) and ck[ci] < t_next and (horizon is None or ck[ci] <= horizon):
            fully_counts[ci], semi_counts[ci] = n_fully, n_semi
            ci += 1
        while si < len(snap_times) and snap_times[si] < t_next and (horizon is None or snap_times[si] <= horizon):
            snaps.append(lattice.Configuration(fully.items, semi.items, spec))
            si += 1
        if horizon is not None and t_next > horizon:
            t = horizon
            censored = True
            break
        t = t_next
        events += 1
        u = uniform() * total
        if u < n_fully * r_fully:
            x = fully.pick(u / (n_fully * r_fully))
            v = uniform() * r_fully
            if v < death_fully:
                fully.remove(x)
                state[x] = 0
            elif v < death_fully + demote:
                fully.remove(x)
                semi.add(x)
                state[x] = 1
            else:
                y = table[x][int(uniform() * degree)]
                if state[y] == 0:
                    semi.add(y)
                    state[y] = 1
        else:
            x = semi.pick((u - n_fully * r_fully) / (n_semi * r_semi))
            semi.remove(x)
            if uniform() * r_semi < death_semi:
                state[x] = 0
            else:
                fully.add(x)
                state[x] = 2

    if extinction is not None:
        fully_counts[ci:] = 0
        semi_counts[ci:] = 0
        snaps.extend(lattice.Configuration((), (), spec) for _ in snap_times[si:])
    return RunSummary(
        extinction_time=extinction,
        censored=censored,
        final=lattice.Configuration(fully.items, semi.items, spec),
        checkpoints=ck,
        fully_counts=fully_counts,
        semi_counts=semi_counts,
        snapshots=snaps,
        count_reached_time=reached,
        events=events,
    )


def _survival_block(job):
    kind, spec, rates, fully, semi, horizon, seed, family, start, count, stop_at_count = job
    initial = lattice.Configuration(fully, semi, spec)
    survivors = 0
    for r in range(start, start + count):
        run = simulate(kind, spec, rates, initial, horizon, seed, key=(family, r), stop_at_count=stop_at_count)
        survivors += run.survived
    return survivors


def estimate_survival(kind, spec, rates, initial, horizon, replicas, seed, stop_at_count=None,
                      workers=1, family=0):
    """
    # markov.estimate_survival(kind, spec, rates, initial, horizon, replicas, seed)

    ---

    ### Overview
    Fraction of replicas whose infected set is nonempty at `horizon`. Replicas still alive at the
    horizon count as survivors, which biases the estimate upward relative to survival for all
    time. With `stop_at_count`, reaching that many infected sites also counts as survival.

    ### Parameters:
    - kind, spec, rates, initial, horizon: As for `simulate`.
    - replicas (int): Number of replicas, at least 1.
    - seed (int): Master seed. Replica `r` uses the stream `(seed, STREAM_MARKOV, family, r)`.
    - stop_at_count (int): Optional target count.
    - workers (int): Worker processes; the result does not depend on it.
    - family (int): Sub-stream family, so that different initial pairs use disjoint streams.

    ### Returns:
    SurvivalEstimate: Point, replica count, binomial standard error, horizon and policy.

    ### Raises:
    - ParameterError: If `replicas < 1`.
    """
    if replicas < 1:
        raise __core__.ParameterError("estimate_survival", f"'replicas' must be >= 1, got {replicas}.", "replicas")
    blocks = [
        (kind, spec, rates, tuple(initial.fully), tuple(initial.semi), horizon, seed, family, start, count, stop_at_count)
        for start, count in __core__.split_blocks(replicas, workers)
    ]
    survivors = sum(__core__.run_blocks(_survival_block, blocks, workers))
    policy = "alive-at-horizon; censored replicas count as survivors"
    if stop_at_count:
        policy = f"reached {stop_at_count} infected sites" + (f" or alive at {horizon}" if horizon else "")
    logger.debug(f"survival {survivors}/{replicas} for {kind.value} from {initial}")
    return SurvivalEstimate.proportion(survivors, replicas, seed=(seed, family), horizon=horizon, policy=policy)


@dataclass
class Check:
    """A relation `lhs (==|<=) rhs` between estimates with the combined standard error."""
    relation: str
    lhs: float
    rhs: float
    std_error: float

    def holds(self, k=3.0):
        if self.relation == "==":
            return abs(self.lhs - self.rhs) <= k * self.std_error + 1e-12
        return self.lhs <= self.rhs + k * self.std_error + 1e-12


@dataclass
class FirstJumpEstimates:
    estimates: dict
    checks: dict


def first_jump_estimates(spec, rates, horizon, replicas, seed, stop_at_count=None, workers=1):
    """
    # markov.first_jump_estimates(spec, rates, horizon, replicas, seed)

    ---

    ### Overview
    Estimates the survival probabilities of the two-stage process from
    `alpha: (∅, {O})`, `q1: ({O}, ∅)`, `k1: ({O}, {e1})`, `k2: ({O}, {e1, y})`,
    `q2: ({O, e1}, ∅)` and `q3: ({O, e1}, {y})`, where `y` ranges over `e2` and `-e1` and the
    larger estimate is kept. It then checks:

    - `q1 = 2d lambda / (2d lambda + 1) * k1`
    - `alpha = gamma / (1 + delta + gamma) * q1`
    - `k2 <= 2 k1 - q1`
    - `q3 <= k1 + q2 - q1`

    The two identities come from the first jump and hold exactly for the survival proxy
    "reaches `stop_at_count` infected sites" with `horizon=None`. The two inequalities come
    from pathwise submodularity and hold exactly for "alive at `horizon`". Under the other
    proxy they hold only approximately.

    ### Returns:
    FirstJumpEstimates: The six estimates and the four `Check` records.
    """
    d = spec.d
    o, e1 = 0, lattice.unit(spec, 0, 1)
    others = [lattice.unit(spec, 0, -1)]
    if d >= 2:
        others.insert(0, lattice.unit(spec, 1, 1))
    starts = {
        "alpha": ((), (o,)),
        "q1": ((o,), ()),
        "k1": ((o,), (e1,)),
        "q2": ((o, e1), ()),
    }
    for j, y in enumerate(others):
        starts[f"k2[{j}]"] = ((o,), (e1, y))
        starts[f"q3[{j}]"] = ((o, e1), (y,))
    est = {}
    for family, (name, (fully, semi)) in enumerate(sorted(starts.items())):
        est[name] = estimate_survival(
            ProcessKind.TWO_STAGE, spec, rates, lattice.Configuration(fully, semi, spec),
            horizon, replicas, seed, stop_at_count=stop_at_count, workers=workers, family=family,
        )
    for name in ("k2", "q3"):
        est[name] = max((est.pop(f"{name}[{j}]") for j in range(len(others))), key=lambda e: e.point)

    def se(*terms):
        return math.sqrt(sum((c * e.std_error) ** 2 for c, e in terms))

    q1, k1, alpha, k2, q2, q3 = (est[n] for n in ("q1", "k1", "alpha", "k2", "q2", "q3"))
    c1 = 2 * d * rates.lam / (2 * d * rates.lam + 1)
    c2 = rates.gamma / rates.s
    checks = {
        "q1_first_jump": Check("==", q1.point, c1 * k1.point, se((1, q1), (c1, k1))),
        "alpha_first_jump": Check("==", alpha.point, c2 * q1.point, se((1, alpha), (c2, q1))),
        "k2_submodular": Check("<=", k2.point, 2 * k1.point - q1.point, se((1, k2), (2, k1), (1, q1))),
        "q3_submodular": Check("<=", q3.point, k1.point + q2.point - q1.point, se((1, q3), (1, k1), (1, q2), (1, q1))),
    }
    return FirstJumpEstimates(est, checks)


@dataclass
class ExactDistribution:
    kind: ProcessKind
    spec: lattice.TorusSpec
    time: float
    probabilities: np.ndarray

    def states(self):
        """Array of shape `(3^n, n)`: row `k` is the configuration with base-3 index `k`."""
        return _digits(self.spec.size)

    def hit_probability(self, fully_on=(), nonzero_on=()):
        """P(some site of `fully_on` is in state 2 or some site of `nonzero_on` is not 0)."""
        digits = self.states()
        mask = np.zeros(len(digits), dtype=bool)
        for x in fully_on:
            mask |= digits[:, x] == 2
        for y in nonzero_on:
            mask |= digits[:, y] != 0
        return float(self.probabilities[mask].sum())


def _digits(n):
    index = np.arange(3 ** n, dtype=np.int64)
    return (index[:, None] // (3 ** np.arange(n, dtype=np.int64))[None, :]) % 3


def state_index(config, spec):
    """Base-3 index of a configuration: sum of `state(x) * 3^x`."""
    powers = 3 ** np.arange(spec.size, dtype=np.int64)
    return int((config.to_states(spec).astype(np.int64) * powers).sum())


def generator_matrix(kind, spec, rates):
    """
    Sparse generator over the `3^n` configurations of a tiny torus. Row sums are zero and
    off-diagonal entries are the `event_rates` of the row's configuration.
    """
    n = spec.size
    states = 3 ** n
    if states > ts.EXACT_STATE_BUDGET:
        raise __core__.SizeError(
            "exact_distribution", f"{states} states exceed the budget of {ts.EXACT_STATE_BUDGET}."
        )
    digits = _digits(n)
    index = np.arange(states, dtype=np.int64)
    table = lattice.neighbor_table(spec)
    fully_neighbors = (digits[:, table] == 2).sum(axis=2)
    rows, cols, vals = [], [], []

    def add(x, mask, new, rate):
        src = index[mask]
        if not len(src):
            return
        old = digits[mask, x]
        rows.append(src)
        cols.append(src + (new - old) * 3 ** x)
        vals.append(np.broadcast_to(rate, src.shape).astype(float) if np.ndim(rate) == 0 else rate)

    for x in range(n):
        s2, s1, s0 = digits[:, x] == 2, digits[:, x] == 1, digits[:, x] == 0
        add(x, s2, 0, 1.0)
        if kind is ProcessKind.TWO_STAGE:
            add(x, s1, 0, 1.0 + rates.delta)
        else:
            add(x, s1, 0, 1.0)
            add(x, s2, 1, rates.delta)
        add(x, s1, 2, rates.gamma)
        infect = s0 & (fully_neighbors[:, x] > 0)
        add(x, infect, 1, rates.lam * fully_neighbors[infect, x].astype(float))

    rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    q = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(states, states)).tocsr()
    q = q - scipy.sparse.diags(np.asarray(q.sum(axis=1)).ravel())
    return q.tocsr()


def exact_distribution(kind, spec, rates, initial, t):
    """
    # markov.exact_distribution(kind, spec, rates, initial, t)

    ---

    ### Overview
    Law at time `t` of the chain started from `initial`, computed as `p0 exp(tQ)`. Up to
    `DENSE_EXPM_LIMIT` states the dense generator is exponentiated by scaling and squaring;
    above it `expm_multiply` acts on the sparse generator.

    ### Parameters:
    - kind (ProcessKind), spec (TorusSpec), rates (Rates): The chain.
    - initial (Configuration): Starting configuration.
    - t (float): Time, at least 0.

    ### Returns:
    ExactDistribution: Probabilities over the `3^n` configurations.

    ### Raises:
    - SizeError: If `3^n` exceeds `EXACT_STATE_BUDGET` (more than eight sites).
    """
    q = generator_matrix(kind, spec, rates)
    p0 = np.zeros(q.shape[0])
    p0[state_index(initial, spec)] = 1.0
    if t == 0:
        p = p0
    elif q.shape[0] <= ts.DENSE_EXPM_LIMIT:
        p = p0 @ scipy.linalg.expm(q.toarray() * t)
    else:
        p = expm_multiply(q.T.tocsc() * t, p0)
    p = np.clip(p, 0.0, None)
    return ExactDistribution(kind, spec, t, p / p.sum())


def duality_sides(spec, rates, A, B, C, D, t):
    """
    # markov.duality_sides(spec, rates, A, B, C, D, t)

    ---

    ### Overview
    Evaluates exactly both sides of the duality on a tiny torus:

    - lhs: P(the two-stage process from (C, D) has a 2 on A or a non-0 on B at time t)
    - rhs: P(the on-off process from (B, A) has a 2 on D or a non-0 on C at time t)

    ### Returns:
    tuple: `(lhs, rhs)`.

    ### Raises:
    - OverlapError: If A meets B or C meets D.
    - SizeError: As for `exact_distribution`.
    """
    forward = exact_distribution(ProcessKind.TWO_STAGE, spec, rates, lattice.Configuration(C, D, spec), t)
    dual = exact_distribution(ProcessKind.ON_OFF, spec, rates, lattice.Configuration(B, A, spec), t)
    return forward.hit_probability(A, B), dual.hit_probability(D, C)


def _hit_block(job):
    kind, spec, rates, fully, semi, t, seed, family, start, count, targets_fully, targets_nonzero = job
    initial = lattice.Configuration(fully, semi, spec)
    hits = 0
    for r in range(start, start + count):
        final = simulate(kind, spec, rates, initial, t, seed, key=(family, r)).final
        hits += bool(final.fully & set(targets_fully)) or bool(final.infected() & set(targets_nonzero))
    return hits


def duality_sides_monte_carlo(spec, rates, A, B, C, D, t, replicas, seed, workers=1):
    """
    Monte Carlo version of `duality_sides` for larger tori; the two sides use independent streams.
    Returns a pair of `Estimate`.
    """
    lattice.Configuration(A, B, spec)
    sides = []
    for family, (kind, (fully, semi), (tf, tn)) in enumerate((
        (ProcessKind.TWO_STAGE, (C, D), (A, B)),
        (ProcessKind.ON_OFF, (B, A), (D, C)),
    )):
        blocks = [
            (kind, spec, rates, tuple(fully), tuple(semi), t, seed, 100 + family, start, count, tuple(tf), tuple(tn))
            for start, count in __core__.split_blocks(replicas, workers)
        ]
        hits = sum(__core__.run_blocks(_hit_block, blocks, workers))
        sides.append(Estimate.proportion(hits, replicas, seed=(seed, 100 + family)))
    return tuple(sides)
