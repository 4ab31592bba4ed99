"""
# Graphical

---

## Overview
The Graphical module builds the two-stage contact process from independent Poisson marks on
space-time, so that the processes started from any number of initial pairs (C, D) live on one
sample and can be compared path by path.

## Features
- `Timelines:` Per site, marks `Δ` (rate 1, recovery), `∗` (rate delta, recovery of a
semi-infected site) and `⋄` (rate gamma, promotion); per directed edge, arrows `→` (rate lambda).
Marks are generated lazily from keyed streams, so only sites the infection touches cost memory.
- `Coupled Evolution:` `evolve_coupled` sweeps the marks forward in time once and updates every
initial pair at the same time.
- `Infection Paths:` `path_infected_set` searches infection paths directly and serves as the
oracle the forward sweep is checked against.
- `Submodularity:` `coupled_submodularity` evaluates, on one sample, the inequality between the
survival indicators of (C+ ∪ C-, D+ ∪ D-), (C+ ∩ C-, D+ ∩ D-), (C+, D+) and (C-, D-).

## Detailed Functionality
In the forward sweep a `Δ` heals any infected site, a `∗` heals a semi-infected site, a `⋄`
promotes a semi-infected site and an arrow out of a fully infected site infects a healthy
endpoint as semi-infected. Sites of C start fully infected, which stands for the `⋄` placed at
time 0 on every site of C. Simultaneous marks have probability zero; when they occur anyway they
are ordered by (time, site, mark kind).

## Usage

```python
from twostage import graphical, lattice

spec = lattice.TorusSpec(2, 7)
timeline = graphical.sample_timeline(spec, lattice.Rates(0.5, 1.0, 2.0), horizon=1.0, seed=4)
trajectory = graphical.evolve_coupled(timeline, [(set(), {0}), ({0}, set())], times=[0.5, 1.0])
graphical.survival_indicator(trajectory, 1, 1.0)
```
"""

import bisect
import heapq
import math
from dataclasses import dataclass

import numpy as np

import twostage as ts
from twostage import __core__
from twostage import lattice

logger = __core__.get_logger(__name__)

DEATH, STAR, DIAMOND, ARROW = 0, 1, 2, 3


class GraphicalTimeline:
    """
    Poisson marks up to `horizon`. Site marks are generated from the stream
    `(seed, STREAM_GRAPHICAL, 0, x)` and the arrows of edge `(x, neighbor k of x)` from
    `(seed, STREAM_GRAPHICAL, 1, 2d x + k)`, on first access.
    """

    def __init__(self, spec, rates, horizon, seed=0):
        if horizon <= 0:
            raise __core__.ParameterError("sample_timeline", f"'horizon' must be positive, got {horizon}.", "horizon")
        self.spec = spec
        self.rates = rates
        self.horizon = float(horizon)
        self.seed = seed
        self._sites = {}
        self._edges = {}
        self._explicit = False

    @classmethod
    def from_marks(cls, spec, horizon, deaths=None, stars=None, diamonds=None, arrows=None):
        """
        Hand-built timeline. `deaths`, `stars` and `diamonds` map a site to its mark times and
        `arrows` maps a directed edge `(x, y)` to its arrow times. Everything else is empty.
        """
        timeline = cls(spec, None, horizon)
        timeline._explicit = True
        table = lattice.neighbor_table(spec)
        sites = set(deaths or ()) | set(stars or ()) | set(diamonds or ())
        for x in sites:
            timeline._sites[x] = (
                timeline._check(sorted((deaths or {}).get(x, ()))),
                timeline._check(sorted((stars or {}).get(x, ()))),
                timeline._check(sorted((diamonds or {}).get(x, ()))),
            )
        for (x, y), times in (arrows or {}).items():
            row = list(table[x])
            if y not in row:
                raise __core__.ParameterError("from_marks", f"Sites {x} and {y} are not neighbors.", "arrows")
            timeline._edges[(x, row.index(y))] = timeline._check(sorted(times))
        return timeline

    def _check(self, times):
        for t in times:
            if not 0 < t <= self.horizon:
                raise __core__.ParameterError("from_marks", f"Mark time {t} is outside (0, {self.horizon}].", "marks")
        return list(times)

    def _poisson_times(self, rng, rate):
        if rate <= 0:
            return []
        n = rng.poisson(rate * self.horizon)
        return sorted((self.horizon - rng.uniform(0.0, self.horizon, n)).tolist())

    def site_marks(self, x):
        """Sorted `(deaths, stars, diamonds)` time lists of site `x`."""
        marks = self._sites.get(x)
        if marks is None:
            if self._explicit:
                marks = ([], [], [])
            else:
                rng = __core__.generator(self.seed, ts.STREAM_GRAPHICAL, 0, x)
                marks = (
                    self._poisson_times(rng, 1.0),
                    self._poisson_times(rng, self.rates.delta),
                    self._poisson_times(rng, self.rates.gamma),
                )
            self._sites[x] = marks
        return marks

    def edge_marks(self, x, k):
        """Sorted arrow times on the edge from `x` to its `k`-th neighbor."""
        marks = self._edges.get((x, k))
        if marks is None:
            if self._explicit:
                marks = []
            else:
                edge = x * 2 * self.spec.d + k
                rng = __core__.generator(self.seed, ts.STREAM_GRAPHICAL, 1, edge)
                marks = self._poisson_times(rng, self.rates.lam)
            self._edges[(x, k)] = marks
        return marks

    def arrows_from(self, x):
        """All arrows out of `x` as `(time, target)` pairs in time order."""
        table = lattice.neighbor_table(self.spec)
        out = [(t, int(table[x][k])) for k in range(2 * self.spec.d) for t in self.edge_marks(x, k)]
        out.sort()
        return out


def sample_timeline(spec, rates, horizon, seed):
    """
    # graphical.sample_timeline(spec, rates, horizon, seed)

    ---

    ### Overview
    Creates the graphical representation of the process on `spec` up to `horizon`. Each mark
    list is Poisson with intensity rate times horizon and all lists are independent. The
    timeline is a deterministic function of `seed`.

    ### Parameters:
    - spec (TorusSpec): The torus.
    - rates (Rates): Intensities of the marks.
    - horizon (float): Positive final time.
    - seed (int): Master seed of the keyed streams.

    ### Returns:
    GraphicalTimeline: The lazily materialized timeline.

    ### Raises:
    - ParameterError: If `horizon <= 0`.
    """
    return GraphicalTimeline(spec, rates, horizon, seed)


@dataclass
class CoupledTrajectory:
    initials: list
    times: np.ndarray
    fully_counts: np.ndarray
    semi_counts: np.ndarray
    configurations: list
    extinction_times: np.ndarray
    horizon: float

    def infected_set(self, pair, j):
        """Infected sites of pair `pair` at the `j`-th recorded time."""
        return self.configurations[j][pair].infected()


def evolve_coupled(timeline, initials, times=()):
    """
    # graphical.evolve_coupled(timeline, initials, times)

    ---

    ### Overview
    Evolves every initial pair on the same timeline with a single forward sweep over the marks.
    Counts and configurations are recorded at `times` (those beyond the horizon are ignored)
    together with the extinction time of every pair.

    ### Parameters:
    - timeline (GraphicalTimeline): The shared sample.
    - initials (list): Pairs `(C, D)` of fully and semi-infected sites.
    - times (iterable): Recording times in `[0, horizon]`.

    ### Returns:
    CoupledTrajectory: Counts of shape `(pairs, times)`, configurations per time and pair,
    extinction times (`inf` when alive at the horizon).

    ### Raises:
    - OverlapError: If some pair has C ∩ D nonempty.
    """
    pairs = [lattice.Configuration(C, D, timeline.spec) for C, D in initials]
    n = len(pairs)
    horizon = timeline.horizon
    record = [float(t) for t in sorted(times) if t <= horizon]
    fully_counts = np.zeros((n, len(record)), dtype=np.int64)
    semi_counts = np.zeros((n, len(record)), dtype=np.int64)
    configurations = []

    state = {}
    fully_n = np.zeros(n, dtype=np.int64)
    semi_n = np.zeros(n, dtype=np.int64)
    for p, config in enumerate(pairs):
        for x in config.fully:
            state.setdefault(x, np.zeros(n, dtype=np.int8))[p] = 2
        for x in config.semi:
            state.setdefault(x, np.zeros(n, dtype=np.int8))[p] = 1
        fully_n[p], semi_n[p] = config.counts()
    extinction = np.where(fully_n + semi_n == 0, 0.0, math.inf)

    heap = []
    materialized = set()

    def materialize(x, t):
        materialized.add(x)
        for kind, marks in zip((DEATH, STAR, DIAMOND), timeline.site_marks(x)):
            for s in marks[bisect.bisect_right(marks, t):]:
                heapq.heappush(heap, (s, x, kind, -1))
        for s, y in timeline.arrows_from(x):
            if s > t:
                heapq.heappush(heap, (s, x, ARROW, y))

    for x in sorted(state):
        materialize(x, 0.0)

    def snapshot():
        fully = [[] for _ in range(n)]
        semi = [[] for _ in range(n)]
        for x, s in state.items():
            for p in np.flatnonzero(s == 2):
                fully[p].append(x)
            for p in np.flatnonzero(s == 1):
                semi[p].append(x)
        return [lattice.Configuration(fully[p], semi[p], timeline.spec) for p in range(n)]

    j = 0
    while heap and heap[0][0] <= horizon:
        t, x, kind, y = heapq.heappop(heap)
        while j < len(record) and record[j] < t:
            fully_counts[:, j], semi_counts[:, j] = fully_n, semi_n
            configurations.append(snapshot())
            j += 1
        if np.isfinite(extinction).all():
            break
        s = state[x]
        if kind == DEATH:
            fully_n -= s == 2
            semi_n -= s == 1
            s[:] = 0
        elif kind == STAR:
            semi_n -= s == 1
            s[s == 1] = 0
        elif kind == DIAMOND:
            promoted = s == 1
            semi_n -= promoted
            fully_n += promoted
            s[promoted] = 2
        else:
            source = s == 2
            if not source.any():
                continue
            target = state.get(y)
            if target is None:
                target = state[y] = np.zeros(n, dtype=np.int8)
            hit = source & (target == 0)
            if not hit.any():
                continue
            target[hit] = 1
            semi_n += hit
            if y not in materialized:
                materialize(y, t)
        died = (fully_n + semi_n == 0) & ~np.isfinite(extinction)
        extinction[died] = t
    while j < len(record):
        fully_counts[:, j], semi_counts[:, j] = fully_n, semi_n
        configurations.append(snapshot())
        j += 1
    return CoupledTrajectory(
        initials=pairs,
        times=np.asarray(record),
        fully_counts=fully_counts,
        semi_counts=semi_counts,
        configurations=configurations,
        extinction_times=extinction,
        horizon=horizon,
    )


def survival_indicator(trajectory, pair, t):
    """
    # graphical.survival_indicator(trajectory, pair, t)

    ---

    ### Overview
    Returns `H_t(C, D)`: 1 when the infected set of the `pair`-th initial pair is nonempty at
    time `t`, else 0. Extinction is absorbing, so the extinction time decides.

    ### Raises:
    - ParameterError: If `t` is beyond the horizon of the trajectory.
    """
    if t > trajectory.horizon:
        raise __core__.ParameterError("survival_indicator", f"t={t} is beyond the horizon {trajectory.horizon}.", "t")
    return int(trajectory.extinction_times[pair] > t)


def _first_at_or_after(times, s):
    i = bisect.bisect_left(times, s)
    return times[i] if i < len(times) else math.inf


def path_infected_set(timeline, C, D, t):
    """
    # graphical.path_infected_set(timeline, C, D, t)

    ---

    ### Overview
    Sites `y` reached at time `t` by an infection path from some `(x, 0)` with `x` in `C ∪ D`.
    Along a path `x_0 ~ x_1 ~ ... ~ x_n = y` entered at times `0 = t_0 < t_1 < ... < t_n < t`:

    - an arrow runs from `x_{i-1}` to `x_i` at `t_i`;
    - every `x_i` with `i < n` carries a `⋄` in `[t_i, t_{i+1})`, the first one at `m_i`;
    - no `Δ` lies on `x_i` during `[t_i, t_{i+1})`, nor on `y` during `[t_n, t)`;
    - no `∗` lies on `x_i` during `[t_i, m_i)`;
    - no `∗` lies on `y` during `[t_n, m_n)` if `y` has a `⋄` in `[t_n, t)`, else during `[t_n, t)`.

    Sites of `C` carry a `⋄` at time 0. The search is memoised over path nodes
    `(site, entry time, entered fully)`, so its cost is linear in the arrows it touches.

    ### Returns:
    set: The infected sites at time `t`.
    """
    lattice.Configuration(C, D, timeline.spec)
    stack = [(x, 0.0, True) for x in sorted(C)] + [(x, 0.0, False) for x in sorted(D)]
    seen = set()
    infected = set()
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        x, s, full = node
        deaths, stars, diamonds = timeline.site_marks(x)
        promoted = s if full else _first_at_or_after(diamonds, s)
        death = _first_at_or_after(deaths, s)
        star = _first_at_or_after(stars, s)
        end = min(death, star) if star < promoted else death
        if end > t:
            infected.add(x)
        if promoted >= end:
            continue
        for v, y in timeline.arrows_from(x):
            if promoted < v < min(end, t):
                stack.append((y, v, False))
    return infected


@dataclass
class SubmodularityCheck:
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def violations(self):
        return int((self.lhs > self.rhs).sum())


def coupled_submodularity(timeline, C_plus, D_plus, C_minus, D_minus, times):
    """
    # graphical.coupled_submodularity(timeline, C_plus, D_plus, C_minus, D_minus, times)

    ---

    ### Overview
    On one sample and at every requested time, evaluates
    `H(C+ ∪ C-, D+ ∪ D-) + H(C+ ∩ C-, D+ ∩ D-)` against `H(C+, D+) + H(C-, D-)`. The union
    survives exactly when one of the two pairs does and the intersection survives only when
    both do, so the left side never exceeds the right side.

    ### Returns:
    SubmodularityCheck: Both sides per time and the number of violations.
    """
    C_plus, D_plus, C_minus, D_minus = set(C_plus), set(D_plus), set(C_minus), set(D_minus)
    initials = [
        (C_plus | C_minus, D_plus | D_minus),
        (C_plus & C_minus, D_plus & D_minus),
        (C_plus, D_plus),
        (C_minus, D_minus),
    ]
    trajectory = evolve_coupled(timeline, initials)
    times = np.asarray(sorted(times), dtype=float)
    h = np.array([[survival_indicator(trajectory, p, t) for t in times] for p in range(4)])
    return SubmodularityCheck(times, h[0] + h[1], h[2] + h[3])
