"""
# Invariant

---

## Overview
The Invariant module samples the upper invariant measure of the two-stage contact process on a
finite torus and compares it with the product measure that describes it in high dimension. It
estimates `pi(A, B)`, the probability that no site of `A` is fully infected while every site of
`B` is healthy, directly from samples and through the on-off dual, and it evaluates the exact
pieces of the lower bound on `1 - pi(A, B)`.

Every function here takes the unscaled infection rate `lambda`; the simulations run with the
per-neighbor rate `lambda / (2d)`.

## Features
- `Sampler:` `sample_nu` runs chains from the all fully infected start, discards a burn-in and
keeps thinned snapshots. A finite torus always dies out eventually, so the samples are
quasi-stationary; any extinction inside the sampling window raises
`ExtinctionDuringSampling`.
- `Gates:` `stationarity_gate` compares the occupancy of the first and second halves of the
window; `doubling_gate` compares it with a run at twice the burn-in (and optionally twice the
side).
- `Estimators:` `estimate_pi` averages the event over the samples and over all translates of the
query; `dual_pi` estimates the same number as one minus the survival of the on-off process
started from `(B, A)`.
- `Product Prediction:` `product_prediction` gives the three marginals `(p0, p1, p2)` and
`product_gap` the largest distance between estimate and prediction over a declared family of
set shapes.
- `Lower Bound Pieces:` `six_bounds` evaluates the binomial tail `alpha_tilde(M)`, the count
`mu(M)`, the finite-dimension occupancy bound and the composite lower bound on `1 - pi`.

## Usage

```python
from twostage import invariant, lattice

sampler = invariant.NuSampler(lattice.TorusSpec(4, 3), lattice.Rates(8.0, 1.0, 2.0),
                              burn_in=5.0, samples=200, thinning=0.5, seed=7)
samples = invariant.sample_nu(sampler)
invariant.product_gap(1, 1, samples).gap
invariant.six_bounds(100, 1, 1, 10, lattice.Rates(8.0, 1.0, 2.0)).as_dict()
```
"""

import math
from collections import namedtuple
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.stats

import twostage as ts
from twostage import __core__
from twostage import branching
from twostage import lattice
from twostage import markov
from twostage import walk

logger = __core__.get_logger(__name__)

FAMILIES = ("clustered", "spread", "mixed")
"""
Declared set shapes over which the supremum and infimum over sets are approximated.
"""

SPREAD_DISTANCE = 3
"""
Smallest pairwise l1 distance of the sites of a spread set.
"""

QUASI_STATIONARY = (
    "finite torus: the process dies out eventually, samples are quasi-stationary and valid only "
    "while no chain went extinct"
)

SetPair = namedtuple("SetPair", ["A", "B", "spread_ok"])

GateResult = namedtuple("GateResult", ["statistic", "passed"])

GapRow = namedtuple("GapRow", ["m", "n", "family", "estimate", "prediction", "gap", "std_error", "spread_ok"])


@dataclass(frozen=True)
class NuSampler:
    """
    Settings of the invariant-measure sampler. `rates.lam` is the unscaled rate.
    """
    spec: lattice.TorusSpec
    rates: lattice.Rates
    burn_in: float = 10.0
    samples: int = 100
    thinning: float = 1.0
    seed: int = 0
    chains: int = 1

    @property
    def simulation_rates(self):
        return self.rates.scaled(self.spec.d)

    @property
    def times(self):
        return [self.burn_in + k * self.thinning for k in range(self.samples)]


@dataclass
class NuSamples:
    """
    Snapshots of the sampler as a `(count, L^d)` array of site states, chain after chain.
    """
    sampler: NuSampler
    states: np.ndarray
    chain: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def spec(self):
        return self.sampler.spec

    @property
    def rates(self):
        return self.sampler.rates

    def __len__(self):
        return len(self.states)

    def __getitem__(self, k):
        return lattice.Configuration.from_states(self.states[k], self.spec)

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    def occupancy(self, state=None):
        """Per-sample fraction of infected sites, or of sites in `state`."""
        if state is None:
            return (self.states != lattice.HEALTHY).mean(axis=1)
        return (self.states == state).mean(axis=1)

    def require_stationary(self, k=2.0):
        gate = stationarity_gate(self, k)
        if not gate.passed:
            raise __core__.GateFailure(
                "sample_nu", f"Occupancy drifts by {gate.statistic:.2f} standard errors across the window.", "burn_in"
            )
        return self


def _nu_chain(job):
    spec, rates, times, seed, chain = job
    run = markov.simulate(
        markov.ProcessKind.TWO_STAGE, spec, rates, lattice.Configuration.all_fully(spec), times[-1],
        snapshots=times, rng=__core__.generator(seed, ts.STREAM_NU, chain),
    )
    if run.extinction_time is not None:
        return run.extinction_time
    return np.stack([snap.to_states(spec) for snap in run.snapshots])


def sample_nu(sampler, workers=1):
    """
    # invariant.sample_nu(sampler, workers=1)

    ---

    ### Overview
    Runs `sampler.chains` independent chains of the two-stage process from the all fully infected
    configuration with per-neighbor rate `lambda / (2d)` and records a snapshot at
    `burn_in + k * thinning` for `k < samples`. Chain `c` draws from the stream
    `(seed, STREAM_NU, c)`.

    ### Parameters:
    - sampler (NuSampler): Torus, unscaled rates, window and seed.
    - workers (int): Worker processes; the samples do not depend on it.

    ### Returns:
    NuSamples: The snapshots with their chain ids and a metadata record carrying the
    quasi-stationarity caveat and the stationarity gate.

    ### Raises:
    - ExtinctionDuringSampling: If a chain dies out before its last snapshot (subcritical rates
    or an undersized torus).
    - ParameterError: For invalid rates, torus or window.

    ### Examples:
    - With `lambda` far below `(1 + delta + gamma) / gamma` every chain dies out and the call
    raises.
    """
    lattice.validate(sampler.simulation_rates, sampler.spec)
    if sampler.samples < 1 or sampler.chains < 1:
        raise __core__.ParameterError("sample_nu", "At least one chain and one sample are needed.", "samples")
    if sampler.burn_in <= 0 or (sampler.samples > 1 and sampler.thinning <= 0):
        raise __core__.ParameterError("sample_nu", "The burn-in and thinning must be positive.", "burn_in")
    times = sampler.times
    jobs = [(sampler.spec, sampler.simulation_rates, times, sampler.seed, c) for c in range(sampler.chains)]
    results = __core__.run_blocks(_nu_chain, jobs, workers)
    for c, result in enumerate(results):
        if not isinstance(result, np.ndarray):
            raise __core__.ExtinctionDuringSampling(
                "sample_nu",
                f"Chain {c} died out at t={result:.4g}, before the last snapshot at t={times[-1]:.4g}.",
                "lambda",
            )
    states = np.concatenate(results)
    chain = np.repeat(np.arange(sampler.chains), sampler.samples)
    samples = NuSamples(sampler=sampler, states=states, chain=chain)
    gate = stationarity_gate(samples)
    samples.metadata = {
        "caveat": QUASI_STATIONARY,
        "lambda": sampler.rates.lam,
        "lambda_over_2d": sampler.simulation_rates.lam,
        "window": [times[0], times[-1]],
        "stationarity_drift_se": gate.statistic,
        "stationarity_gate": gate.passed,
    }
    logger.info(
        f"sampled {len(states)} configurations on d={sampler.spec.d} L={sampler.spec.L}; "
        f"occupancy {samples.occupancy().mean():.4f}"
    )
    return samples


def _mean_and_se(values):
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return float(values.mean()), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values)))


def stationarity_gate(samples, k=2.0):
    """
    # invariant.stationarity_gate(samples, k=2.0)

    ---

    ### Overview
    Splits every chain's window in halves and compares the mean fraction of sites in each of
    the three states between the halves. The statistic is the largest difference in combined
    standard errors; the gate passes when it is at most `k`.

    ### Returns:
    GateResult: `(statistic, passed)`.

    ### Raises:
    - ParameterError: With fewer than two snapshots per chain.
    """
    per_chain = samples.sampler.samples
    if per_chain < 2:
        raise __core__.ParameterError("stationarity_gate", "Each chain needs at least two snapshots.", "samples")
    half = per_chain // 2
    position = np.tile(np.arange(per_chain), samples.sampler.chains)
    first, second = position < half, position >= per_chain - half
    worst = 0.0
    for state in (lattice.HEALTHY, lattice.SEMI, lattice.FULLY):
        fraction = samples.occupancy(state)
        m1, se1 = _mean_and_se(fraction[first])
        m2, se2 = _mean_and_se(fraction[second])
        se = math.hypot(se1, se2)
        drift = abs(m1 - m2) / se if se > 0 else (0.0 if m1 == m2 else math.inf)
        worst = max(worst, drift)
    return GateResult(worst, worst <= k)


def doubling_gate(sampler, k=2.0, double_side=False, workers=1):
    """
    Resamples with twice the burn-in (and twice the side with `double_side`) and compares the
    mean single-site occupancy with the original run, in combined standard errors.
    """
    base = sample_nu(sampler, workers)
    m1, se1 = _mean_and_se(base.occupancy())
    spec = lattice.TorusSpec(sampler.spec.d, 2 * sampler.spec.L) if double_side else sampler.spec
    longer = NuSampler(spec, sampler.rates, 2 * sampler.burn_in, sampler.samples, sampler.thinning,
                       sampler.seed + 1, sampler.chains)
    m2, se2 = _mean_and_se(sample_nu(longer, workers).occupancy())
    se = math.hypot(se1, se2)
    drift = abs(m1 - m2) / se if se > 0 else 0.0
    return GateResult(drift, drift <= k)


@dataclass(frozen=True)
class PiQuery:
    """Sites that must not be fully infected (`A`) and sites that must be healthy (`B`)."""
    A: tuple = ()
    B: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "A", tuple(sorted(int(x) for x in self.A)))
        object.__setattr__(self, "B", tuple(sorted(int(x) for x in self.B)))
        overlap = set(self.A) & set(self.B)
        if overlap:
            raise __core__.OverlapError("PiQuery", f"Sites {sorted(overlap)} are in both A and B.")

    @property
    def sizes(self):
        return len(self.A), len(self.B)


def _coords(spec, sites):
    sites = np.asarray(sites, dtype=np.int64)
    radix = np.array([spec.L ** i for i in range(spec.d)], dtype=np.int64)
    return (sites[:, None] // radix[None, :]) % spec.L, radix


def _translates(spec, sites):
    """`(L^d, |sites|)` array whose row `t` is the set shifted by site `t`."""
    if not len(sites):
        return np.zeros((spec.size, 0), dtype=np.int64)
    coords, radix = _coords(spec, sites)
    shifts, _ = _coords(spec, np.arange(spec.size))
    return ((coords[None, :, :] + shifts[:, None, :]) % spec.L) @ radix


def _event(states, query, spec, translate):
    if translate:
        A, B = _translates(spec, query.A), _translates(spec, query.B)
    else:
        A, B = np.array([query.A], dtype=np.int64), np.array([query.B], dtype=np.int64)
    ok = np.ones((len(states), len(A)), dtype=bool)
    if A.shape[1]:
        ok &= ~(states[:, A] == lattice.FULLY).any(axis=2)
    if B.shape[1]:
        ok &= (states[:, B] == lattice.HEALTHY).all(axis=2)
    return ok.mean(axis=1)


def estimate_pi(samples, query, translate=True):
    """
    # invariant.estimate_pi(samples, query, translate=True)

    ---

    ### Overview
    Fraction of samples in which no site of `query.A` is fully infected and every site of
    `query.B` is healthy. With `translate` the event is averaged over all translates of the
    query inside each sample, which the translation invariance of the measure allows. The
    standard error treats samples as independent.

    ### Parameters:
    - samples (NuSamples): Output of `sample_nu`.
    - query (PiQuery): The pair `(A, B)`.
    - translate (bool): Average over translates.

    ### Returns:
    Estimate: Point estimate and standard error. The empty query gives exactly 1.
    """
    spec = samples.spec
    for x in query.A + query.B:
        if not 0 <= x < spec.size:
            raise __core__.ParameterError("estimate_pi", f"Site {x} is outside the torus.", "query")
    point, se = _mean_and_se(_event(samples.states, query, spec, translate))
    return markov.Estimate(point=point, replicas=len(samples), std_error=se, seed=samples.sampler.seed)


@dataclass(frozen=True)
class ProductPrediction:
    """
    Marginals of the product measure: healthy `p0`, semi-infected `p1`, fully infected `p2`.
    """
    p0: float
    p1: float
    p2: float

    def pi(self, m, n):
        """Predicted `pi(A, B)` for `|A| = m`, `|B| = n`."""
        return (1 - self.p2) ** m * self.p0 ** n


def product_prediction(lam, delta, gamma):
    """
    # invariant.product_prediction(lam, delta, gamma)

    ---

    ### Overview
    `p0 = s / (lambda gamma)`, `p2 = (lambda gamma - s) / (lambda (gamma + 1))` and
    `p1 = (lambda gamma - s) / (lambda gamma (gamma + 1))`, with `s = 1 + delta + gamma` and the
    unscaled `lambda`. The arithmetic is exact for `fractions.Fraction` arguments.

    ### Raises:
    - DomainError: If `lambda gamma <= s`, where the measure is the point mass on the healthy
    configuration and the formulas leave [0, 1].

    ### Examples:
    - `product_prediction(8, 1, 2)` is `(0.25, 0.25, 0.5)`.
    """
    s = 1 + delta + gamma
    if lam * gamma <= s:
        raise __core__.DomainError(
            "product_prediction", f"lambda * gamma = {lam * gamma} does not exceed 1 + delta + gamma = {s}.", "lambda"
        )
    excess = lam * gamma - s
    return ProductPrediction(p0=s / (lam * gamma), p1=excess / (lam * gamma * (gamma + 1)), p2=excess / (lam * (gamma + 1)))


def _norms(spec):
    coords, _ = _coords(spec, np.arange(spec.size))
    return np.minimum(coords, spec.L - coords).sum(axis=1)


def _distances(spec, x, chosen):
    coords, _ = _coords(spec, [x] + list(chosen))
    gap = np.abs(coords[1:] - coords[0])
    return np.minimum(gap, spec.L - gap).sum(axis=1)


def _spread(spec, count, taken, order):
    """Greedy sites at pairwise distance >= SPREAD_DISTANCE from each other and from `taken`."""
    picked = []
    for x in order:
        if x in taken or x in picked:
            continue
        if _distances(spec, x, list(taken) + picked).min(initial=SPREAD_DISTANCE) >= SPREAD_DISTANCE:
            picked.append(x)
            if len(picked) == count:
                return picked, True
    remaining = [x for x in order if x not in taken and x not in picked]
    while len(picked) < count:
        far = max(remaining, key=lambda x: _distances(spec, x, list(taken) + picked).min(initial=spec.d * spec.L))
        picked.append(far)
        remaining.remove(far)
    return picked, False


def set_family(spec, m, n, families=FAMILIES):
    """
    # invariant.set_family(spec, m, n, families=FAMILIES)

    ---

    ### Overview
    Representative pairs `(A, B)` with `|A| = m`, `|B| = n`:

    - `clustered`: the `m + n` sites nearest the origin, `A` first.
    - `spread`: all sites at pairwise l1 distance at least 3.
    - `mixed`: `A` clustered at the origin, `B` spread away from it and from each other.

    When the torus is too small for the distance constraint the nearest feasible shape is used
    and `spread_ok` is False.

    ### Returns:
    dict: Family name to `SetPair(A, B, spread_ok)`.

    ### Raises:
    - ParameterError: If `m + n` exceeds the number of sites or a family is unknown.
    """
    if m < 0 or n < 0 or m + n > spec.size:
        raise __core__.ParameterError("set_family", f"Cannot place {m} + {n} sites on {spec.size}.", "m")
    bfs = [int(x) for x in np.lexsort((np.arange(spec.size), _norms(spec)))]
    out = {}
    for family in families:
        if family == "clustered":
            out[family] = SetPair(tuple(bfs[:m]), tuple(bfs[m:m + n]), True)
        elif family == "spread":
            sites, ok = _spread(spec, m + n, [], bfs)
            out[family] = SetPair(tuple(sites[:m]), tuple(sites[m:]), ok or m + n <= 1)
        elif family == "mixed":
            A = bfs[:m]
            B, ok = _spread(spec, n, A, bfs) if n else ([], True)
            out[family] = SetPair(tuple(A), tuple(B), ok)
        else:
            raise __core__.ParameterError("set_family", f"Unknown family '{family}'.", "families")
    return out


@dataclass
class GapReport:
    rows: list

    @property
    def gap(self):
        return max(row.gap for row in self.rows)

    @property
    def family(self):
        return max(self.rows, key=lambda row: row.gap).family


def product_gap(m, n, samples, families=FAMILIES, translate=True):
    """
    # invariant.product_gap(m, n, samples, families=FAMILIES)

    ---

    ### Overview
    For every declared set shape, `|pi_hat(A, B) - (1 - p2)^m p0^n|`. The largest of them is a
    lower estimate of the supremum over all sets of the given sizes; rows whose spread
    constraint could not be met are flagged.

    ### Returns:
    GapReport: One `GapRow` per family; `.gap` and `.family` give the maximum.
    """
    rates = samples.rates
    prediction = product_prediction(rates.lam, rates.delta, rates.gamma).pi(m, n)
    rows = []
    for name, pair in set_family(samples.spec, m, n, families).items():
        est = estimate_pi(samples, PiQuery(pair.A, pair.B), translate)
        rows.append(GapRow(m, n, name, est.point, prediction, abs(est.point - prediction), est.std_error, pair.spread_ok))
    return GapReport(rows)


def dual_pi(query, spec, rates, horizon, replicas, seed=0, workers=1, family=0):
    """
    # invariant.dual_pi(query, spec, rates, horizon, replicas, seed=0)

    ---

    ### Overview
    `pi(A, B)` through duality: one minus the probability that the on-off process started
    with fully infected set `B` and semi-infected set `A` is still alive at `horizon`. The
    on-off process runs with per-neighbor rate `lambda / (2d)`. A finite horizon counts
    late deaths as survivals, so the estimate is biased low.

    ### Parameters:
    - query (PiQuery): The pair `(A, B)`.
    - spec (TorusSpec), rates (Rates): Torus and unscaled rates.
    - horizon (float), replicas (int), seed (int), workers (int): As for `estimate_survival`.

    ### Returns:
    Estimate: `1 - survival`, with the survival standard error. The empty query gives 1.
    """
    survival = markov.estimate_survival(
        markov.ProcessKind.ON_OFF, spec, rates.scaled(spec.d), lattice.Configuration(query.B, query.A, spec),
        horizon, replicas, seed, workers=workers, family=family,
    )
    return survival.complement()


def reach_count_estimate(query, spec, rates, M, replicas, seed=0, horizon=None, workers=1, family=0):
    """
    Probability that the on-off process from `(B, A)` reaches `M` infected sites before it dies
    out (or before `horizon` when given), with per-neighbor rate `lambda / (2d)`.
    """
    return markov.estimate_survival(
        markov.ProcessKind.ON_OFF, spec, rates.scaled(spec.d), lattice.Configuration(query.B, query.A, spec),
        horizon, replicas, seed, stop_at_count=M, workers=workers, family=family,
    )


def one_minus_pi_upper(m, n, rates):
    """Upper bound on `1 - pi(A, B)`: survival of the branching process from `|B|` type 2 and `|A|` type 1."""
    return branching.survival_closed_form(n, m, rates)


def b_tilde_estimate(n, samples, families=FAMILIES):
    """
    Smallest estimated probability over the declared shapes that some site of an `n`-set is
    infected. Returns the estimate and the family attaining it.
    """
    best = None
    for name, pair in set_family(samples.spec, 0, n, families).items():
        est = estimate_pi(samples, PiQuery((), pair.B)).complement()
        if best is None or est.point < best[0].point:
            best = (est, name)
    return best


def alpha_probability(rates):
    """`p = exp(-(1 + delta)) (1 - exp(-gamma))`."""
    return math.exp(-(1.0 + rates.delta)) * (1.0 - math.exp(-rates.gamma))


def mu(M, rates):
    return math.ceil(M * alpha_probability(rates) / 2)


def alpha_tilde(M, rates):
    """Exact `P(Bin(M, p) / M >= p / 2)`."""
    return float(scipy.stats.binom.sf(mu(M, rates) - 1, M, alpha_probability(rates)))


def _alpha_block(job):
    M, delta, gamma, seed, start, count = job
    rng = __core__.generator(seed, ts.STREAM_ALPHA, start)
    alive = rng.exponential(1.0, (count, M)) > 1.0
    promoted = rng.exponential(1.0 / gamma, (count, M)) < 1.0
    kept = rng.exponential(1.0 / delta, (count, M)) > 1.0
    hits = (alive & promoted & kept).sum(axis=1)
    p = math.exp(-(1.0 + delta)) * (1.0 - math.exp(-gamma))
    return int((hits >= M * p / 2).sum())


def alpha_tilde_monte_carlo(M, rates, replicas, seed=0, workers=1):
    """
    # invariant.alpha_tilde_monte_carlo(M, rates, replicas, seed=0)

    ---

    ### Overview
    Samples `M` units per replica, each kept when its exponential clocks of rates 1, gamma and
    delta satisfy `Y1 > 1`, `Y_gamma < 1`, `Y_delta > 1`, and counts the replicas with at least
    `M p / 2` kept units. Blocks of 1024 replicas use the stream `(seed, STREAM_ALPHA, start)`.

    ### Returns:
    Estimate: The Monte Carlo counterpart of `alpha_tilde(M, rates)`.
    """
    blocks = [(M, rates.delta, rates.gamma, seed, start, count) for start, count in __core__.fixed_blocks(replicas)]
    successes = sum(__core__.run_blocks(_alpha_block, blocks, workers))
    return markov.Estimate.proportion(successes, replicas, seed=(seed, ts.STREAM_ALPHA))


def occupancy_limit(n, rates):
    """
    Large-dimension lower bound on the probability that some site of an `n`-set is infected:
    `n / (n - 1 + 2 (gamma + 1) / (gamma - s / lambda))` with the unscaled `lambda`.
    """
    excess = rates.gamma - rates.s / rates.lam
    if excess <= 0:
        raise __core__.DomainError("six_bounds", "lambda * gamma must exceed 1 + delta + gamma.", "lambda")
    return n / (n - 1 + 2.0 * (rates.gamma + 1.0) / excess)


def occupancy_lower_bound(n, h, srw_e1):
    """
    # invariant.occupancy_lower_bound(n, h, srw_e1)

    ---

    ### Overview
    Finite-dimension lower bound on the probability that some site of an `n`-set is infected,
    `1 / ((1/n)(1 + h)/h + ((n - 1)/n)(srw_e1 + h)/h)`, from the second-moment bound with
    `h = h_lambda` at rate `lambda / (2d)` and `srw_e1` the hitting probability of the origin
    from a neighbor. It tends to `occupancy_limit` as the dimension grows.

    ### Raises:
    - DomainError: If `h <= 0`.
    """
    if h <= 0:
        raise __core__.DomainError("occupancy_lower_bound", f"h = {h:.6g} is not positive.", "h")
    return 1.0 / ((1.0 + h) / (h * n) + (n - 1.0) / n * (srw_e1 + h) / h)


def finite_occupancy_bound(n, d, rates, R=2):
    """
    # invariant.finite_occupancy_bound(n, d, rates, R=2)

    ---

    ### Overview
    `occupancy_lower_bound` in dimension `d`, with `h` read from the envelope bracket of the
    three-component table of radius `R` at rate `lambda / (2d)` and the simple-walk hitting
    probability from `e_1` by Green-function quadrature. The envelope entries are the larger
    ones, so the `h` they give is the smaller and the bound stays below the true one.

    ### Parameters:
    - n (int): Size of the set.
    - d (int): Dimension, at least 3.
    - rates (Rates): Unscaled rates.
    - R (int): Radius of the three-component table.

    ### Returns:
    float: The bound.

    ### Raises:
    - DimensionTooSmall: If `d <= 2`.
    - DomainError: If `h <= 0` at this rate and dimension.
    """
    if d <= 2:
        raise __core__.DimensionTooSmall("finite_occupancy_bound", f"The walk is recurrent in dimension {d}.", "d")
    scaled = rates.scaled(d)
    srw_e1 = walk.srw_hit_prob(d, (1,) + (0,) * (d - 1), method="green_integral").value
    table = walk.theta_hit_prob(d, scaled, R=R)
    ball = table.ball
    h = walk.h_lambda(table.upper[ball.origin, 1], table.upper[ball.unit, 1], scaled, d=d)
    logger.debug(f"occupancy bound d={d} n={n}: h={h:.6g}, srw(e1)={srw_e1:.6g}")
    return occupancy_lower_bound(n, h, srw_e1)


@dataclass
class SixParts:
    M: int
    n: int
    m: int
    d: int
    p: float
    alpha_tilde: float
    mu: int
    occupancy_limit: float
    lam_prime: float = None
    branching_factor: float = None
    b_tilde: float = None
    b_tilde_source: str = None
    composite: float = None
    upper: float = None
    notes: list = field(default_factory=list)

    def as_dict(self):
        return asdict(self)


def six_bounds(M, n, m, d, rates, b_tilde=None, walk_radius=2):
    """
    # invariant.six_bounds(M, n, m, d, rates, b_tilde=None, walk_radius=2)

    ---

    ### Overview
    Evaluates the exact pieces of the lower bound on `1 - pi(A, B)` for `|A| = m`, `|B| = n`:

    - `p = exp(-(1 + delta))(1 - exp(-gamma))`, `mu(M) = ceil(M p / 2)` and the binomial tail
    `alpha_tilde(M)`.
    - The large-dimension occupancy limit for `mu(M)`-sets, for comparison.
    - With `2d > M`, the branching survival from `(n, m)` at the thinned rate
    `(2d - M) lambda / (2d)` and the composite `branching_factor * alpha_tilde * b_tilde`.
    Without an estimate of `b_tilde` the finite-dimension occupancy bound for `mu(M)`-sets
    (`finite_occupancy_bound`) stands in for it. The large-dimension `occupancy_limit` lies above
    it and is reported only. Where the finite bound is unavailable the composite is left unset
    and a note says why.

    `upper` is the branching survival at the full rate, the matching upper bound on `1 - pi`.

    ### Parameters:
    - M (int): Count at which the dual process is stopped; `M > n + m`.
    - n, m (int): Sizes of `B` and `A`.
    - d (int): Dimension.
    - rates (Rates): Unscaled rates.
    - b_tilde (float): Optional estimate of the smallest occupancy of `mu(M)`-sets.
    - walk_radius (int): Radius of the three-component table behind the finite bound.

    ### Returns:
    SixParts: All pieces; `as_dict()` gives the JSON form.

    ### Raises:
    - ParameterError: If `M <= n + m`.
    - DomainError: If `lambda gamma <= 1 + delta + gamma`.

    ### Examples:
    - With `gamma = 2, delta = 1`: `p = 0.117019` and `mu(100) = 6`.
    """
    if M <= n + m:
        raise __core__.ParameterError("six_bounds", f"M = {M} must exceed n + m = {n + m}.", "M")
    parts = SixParts(
        M=M, n=n, m=m, d=d,
        p=alpha_probability(rates),
        alpha_tilde=alpha_tilde(M, rates),
        mu=mu(M, rates),
        occupancy_limit=occupancy_limit(mu(M, rates), rates),
        upper=branching.survival_closed_form(n, m, rates),
    )
    if 2 * d <= M:
        parts.notes.append(f"2d = {2 * d} does not exceed M = {M}; the composite bound needs a larger dimension.")
        return parts
    parts.lam_prime = (2 * d - M) * rates.lam / (2 * d)
    parts.branching_factor = branching.survival_closed_form(n, m, rates, lam=parts.lam_prime)
    if b_tilde is None:
        try:
            parts.b_tilde = finite_occupancy_bound(parts.mu, d, rates, walk_radius)
        except (__core__.DomainError, __core__.DimensionTooSmall) as error:
            parts.notes.append(f"No finite-dimension occupancy bound: {error.explanation}")
            return parts
        parts.b_tilde_source = "finite-dimension bound"
    else:
        parts.b_tilde, parts.b_tilde_source = float(b_tilde), "estimate"
    parts.composite = parts.branching_factor * parts.alpha_tilde * parts.b_tilde
    return parts
