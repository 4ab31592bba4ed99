"""
# Branching

---

## Overview
The Branching module holds the two-type branching process that dominates the on-off process
from above. Type 2 individuals die at rate 1, turn into type 1 at rate delta and give birth
to a type 1 individual at rate lambda; type 1 individuals die at rate 1 and turn into type 2 at
rate gamma. Its survival probability has a closed form, which this module evaluates, simulates
and checks against an independent linear-system oracle.

## Features
- `Mean Offspring:` `mean_offspring` is the mean number of type 2 children of a type 2
individual, `lambda gamma / (1 + delta + gamma)`; the process is supercritical when it exceeds 1.
- `Closed Form:` `survival_closed_form(n, m)` with `n` type 2 and `m` type 1 individuals, 0 at
and below criticality.
- `Identities:` `recursion_residuals`, `product_residual` and `fixed_point_residual` evaluate
the first-step recursions, the product structure over independent individuals and the
quadratic the one-individual survival probability solves.
- `Simulation:` `simulate_branching` runs the population chain until extinction, a population
cap or a horizon; `estimate_branching_survival` runs replicas.
- `Truncated Oracle:` `truncated_survival_oracle` solves the absorption problem of the chain
restricted to populations below a cap K. Reaching K counts as survival for the upper end of the
bracket and as death for the lower end.

## Usage

```python
from twostage import branching, lattice

rates = lattice.Rates(3.0, 1.0, 2.0)
branching.survival_closed_form(1, 0, rates)          # 1/3
branching.truncated_survival_oracle((1, 0), rates, cap=400).upper   # 0.3333...
```
"""

import enum
import math
from collections import namedtuple

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

import twostage as ts
from twostage import __core__
from twostage.markov import SurvivalEstimate

logger = __core__.get_logger(__name__)

BranchingState = namedtuple("BranchingState", ["zeta", "g"])
OracleBracket = namedtuple("OracleBracket", ["lower", "upper"])
OracleBracket.__doc__ = """
Two-sided bracket on the survival probability from the truncated chain. `upper` counts reaching
the cap as survival; `lower` counts it as death, which leaves only extinction and gives 0.
"""
BranchingState.__doc__ = "Type 2 count `zeta` and type 1 count `g`; (0, 0) is absorbing."


class BranchingOutcome(enum.Enum):
    EXTINCT = "extinct"
    REACHED_CAP = "reached-cap"
    CENSORED = "censored"


def _lam(rates, lam):
    return rates.lam if lam is None else lam


def mean_offspring(rates, lam=None):
    """
    # branching.mean_offspring(rates, lam=None)

    ---

    ### Overview
    Mean number of type 2 children of a type 2 individual, `lambda gamma / (1 + delta + gamma)`.

    ### Parameters:
    - rates (Rates): delta and gamma, and lambda unless `lam` is given.
    - lam (float): Birth rate overriding `rates.lam`.

    ### Returns:
    float: The mean; the process is supercritical iff it exceeds 1.

    ### Examples:

    ```python
    mean_offspring(Rates(3.0, 1.0, 2.0))   # 1.5
    ```
    """
    return _lam(rates, lam) * rates.gamma / rates.s


def survival_closed_form(n, m, rates, lam=None):
    """
    # branching.survival_closed_form(n, m, rates, lam=None)

    ---

    ### Overview
    Probability that the process started from `n` type 2 and `m` type 1 individuals never dies
    out:

    `1 - (s / (lambda gamma))^n * (1 - (lambda gamma - s) / (lambda (gamma + 1)))^m`,
    with `s = 1 + delta + gamma`, when `lambda gamma > s`. At and below criticality the
    process dies out almost surely and the value is 0.

    ### Parameters:
    - n, m (int): Initial type 2 and type 1 counts.
    - rates (Rates), lam (float): As for `mean_offspring`.

    ### Returns:
    float: A probability in [0, 1].

    ### Examples:
    - `survival_closed_form(1, 0, Rates(3, 1, 2))` is 1/3, `(0, 1)` gives 2/9 and `(1, 1)` 13/27.
    """
    lam = _lam(rates, lam)
    s = rates.s
    if lam * rates.gamma <= s or (n == 0 and m == 0):
        return 0.0
    q10 = s / (lam * rates.gamma)
    q01 = 1.0 - (lam * rates.gamma - s) / (lam * (rates.gamma + 1.0))
    return 1.0 - q10 ** n * q01 ** m


def recursion_residuals(rates, lam=None):
    """
    Residuals of the first-step recursions of the closed form:
    `pi(1,0) = lam/(1+delta+lam) pi(1,1) + delta/(1+delta+lam) pi(0,1)` and
    `pi(0,1) = gamma/(1+gamma) pi(1,0)`.
    """
    lam = _lam(rates, lam)
    p10 = survival_closed_form(1, 0, rates, lam)
    p01 = survival_closed_form(0, 1, rates, lam)
    p11 = survival_closed_form(1, 1, rates, lam)
    first = p10 - (lam * p11 + rates.delta * p01) / (1.0 + rates.delta + lam)
    second = p01 - rates.gamma / (1.0 + rates.gamma) * p10
    return first, second


def product_residual(n, m, rates, lam=None, single=None):
    """
    `pi(n,m) - [1 - (1 - pi(1,0))^n (1 - pi(0,1))^m]`. `single` may supply the one-individual
    values `(pi(1,0), pi(0,1), pi(n,m))` from another source, e.g. the truncated oracle.
    """
    if single is None:
        single = (
            survival_closed_form(1, 0, rates, lam),
            survival_closed_form(0, 1, rates, lam),
            survival_closed_form(n, m, rates, lam),
        )
    p10, p01, pnm = single
    return pnm - (1.0 - (1.0 - p10) ** n * (1.0 - p01) ** m)


def fixed_point_residual(rates, lam=None, value=None):
    """
    `pi(1,0) [lam gamma (1 - pi(1,0)) - (1 + delta + gamma)]`, zero at both roots 0 and the
    closed-form value.
    """
    lam = _lam(rates, lam)
    p = survival_closed_form(1, 0, rates, lam) if value is None else value
    return p * (lam * rates.gamma * (1.0 - p) - rates.s)


def simulate_branching(initial, rates, lam=None, seed=0, key=(), cap=None, horizon=None, rng=None):
    """
    # branching.simulate_branching(initial, rates, lam, seed, key, cap, horizon)

    ---

    ### Overview
    Runs the population chain from `initial` until it dies out, its total reaches `cap`, or
    `horizon` passes.

    ### Parameters:
    - initial (BranchingState or tuple): Initial `(zeta, g)`.
    - rates (Rates), lam (float): Rates; `lam` overrides `rates.lam`.
    - seed (int), key (tuple): The stream is `(seed, STREAM_BRANCHING, *key)`.
    - cap (int): Population cap, `DEFAULT_POPULATION_CAP` when neither cap nor horizon is given.
    - horizon (float): Optional final time.

    ### Returns:
    BranchingOutcome: `EXTINCT`, `REACHED_CAP` or `CENSORED`.
    """
    lam = _lam(rates, lam)
    if cap is None and horizon is None:
        cap = ts.DEFAULT_POPULATION_CAP
    zeta, g = initial
    rng = rng or __core__.generator(seed, ts.STREAM_BRANCHING, *key)
    r2 = 1.0 + rates.delta + lam
    r1 = 1.0 + rates.gamma
    t = 0.0
    block = rng.random(2048)
    i = 0
    while True:
        if zeta + g == 0:
            return BranchingOutcome.EXTINCT
        if cap is not None and zeta + g >= cap:
            return BranchingOutcome.REACHED_CAP
        if i + 2 > len(block):
            block = rng.random(2048)
            i = 0
        total = zeta * r2 + g * r1
        if horizon is not None:
            t -= math.log(1.0 - block[i]) / total
            i += 1
            if t > horizon:
                return BranchingOutcome.CENSORED
        u = block[i] * total
        i += 1
        if u < zeta * r2:
            u /= zeta
            if u < 1.0:
                zeta -= 1
            elif u < 1.0 + rates.delta:
                zeta -= 1
                g += 1
            else:
                g += 1
        else:
            u = (u - zeta * r2) / g
            g -= 1
            if u >= 1.0:
                zeta += 1


def _branching_block(job):
    initial, rates, lam, seed, start, count, cap, horizon = job
    return sum(
        simulate_branching(initial, rates, lam, seed, key=(r,), cap=cap, horizon=horizon) is not BranchingOutcome.EXTINCT
        for r in range(start, start + count)
    )


def estimate_branching_survival(initial, rates, lam=None, replicas=1000, seed=0, cap=None, horizon=None, workers=1):
    """
    Fraction of replicas that reach the cap or are alive at the horizon.
    """
    lam = _lam(rates, lam)
    if cap is None and horizon is None:
        cap = ts.DEFAULT_POPULATION_CAP
    blocks = [
        (tuple(initial), rates, lam, seed, start, count, cap, horizon)
        for start, count in __core__.split_blocks(replicas, workers)
    ]
    survivors = sum(__core__.run_blocks(_branching_block, blocks, workers))
    return SurvivalEstimate.proportion(
        survivors, replicas, seed=seed, horizon=horizon,
        policy=f"reached population {cap}" if cap else "alive-at-horizon",
    )


def truncated_survival_oracle(initial, rates, lam=None, cap=400, budget=None):
    """
    # branching.truncated_survival_oracle(initial, rates, lam, cap)

    ---

    ### Overview
    Probability that the chain reaches a total population of `cap` before dying out, from the
    absorption linear system over the `cap (cap + 1) / 2` states with total below `cap`. The
    value decreases in `cap` and converges to the survival probability from above.

    Counting the cap as death instead gives the lower end of the bracket, which is 0 since
    extinction and reaching the cap are the only ways to leave the truncated chain. The sweep
    increment of `truncated_survival_sweep` is the practical error estimate.

    ### Parameters:
    - initial (tuple): `(zeta, g)`.
    - rates (Rates), lam (float): Rates; `lam` overrides `rates.lam`.
    - cap (int): K, at least the initial total.
    - budget (int): Largest allowed state count, `DEFAULT_ORACLE_STATES` by default.

    ### Returns:
    OracleBracket: `lower` 0 and `upper` the absorption probability at the cap.

    ### Raises:
    - SizeError: If `(K + 1)(K + 2) / 2` exceeds the budget.
    - ParameterError: If K is below the initial total.
    """
    lam = _lam(rates, lam)
    budget = budget or ts.DEFAULT_ORACLE_STATES
    zeta0, g0 = initial
    if cap < zeta0 + g0:
        raise __core__.ParameterError("truncated_survival_oracle", f"cap {cap} is below the initial total.", "cap")
    if (cap + 1) * (cap + 2) // 2 > budget:
        raise __core__.SizeError(
            "truncated_survival_oracle", f"{(cap + 1) * (cap + 2) // 2} states exceed the budget of {budget}."
        )
    if zeta0 + g0 == 0:
        return OracleBracket(0.0, 0.0)
    if zeta0 + g0 >= cap:
        return OracleBracket(0.0, 1.0)

    # index of (zeta, g) with zeta + g = k < cap
    def index(z, gg):
        k = z + gg
        return k * (k + 1) // 2 + z

    n = cap * (cap + 1) // 2
    totals = np.repeat(np.arange(cap), np.arange(1, cap + 1))
    zetas = np.arange(n) - totals * (totals + 1) // 2
    gs = totals - zetas
    out_rate = zetas * (1.0 + rates.delta + lam) + gs * (1.0 + rates.gamma)

    rows, cols, vals = [np.arange(n)], [np.arange(n)], [out_rate]
    rhs = np.zeros(n)
    moves = (
        (-1, 0, zetas * 1.0),
        (0, -1, gs * 1.0),
        (1, -1, gs * rates.gamma),
        (-1, 1, zetas * rates.delta),
        (0, 1, zetas * lam),
    )
    for dz, dg, rate in moves:
        z, gg = zetas + dz, gs + dg
        ok = (rate > 0) & (z >= 0) & (gg >= 0)
        into_cap = ok & (z + gg >= cap)
        rhs += np.where(into_cap, rate, 0.0)
        inner = ok & (z + gg < cap) & (z + gg > 0)
        rows.append(np.flatnonzero(inner))
        cols.append(index(z[inner], gg[inner]))
        vals.append(-rate[inner])
    # (0, 0) has no outflow; its row reads u = 0.
    vals[0] = np.where(out_rate > 0, out_rate, 1.0)
    a = scipy.sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    u = scipy.sparse.linalg.spsolve(a.tocsc(), rhs)
    return OracleBracket(0.0, float(u[index(zeta0, g0)]))


def truncated_survival_sweep(initial, rates, lam=None, cap=25, tol=1e-6, max_cap=1600):
    """
    Doubles K from `cap` until the upper end of the oracle bracket changes by less than `tol`.
    Returns `(upper value, last increment, K)`.
    """
    value = truncated_survival_oracle(initial, rates, lam, cap).upper
    while True:
        nxt = cap * 2
        if nxt > max_cap:
            logger.warning(f"truncated oracle did not settle to {tol} below K={max_cap}")
            return value, math.inf, cap
        new = truncated_survival_oracle(initial, rates, lam, nxt).upper
        increment = abs(value - new)
        value, cap = new, nxt
        if increment < tol:
            return value, increment, cap
