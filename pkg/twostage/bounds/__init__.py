"""
# Bounds

---

## Overview
The Bounds module collects the closed-form bounds on the critical value of the two-stage contact
process, the constants of their large-dimension expansions, and a Monte Carlo bracket of the
critical value on a finite torus. All infection rates are per neighbor.

## Features
- `Lower Bound:` `m_function` evaluates the four-term first-jump functional M; the process dies
out while `M < 1`, and `lower_bound_337` is the closed-form root of `M = 1`.
- `Upper Bound:` `bounds_report` evaluates `lambda_tilde` from the walk module with the two-term
expansion of the hitting probability and, where the dimension allows, with its exact value.
- `Constants:` `f_constants` gives `(f1, f2)`, the limits of the scaled gaps
`d (2d lambda - (1 + delta + gamma) / gamma)` of the lower and upper bounds.
- `Monte Carlo Bracket:` `bracket_critical` sweeps a grid of rates and reports where the
survival probability at a fixed horizon crosses a small threshold.

## Usage

```python
from twostage import bounds, lattice

rates = lattice.Rates(1.0, 1.0, 2.0)
bounds.lower_bound_337(10, rates)    # 0.106383
bounds.f_constants(rates)            # (1.2, 3.0)
bounds.bounds_report(10, rates).as_dict()
```
"""

from dataclasses import asdict, dataclass, field

import twostage as ts
from twostage import __core__
from twostage import lattice
from twostage import markov
from twostage import walk

logger = __core__.get_logger(__name__)


def first_jump_probabilities(lam, rates, d):
    """
    Probabilities of the first event seen by a fully infected origin with one semi-infected
    neighbor: the neighbor recovers (`1 + delta`), the origin recovers (1), the neighbor is
    promoted (`gamma`) or the origin infects another neighbor (`(2d - 1) lambda`).
    """
    total = (2 * d - 1) * lam + 2.0 + rates.delta + rates.gamma
    return (
        (1.0 + rates.delta) / total,
        1.0 / total,
        rates.gamma / total,
        (2 * d - 1) * lam / total,
    )


def m_function(lam, rates, d):
    """
    # bounds.m_function(lam, rates, d)

    ---

    ### Overview
    The four-term functional M: each first-jump probability weighted by the chance that the
    resulting small configuration still reaches the next stage, with `u = 2d lambda + 1` and
    `s = 1 + delta + gamma`:

    `gamma/D (4d-1) lambda/u + 1/D (gamma/s) 2d lambda/u + (1+delta)/D 2d lambda/u
    + (2d-1) lambda/D (2d lambda + 2)/u`, where `D = (2d-1) lambda + 2 + delta + gamma`.

    ### Parameters:
    - lam (float): Per-neighbor infection rate.
    - rates (Rates): delta and gamma.
    - d (int): Dimension.

    ### Returns:
    float: M, below 1 exactly when `lam` is below `lower_bound_337(d, rates)`.
    """
    p_neighbor, p_origin, p_promote, p_spread = first_jump_probabilities(lam, rates, d)
    u = 2 * d * lam + 1.0
    return (
        p_promote * (4 * d - 1) * lam / u
        + p_origin * (rates.gamma / rates.s) * 2 * d * lam / u
        + p_neighbor * 2 * d * lam / u
        + p_spread * (2 * d * lam + 2.0) / u
    )


def lower_bound_337(d, rates):
    """
    # bounds.lower_bound_337(d, rates)

    ---

    ### Overview
    Closed-form lower bound on the critical value,
    `s / (2d gamma) * (2 + delta + gamma) / (1 + [1 - (1 + 1/gamma) / (2d)] s)`.

    ### Parameters:
    - d (int): Dimension.
    - rates (Rates): delta and gamma.

    ### Returns:
    float: The bound.

    ### Raises:
    - DimensionTooSmall: If `1 + [1 - (1 + 1/gamma) / (2d)] s` is not positive.

    ### Examples:
    - `lower_bound_337(10, Rates(1, 1, 2))` is `0.1 * 5 / 4.7 = 0.106383`.
    """
    s = rates.s
    denominator = 1.0 + (1.0 - (1.0 + 1.0 / rates.gamma) / (2 * d)) * s
    if denominator <= 0:
        raise __core__.DimensionTooSmall(
            "lower_bound_337", f"1 + [1 - (1 + 1/gamma)/(2d)] s = {denominator:.6g} is not positive for d={d}.", "d"
        )
    return s / (2 * d * rates.gamma) * (2.0 + rates.delta + rates.gamma) / denominator


def m_threshold(d, rates):
    """The root of `M = 1` in `lam`; it coincides with `lower_bound_337`."""
    return lower_bound_337(d, rates)


def f_constants(rates):
    """
    # bounds.f_constants(rates)

    ---

    ### Overview
    `f1 = (1/2)(1 + 1/gamma) s^2 / (gamma (2 + delta + gamma))` and
    `f2 = (s / gamma)(1 + 1/gamma)`, the limits of the scaled gaps of the lower and upper
    bounds.

    ### Returns:
    tuple: `(f1, f2)`; `(1.2, 3.0)` for `gamma = 2, delta = 1`, and `(1/2, 1)` as gamma grows.
    """
    s, g = rates.s, rates.gamma
    f1 = 0.5 * (1.0 + 1.0 / g) * s * s / (g * (2.0 + rates.delta + g))
    f2 = (s / g) * (1.0 + 1.0 / g)
    return f1, f2


def scaled_gap(value, d, rates):
    """`d (2d value - (1 + delta + gamma) / gamma)`."""
    return d * (2 * d * value - rates.s / rates.gamma)


@dataclass
class CriticalBracket:
    """
    Monte Carlo bracket of the critical value: `lam_lo` is the largest grid rate below the first
    crossing of `threshold`, `lam_hi` the first rate at or above it. A missing side is None and
    the bracket is then flagged degenerate.
    """
    lam_lo: float
    lam_hi: float
    threshold: float
    horizon: float
    L: int
    points: list = field(default_factory=list)
    degenerate: bool = False
    gates: dict = field(default_factory=dict)

    def as_dict(self):
        return asdict(self)


def _crossing(grid, estimates, threshold):
    lo = hi = None
    for lam, est in zip(grid, estimates):
        if est.point >= threshold:
            hi = lam
            break
        lo = lam
    return lo, hi


def bracket_critical(d, rates, grid, L=3, horizon=20.0, replicas=400, seed=0,
                     threshold=None, budget=None, workers=1, check_horizon=False):
    """
    # bounds.bracket_critical(d, rates, grid, L=3, horizon=20.0, replicas=400, seed=0)

    ---

    ### Overview
    Estimates the survival probability at `horizon` from a single fully infected site for every
    rate of `grid` and returns the grid cell where it first reaches `threshold`. On a finite torus
    the process always dies out eventually, so this brackets a finite-size proxy of the critical
    value, never the value itself. With `check_horizon` the sweep is repeated at twice the
    horizon and the gate passes when the bracket moves by at most one grid step.

    ### Parameters:
    - d (int), rates (Rates): Dimension; delta and gamma.
    - grid (iterable): Per-neighbor infection rates, swept in increasing order.
    - L (int): Side of the torus.
    - horizon (float), replicas (int), seed (int), workers (int): Sweep settings.
    - threshold (float): Survival probability that marks the crossing,
    `DEFAULT_SURVIVAL_THRESHOLD` by default.
    - budget (float): Largest `replicas * horizon * len(grid)`, `DEFAULT_REPLICA_BUDGET` by default.

    ### Returns:
    CriticalBracket: The bracket, every grid estimate and the gate outcomes.

    ### Raises:
    - BudgetExceeded: If the sweep exceeds the budget.
    - ParameterError: If the grid is empty.
    """
    grid = sorted(float(lam) for lam in grid)
    if not grid:
        raise __core__.ParameterError("bracket_critical", "The rate grid is empty.", "grid")
    threshold = ts.DEFAULT_SURVIVAL_THRESHOLD if threshold is None else threshold
    budget = budget or ts.DEFAULT_REPLICA_BUDGET
    cost = replicas * horizon * len(grid) * (2 if check_horizon else 1)
    if cost > budget:
        raise __core__.BudgetExceeded(
            "bracket_critical", f"The sweep needs {cost:.3g} replica-time units; the budget is {budget:.3g}."
        )
    spec = lattice.TorusSpec(d, L)
    lattice.validate_spec(spec)

    def sweep(h, family):
        out = []
        for i, lam in enumerate(grid):
            est = markov.estimate_survival(
                markov.ProcessKind.TWO_STAGE, spec, rates.with_lambda(lam), lattice.Configuration({0}),
                h, replicas, seed, workers=workers, family=family + i,
            )
            logger.info(f"lambda={lam:.6g} survival at {h}: {est.point:.4f} +- {est.std_error:.4f}")
            out.append(est)
        return out

    estimates = sweep(horizon, 0)
    lo, hi = _crossing(grid, estimates, threshold)
    result = CriticalBracket(
        lam_lo=lo,
        lam_hi=hi,
        threshold=threshold,
        horizon=horizon,
        L=L,
        points=[(lam, est.point, est.std_error) for lam, est in zip(grid, estimates)],
        degenerate=lo is None or hi is None,
    )
    if result.degenerate:
        logger.warning("no crossing of the survival threshold inside the grid; the bracket is degenerate")
    if check_horizon:
        lo2, hi2 = _crossing(grid, sweep(2 * horizon, len(grid)), threshold)
        shift = abs(grid.index(hi2) - grid.index(hi)) if hi is not None and hi2 is not None else None
        result.gates["horizon"] = shift is not None and shift <= 1
    return result


@dataclass
class BoundsReport:
    """
    Closed-form bounds for one dimension and rate pair. A bound that is vacuous in this
    dimension is None and `notes` says why.
    """
    d: int
    delta: float
    gamma: float
    lower_337: float
    upper_420: float
    upper_420_exact: float
    srw_kesten: float
    srw_exact: float
    f1: float
    f2: float
    lower_gap: float
    upper_gap: float
    mc_bracket: dict = None
    notes: list = field(default_factory=list)

    def as_dict(self):
        return asdict(self)


def bounds_report(d, rates, srw_value=None, bracket=None):
    """
    # bounds.bounds_report(d, rates, srw_value=None, bracket=None)

    ---

    ### Overview
    Assembles the lower bound, the upper bound with the two-term hitting expansion and with the
    exact hitting probability (`srw_value`, or the Green-function value when `d >= 3`), the
    constants `(f1, f2)` and the scaled gaps of both bounds.

    ### Parameters:
    - d (int): Dimension.
    - rates (Rates): delta and gamma.
    - srw_value (float): Hitting probability of the origin from `e_1`, computed when omitted.
    - bracket (CriticalBracket): Optional Monte Carlo bracket to attach.

    ### Returns:
    BoundsReport: The report; `as_dict()` gives its JSON form.
    """
    notes = []
    f1, f2 = f_constants(rates)
    try:
        lower = lower_bound_337(d, rates)
    except __core__.DimensionTooSmall as e:
        lower = None
        notes.append(e.explanation)
    kesten = walk.kesten_value(d)
    if srw_value is None and d >= 3:
        srw_value = walk.srw_hit_prob(d, (1,) + (0,) * (d - 1), method="green_integral").value
    upper = upper_exact = None
    try:
        upper = walk.lambda_tilde(d, rates, kesten)
    except __core__.DimensionTooSmall as e:
        notes.append(e.explanation)
    if srw_value is not None:
        try:
            upper_exact = walk.lambda_tilde(d, rates, srw_value)
        except __core__.DimensionTooSmall as e:
            notes.append(e.explanation)
    return BoundsReport(
        d=d,
        delta=rates.delta,
        gamma=rates.gamma,
        lower_337=lower,
        upper_420=upper,
        upper_420_exact=upper_exact,
        srw_kesten=kesten,
        srw_exact=srw_value,
        f1=f1,
        f2=f2,
        lower_gap=scaled_gap(lower, d, rates) if lower is not None else None,
        upper_gap=scaled_gap(upper, d, rates) if upper is not None else None,
        mc_bracket=bracket.as_dict() if bracket is not None else None,
        notes=notes,
    )


def bisect_threshold(d, rates, lo=1e-9, hi=None, tol=1e-12):
    """Root of `M = 1` by bisection, the numerical check of `m_threshold`."""
    hi = hi or 10.0 * rates.s / rates.gamma

    def f(lam):
        return m_function(lam, rates, d) - 1.0

    if f(lo) >= 0 or f(hi) <= 0:
        raise __core__.DomainError("bisect_threshold", "M - 1 does not change sign on the interval.")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
