"""
# Walk

---

## Overview
The Walk module computes the hitting probabilities behind the upper bound on the critical value:
the probability that a simple random walk from `x` ever visits the origin, and the probability
that the three-component walk on offsets times `{1, 2, 3}` ever visits `(O, 1)`. From these it
derives `h_lambda` and the bound `lambda_tilde`.

## Features
- `Simple Random Walk:` `srw_hit_prob` by Monte Carlo with a step cap, by a truncated linear
solve with a two-sided bracket, or from the lattice Green function by quadrature. `srw_table`
tabulates the truncated solve over a ball of offsets.
- `Three-Component Walk:` `theta_hit_prob` solves (or simulates) the walk whose recursions make
the second-moment eigenvector work. The walk in `(x, 2)` moves to `(x, 3)` with probability
`1 / (2 + delta + gamma)` and otherwise to `(y, 1)` for a uniform neighbor `y`; `(x, 1)` moves
to `(x, 2)`; `(x, 3)` moves to `(y, 2)`; `(O, 2)` moves to `(e_1, 1)`.
- `Derived Quantities:` `h_lambda`, `lambda_tilde` and the two-term expansion `kesten_value`.

## Detailed Functionality

### Brackets
A truncated solve on the ball of radius R sees the walk only until it leaves the ball. Giving the
exit layer the value 0 undercounts every path that leaves and comes back; giving it the largest
hitting probability on the exit layer, taken from the Green function, overcounts. The two
solves bracket the true value and their difference is reported as the width. Simple-walk tables
additionally carry the solve whose exit layer holds the exact Green values, which is the true
value up to quadrature error.

### The `printed` variant
`variant="printed"` adds `lambda` to both the denominator and the neighbor weight of the `(x, 2)`
recursion, so `(x, 2)` moves to `(x, 3)` with probability `1 / (2 + delta + gamma + lambda)` and
to a neighbor in component 1 with probability `(1 + delta + gamma + lambda) / (2 + delta + gamma
+ lambda)`. The walk is not defective. At `lambda = 0` it is the `corrected` walk, which is the
one the eigenvector identity needs.

## Usage

```python
from twostage import lattice, walk

walk.srw_hit_prob(3, (1, 0, 0), method="green_integral").value     # 0.3405...
table = walk.theta_hit_prob(10, lattice.Rates(3.0, 1.0, 2.0), R=4)
walk.lambda_tilde(10, lattice.Rates(3.0, 1.0, 2.0), walk.kesten_value(10))   # 0.1197...
```
"""

import functools
import math
import warnings
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.sparse
import scipy.sparse.linalg
import scipy.special

import twostage as ts
from twostage import __core__
from twostage import lattice

logger = __core__.get_logger(__name__)

METHODS = ("monte_carlo", "linear_solve", "green_integral")
"""
Methods accepted by `srw_hit_prob`. `theta_hit_prob` accepts the first two.
"""
VARIANTS = ("corrected", "printed")
"""
Variants of the `(x, 2)` recursion of the three-component walk.
"""

HitValue = namedtuple("HitValue", ["value", "width", "std_error", "method"])
HitValue.__doc__ = """
A single hitting probability. `width` is the bracket width of a linear solve (None for Monte
Carlo); `std_error` the binomial standard error of a Monte Carlo estimate (0 otherwise).
"""


@dataclass
class HittingTable:
    """
    Hitting probabilities over the offsets of a ball. Simple-walk tables have one column; tables
    of the three-component walk have the columns `i = 1, 2, 3` with `(O, 3)` set to NaN.
    """
    d: int
    method: str
    ball: lattice.OffsetBall
    values: np.ndarray
    lower: np.ndarray = None
    upper: np.ndarray = None
    std_error: np.ndarray = None
    variant: str = None

    @property
    def error(self):
        if self.lower is not None and self.upper is not None:
            return self.upper - self.lower
        return self.std_error

    def value(self, offset, component=None):
        k = self.ball.find(offset)
        if component is None:
            return float(self.values[k])
        return float(self.values[k, component - 1])

    def rows(self):
        """`(offset, component, value, error)` tuples in table order, for CSV output."""
        error = self.error
        out = []
        for k, offset in enumerate(self.ball.offsets):
            label = " ".join(str(c) for c in offset)
            if self.values.ndim == 1:
                out.append((label, 0, float(self.values[k]), float(error[k]) if error is not None else 0.0))
            else:
                for i in range(3):
                    if np.isnan(self.values[k, i]):
                        continue
                    out.append((label, i + 1, float(self.values[k, i]), float(error[k, i]) if error is not None else 0.0))
        return out


def kesten_value(d):
    """
    Two-term large-dimension expansion of the simple-walk hitting probability of the origin
    from a neighbor, `1/(2d) + 1/(2d^2)`.
    """
    return 1.0 / (2 * d) + 1.0 / (2 * d * d)


def _recurrent(operation, d):
    warnings.warn(
        f"[TwoStageLab.{operation}.RecurrenceWarning]: the simple random walk in dimension {d} "
        "is recurrent; every hitting probability is 1.",
        __core__.RecurrenceWarning,
        stacklevel=3,
    )


@functools.lru_cache(maxsize=4096)
def green_function(d, offset=None):
    """
    # walk.green_function(d, offset=None)

    ---

    ### Overview
    Expected number of visits of the simple random walk from the origin to `offset`,
    `G(x) = int_0^inf prod_i e^{-t/d} I_{x_i}(t/d) dt`, by adaptive quadrature. The integrand
    is the transition density of the continuous-time walk, written with exponentially scaled
    Bessel functions so that it stays finite for large `t`.

    ### Parameters:
    - d (int): Dimension, at least 3.
    - offset (tuple): Lattice offset, the origin by default.

    ### Returns:
    float: `G(offset)`.

    ### Raises:
    - DimensionTooSmall: If `d <= 2`, where the walk is recurrent and `G` is infinite.
    """
    if d <= 2:
        raise __core__.DimensionTooSmall("green_function", f"The walk is recurrent in dimension {d}.", "d")
    x = np.array(lattice.canonical_offset(offset or (0,) * d), dtype=float)

    def density(t):
        return float(np.prod(scipy.special.ive(x, t / d)))

    scale = max(float(np.dot(x, x)), 1.0)
    cuts = (0.0, scale / 4, scale, 4 * scale, math.inf)
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        value, _ = scipy.integrate.quad(density, a, b, epsabs=1e-13, epsrel=1e-11, limit=400)
        total += value
    return total


def _green_hit(d, offset):
    return green_function(d, lattice.canonical_offset(offset)) / green_function(d)


def _envelope(d, ball):
    # largest simple-walk hitting probability on the exit layer
    if d <= 2:
        return 1.0
    return max(_green_hit(d, y) for y in ball.exits)


def srw_table(d, R):
    """
    # walk.srw_table(d, R)

    ---

    ### Overview
    Solves the discrete harmonic problem `u(x) = average of u over the neighbors of x`,
    `u(O) = 1`, on the symmetry-reduced ball of radius `R`, three times: with the exit layer at
    0 (lower bound), at the Green-function envelope (upper bound) and at its exact Green values.

    ### Parameters:
    - d (int): Dimension.
    - R (int): Radius of the ball.

    ### Returns:
    HittingTable: `values` from the exact exit data, with `lower` and `upper`.

    ### Raises:
    - RecurrenceWarning: For `d <= 2`, where the table is identically 1.
    """
    ball = lattice.OffsetBall(d, R)
    n = len(ball)
    if d <= 2:
        _recurrent("srw_table", d)
        ones = np.ones(n)
        return HittingTable(d, "linear_solve", ball, ones, ones.copy(), ones.copy())

    exit_values = np.array([_green_hit(d, y) for y in ball.exits])
    envelope = exit_values.max()
    degree = 2 * d
    # unknowns are the offsets other than the origin
    rows, cols, vals = [], [], []
    rhs = np.zeros((n - 1, 3))
    for k in range(1, n):
        rows.append(k - 1)
        cols.append(k - 1)
        vals.append(1.0)
        for j in range(degree):
            y = ball.table[k, j]
            if y == 0:
                rhs[k - 1] += 1.0 / degree
            elif y > 0:
                rows.append(k - 1)
                cols.append(y - 1)
                vals.append(-1.0 / degree)
            else:
                e = ball.exit_table[k, j]
                rhs[k - 1, 1] += envelope / degree
                rhs[k - 1, 2] += exit_values[e] / degree
    a = scipy.sparse.csc_matrix((vals, (rows, cols)), shape=(n - 1, n - 1))
    u = scipy.sparse.linalg.spsolve(a, rhs)
    u = np.vstack([np.ones((1, 3)), np.asarray(u).reshape(n - 1, 3)])
    logger.debug(f"srw table d={d} R={R}: {n} offsets, {len(ball.exits)} exit offsets")
    return HittingTable(d, "linear_solve", ball, u[:, 2], lower=u[:, 0], upper=u[:, 1])


def _srw_walks(d, start, replicas, max_steps, rng):
    """Number of walks from `start` that visit the origin within `max_steps` steps."""
    pos = np.tile(np.asarray(start, dtype=np.int64), (replicas, 1))
    alive = np.arange(replicas)
    hits = 0
    for _ in range(max_steps):
        if alive.size == 0:
            break
        moves = rng.integers(0, 2 * d, alive.size)
        p = pos[alive]
        p[np.arange(alive.size), moves // 2] += 1 - 2 * (moves % 2)
        pos[alive] = p
        home = ~p.any(axis=1)
        hits += int(home.sum())
        alive = alive[~home]
    return hits


def srw_hit_prob(d, x, method="linear_solve", R=None, max_steps=None, replicas=10_000, seed=0, workers=1):
    """
    # walk.srw_hit_prob(d, x, method="linear_solve", R=None, max_steps=None, replicas=10000, seed=0)

    ---

    ### Overview
    Probability that the simple random walk started at `x` ever visits the origin. By first-step
    symmetry the value at `e_1` is also the return probability of the walk started at the
    origin.

    ### Parameters:
    - d (int): Dimension.
    - x (tuple): Starting offset.
    - method (str): `monte_carlo` (walks capped at `max_steps`, so the estimate is biased low by
    the paths that return later), `linear_solve` (bracketed truncated solve on the ball of radius
    `R`) or `green_integral` (`G(x) / G(O)` by quadrature).
    - R (int): Radius of the linear solve, by default `max(20, 4 |x|)`.
    - max_steps (int): Step cap, `DEFAULT_WALK_STEP_CAP` by default.
    - replicas (int), seed (int), workers (int): Monte Carlo size, master seed and worker count.

    ### Returns:
    HitValue: The value with its bracket width or standard error. For `linear_solve` the value is
    the solve whose exit layer holds the exact Green values, which lies inside the bracket; `width`
    is the distance between the zero-exit and envelope-exit solves.

    ### Raises:
    - RecurrenceWarning: For `d <= 2`; the value is then 1.
    - ParameterError: For an unknown method.

    ### Examples:

    ```python
    srw_hit_prob(1, (1,)).value                                  # 1.0 with a warning
    srw_hit_prob(3, (1, 0, 0), method="green_integral").value    # 0.340537...
    ```
    """
    if method not in METHODS:
        raise __core__.ParameterError("srw_hit_prob", f"Unknown method {method!r}.", "method")
    x = tuple(int(c) for c in x)
    if not any(x):
        return HitValue(1.0, 0.0, 0.0, method)
    if d <= 2:
        _recurrent("srw_hit_prob", d)
        return HitValue(1.0, 0.0, 0.0, method)
    if method == "green_integral":
        return HitValue(_green_hit(d, x), 0.0, 0.0, method)
    if method == "linear_solve":
        R = R or max(20, 4 * sum(abs(c) for c in x))
        table = srw_table(d, R)
        k = table.ball.find(x)
        return HitValue(float(table.values[k]), float(table.upper[k] - table.lower[k]), 0.0, method)

    max_steps = max_steps or ts.DEFAULT_WALK_STEP_CAP
    blocks = [(d, x, seed, start, count, max_steps) for start, count in __core__.fixed_blocks(replicas)]
    hits = sum(__core__.run_blocks(_srw_block, blocks, workers))
    p = hits / replicas
    logger.debug(f"srw monte carlo d={d} x={x}: {hits}/{replicas} within {max_steps} steps (biased low)")
    return HitValue(p, None, math.sqrt(p * (1 - p) / replicas), method)


def _srw_block(job):
    d, x, seed, start, count, max_steps = job
    rng = __core__.generator(seed, ts.STREAM_WALK, 0, start)
    return _srw_walks(d, x, count, max_steps, rng)


def _theta_weights(rates, lam, variant):
    # (denominator, neighbor weight) of the (x, 2) recursion; 1 + weight == denominator
    weight = rates.s + lam if variant == "printed" else rates.s
    return 1.0 + weight, weight


def _theta_solve(ball, rates, lam, variant, boundary):
    """Solves the three-component recursions with every exit offset held at `boundary`."""
    n = len(ball)
    degree = 2 * ball.d
    denom, weight = _theta_weights(rates, lam, variant)
    size = 3 * n
    rows, cols, vals = [], [], []
    rhs = np.zeros(size)

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    o = ball.origin
    put(3 * o, 3 * o, 1.0)
    rhs[3 * o] = 1.0
    put(3 * o + 2, 3 * o + 2, 1.0)
    # (O, 2) is the average of (y, 1) over the neighbors of the origin
    put(3 * o + 1, 3 * o + 1, 1.0)
    for j in range(degree):
        put(3 * o + 1, 3 * ball.table[o, j], -1.0 / degree)
    for k in range(1, n):
        r1, r2, r3 = 3 * k, 3 * k + 1, 3 * k + 2
        put(r1, r1, 1.0)
        put(r1, r2, -1.0)
        put(r2, r2, denom)
        put(r2, r3, -1.0)
        put(r3, r3, 1.0)
        for j in range(degree):
            y = ball.table[k, j]
            if y >= 0:
                put(r2, 3 * y, -weight / degree)
                put(r3, 3 * y + 1, -1.0 / degree)
            else:
                rhs[r2] += weight / degree * boundary
                rhs[r3] += boundary / degree
    a = scipy.sparse.csc_matrix((vals, (rows, cols)), shape=(size, size))
    u = scipy.sparse.linalg.spsolve(a, rhs).reshape(n, 3)
    u[o, 2] = np.nan
    return u


def _theta_walks(d, rates, lam, variant, start, replicas, max_steps, rng):
    """Number of walks from `start = (offset, component)` that visit `(O, 1)` within the cap."""
    offset, component = start
    pos = np.tile(np.asarray(offset, dtype=np.int64), (replicas, 1))
    comp = np.full(replicas, component, dtype=np.int64)
    alive = np.arange(replicas)
    denom, _ = _theta_weights(rates, lam, variant)
    hits = 0
    for _ in range(max_steps + 1):
        p, c = pos[alive], comp[alive]
        at_origin = ~p.any(axis=1)
        home = at_origin & (c == 1)
        hits += int(home.sum())
        keep = ~home
        m = alive.size
        u = rng.random(m) * denom
        moves = rng.integers(0, 2 * d, m)
        step = np.zeros(m, dtype=bool)
        new_c = c.copy()
        # (x, 1) -> (x, 2)
        new_c[c == 1] = 2
        # (x, 2) -> (x, 3) or a neighbor in component 1; (O, 2) always steps out
        two = c == 2
        to_three = two & ~at_origin & (u < 1.0)
        new_c[to_three] = 3
        out = two & ~to_three
        new_c[out] = 1
        step |= out
        # (x, 3) -> a neighbor in component 2
        three = c == 3
        new_c[three] = 2
        step |= three
        idx = np.flatnonzero(step)
        p[idx, moves[idx] // 2] += 1 - 2 * (moves[idx] % 2)
        pos[alive] = p
        comp[alive] = new_c
        alive = alive[keep]
        if alive.size == 0:
            break
    return hits


def _theta_block(job):
    d, rates, lam, variant, start, seed, family, first, count, max_steps = job
    rng = __core__.generator(seed, ts.STREAM_WALK, family, first)
    return _theta_walks(d, rates, lam, variant, start, count, max_steps, rng)


def theta_hit_prob(d, rates, lam=None, method="linear_solve", R=6, variant="corrected",
                   replicas=2_000, max_steps=None, seed=0, workers=1):
    """
    # walk.theta_hit_prob(d, rates, lam=None, method="linear_solve", R=6, variant="corrected")

    ---

    ### Overview
    Tabulates the probability that the three-component walk started at `(x, i)` ever visits
    `(O, 1)`, for every offset `x` of the ball of radius `R` (one per symmetry orbit). The
    corrected variant does not depend on `lambda`.

    ### Parameters:
    - d (int): Dimension.
    - rates (Rates): delta and gamma; lambda only enters the `printed` variant.
    - lam (float): Infection rate overriding `rates.lam`.
    - method (str): `linear_solve` (exit layer held at 0; the envelope solve gives `upper`) or
    `monte_carlo` (walks capped at `max_steps`, `replicas` per entry).
    - R (int): Radius of the ball.
    - variant (str): `corrected` or `printed`.

    ### Returns:
    HittingTable: Columns `i = 1, 2, 3`; `(O, 1)` is 1 and `(O, 3)` is NaN.

    ### Raises:
    - ParameterError: For an unknown method or variant.

    ### Examples:

    ```python
    table = theta_hit_prob(10, Rates(3.0, 1.0, 2.0), R=4)
    table.value((0,) * 10, 1)   # 1.0
    ```
    """
    if variant not in VARIANTS:
        raise __core__.ParameterError("theta_hit_prob", f"Unknown variant {variant!r}.", "variant")
    if method not in METHODS[:2]:
        raise __core__.ParameterError("theta_hit_prob", f"Unknown method {method!r}.", "method")
    lam = rates.lam if lam is None else lam
    ball = lattice.OffsetBall(d, R)
    if method == "linear_solve":
        lower = _theta_solve(ball, rates, lam, variant, 0.0)
        upper = _theta_solve(ball, rates, lam, variant, _envelope(d, ball))
        return HittingTable(d, method, ball, lower, lower=lower, upper=upper, variant=variant)

    max_steps = max_steps or ts.DEFAULT_WALK_STEP_CAP
    values = np.full((len(ball), 3), np.nan)
    errors = np.full((len(ball), 3), np.nan)
    for k, offset in enumerate(ball.offsets):
        for i in (1, 2, 3):
            if k == ball.origin and i == 3:
                continue
            family = 1 + 3 * k + (i - 1)
            blocks = [
                (d, rates, lam, variant, (offset, i), seed, family, first, count, max_steps)
                for first, count in __core__.fixed_blocks(replicas)
            ]
            p = sum(__core__.run_blocks(_theta_block, blocks, workers)) / replicas
            values[k, i - 1] = p
            errors[k, i - 1] = math.sqrt(p * (1 - p) / replicas)
    return HittingTable(d, method, ball, values, std_error=errors, variant=variant)


def theta_residuals(table, rates, lam=None):
    """
    Largest violation of the recursions by a table: `G(x,1) = G(x,2)` and the `(x, 2)`,
    `(x, 3)` averages off the origin, `G(O,2) = G(e_1,1)` and `G(O,1) = 1`, with the exit layer
    at 0.
    """
    ball = table.ball
    u = table.values
    lam = rates.lam if lam is None else lam
    denom, weight = _theta_weights(rates, lam, table.variant or "corrected")
    degree = 2 * ball.d
    padded = np.vstack([u, np.zeros((1, 3))])
    nbr = np.where(ball.table >= 0, ball.table, len(ball))
    worst = max(abs(u[0, 0] - 1.0), abs(u[0, 1] - padded[nbr[0], 0].mean()))
    body = slice(1, None)
    r1 = u[body, 0] - u[body, 1]
    r2 = denom * u[body, 1] - u[body, 2] - weight / degree * padded[nbr[body], 0].sum(axis=1)
    r3 = u[body, 2] - padded[nbr[body], 1].mean(axis=1)
    return max(worst, float(np.abs(r1).max()), float(np.abs(r2).max()), float(np.abs(r3).max()))


def h_lambda(gamma_O2, gamma_e12, rates, lam=None, d=1):
    """
    # walk.h_lambda(gamma_O2, gamma_e12, rates, lam=None, d=1)

    ---

    ### Overview
    `h = (gamma [1 - 2 G(O,2)] - 2 G(e_1,2) - b) / (gamma + 2 + b)` with
    `b = (1 + delta + gamma) / (2 d lambda)`, where `G` is the three-component hitting table.
    `h` is positive exactly when `lambda` exceeds the bound the table supports.

    ### Parameters:
    - gamma_O2 (float): The table entry at `(O, 2)`.
    - gamma_e12 (float): The table entry at `(e_1, 2)`.
    - rates (Rates): delta and gamma, and lambda unless `lam` is given.
    - lam (float): Per-neighbor infection rate; `inf` gives the `b -> 0` limit.
    - d (int): Dimension.

    ### Returns:
    float: h.

    ### Examples:
    - Zero table entries and `lam=inf` give `gamma / (gamma + 2)`, i.e. 0.5 for `gamma = 2`.
    """
    lam = rates.lam if lam is None else lam
    b = rates.s / (2 * d * lam)
    g = rates.gamma
    return (g * (1.0 - 2.0 * gamma_O2) - 2.0 * gamma_e12 - b) / (g + 2.0 + b)


def h_from_table(table, rates, lam=None):
    """`h_lambda` with its inputs read from a three-component table."""
    ball = table.ball
    return h_lambda(table.values[ball.origin, 1], table.values[ball.unit, 1], rates, lam, table.d)


def lambda_tilde(d, rates, srw_value):
    """
    # walk.lambda_tilde(d, rates, srw_value)

    ---

    ### Overview
    Upper bound on the per-neighbor critical rate,
    `(1 + delta + gamma) / (2d [gamma - (2 gamma + 2) srw_value])`, where `srw_value` is the
    simple-walk hitting probability of the origin from `e_1`.

    ### Parameters:
    - d (int): Dimension.
    - rates (Rates): delta and gamma.
    - srw_value (float): Exact, bracketed or `kesten_value(d)`.

    ### Returns:
    float: The bound.

    ### Raises:
    - DimensionTooSmall: If the bracketed denominator is not positive.

    ### Examples:
    - `lambda_tilde(10, Rates(1, 1, 2), 0.055)` is `4 / 33.4 = 0.11976...`.
    """
    g = rates.gamma
    denominator = g - (2.0 * g + 2.0) * srw_value
    if denominator <= 0:
        raise __core__.DimensionTooSmall(
            "lambda_tilde",
            f"gamma - (2 gamma + 2) * {srw_value:.6g} = {denominator:.6g} is not positive in dimension {d}.",
            "d",
        )
    return rates.s / (2 * d * denominator)
