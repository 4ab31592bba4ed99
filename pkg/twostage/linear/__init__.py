"""
# Linear

---

## Overview
The Linear module holds the auxiliary linear system: a pair of nonnegative reals `(zeta, g)` per
site whose zero pattern is a copy of the two-stage contact process and whose first and second
moments obey linear equations. It simulates the field, builds the second-moment operator on
offsets times `{1, 2, 3}`, integrates it, and checks the positive eigenvector that yields the
upper bound on the critical value.

## Features
- `Field Simulation:` `simulate_linear_field` runs replicas of the field from all `(1, 1)`,
vectorized over replicas, and records `zeta(O)`, `g(O)`, `zeta(O)^2` and the projected counts.
- `Projection:` A site is fully infected when `zeta > 0`, semi-infected when `zeta = 0 < g` and
healthy otherwise; the projected process is the two-stage process started from all sites fully
infected.
- `First Moments:` `first_moment_rhs` and `first_moment_solution`; `(1, 1)` is a fixed point.
- `Second Moments:` `build_G` assembles the operator on a ball of offsets (one per symmetry
orbit by default), `integrate_moments` integrates `dF/dt = G F` from `F = 1`.
- `Eigenvector:` `build_K` forms `K` from the three-component hitting table and `h`;
`eigen_residual`, `second_moment_bound` and `cauchy_schwarz_occupancy` evaluate what it gives.

## Detailed Functionality

### Second-moment coordinates
`F(x, 1) = E[zeta(O) zeta(x)]`, `F(x, 2) = E[zeta(O) g(x)]` and `F(x, 3) = E[g(O) g(x)]`. Off the
origin, with `s = 1 + delta + gamma`:

- `dF(x,1) = -2 F(x,1) + 2 F(x,2)`
- `dF(x,2) = -(2 + delta + gamma) F(x,2) + F(x,3) + (s / 2d) sum_{y ~ x} F(y,1)`
- `dF(x,3) = -2 s F(x,3) + (s / d) sum_{y ~ x} F(y,2)`

and at the origin, with `b = s / (2 d lambda)`:

- `dF(O,1) = -F(O,1) + 2 F(O,2) + F(O,3) / gamma`
- `dF(O,2) = -s F(O,2) + (s / 2d) sum_{y ~ O} F(y,1)`
- `dF(O,3) = -s F(O,3) + (s / d) sum_{y ~ O} F(y,2) + s b F(O,1)`

### Truncation
The system is restricted to the offsets of l1 norm at most R. Neighbors outside the ball take a
fixed far-field value: 1 for the moments (distant sites decorrelate and every mean is 1) and `h`
for the eigenvector (the hitting table is 0 there).

## Usage

```python
from twostage import lattice, linear, walk

rates = lattice.Rates(0.15, 1.0, 2.0)
op = linear.build_G(10, 4, rates)
F = linear.integrate_moments(op, 5.0)
table = walk.theta_hit_prob(10, rates, R=4)
K = linear.build_K(table, walk.h_from_table(table, rates), rates)
linear.eigen_residual(op, K)
```
"""

from collections import namedtuple
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.sparse
from scipy.sparse.linalg import expm_multiply

import twostage as ts
from twostage import __core__
from twostage import lattice
from twostage.markov import Estimate

logger = __core__.get_logger(__name__)

X4Index = namedtuple("X4Index", ["offset", "component"])
X4Index.__doc__ = "An offset (canonical under the lattice symmetries) and a component in {1, 2, 3}."

_DENSE_LIMIT = 1_000


@dataclass
class LinearTrajectory:
    """
    Replica samples of the linear field at the recorded times. Arrays have shape
    `(replicas, len(times))`.
    """
    spec: lattice.TorusSpec
    times: np.ndarray
    zeta_origin: np.ndarray
    g_origin: np.ndarray
    fully_counts: np.ndarray
    infected_counts: np.ndarray
    seed: int = 0

    @property
    def replicas(self):
        return self.zeta_origin.shape[0]

    def estimate(self, quantity, j):
        """Mean of `zeta`, `g` or `zeta2` at the origin at time index `j`, with its standard error."""
        samples = {
            "zeta": self.zeta_origin,
            "g": self.g_origin,
            "zeta2": self.zeta_origin ** 2,
        }[quantity][:, j]
        n = len(samples)
        return Estimate(
            point=float(samples.mean()),
            replicas=n,
            std_error=float(samples.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
            seed=self.seed,
        )


def _field_block(job):
    spec, rates, lam, times, seed, first, count = job
    rng = __core__.generator(seed, ts.STREAM_LINEAR, first)
    size = spec.size
    degree = 2 * spec.d
    table = lattice.neighbor_table(spec)
    s = rates.s
    rate = s + degree * lam
    b = s / (degree * lam)
    zeta = np.ones((count, size))
    g = np.ones((count, size))
    t = np.zeros(count)
    nxt = np.zeros(count, dtype=np.int64)
    steps = len(times)
    out = {name: np.zeros((count, steps)) for name in ("zeta", "g", "fully", "infected")}

    while True:
        t_new = t + rng.exponential(1.0 / (size * rate), count)
        while True:
            due = (nxt < steps) & (t_new > times[np.minimum(nxt, steps - 1)])
            if not due.any():
                break
            idx = np.flatnonzero(due)
            j = nxt[idx]
            out["zeta"][idx, j] = zeta[idx, 0]
            out["g"][idx, j] = g[idx, 0]
            out["fully"][idx, j] = (zeta[idx] > 0).sum(axis=1)
            out["infected"][idx, j] = ((zeta[idx] > 0) | (g[idx] > 0)).sum(axis=1)
            nxt[idx] += 1
        active = np.flatnonzero(nxt < steps)
        if active.size == 0:
            break
        x = rng.integers(0, size, active.size)
        u = rng.random(active.size) * rate
        z = zeta[active, x]
        gg = g[active, x]
        kill = u < 1.0
        demote = (u >= 1.0) & (u < 1.0 + rates.delta)
        promote = (u >= 1.0 + rates.delta) & (u < s)
        infect = u >= s
        k = np.clip(((u - s) / lam).astype(np.int64), 0, degree - 1)
        y = table[x, k]
        new_z = np.where(kill, 0.0, np.where(promote, z + gg / rates.gamma, z))
        new_g = np.where(infect, gg + b * zeta[active, y], np.where(kill | demote | promote, 0.0, gg))
        zeta[active, x] = new_z
        g[active, x] = new_g
        t = t_new
    return out


def simulate_linear_field(spec, rates, lam=None, horizon=1.0, times=None, replicas=1_000, seed=0, workers=1):
    """
    # linear.simulate_linear_field(spec, rates, lam=None, horizon=1.0, times=None, replicas=1000, seed=0)

    ---

    ### Overview
    Simulates replicas of the linear field from `(zeta, g) = (1, 1)` everywhere. Each site flips
    to `(0, 0)` at rate 1, to `(zeta, 0)` at rate `delta`, to `(zeta + g / gamma, 0)` at rate
    `gamma`, and to `(zeta, g + b zeta(y))` at rate `lambda` for each neighbor `y`, with
    `b = (1 + delta + gamma) / (2 d lambda)`. Every site has the same total rate, so each pass over the
    numpy arrays moves every replica by one event.

    ### Parameters:
    - spec (TorusSpec): The torus.
    - rates (Rates), lam (float): Rates; `lam` overrides `rates.lam` and must be positive.
    - horizon (float): Last recorded time when `times` is not given.
    - times (iterable): Recording times, `(horizon,)` by default.
    - replicas (int), seed (int), workers (int): Replica count, master seed and worker count.
    Blocks of replicas own their streams, so the result does not depend on `workers`.

    ### Returns:
    LinearTrajectory: `zeta(O)`, `g(O)`, the number of sites with `zeta > 0` and the number with
    `(zeta, g) != (0, 0)` at each time.

    ### Raises:
    - ParameterError: For a non-positive horizon or infection rate.
    """
    lam = rates.lam if lam is None else lam
    lattice.validate(rates.with_lambda(lam), spec)
    times = np.asarray(sorted(times) if times is not None else [horizon], dtype=float)
    if times.size == 0 or times[-1] <= 0:
        raise __core__.ParameterError("simulate_linear_field", "Recording times must be positive.", "horizon")
    blocks = [(spec, rates, lam, times, seed, first, count) for first, count in __core__.fixed_blocks(replicas)]
    parts = __core__.run_blocks(_field_block, blocks, workers)
    stack = {name: np.vstack([p[name] for p in parts]) for name in ("zeta", "g", "fully", "infected")}
    return LinearTrajectory(
        spec=spec,
        times=times,
        zeta_origin=stack["zeta"],
        g_origin=stack["g"],
        fully_counts=stack["fully"].astype(np.int64),
        infected_counts=stack["infected"].astype(np.int64),
        seed=seed,
    )


def first_moment_rhs(m, rates):
    """Right side of the first-moment equations for `(E zeta(O), E g(O))`."""
    m0, m1 = m
    return np.array([-m0 + m1, rates.s * (m0 - m1)])


def first_moment_solution(t, rates, m0=(1.0, 1.0)):
    """Exact solution of the first-moment equations at time `t`."""
    s = rates.s
    a = np.array([[-1.0, 1.0], [s, -s]])
    return scipy.linalg.expm(t * a) @ np.asarray(m0, dtype=float)


@dataclass
class MomentOperator:
    """
    The truncated second-moment operator. Row `3k + i - 1` is the equation of offset `k`,
    component `i`; `far_field` holds the coefficients of the value taken outside the ball.
    """
    ball: lattice.OffsetBall
    rates: lattice.Rates
    lam: float
    matrix: scipy.sparse.csr_matrix
    far_field: np.ndarray

    @property
    def size(self):
        return self.matrix.shape[0]

    def index(self, offset, component):
        return 3 * self.ball.find(offset) + component - 1

    def labels(self):
        return [X4Index(o, i) for o in self.ball.offsets for i in (1, 2, 3)]

    def apply(self, values, far=1.0):
        return self.matrix @ values + far * self.far_field

    def interior_rows(self, margin=1):
        return np.repeat(self.ball.interior(margin), 3)


def build_G(d, R, rates, lam=None, reduce_symmetry=True):
    """
    # linear.build_G(d, R, rates, lam=None, reduce_symmetry=True)

    ---

    ### Overview
    Assembles the second-moment operator on the offsets of l1 norm at most `R` (see the module
    notes for the rows). With `reduce_symmetry` each row stands for a whole orbit of the
    hyperoctahedral group and the neighbor sums are folded onto orbit representatives.

    ### Parameters:
    - d (int): Dimension.
    - R (int): Truncation radius, at least 2.
    - rates (Rates), lam (float): Rates; `lam` overrides `rates.lam`.
    - reduce_symmetry (bool): One row per orbit (default) or one per offset.

    ### Returns:
    MomentOperator: The sparse operator and its far-field coefficients.

    ### Raises:
    - ParameterError: If `R < 2`.

    ### Examples:
    - Applied to all ones (far field 1), every row vanishes except `(O, 1)`, which gives
    `1 + 1/gamma`, and `(O, 3)`, which gives `s (1 + b)`.
    """
    if R < 2:
        raise __core__.ParameterError("build_G", f"'R' must be at least 2, got {R}.", "R")
    lam = rates.lam if lam is None else lam
    lattice.validate_rates(rates.with_lambda(lam))
    ball = lattice.OffsetBall(d, R, reduce_symmetry)
    degree = 2 * d
    s = rates.s
    b = rates.with_lambda(lam).b(d)
    n = len(ball)
    rows, cols, vals = [], [], []
    far = np.zeros(3 * n)

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    def neighbor_sum(r, k, component, weight):
        for j in range(degree):
            y = ball.table[k, j]
            if y >= 0:
                put(r, 3 * y + component - 1, weight)
            else:
                far[r] += weight

    o = ball.origin
    put(0, 0, -1.0)
    put(0, 1, 2.0)
    put(0, 2, 1.0 / rates.gamma)
    put(1, 1, -s)
    neighbor_sum(1, o, 1, s / degree)
    put(2, 2, -s)
    neighbor_sum(2, o, 2, s / d)
    put(2, 0, s * b)
    for k in range(1, n):
        r1, r2, r3 = 3 * k, 3 * k + 1, 3 * k + 2
        put(r1, r1, -2.0)
        put(r1, r2, 2.0)
        put(r2, r2, -(2.0 + rates.delta + rates.gamma))
        put(r2, r3, 1.0)
        neighbor_sum(r2, k, 1, s / degree)
        put(r3, r3, -2.0 * s)
        neighbor_sum(r3, k, 2, s / d)
    matrix = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(3 * n, 3 * n))
    logger.debug(f"moment operator d={d} R={R}: {3 * n} rows, {matrix.nnz} entries")
    return MomentOperator(ball, rates, lam, matrix, far)


@dataclass
class MomentVector:
    """
    Values on offsets times `{1, 2, 3}` in operator order, with the value `far` assumed outside
    the ball. Integrated vectors also carry `F(O, 1)` along the requested times.
    """
    ball: lattice.OffsetBall
    values: np.ndarray
    far: float = 1.0
    time: float = None
    times: np.ndarray = None
    origin_series: np.ndarray = None

    def value(self, offset, component):
        return float(self.values[3 * self.ball.find(offset) + component - 1])

    @property
    def origin(self):
        return float(self.values[0])

    def rows(self):
        """`(offset, component, value)` tuples for CSV output."""
        return [
            (" ".join(str(c) for c in offset), i, float(self.values[3 * k + i - 1]))
            for k, offset in enumerate(self.ball.offsets)
            for i in (1, 2, 3)
        ]


def integrate_moments(op, t, method="rk45", times=None, atol=None, rtol=None):
    """
    # linear.integrate_moments(op, t, method="rk45", times=None, atol=None, rtol=None)

    ---

    ### Overview
    Integrates `dF/dt = G F` (with far field 1) from `F = 1` up to `t`, either with the adaptive
    Dormand-Prince pair of `solve_ivp` or by exponentiating the operator, which serves as the
    exact reference on small balls.

    ### Parameters:
    - op (MomentOperator): From `build_G`.
    - t (float): Final time, nonnegative.
    - method (str): `rk45` or `expm`.
    - times (iterable): Times at which `F(O, 1)` is recorded, `t` included.
    - atol, rtol (float): Tolerances, `DEFAULT_ODE_ATOL` and `DEFAULT_ODE_RTOL` by default.

    ### Returns:
    MomentVector: `F_t` with the series of `F(O, 1)`.

    ### Raises:
    - ParameterError: For `t < 0` or an unknown method.
    - StepError: If the step control fails.
    """
    if t < 0:
        raise __core__.ParameterError("integrate_moments", f"'t' must be nonnegative, got {t}.", "t")
    atol = atol or ts.DEFAULT_ODE_ATOL
    rtol = rtol or ts.DEFAULT_ODE_RTOL
    grid = np.unique(np.append(np.asarray(times if times is not None else [], dtype=float), t))
    grid = grid[(grid >= 0) & (grid <= t)]
    y0 = np.ones(op.size)

    if t == 0:
        return MomentVector(op.ball, y0, 1.0, 0.0, grid, np.ones(len(grid)))

    if method == "rk45":
        sol = scipy.integrate.solve_ivp(
            lambda _, y: op.apply(y), (0.0, t), y0, method="RK45", t_eval=grid, atol=atol, rtol=rtol,
        )
        if not sol.success:
            raise __core__.StepError("integrate_moments", f"Integration stopped at t={sol.t[-1]:.6g}: {sol.message}")
        path = sol.y
    elif method == "expm":
        # augment with a constant coordinate that carries the far field
        aug = scipy.sparse.bmat([
            [op.matrix, scipy.sparse.csr_matrix(op.far_field.reshape(-1, 1))],
            [None, scipy.sparse.csr_matrix((1, 1))],
        ]).tocsc()
        start = np.ones(op.size + 1)
        if op.size < _DENSE_LIMIT:
            dense = aug.toarray()
            path = np.column_stack([scipy.linalg.expm(tau * dense) @ start for tau in grid])[:-1]
        else:
            path = np.column_stack([expm_multiply(tau * aug, start) for tau in grid])[:-1]
    else:
        raise __core__.ParameterError("integrate_moments", f"Unknown method {method!r}.", "method")

    final = path[:, -1]
    if final.min() < -10 * atol:
        logger.warning(f"moment vector has a negative entry {final.min():.3g} at t={t}")
    return MomentVector(op.ball, final, 1.0, float(t), grid, path[0].copy())


def radius_gate(d, R, rates, lam=None, t=1.0, tol=1e-3):
    """
    Relative change of `F_t(O, 1)` when the radius doubles. Returns `(value, change, passed)`.
    """
    small = integrate_moments(build_G(d, R, rates, lam), t).origin
    large = integrate_moments(build_G(d, 2 * R, rates, lam), t).origin
    change = abs(large - small) / abs(large)
    return large, change, change < tol


def build_K(table, h, rates):
    """
    # linear.build_K(table, h, rates)

    ---

    ### Overview
    The candidate eigenvector `K(x, i) = Gamma(x, i) + h`, except
    `K(O, 3) = gamma [1 - 2 Gamma(e_1, 1) - h]`, where `Gamma` is the three-component hitting table.

    ### Parameters:
    - table (HittingTable): From `walk.theta_hit_prob`.
    - h (float): From `walk.h_lambda`.
    - rates (Rates): gamma.

    ### Returns:
    MomentVector: K, with far-field value `h`.

    ### Raises:
    - DomainError: If some entry is not positive, which happens when lambda is at or below the
    bound or the ball is too small.
    """
    ball = table.ball
    values = table.values.copy() + h
    values[ball.origin, 2] = rates.gamma * (1.0 - 2.0 * table.values[ball.unit, 0] - h)
    values = values.reshape(-1)
    if values.min() <= 0 or h <= 0:
        raise __core__.DomainError(
            "build_K", f"min K = {min(values.min(), h):.6g} is not positive; lambda is too small for this bound."
        )
    return MomentVector(ball, values, far=h)


def eigen_residual(op, K):
    """
    `|G K|` on the interior rows (offsets of norm below `R - 1`) and on the origin rows.
    Returns `(interior, origin)`.
    """
    r = np.abs(op.apply(K.values, far=K.far))
    return float(r[op.interior_rows()].max()), float(r[:3].max())


def second_moment_bound(K):
    """
    `K(O, 1) / min(min K, h)`: bounds `F_t(O, 1)` for all `t`, since `F_0 = 1` lies below
    `K / min(min K, h)` and the far field 1 below `h / min(min K, h)`.
    """
    return K.origin / min(K.values.min(), K.far)


def cauchy_schwarz_occupancy(F):
    """`1 / F(O, 1)`: lower bound on the probability that the origin has `zeta > 0`."""
    return 1.0 / F.origin
