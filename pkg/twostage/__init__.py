"""
# TwoStageLab

---

## Overview
TwoStageLab is a simulation and verification laboratory for the two-stage contact process on
the lattice, its dual on-off process and the comparison processes used to bound its critical
value: a two-type branching process, a linear system with real-valued spins and the random
walks whose hitting probabilities enter the bounds.

Here's a brief description of what the library does:

1. `Lattice:` Finite tori standing in for the infinite lattice, packed site indices and
validated rate parameters (`twostage.lattice`).

2. `Simulation:` Exact event-driven simulation of the two-stage and on-off processes, survival
estimates and a brute-force distribution oracle for tiny tori (`twostage.markov`), plus the
graphical representation that couples many initial conditions on one sample
(`twostage.graphical`).

3. `Comparison Processes:` The two-type branching process and its closed-form survival
probability (`twostage.branching`), the linear system and its moment equations
(`twostage.linear`) and the random-walk hitting probabilities (`twostage.walk`).

4. `Bounds:` Closed-form lower and upper bounds on the critical value and their asymptotic
constants (`twostage.bounds`), and the upper invariant measure with its product-measure
prediction (`twostage.invariant`).

5. `Experiments:` A configuration-driven harness with a command line (`twostage.harness`,
`python -m twostage`).

All rates are given per neighbor. Where the theory works with the rate `lambda / (2d)`, the
functions say so and take the unscaled value.
"""

import os

from twostage import __core__

STREAM_MARKOV = 1
"""
Stream family of the direct simulator replicas.
"""
STREAM_GRAPHICAL = 2
"""
Stream family of graphical-representation samples.
"""
STREAM_BRANCHING = 3
"""
Stream family of branching-process replicas.
"""
STREAM_LINEAR = 4
"""
Stream family of linear-system replicas.
"""
STREAM_WALK = 5
"""
Stream family of random-walk replicas.
"""
STREAM_NU = 6
"""
Stream family of the invariant-measure sampler.
"""
STREAM_ALPHA = 7
"""
Stream family of the exponential-clock scheme behind the binomial tail.
"""
STREAM_HARNESS = 8
"""
Stream family of the harness: random duality queries and derived per-point seeds.
"""

DEFAULT_SURVIVAL_THRESHOLD = 0.02
"""
Survival-at-horizon probability that marks the Monte Carlo critical crossing.
"""
DEFAULT_POPULATION_CAP = 10_000
"""
Population at which a branching replica is declared a survivor.
"""
DEFAULT_ORACLE_STATES = 2_000_000
"""
Largest state count the truncated branching oracle will solve.
"""
DEFAULT_WALK_STEP_CAP = 1_000_000
"""
Step cap of Monte Carlo random walks in transient dimensions.
"""
DEFAULT_ODE_ATOL = 1e-8
"""
Absolute tolerance of the moment integrator.
"""
DEFAULT_ODE_RTOL = 1e-8
"""
Relative tolerance of the moment integrator.
"""
EXACT_STATE_BUDGET = 3 ** 8
"""
Largest state space of the brute-force distribution oracle (eight sites).
"""
DENSE_EXPM_LIMIT = 3 ** 6
"""
Up to this many states the oracle exponentiates the dense generator; above it, it uses
`expm_multiply` on the sparse one.
"""
DEFAULT_REPLICA_BUDGET = 50_000_000
"""
Most replica-horizon units a single sweep may request.
"""
DEFAULT_WORKERS = max(1, int(os.environ.get("TWOSTAGE_WORKERS", "1") or 1))
"""
Number of worker processes. Only the `TWOSTAGE_WORKERS` environment variable overrides it.
"""

__version__ = __core__.__version__
