"""
# Harness

---

## Overview
The Harness module runs the experiments of TwoStageLab from a flat configuration file and writes
their results as CSV or JSON, together with a `manifest.json` that records the configuration,
the seed, the library versions, the wall time and the outcome of every gate. Data files carry no
timing information, so a rerun with the same configuration and seed reproduces them byte for
byte.

## Features
- `Configuration:` `load_config` reads `key = value` lines with `configparser` (no sections, no
includes); command-line flags override file values and `TWOSTAGE_WORKERS` overrides the worker
count. `validate_config` returns the normalized echo, and `dump_config` writes it back.
- `Experiments:` Eight kinds, listed by `list_experiments`: `survival-sweep`, `duality-check`,
`branching-verify`, `moments`, `hitting-tables`, `bounds-report`, `invariant-gap` and
`six-bounds`.
- `Rate Convention:` `lambda` is read per neighbor unless `rate_scale = total`, in which case it
is the total rate and `lambda / (2d)` is used on the lattice. `branching-verify`,
`invariant-gap` and `six-bounds` default to `total`. The manifest records both values.
- `Gates and Checks:` Gates (stability, stationarity, exact identities) turn into a nonzero
exit status when they fail; statistical agreement checks are only recorded.

## Usage

```
python -m twostage list
python -m twostage validate --config sweep.cfg
python -m twostage survival-sweep --config sweep.cfg --seed 3 --out results --format csv
```

```python
from twostage import harness

config = harness.load_config("sweep.cfg", {"seed": 3})
status = harness.run(config)
```
"""

import argparse
import configparser
import csv
import json
import math
import os
import platform
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import scipy

import twostage as ts
from twostage import __core__
from twostage import bounds
from twostage import branching
from twostage import invariant
from twostage import lattice
from twostage import linear
from twostage import markov
from twostage import walk

logger = __core__.get_logger(__name__)

EXPERIMENTS = {
    "survival-sweep": "Monte Carlo bracket of the critical value over a grid of rates (grid, L, horizon, replicas).",
    "duality-check": "Both sides of the duality on random (A, B, C, D, t); exact on at most eight sites.",
    "branching-verify": "Closed-form branching survival against Monte Carlo and the truncated oracle (pairs n:m).",
    "moments": "Second-moment operator integrated to time t on the ball of radius R, with the radius gate.",
    "hitting-tables": "Hitting tables of the simple and the three-component walk on the ball of radius R.",
    "bounds-report": "Closed-form lower and upper bounds, their constants and scaled gaps for each d in dims.",
    "invariant-gap": "Invariant-measure samples against the product prediction over the set families (pairs m:n), "
                     "with the branching upper and six-part lower sandwich on 1 - pi.",
    "six-bounds": "Binomial tail, mu(M), the occupancy bound and the composite lower bound for each M in counts; "
                  "monte_carlo = true estimates b_tilde from invariant-measure samples on the torus of side L.",
}
"""
Experiment kinds and their one-line descriptions.
"""

TOTAL_RATE_KINDS = ("branching-verify", "invariant-gap", "six-bounds")
"""
Kinds whose `lambda` is the total rate unless the configuration says otherwise.
"""

FORMATS = ("csv", "json")
RATE_SCALES = ("per-neighbor", "total")

_SECTION = "experiment"


@dataclass
class ExperimentConfig:
    experiment: str = None
    lam: float = 1.0
    delta: float = 1.0
    gamma: float = 2.0
    rate_scale: str = None
    d: int = 1
    L: int = 3
    horizon: float = 10.0
    replicas: int = 1000
    seed: int = 0
    workers: int = 1
    format: str = "csv"
    out: str = "results"
    grid: tuple = ()
    dims: tuple = ()
    threshold: float = None
    check_horizon: bool = False
    budget: float = None
    R: int = 4
    t: float = 1.0
    integrator: str = "rk45"
    monte_carlo: bool = False
    tol: float = 1e-3
    method: str = "linear_solve"
    variant: str = "corrected"
    trials: int = 20
    cap: int = ts.DEFAULT_POPULATION_CAP
    oracle_cap: int = 1600
    pairs: tuple = ((1, 0), (0, 1), (1, 1))
    burn_in: float = 10.0
    samples: int = 100
    thinning: float = 1.0
    chains: int = 1
    M: int = 100
    counts: tuple = ()
    n: int = 1
    m: int = 1
    strict: bool = True

    def lam_for(self, d, total=False):
        """The configured rate as a total (`total=True`) or per-neighbor rate in dimension `d`."""
        if self.rate_scale == "total":
            return self.lam if total else self.lam / (2 * d)
        return 2 * d * self.lam if total else self.lam

    def rates(self, d, total=False):
        return lattice.Rates(self.lam_for(d, total), self.delta, self.gamma)


def _key(name):
    return "lambda" if name == "lam" else name


_KINDS = {
    "lam": float, "delta": float, "gamma": float, "horizon": float, "t": float, "tol": float,
    "burn_in": float, "thinning": float,
    "d": int, "L": int, "replicas": int, "seed": int, "workers": int, "R": int, "trials": int, "cap": int,
    "oracle_cap": int, "samples": int, "chains": int, "M": int, "n": int, "m": int,
    "experiment": str, "rate_scale": str, "format": str, "out": str, "integrator": str, "method": str,
    "variant": str,
    "threshold": "optional", "budget": "optional",
    "check_horizon": bool, "monte_carlo": bool, "strict": bool,
    "grid": "floats", "dims": "ints", "counts": "ints", "pairs": "pairs",
}

_ATTRS = {_key(f.name): f.name for f in fields(ExperimentConfig)}

_EXPECTED = {
    float: "a real number", int: "an integer", str: "a string", bool: "true or false",
    "optional": "a real number or none", "floats": "a comma-separated list of reals",
    "ints": "a comma-separated list of integers", "pairs": "a comma-separated list of a:b integer pairs",
}


def _coerce(key, kind, text):
    text = str(text).strip()
    try:
        if kind is bool:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind == "optional":
            return None if text.lower() in ("", "none") else float(text)
        if kind == "floats":
            return tuple(float(x) for x in text.split(",") if x.strip())
        if kind == "ints":
            return tuple(int(x) for x in text.split(",") if x.strip())
        if kind == "pairs":
            return tuple(tuple(int(v) for v in x.split(":")) for x in text.split(",") if x.strip())
        value = kind(text)
        if kind is float and not math.isfinite(value):
            raise ValueError(text)
        return value
    except ValueError:
        raise __core__.ConfigError("load_config", f"'{key}' must be {_EXPECTED[kind]}, got {text!r}.", key)


def _render(kind, value):
    if kind is bool:
        return "true" if value else "false"
    if kind in ("floats", "ints"):
        return ", ".join(repr(v) for v in value)
    if kind == "pairs":
        return ", ".join(f"{a}:{b}" for a, b in value)
    return repr(value) if isinstance(value, float) else str(value)


def _read_file(path):
    if not os.path.isfile(path):
        raise __core__.ConfigError("load_config", f"No configuration file at '{path}'.", "config")
    parser = configparser.ConfigParser(
        interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"), inline_comment_prefixes=("#",)
    )
    parser.optionxform = str
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    try:
        parser.read_string(f"[{_SECTION}]\n" + text, source=path)
    except configparser.Error as e:
        raise __core__.ConfigError("load_config", f"Cannot parse '{path}': {e}", "config")
    if parser.sections() != [_SECTION]:
        raise __core__.ConfigError("load_config", "Sections are not supported; use flat 'key = value' lines.", "config")
    return dict(parser[_SECTION])


def config_from_mapping(raw):
    """
    Builds and validates a configuration from `key -> value` pairs, values as text or Python
    scalars.
    """
    values = {}
    for key, text in raw.items():
        if key not in _ATTRS:
            raise __core__.ConfigError("load_config", f"Unknown key '{key}'.", key)
        attr = _ATTRS[key]
        values[attr] = _coerce(key, _KINDS[attr], text)
    return _validate(ExperimentConfig(**values))


def load_config(path=None, overrides=None):
    """
    # harness.load_config(path=None, overrides=None)

    ---

    ### Overview
    Reads a flat `key = value` file, applies `TWOSTAGE_WORKERS` to the worker count and then the
    `overrides` (command-line values), and validates the result.

    ### Parameters:
    - path (str): Configuration file; omitted when everything comes from `overrides`.
    - overrides (dict): Key to value, applied last.

    ### Returns:
    ExperimentConfig: The validated configuration.

    ### Raises:
    - ConfigError: For an unreadable file, unknown key, malformed value or failed validation;
    `field` names the key.

    ### Examples:

    ```
    experiment = survival-sweep
    lambda = 0.2
    grid = 0.1, 0.12, 0.14
    d = 10
    L = 3
    ```
    """
    raw = _read_file(path) if path else {}
    env = os.environ.get("TWOSTAGE_WORKERS")
    if env:
        raw["workers"] = env
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return config_from_mapping(raw)


def _validate(config):
    def fail(key, message):
        raise __core__.ConfigError("validate_config", message, key)

    if config.experiment not in EXPERIMENTS:
        fail("experiment", f"Unknown experiment {config.experiment!r}; expected one of {', '.join(EXPERIMENTS)}.")
    if config.rate_scale is None:
        config.rate_scale = "total" if config.experiment in TOTAL_RATE_KINDS else "per-neighbor"
    if config.rate_scale not in RATE_SCALES:
        fail("rate_scale", f"'rate_scale' must be one of {RATE_SCALES}.")
    if config.format not in FORMATS:
        fail("format", f"'format' must be one of {FORMATS}.")
    try:
        lattice.validate_rates(lattice.Rates(config.lam, config.delta, config.gamma))
        for d in config.dims or (config.d,):
            lattice.validate_spec(lattice.TorusSpec(d, config.L))
    except __core__.ParameterError as e:
        fail(e.field, e.explanation)
    if config.horizon <= 0:
        fail("horizon", "'horizon' must be positive.")
    if config.replicas < 0:
        fail("replicas", "'replicas' must be nonnegative.")
    if config.workers < 1:
        fail("workers", "'workers' must be at least 1.")
    if config.experiment == "survival-sweep" and not config.grid:
        fail("grid", "The survival sweep needs a nonempty rate grid.")
    if config.experiment == "moments" and config.integrator not in ("rk45", "expm"):
        fail("integrator", "'integrator' must be rk45 or expm.")
    if config.experiment == "hitting-tables":
        if config.d < 3:
            fail("d", "The walks are recurrent below dimension 3.")
        if config.method not in walk.METHODS[:2] or config.variant not in walk.VARIANTS:
            fail("method", f"'method' must be one of {walk.METHODS[:2]} and 'variant' one of {walk.VARIANTS}.")
    if config.experiment == "six-bounds":
        for M in config.counts or (config.M,):
            if M <= config.n + config.m:
                fail("M", f"M = {M} must exceed n + m = {config.n + config.m}.")
    if any(len(pair) != 2 or min(pair) < 0 for pair in config.pairs):
        fail("pairs", "Every pair must be two nonnegative integers a:b.")
    return config


def echo(config):
    """Normalized `key -> value` record of a configuration, in declaration order."""
    out = {}
    for f in fields(ExperimentConfig):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            value = [list(v) if isinstance(v, tuple) else v for v in value]
        out[_key(f.name)] = value
    return out


def dump_config(config):
    """Flat `key = value` text that `load_config` reads back to the same configuration."""
    lines = []
    for f in fields(ExperimentConfig):
        value = getattr(config, f.name)
        if value is None:
            continue
        lines.append(f"{_key(f.name)} = {_render(_KINDS[f.name], value)}")
    return "\n".join(lines) + "\n"


def validate_config(path, overrides=None):
    """
    # harness.validate_config(path, overrides=None)

    ---

    ### Overview
    Loads and validates a configuration file without running it.

    ### Returns:
    dict: The normalized echo; validating a file written from it gives the same echo.

    ### Raises:
    - ConfigError: As for `load_config`.
    """
    return echo(load_config(path, overrides))


def list_experiments():
    """`(kind, description)` for every experiment kind."""
    return list(EXPERIMENTS.items())


@dataclass
class ExperimentResult:
    columns: list
    rows: list
    gates: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def _sites(sites):
    return " ".join(str(int(x)) for x in sites)


def _derived_seeds(config, family, count):
    """Per-point seeds drawn from the harness stream, so grid points never share a stream."""
    rng = __core__.generator(config.seed, ts.STREAM_HARNESS, family)
    return [int(s) for s in rng.integers(0, 2 ** 31, size=count)]


def _consistent(grid, bracket, lower, upper, widen=2):
    if bracket.degenerate or lower is None or upper is None:
        return None
    lo = grid[max(grid.index(bracket.lam_lo) - widen, 0)]
    hi = grid[min(grid.index(bracket.lam_hi) + widen, len(grid) - 1)]
    return lo <= upper and hi >= lower


def _survival_sweep(config):
    d = config.d
    rates = config.rates(d)
    grid = sorted(g / (2 * d) if config.rate_scale == "total" else g for g in config.grid)
    bracket = bounds.bracket_critical(
        d, rates, grid, L=config.L, horizon=config.horizon, replicas=config.replicas, seed=config.seed,
        threshold=config.threshold, budget=config.budget, workers=config.workers, check_horizon=config.check_horizon,
    )
    report = bounds.bounds_report(d, rates)
    rows = [
        {"lambda_per_neighbor": lam, "lambda_total": 2 * d * lam, "survival": p, "std_error": se}
        for lam, p, se in bracket.points
    ]
    checks = {
        "bracket_found": not bracket.degenerate,
        "consistent_with_bounds": _consistent(grid, bracket, report.lower_337, report.upper_420),
    }
    return ExperimentResult(
        ["lambda_per_neighbor", "lambda_total", "survival", "std_error"], rows,
        gates=dict(bracket.gates), checks=checks, extra={"bracket": bracket.as_dict(), "bounds": report.as_dict()},
    )


def _duality_check(config):
    spec = lattice.TorusSpec(config.d, config.L)
    rates = config.rates(config.d)
    rng = __core__.generator(config.seed, ts.STREAM_HARNESS, 0)
    exact = 3 ** spec.size <= ts.EXACT_STATE_BUDGET
    rows = []
    for trial in range(config.trials):
        ab = rng.integers(0, 3, spec.size)
        cd = rng.integers(0, 3, spec.size)
        A, B = np.flatnonzero(ab == 1), np.flatnonzero(ab == 2)
        C, D = np.flatnonzero(cd == 1), np.flatnonzero(cd == 2)
        t = float(rng.uniform(0.0, config.horizon))
        if exact:
            lhs, rhs = markov.duality_sides(spec, rates, A, B, C, D, t)
            se = 0.0
        else:
            seed = int(rng.integers(0, 2 ** 31))
            left, right = markov.duality_sides_monte_carlo(spec, rates, A, B, C, D, t, config.replicas, seed, config.workers)
            lhs, rhs, se = left.point, right.point, math.hypot(left.std_error, right.std_error)
        rows.append({
            "trial": trial, "A": _sites(A), "B": _sites(B), "C": _sites(C), "D": _sites(D), "t": t,
            "lhs": float(lhs), "rhs": float(rhs), "abs_diff": abs(float(lhs) - float(rhs)), "std_error": se,
        })
    worst = max((row["abs_diff"] for row in rows), default=0.0)
    result = ExperimentResult(
        ["trial", "A", "B", "C", "D", "t", "lhs", "rhs", "abs_diff", "std_error"], rows,
        extra={"mode": "exact" if exact else "monte_carlo", "max_abs_diff": worst},
    )
    if exact:
        result.gates["duality_exact"] = worst <= 1e-10
    else:
        result.checks["duality_3se"] = all(row["abs_diff"] <= 3 * row["std_error"] + 1e-12 for row in rows)
    return result


def _branching_verify(config):
    rates = config.rates(config.d, total=True)
    seeds = _derived_seeds(config, 1, len(config.pairs))
    residuals = list(branching.recursion_residuals(rates)) + [branching.fixed_point_residual(rates)]
    rows, mc_ok, oracle_ok = [], True, True
    for (n, m), seed in zip(config.pairs, seeds):
        closed = branching.survival_closed_form(n, m, rates)
        residuals.append(branching.product_residual(n, m, rates))
        row = {"n_fully": n, "m_semi": m, "lambda_total": rates.lam, "closed_form": closed}
        if config.replicas > 0:
            est = branching.estimate_branching_survival(
                (n, m), rates, replicas=config.replicas, seed=seed, cap=config.cap, workers=config.workers
            )
            row.update(monte_carlo=est.point, std_error=est.std_error)
            mc_ok &= abs(est.point - closed) <= 3 * est.std_error + 1e-12
        if n + m > 0:
            oracle, increment, cap = branching.truncated_survival_sweep((n, m), rates, max_cap=config.oracle_cap)
            row.update(oracle=oracle, oracle_increment=increment, oracle_cap=cap)
            oracle_ok &= abs(oracle - closed) <= 1e-3
        rows.append(row)
    return ExperimentResult(
        ["n_fully", "m_semi", "lambda_total", "closed_form", "monte_carlo", "std_error", "oracle",
         "oracle_increment", "oracle_cap"],
        rows,
        gates={"identities": max(abs(r) for r in residuals) <= 1e-12},
        checks={"monte_carlo_3se": bool(mc_ok) if config.replicas > 0 else None, "oracle_1e-3": bool(oracle_ok)},
        extra={"mean_offspring": branching.mean_offspring(rates)},
    )


def _moments(config):
    d = config.d
    rates = config.rates(d)
    op = linear.build_G(d, config.R, rates)
    vector = linear.integrate_moments(op, config.t, method=config.integrator)
    _, change, passed = linear.radius_gate(d, config.R, rates, t=config.t, tol=config.tol)
    rows = [{"offset": offset, "component": i, "F_t": value} for offset, i, value in vector.rows()]
    result = ExperimentResult(
        ["offset", "component", "F_t"], rows,
        gates={"radius": passed},
        extra={
            "t": config.t, "origin": vector.origin, "radius_change": change,
            "cauchy_schwarz_occupancy": linear.cauchy_schwarz_occupancy(vector),
        },
    )
    if config.monte_carlo:
        field_run = linear.simulate_linear_field(
            lattice.TorusSpec(d, config.L), rates, horizon=config.t, replicas=config.replicas, seed=config.seed,
            workers=config.workers,
        )
        est = field_run.estimate("zeta2", 0)
        result.extra["monte_carlo"] = est.as_dict()
        result.checks["monte_carlo_3se"] = abs(est.point - vector.origin) <= 3 * est.std_error + 1e-12
    return result


def _hitting_tables(config):
    d = config.d
    rates = config.rates(d)
    srw = walk.srw_table(d, config.R)
    theta = walk.theta_hit_prob(
        d, rates, method=config.method, R=config.R, variant=config.variant, replicas=config.replicas,
        seed=config.seed, workers=config.workers,
    )
    rows = [
        {"walk": name, "offset": offset, "component": i, "value": value, "error": error}
        for name, table in (("simple", srw), ("three-component", theta))
        for offset, i, value, error in table.rows()
    ]
    e1 = (1,) + (0,) * (d - 1)
    result = ExperimentResult(
        ["walk", "offset", "component", "value", "error"], rows,
        extra={"kesten": walk.kesten_value(d), "srw_e1": srw.value(e1), "theta_e1": theta.value(e1, 1)},
    )
    if config.method == "linear_solve":
        result.extra["h"] = walk.h_from_table(theta, rates)
        result.gates["recursions"] = walk.theta_residuals(theta, rates) <= 1e-8
        result.gates["domination"] = bool(np.all(theta.values[:, 0] <= srw.values + 1e-9))
    else:
        slack = 3 * np.nan_to_num(theta.std_error[:, 0]) + 1e-12
        result.checks["domination_3se"] = bool(np.all(theta.values[:, 0] <= srw.values + slack))
    return result


_REPORT_COLUMNS = ["d", "lower_337", "upper_420", "upper_420_exact", "srw_kesten", "srw_exact", "f1", "f2",
                   "lower_gap", "upper_gap", "notes"]


def _bounds_report(config):
    rows, ordered = [], True
    for d in config.dims or (config.d,):
        report = bounds.bounds_report(d, config.rates(d))
        row = {c: getattr(report, c) for c in _REPORT_COLUMNS if c != "notes"}
        row["notes"] = "; ".join(report.notes)
        rows.append(row)
        for upper in (report.upper_420, report.upper_420_exact):
            if report.lower_337 is not None and upper is not None:
                ordered &= report.lower_337 < upper
    f1, f2 = bounds.f_constants(config.rates(config.d))
    return ExperimentResult(_REPORT_COLUMNS, rows, checks={"ordered": bool(ordered)}, extra={"f1": f1, "f2": f2})


_GAP_COLUMNS = ["d", "L", "m", "n", "family", "estimate", "prediction", "gap", "std_error", "spread_ok", "dual",
                "dual_std_error", "upper", "composite", "b_tilde", "reach_M", "reach_std_error"]


def _lower_parts(config, samples, rates, m, n):
    """Six-part lower bound for the pair with `b_tilde` estimated from the same samples, or None."""
    d = samples.spec.d
    M = min(config.M, 2 * d - 1)
    if M <= n + m:
        return None
    try:
        est, _ = invariant.b_tilde_estimate(invariant.mu(M, rates), samples)
        return invariant.six_bounds(M, n, m, d, rates, b_tilde=est.point)
    except __core__.DomainError as e:
        logger.info(f"no lower sandwich for m={m} n={n} in d={d}: {e.explanation}")
        return None


def _invariant_gap(config):
    dims = sorted(config.dims or (config.d,))
    rows, gates, checks = [], {}, {}
    gaps = {pair: [] for pair in config.pairs}
    occupancy = {}
    for d in dims:
        spec = lattice.TorusSpec(d, config.L)
        rates = config.rates(d, total=True)
        sampler = invariant.NuSampler(spec, rates, config.burn_in, config.samples, config.thinning, config.seed,
                                      config.chains)
        samples = invariant.sample_nu(sampler, config.workers)
        gates[f"stationarity_d{d}"] = samples.metadata["stationarity_gate"]
        occupancy[str(d)] = float(samples.occupancy().mean())
        for k, (m, n) in enumerate(config.pairs):
            tag = f"d{d}_m{m}_n{n}"
            report = invariant.product_gap(m, n, samples)
            gaps[(m, n)].append(report.gap)
            pair = invariant.set_family(spec, m, n, ("clustered",))["clustered"]
            query = invariant.PiQuery(pair.A, pair.B)
            parts = _lower_parts(config, samples, rates, m, n)
            dual = reach = None
            if config.replicas > 0:
                dual = invariant.dual_pi(query, spec, rates, config.horizon, config.replicas, config.seed,
                                         config.workers, family=k)
                if parts is not None:
                    reach = invariant.reach_count_estimate(query, spec, rates, parts.M, config.replicas,
                                                           config.seed, workers=config.workers,
                                                           family=len(config.pairs) + k)
                    checks[f"tau_M_{tag}"] = reach.point + 3 * reach.std_error + 1e-12 >= parts.branching_factor
            for row in report.rows:
                out = dict(row._asdict(), d=d, L=config.L)
                if row.family == "clustered":
                    # estimates of 1 - pi against the branching upper and the six-part lower bound
                    escape = 1.0 - row.estimate
                    upper = invariant.one_minus_pi_upper(m, n, rates)
                    out.update(upper=upper)
                    checks[f"sandwich_upper_{tag}"] = escape <= upper + 3 * row.std_error + 1e-12
                    if parts is not None and parts.composite is not None:
                        out.update(composite=parts.composite, b_tilde=parts.b_tilde)
                        checks[f"sandwich_lower_{tag}"] = escape + 3 * row.std_error + 1e-12 >= parts.composite
                    if reach is not None:
                        out.update(reach_M=reach.point, reach_std_error=reach.std_error)
                    if dual is not None:
                        out.update(dual=dual.point, dual_std_error=dual.std_error)
                        checks[f"dual_{tag}"] = abs(dual.point - row.estimate) <= 3 * math.hypot(
                            dual.std_error, row.std_error) + 1e-12
                rows.append(out)
    if len(dims) > 1:
        for (m, n), series in gaps.items():
            checks[f"trend_m{m}_n{n}"] = all(b <= a for a, b in zip(series, series[1:]))
    rates = config.rates(dims[0], total=True)
    prediction = invariant.product_prediction(rates.lam, rates.delta, rates.gamma)
    return ExperimentResult(
        _GAP_COLUMNS, rows, gates=gates, checks=checks,
        extra={"prediction": asdict(prediction), "occupancy": occupancy,
               "occupancy_lower_limit": invariant.occupancy_limit(1, rates)},
    )


def _six_bounds(config):
    d = config.d
    rates = config.rates(d, total=True)
    counts = config.counts or (config.M,)
    seeds = _derived_seeds(config, 2, len(counts))
    samples = None
    if config.monte_carlo:
        spec = lattice.TorusSpec(d, config.L)
        sampler = invariant.NuSampler(spec, rates, config.burn_in, config.samples, config.thinning, config.seed,
                                      config.chains)
        samples = invariant.sample_nu(sampler, config.workers)
    rows, columns, mc_ok = [], None, True
    for M, seed in zip(counts, seeds):
        estimate = family = None
        if samples is not None:
            estimate, family = invariant.b_tilde_estimate(invariant.mu(M, rates), samples)
        parts = invariant.six_bounds(M, config.n, config.m, d, rates,
                                     b_tilde=None if estimate is None else estimate.point)
        row = parts.as_dict()
        row["notes"] = "; ".join(parts.notes)
        row.update(b_tilde_estimate=None if estimate is None else estimate.point,
                   b_tilde_std_error=None if estimate is None else estimate.std_error,
                   b_tilde_family=family)
        if config.replicas > 0:
            est = invariant.alpha_tilde_monte_carlo(M, rates, config.replicas, seed, config.workers)
            row.update(alpha_tilde_mc=est.point, alpha_tilde_mc_se=est.std_error)
            mc_ok &= abs(est.point - parts.alpha_tilde) <= 3 * est.std_error + 1e-12
        columns = columns or list(row)
        rows.append(row)
    gates = {}
    if samples is not None:
        gates["stationarity"] = samples.metadata["stationarity_gate"]
    return ExperimentResult(
        columns, rows, gates=gates,
        checks={"alpha_monte_carlo_3se": bool(mc_ok) if config.replicas > 0 else None},
        extra={"p": invariant.alpha_probability(rates), "occupancy_lower_limit_n1": invariant.occupancy_limit(1, rates)},
    )


_RUNNERS = {
    "survival-sweep": _survival_sweep,
    "duality-check": _duality_check,
    "branching-verify": _branching_verify,
    "moments": _moments,
    "hitting-tables": _hitting_tables,
    "bounds-report": _bounds_report,
    "invariant-gap": _invariant_gap,
    "six-bounds": _six_bounds,
}


def _plain(value):
    """JSON-ready copy: numpy scalars to Python, tuples to lists, non-finite reals to None."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _cell(value):
    value = _plain(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def write_data(path, result, fmt):
    """Writes the rows as RFC 4180 CSV (UTF-8, header first) or as JSON with sorted keys."""
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\r\n")
            writer.writerow(result.columns)
            for row in result.rows:
                writer.writerow([_cell(row.get(c)) for c in result.columns])
    else:
        payload = {
            "columns": result.columns,
            "rows": [{c: row.get(c) for c in result.columns} for row in result.rows],
            "gates": result.gates,
            "checks": result.checks,
            "summary": result.extra,
        }
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n")


def run(config):
    """
    # harness.run(config)

    ---

    ### Overview
    Runs one experiment and writes `<out>/<experiment>.<format>` and `<out>/manifest.json`. The
    manifest holds the configuration echo, the seed, both readings of `lambda`, the versions of
    the library, numpy, scipy and Python, the wall time and the gates and checks.

    ### Parameters:
    - config (ExperimentConfig): A validated configuration.

    ### Returns:
    int: 0, or the `GateFailure` code when a gate failed and `strict` is set.

    ### Raises:
    - TwoStageError: Whatever the experiment raises (`BudgetExceeded`, `ExtinctionDuringSampling`,
    ...); the command line turns it into its exit code.
    """
    started = time.perf_counter()
    __core__.notice(f"running {config.experiment} with seed {config.seed}")
    result = _RUNNERS[config.experiment](config)
    os.makedirs(config.out, exist_ok=True)
    data = os.path.join(config.out, f"{config.experiment}.{config.format}")
    write_data(data, result, config.format)
    manifest = {
        "experiment": config.experiment,
        "data": os.path.basename(data),
        "config": echo(config),
        "seed": config.seed,
        "rates": {
            "lambda": config.lam,
            "rate_scale": config.rate_scale,
            "lambda_per_neighbor": config.lam_for(config.d),
            "lambda_total": config.lam_for(config.d, total=True),
            "d": config.d,
        },
        "versions": {
            "twostagelab": __core__.__version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "wall_time_seconds": time.perf_counter() - started,
        "gates": result.gates,
        "checks": result.checks,
        "summary": result.extra,
    }
    with open(os.path.join(config.out, "manifest.json"), "w", encoding="utf-8") as handle:
        handle.write(json.dumps(_plain(manifest), indent=2, sort_keys=True) + "\n")
    __core__.notice(f"wrote {data}")
    for name, passed in result.checks.items():
        if passed is False:
            logger.warning(f"check '{name}' did not hold")
    failed = [name for name, passed in result.gates.items() if not passed]
    if failed:
        logger.error(f"gates failed: {', '.join(failed)}")
        return __core__.GateFailure.code if config.strict else 0
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat 'key = value' configuration file")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--format", choices=FORMATS, help="data file format")
    common.add_argument("--workers", type=int, help="worker processes")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any configuration key")
    common.add_argument("--log-level", default="INFO", help="DEBUG, INFO, WARNING or ERROR")
    parser = argparse.ArgumentParser(prog="python -m twostage", description="Two-stage contact process laboratory.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", parents=[common], help="list the experiment kinds")
    sub.add_parser("validate", parents=[common], help="validate a configuration and print its normalized echo")
    for kind, description in EXPERIMENTS.items():
        sub.add_parser(kind, parents=[common], help=description)
    return parser


def _overrides(args):
    out = {"seed": args.seed, "out": args.out, "format": args.format, "workers": args.workers}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise __core__.ConfigError("main", f"Expected KEY=VALUE, got {item!r}.", "set")
        out[key.strip()] = value.strip()
    return out


def main(argv=None):
    """
    Command-line entry point; returns the exit status (0, a gate failure or the error code).
    """
    args = build_parser().parse_args(argv)
    __core__.set_level(args.log_level)
    try:
        if args.command == "list":
            for kind, description in list_experiments():
                print(f"{kind:18s} {description}")
            return 0
        overrides = _overrides(args)
        if args.command == "validate":
            if not args.config:
                raise __core__.ConfigError("validate_config", "Pass the file to validate with --config.", "config")
            print(json.dumps(validate_config(args.config, overrides), indent=2))
            return 0
        overrides["experiment"] = args.command
        return run(load_config(args.config, overrides))
    except __core__.TwoStageError as e:
        logger.error(str(e))
        return e.code
