"""Simulated functional linear models and the Monte Carlo size/power harness.

Covariates are standard Brownian motions on a grid of ``[0, 1]``; responses
follow ``Y = <Theta, X> + eps`` with Gaussian errors. A scenario runs every
configured (statistic, calibration, kn) test on ``ns`` simulated datasets
and tabulates rejection rates per level.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from flmdep import rng as rng_mod
from flmdep.bootstrap import (
    CalibrationKind,
    CalibrationMethod,
    VarianceMode,
    is_compatible,
    run_test,
)
from flmdep.errors import ConfigurationError, DegenerateSignalError
from flmdep.fpca import decompose
from flmdep.hilbert import FunctionalSample, Grid, inner_product
from flmdep.rng import Multiplier
from flmdep.stats import StatisticKind


class ThetaKind(str, Enum):
    ZERO = "zero"
    SIN_CUBED = "sin_cubed"
    CUSTOM = "custom"


@dataclass(frozen=True)
class MethodSpec:
    """One column group of a size/power table."""

    statistic: StatisticKind
    kind: CalibrationKind
    variance_mode: VarianceMode = VarianceMode.BOOTSTRAPPED

    def __post_init__(self):
        object.__setattr__(self, "statistic", StatisticKind(self.statistic))
        object.__setattr__(self, "kind", CalibrationKind(self.kind))
        object.__setattr__(self, "variance_mode", VarianceMode(self.variance_mode))

    @classmethod
    def parse(cls, text):
        """``"t1/wild/fixed"``, ``"t3s/naive"``, ``"t1/asymptotic"`` ..."""
        parts = [s.strip().lower() for s in text.strip().split("/")]
        if len(parts) not in (2, 3):
            raise ConfigurationError(f"method {text!r} is not statistic/calibration[/variance]")
        try:
            return cls(*parts)
        except ValueError as exc:
            raise ConfigurationError(f"method {text!r}: {exc}") from None

    @property
    def uses_variance_mode(self):
        if self.kind is CalibrationKind.WILD:
            return self.statistic in (StatisticKind.T1, StatisticKind.T3S)
        return self.kind is CalibrationKind.NAIVE and self.statistic is StatisticKind.T3S

    @property
    def key(self):
        text = f"{self.statistic.value}/{self.kind.value}"
        if self.uses_variance_mode:
            text += f"/{self.variance_mode.value}"
        return text

    @property
    def label(self):
        known = {
            "t1/asymptotic": "N(0,2)",
            "t1/wild/bootstrapped": "T1*(a)",
            "t1/wild/fixed": "T1*(b)",
            "t2/wild": "T2*",
            "t3/wild": "T3*",
            "t3s/wild/bootstrapped": "T3s*",
        }
        return known.get(self.key, self.key)


STANDARD_METHODS = tuple(
    MethodSpec.parse(s)
    for s in (
        "t1/asymptotic",
        "t1/wild/bootstrapped",
        "t1/wild/fixed",
        "t2/wild",
        "t3/wild",
        "t3s/wild/bootstrapped",
    )
)


@dataclass(frozen=True)
class ScenarioSpec:
    """Configuration of one Monte Carlo study.

    Under ``theta=ZERO`` the error sd is ``sigma0``; otherwise it is set from
    the signal-to-noise ratio ``r = sigma / sqrt(E <X, Theta>^2)``. With
    ``local_alternative = a`` the slope used for data generation is
    ``(n**a / sqrt(n)) * Theta`` while ``sigma`` is still calibrated on the
    unscaled ``Theta``.
    """

    n: int
    ns: int
    seed: int
    p: int = 100
    theta: ThetaKind = ThetaKind.ZERO
    theta_values: Optional[tuple] = None
    r: Optional[float] = None
    sigma0: float = 1.0
    kn_grid: tuple = (5, 10, 20)
    alpha_grid: tuple = (0.2, 0.1, 0.05, 0.01)
    methods: tuple = STANDARD_METHODS
    B: int = 1000
    multiplier: Multiplier = Multiplier.GAUSSIAN
    local_alternative: Optional[float] = None
    name: str = ""

    def __post_init__(self):
        # invalid enum values are kept as given and reported by problems()
        for name, enum in (("theta", ThetaKind), ("multiplier", Multiplier)):
            try:
                object.__setattr__(self, name, enum(getattr(self, name)))
            except ValueError:
                pass
        object.__setattr__(self, "kn_grid", tuple(self.kn_grid))
        object.__setattr__(self, "alpha_grid", tuple(self.alpha_grid))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.theta_values is not None:
            object.__setattr__(self, "theta_values", tuple(float(v) for v in self.theta_values))

    def problems(self):
        """Every violated constraint, as human-readable strings."""
        out = []

        def is_int(x):
            return isinstance(x, (int, np.integer)) and not isinstance(x, bool)

        if not is_int(self.n) or self.n < 2:
            out.append(f"n: must be an integer >= 2, got {self.n!r}")
        if not is_int(self.ns) or self.ns < 1:
            out.append(f"ns: must be a positive integer, got {self.ns!r}")
        if not is_int(self.seed) or not 0 <= self.seed < 2**64:
            out.append(f"seed: must be an unsigned 64-bit integer, got {self.seed!r}")
        if not is_int(self.p) or self.p < 2:
            out.append(f"p: must be an integer >= 2, got {self.p!r}")
        if not is_int(self.B) or self.B < 1:
            out.append(f"B: must be a positive integer, got {self.B!r}")
        if not isinstance(self.multiplier, Multiplier):
            choices = ", ".join(m.value for m in Multiplier)
            out.append(f"multiplier: {self.multiplier!r} is not one of {choices}")
        if not isinstance(self.theta, ThetaKind):
            choices = ", ".join(t.value for t in ThetaKind)
            out.append(f"theta: {self.theta!r} is not one of {choices}")
        elif self.theta is ThetaKind.ZERO:
            if self.r is not None:
                out.append("r: only meaningful for a nonzero theta")
            if not self.sigma0 > 0:
                out.append(f"sigma0: must be positive, got {self.sigma0!r}")
            if self.local_alternative is not None:
                out.append("local_alternative: needs a nonzero theta")
        elif self.r is None or not self.r > 0:
            out.append(f"r: a nonzero theta needs r > 0, got {self.r!r}")
        if self.theta is ThetaKind.CUSTOM:
            if self.theta_values is None or is_int(self.p) and len(self.theta_values) != self.p:
                out.append("theta_values: custom theta needs exactly p values")
        elif self.theta_values is not None:
            out.append("theta_values: only allowed with theta = custom")
        if not self.methods:
            out.append("methods: at least one method is required")
        for m in self.methods:
            if not isinstance(m, MethodSpec):
                out.append(f"methods: {m!r} is not a MethodSpec")
                continue
            if not is_compatible(m.statistic, m.kind):
                out.append(f"methods: {m.key} is not a valid statistic/calibration pair")
        if any(m.statistic.needs_kn for m in self.methods if isinstance(m, MethodSpec)):
            if not self.kn_grid:
                out.append("kn_grid: T1/T2 methods need at least one kn")
        for kn in self.kn_grid:
            if not is_int(kn) or kn < 1:
                out.append(f"kn_grid: {kn!r} is not a positive integer")
            elif is_int(self.n) and kn > self.n - 1:
                out.append(f"kn_grid: kn={kn} exceeds n-1={self.n - 1}, the maximal rank")
        if not self.alpha_grid:
            out.append("alpha_grid: at least one level is required")
        for a in self.alpha_grid:
            if not 0 < a < 1:
                out.append(f"alpha_grid: {a!r} is not in (0, 1)")
        if self.local_alternative is not None and not 0 <= self.local_alternative < 0.5:
            out.append("local_alternative: exponent a of delta_n = n**a must lie in [0, 0.5)")
        return out

    def validate(self):
        problems = self.problems()
        if problems:
            raise ConfigurationError("invalid scenario: " + "; ".join(problems), problems)
        return self

    def grid(self):
        return Grid.uniform(self.p)


@dataclass(frozen=True, eq=False)
class ScenarioReport:
    spec: ScenarioSpec
    counts: dict
    runtime: float = 0.0
    columns: tuple = field(default=())

    def rate(self, method, kn, alpha):
        key = method.key if isinstance(method, MethodSpec) else method
        return self.counts[(key, kn, alpha)] / self.spec.ns

    def standard_error(self, method, kn, alpha):
        rate = self.rate(method, kn, alpha)
        return math.sqrt(rate * (1 - rate) / self.spec.ns)

    def cells(self):
        """(method key, kn or None, alpha, count, rate, se) in table order."""
        for key, kn in self.columns:
            for alpha in self.spec.alpha_grid:
                count = self.counts[(key, kn, alpha)]
                rate = count / self.spec.ns
                yield key, kn, alpha, count, rate, math.sqrt(rate * (1 - rate) / self.spec.ns)


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------


def brownian_paths(grid, count, rng):
    """``count`` standard Brownian motions observed at the grid points."""
    t = grid.points
    if t[0] < 0:
        raise ConfigurationError("Brownian motion needs a grid inside [0, inf)")
    steps = np.diff(np.concatenate(([0.0], t)))
    increments = rng.standard_normal((count, t.size)) * np.sqrt(steps)
    return np.cumsum(increments, axis=1)


def brownian_path(grid, rng):
    return brownian_paths(grid, 1, rng)[0]


def theta1(grid):
    """``sin(2 pi t^3)^3``."""
    return np.sin(2 * np.pi * grid.points**3) ** 3


def signal_variance(theta, grid):
    """``E <X, Theta>^2`` for Brownian ``X``: quadrature of ``min(s, t)``."""
    theta = np.asarray(theta, dtype=float)
    t = grid.points
    kernel = np.minimum.outer(t, t)
    wt = grid.weights * theta
    return float(wt @ kernel @ wt)


def sigma_for_snr(theta, grid, r):
    if not r > 0:
        raise ConfigurationError(f"signal-to-noise ratio must be positive, got {r!r}")
    var = signal_variance(theta, grid)
    if not var > 0:
        raise DegenerateSignalError("theta carries no signal (E<X,Theta>^2 = 0)")
    return r * math.sqrt(var)


def scenario_theta(spec, grid=None):
    grid = grid or spec.grid()
    if spec.theta is ThetaKind.ZERO:
        return np.zeros(grid.size)
    if spec.theta is ThetaKind.SIN_CUBED:
        return theta1(grid)
    return np.asarray(spec.theta_values, dtype=float)


def scenario_sigma(spec, grid=None):
    grid = grid or spec.grid()
    if spec.theta is ThetaKind.ZERO:
        return float(spec.sigma0)
    return sigma_for_snr(scenario_theta(spec, grid), grid, spec.r)


def effective_theta(spec, grid=None):
    theta = scenario_theta(spec, grid)
    if spec.local_alternative is not None:
        theta = theta * spec.n**spec.local_alternative / math.sqrt(spec.n)
    return theta


def generate_dataset(spec, dataset_index):
    """Dataset ``dataset_index`` of the scenario; depends only on the seed,
    the sample size and the index."""
    grid = spec.grid()
    key = rng_mod.stream_key(spec.seed, rng_mod.TAG_DATA, spec.n)
    gen = rng_mod.substream(key, dataset_index)
    curves = brownian_paths(grid, spec.n, gen)
    sigma = scenario_sigma(spec, grid)
    errors = sigma * gen.standard_normal(spec.n)
    responses = inner_product(curves, effective_theta(spec, grid), grid) + errors
    return FunctionalSample(grid, curves, responses)


# --------------------------------------------------------------------------
# scenario runner
# --------------------------------------------------------------------------


def table_columns(spec):
    cols = []
    for m in spec.methods:
        if m.statistic.needs_kn:
            cols.extend((m.key, kn) for kn in spec.kn_grid)
        else:
            cols.append((m.key, None))
    return tuple(dict.fromkeys(cols))


def dataset_p_values(spec, dataset_index):
    """``{(method key, kn): p-value}`` for one simulated dataset."""
    sample = generate_dataset(spec, dataset_index)
    boot_seed = rng_mod.derive_seed(spec.seed, spec.n, dataset_index)
    needs_dec = any(m.statistic.needs_kn for m in spec.methods)
    dec = decompose(sample) if needs_dec else None
    eps = None
    if any(m.kind is CalibrationKind.WILD for m in spec.methods):
        eps = rng_mod.multiplier_matrix(boot_seed, spec.multiplier, spec.B, spec.n)
    out = {}
    for m in spec.methods:
        method = CalibrationMethod(
            kind=m.kind,
            multiplier=spec.multiplier,
            replicates=spec.B,
            seed=boot_seed,
            variance_mode=m.variance_mode,
        )
        shared = eps if m.kind is CalibrationKind.WILD else None
        for kn in spec.kn_grid if m.statistic.needs_kn else (None,):
            outcome = run_test(sample, m.statistic, method, kn=kn, dec=dec, multipliers=shared)
            out[(m.key, kn)] = outcome.p_value
    return out


def run_scenario(spec, threads=1, progress=None):
    """Run every dataset and tabulate rejections (``p <= alpha``).

    ``threads`` parallelizes over datasets; the report does not depend on it.
    ``progress``, if given, is called with the number of finished datasets.
    """
    spec.validate()
    start = time.perf_counter()
    columns = table_columns(spec)
    counts = {(key, kn, a): 0 for key, kn in columns for a in spec.alpha_grid}

    def tally(pvals):
        for (key, kn), p in pvals.items():
            for a in spec.alpha_grid:
                if p <= a:
                    counts[(key, kn, a)] += 1

    indices = range(spec.ns)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            for done, pvals in enumerate(pool.map(lambda d: dataset_p_values(spec, d), indices), 1):
                tally(pvals)
                if progress:
                    progress(done)
    else:
        for done, d in enumerate(indices, 1):
            tally(dataset_p_values(spec, d))
            if progress:
                progress(done)
    return ScenarioReport(
        spec=spec, counts=counts, runtime=time.perf_counter() - start, columns=columns
    )
