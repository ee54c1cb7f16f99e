"""Calibration of the test statistics: N(0, 2) asymptotics for T1, naive
paired bootstrap, wild multiplier bootstrap and the Monte Carlo precursor.

Two layers live here. The ``*_replicate`` functions compute one bootstrap
replicate from an explicit random generator and are written for clarity.
The ``*_values`` functions compute a whole batch of replicates from a
matrix of multipliers or resampling counts and are what :func:`run_test`
uses; the test-suite checks the two layers against each other.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from flmdep import rng as rng_mod
from flmdep.errors import ConfigurationError, DegenerateVarianceError, FlmdepError
from flmdep.fpca import decompose
from flmdep.hilbert import FunctionalSample, norm
from flmdep.rng import Multiplier
from flmdep.stats import (
    StatisticKind,
    StatisticValue,
    sigma_hat_sq,
    t1,
    t1_from_projections,
    t2,
    t2_from_projections,
    t3,
    t3s,
    t_cross,
)

MAX_REDRAWS = 100


class CalibrationKind(str, Enum):
    ASYMPTOTIC_N02 = "asymptotic"
    NAIVE = "naive"
    WILD = "wild"
    PRECURSOR = "precursor"


class VarianceMode(str, Enum):
    BOOTSTRAPPED = "bootstrapped"
    FIXED = "fixed"


_COMPATIBLE = {
    CalibrationKind.ASYMPTOTIC_N02: {StatisticKind.T1},
    CalibrationKind.NAIVE: {StatisticKind.T3, StatisticKind.T3S},
    CalibrationKind.PRECURSOR: {StatisticKind.T3, StatisticKind.T3S},
    CalibrationKind.WILD: set(StatisticKind),
}


@dataclass(frozen=True)
class CalibrationMethod:
    """How the null distribution of a statistic is approximated.

    ``variance_mode`` only matters where a variance enters a replicate:
    wild T1 (BOOTSTRAPPED is the (a) variant, FIXED the (b) variant) and the
    studentized T3s under naive or wild resampling. ``precursor_m`` is the
    number of curves averaged per precursor replicate (default 1000).
    """

    kind: CalibrationKind = CalibrationKind.WILD
    multiplier: Multiplier = Multiplier.GAUSSIAN
    replicates: int = 1000
    seed: int = 0
    variance_mode: VarianceMode = VarianceMode.BOOTSTRAPPED
    precursor_m: Optional[int] = None
    plus_one: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", CalibrationKind(self.kind))
        object.__setattr__(self, "multiplier", Multiplier(self.multiplier))
        object.__setattr__(self, "variance_mode", VarianceMode(self.variance_mode))
        if self.kind is not CalibrationKind.ASYMPTOTIC_N02 and self.replicates < 1:
            raise ConfigurationError(f"replicates must be positive, got {self.replicates}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.precursor_m is not None and self.precursor_m < 1:
            raise ConfigurationError(f"precursor_m must be positive, got {self.precursor_m}")

    def check_compatible(self, statistic):
        statistic = StatisticKind(statistic)
        if statistic not in _COMPATIBLE[self.kind]:
            allowed = ", ".join(sorted(s.name for s in _COMPATIBLE[self.kind]))
            raise ConfigurationError(
                f"{self.kind.value} calibration does not apply to {statistic.name} "
                f"(valid for: {allowed})"
            )
        return statistic


def is_compatible(statistic, kind):
    return StatisticKind(statistic) in _COMPATIBLE[CalibrationKind(kind)]


@dataclass(frozen=True, eq=False)
class TestOutcome:
    statistic: StatisticValue
    method: CalibrationMethod
    p_value: float
    replicate_values: Optional[np.ndarray] = None
    elapsed: float = 0.0
    redraws: int = 0
    extra: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class


# --------------------------------------------------------------------------
# p-values
# --------------------------------------------------------------------------


def bootstrap_p_value(observed, replicates, plus_one=False):
    """Share of replicates >= ``observed``; ``plus_one`` gives (1 + #)/(B + 1)."""
    replicates = np.asarray(replicates, dtype=float)
    count = int(np.count_nonzero(replicates >= observed))
    if plus_one:
        return (count + 1) / (replicates.size + 1)
    return count / replicates.size


def asymptotic_p_value_t1(t1_value):
    """Two-sided p-value of T1 against N(0, 2): ``2 (1 - Phi(|t| / sqrt 2))``."""
    return math.erfc(abs(float(t1_value)) / 2.0)


# --------------------------------------------------------------------------
# single replicates
# --------------------------------------------------------------------------


def naive_t3_replicate(sample, rng, studentized=False):
    """One paired-bootstrap draw of ``||T_n^{N*}||`` (divided by the resampled
    response sd when ``studentized``)."""
    base = t_cross(sample)
    for _ in range(MAX_REDRAWS):
        idx = rng.integers(0, sample.n, size=sample.n)
        resampled = FunctionalSample(sample.grid, sample.curves[idx], sample.responses[idx])
        value = float(norm(t_cross(resampled) - base, sample.grid))
        if not studentized:
            return value
        s2 = sigma_hat_sq(resampled.responses)
        if s2 > 0.0:
            return value / math.sqrt(s2)
    raise DegenerateVarianceError(f"{MAX_REDRAWS} consecutive resamples had constant responses")


def wild_t3_replicate(sample, rng, multiplier=Multiplier.GAUSSIAN, studentized=False,
                      multipliers=None):
    """One wild draw of ``||(1/n) sum (X_i - Xbar)(Y_i - Ybar) e_i||``.

    ``multipliers`` overrides the random draw (for deterministic checks).
    The studentized variant divides by the sd of ``(Y_i - Ybar) e_i``.
    """
    xc = sample.curves - sample.curves.mean(axis=0)
    yc = sample.responses - sample.responses.mean()
    for _ in range(MAX_REDRAWS):
        if multipliers is None:
            eps = rng_mod.draw_multipliers(rng, multiplier, sample.n)
        else:
            eps = np.asarray(multipliers, dtype=float)
        ystar = yc * eps
        value = float(norm(ystar @ xc / sample.n, sample.grid))
        if not studentized:
            return value
        s2 = sigma_hat_sq(ystar)
        if s2 > 0.0:
            return value / math.sqrt(s2)
        if multipliers is not None:
            raise DegenerateVarianceError("injected multipliers give a zero bootstrap variance")
    raise DegenerateVarianceError(f"{MAX_REDRAWS} consecutive draws had zero bootstrap variance")


def wild_t1_t2_replicate(sample, dec, kn, rng, variance_mode=VarianceMode.BOOTSTRAPPED,
                         multiplier=Multiplier.GAUSSIAN, multipliers=None, sigma_sq=None):
    """One draw of ``(|T1*|, |T2*|)``: responses become ``Y_i e_i`` and only
    the cross projections are recomputed; eigenpairs stay those of ``dec``."""
    kn = dec.check_kn(kn)
    variance_mode = VarianceMode(variance_mode)
    if sigma_sq is None:
        sigma_sq = sigma_hat_sq(sample.responses)
    lam = dec.eigenvalues[:kn]
    scores = dec.scores[:, :kn]
    for _ in range(MAX_REDRAWS):
        if multipliers is None:
            eps = rng_mod.draw_multipliers(rng, multiplier, sample.n)
        else:
            eps = np.asarray(multipliers, dtype=float)
        ystar = sample.responses * eps
        cross = scores.T @ (ystar - ystar.mean()) / sample.n
        s2 = sigma_hat_sq(ystar) if variance_mode is VarianceMode.BOOTSTRAPPED else sigma_sq
        if s2 > 0.0:
            t1_star = t1_from_projections(cross, lam, sample.n, s2)
            return abs(float(t1_star)), abs(float(t2_from_projections(cross, lam)))
        if multipliers is not None or variance_mode is VarianceMode.FIXED:
            raise DegenerateVarianceError("zero variance in T1 replicate")
    raise DegenerateVarianceError(f"{MAX_REDRAWS} consecutive draws had zero bootstrap variance")


def precursor_replicate(sample, m, rng):
    """``||(1/m) sum_{i<=m} (X_i^* - Xbar)||`` with ``X_i^*`` drawn from the curves."""
    idx = rng.integers(0, sample.n, size=m)
    mean = sample.curves.mean(axis=0)
    return float(norm(sample.curves[idx].mean(axis=0) - mean, sample.grid))


# --------------------------------------------------------------------------
# batched replicates
# --------------------------------------------------------------------------


def _variance_floor(responses):
    y = np.asarray(responses, dtype=float)
    return 1e-12 * max(float(np.mean(y * y)), np.finfo(float).tiny)


def wild_t3_values(sample, eps, studentized=False):
    """Batched wild T3 (or T3s) replicates; rows of ``eps`` are replicates.

    Returns ``(values, degenerate)`` where ``degenerate`` flags rows whose
    bootstrap variance vanished (their value is NaN).
    """
    eps = np.atleast_2d(eps)
    xc = sample.curves - sample.curves.mean(axis=0)
    yc = sample.responses - sample.responses.mean()
    ystar = eps * yc
    values = norm(ystar @ xc / sample.n, sample.grid)
    degenerate = np.zeros(values.shape, dtype=bool)
    if studentized:
        s2 = ystar.var(axis=1)
        degenerate = s2 <= _variance_floor(yc)
        with np.errstate(divide="ignore", invalid="ignore"):
            values = np.where(degenerate, np.nan, values / np.sqrt(s2))
    return values, degenerate


def wild_t1_t2_values(sample, dec, kn, eps, variance_mode=VarianceMode.BOOTSTRAPPED,
                      sigma_sq=None):
    """Batched ``(|T1*|, |T2*|, degenerate)`` for the rows of ``eps``."""
    kn = dec.check_kn(kn)
    eps = np.atleast_2d(eps)
    if sigma_sq is None:
        sigma_sq = sigma_hat_sq(sample.responses)
    lam = dec.eigenvalues[:kn]
    ystar = eps * sample.responses
    # scores are centered, so centering ystar would not change the projections
    cross = ystar @ dec.scores[:, :kn] / sample.n
    if VarianceMode(variance_mode) is VarianceMode.BOOTSTRAPPED:
        s2 = ystar.var(axis=1)
        degenerate = s2 <= _variance_floor(sample.responses)
    else:
        s2 = np.full(eps.shape[0], float(sigma_sq))
        degenerate = np.zeros(eps.shape[0], dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1_star = np.abs(t1_from_projections(cross, lam, sample.n, s2))
    t1_star[degenerate] = np.nan
    return t1_star, np.abs(t2_from_projections(cross, lam)), degenerate


def resample_counts(index_rows, n):
    """``counts[l, i]`` = number of times observation ``i`` appears in row ``l``."""
    index_rows = np.atleast_2d(index_rows)
    counts = np.zeros((index_rows.shape[0], n))
    np.add.at(counts, (np.arange(index_rows.shape[0])[:, None], index_rows), 1.0)
    return counts


def naive_t3_values(sample, counts, studentized=False):
    """Batched naive replicates from resampling counts (rows sum to n)."""
    counts = np.atleast_2d(counts)
    n = sample.n
    xc = sample.curves - sample.curves.mean(axis=0)
    yc = sample.responses - sample.responses.mean()
    xbar = counts @ xc / n
    ybar = counts @ yc / n
    cross = counts @ (xc * yc[:, None]) / n - xbar * ybar[:, None]
    values = norm(cross - yc @ xc / n, sample.grid)
    degenerate = np.zeros(values.shape, dtype=bool)
    if studentized:
        s2 = counts @ (yc * yc) / n - ybar**2
        degenerate = s2 <= _variance_floor(yc)
        with np.errstate(divide="ignore", invalid="ignore"):
            values = np.where(degenerate, np.nan, values / np.sqrt(np.maximum(s2, 0.0)))
    return values, degenerate


def precursor_values(sample, counts, m):
    xc = sample.curves - sample.curves.mean(axis=0)
    return norm(np.atleast_2d(counts) @ xc / m, sample.grid)


# --------------------------------------------------------------------------
# end-to-end
# --------------------------------------------------------------------------


def _redraw(values, degenerate, recompute):
    """Replace degenerate rows by redrawing from the same substream."""
    redraws = 0
    for l in np.flatnonzero(degenerate):
        for attempt in range(1, MAX_REDRAWS + 1):
            redraws += 1
            value, bad = recompute(l, attempt)
            if not bad:
                values[l] = value
                break
        else:
            raise DegenerateVarianceError(
                f"replicate {l}: {MAX_REDRAWS} redraws all had zero bootstrap variance"
            )
    return redraws


def observed_statistic(sample, statistic, kn=None, dec=None):
    statistic = StatisticKind(statistic)
    if statistic is StatisticKind.T3:
        return t3(sample)
    if statistic is StatisticKind.T3S:
        return t3s(sample)
    if kn is None:
        raise ConfigurationError(f"{statistic.name} needs kn (number of principal components)")
    if dec is None:
        dec = decompose(sample)
    if statistic is StatisticKind.T1:
        return t1(sample, dec, kn)
    return t2(dec, kn)


def run_test(sample, statistic, method, kn=None, threads=1, dec=None, multipliers=None):
    """Observed statistic plus its calibrated p-value.

    Parameters
    ----------
    sample : FunctionalSample
    statistic : StatisticKind or str
    method : CalibrationMethod
    kn : int, optional
        Required for T1 and T2.
    threads : int
        Workers used to draw replicate streams; never changes the result.
    dec : FpcaDecomposition, optional
        Precomputed decomposition of ``sample``.
    multipliers : ndarray, optional
        Precomputed ``multiplier_matrix(method.seed, ...)`` to share across
        several wild tests on the same sample. Purely an optimization.
    """
    start = time.perf_counter()
    statistic = method.check_compatible(statistic)
    if statistic.needs_kn and dec is None:
        dec = decompose(sample)
    observed = observed_statistic(sample, statistic, kn, dec)
    kind = method.kind
    replicates = None
    redraws = 0
    extra = {}

    if kind is CalibrationKind.ASYMPTOTIC_N02:
        p_value = asymptotic_p_value_t1(observed.value)
    else:
        B = method.replicates
        n = sample.n
        studentize = (
            statistic is StatisticKind.T3S and method.variance_mode is VarianceMode.BOOTSTRAPPED
        )
        if kind is CalibrationKind.WILD:
            key = rng_mod.stream_key(method.seed, rng_mod.TAG_WILD)
            if multipliers is None:
                eps = rng_mod.build_rows(
                    lambda l: rng_mod.multiplier_row(key, method.multiplier, n, l), B, threads
                )
            else:
                eps = np.asarray(multipliers, dtype=float)
                if eps.shape != (B, n):
                    raise FlmdepError(f"multipliers must have shape {(B, n)}, got {eps.shape}")

            def fresh(l, attempt):
                return rng_mod.multiplier_row(key, method.multiplier, n, l, attempt)

            if statistic.needs_kn:
                mode = method.variance_mode
                t1s, t2s, degenerate = wild_t1_t2_values(sample, dec, observed.kn, eps, mode)
                replicates = t1s if statistic is StatisticKind.T1 else t2s
                if statistic is StatisticKind.T1:
                    def recompute(l, attempt):
                        a, _, bad = wild_t1_t2_values(sample, dec, observed.kn, fresh(l, attempt), mode)
                        return a[0], bad[0]

                    redraws = _redraw(replicates, degenerate, recompute)
            else:
                replicates, degenerate = wild_t3_values(sample, eps, studentize)

                def recompute(l, attempt):
                    v, bad = wild_t3_values(sample, fresh(l, attempt), studentize)
                    return v[0], bad[0]

                redraws = _redraw(replicates, degenerate, recompute)
            if statistic is StatisticKind.T3S and not studentize:
                replicates = replicates / observed.sigma_hat

        elif kind is CalibrationKind.NAIVE:
            key = rng_mod.stream_key(method.seed, rng_mod.TAG_NAIVE)
            rows = rng_mod.build_rows(lambda l: rng_mod.index_row(key, n, n, l), B, threads)
            replicates, degenerate = naive_t3_values(sample, resample_counts(rows, n), studentize)

            def recompute(l, attempt):
                counts = resample_counts(rng_mod.index_row(key, n, n, l, attempt), n)
                v, bad = naive_t3_values(sample, counts, studentize)
                return v[0], bad[0]

            redraws = _redraw(replicates, degenerate, recompute)
            if statistic is StatisticKind.T3S and not studentize:
                replicates = replicates / observed.sigma_hat

        else:  # PRECURSOR
            m = method.precursor_m or 1000
            key = rng_mod.stream_key(method.seed, rng_mod.TAG_PRECURSOR)
            rows = rng_mod.build_rows(lambda l: rng_mod.index_row(key, n, m, l), B, threads)
            raw = precursor_values(sample, resample_counts(rows, n), m)
            # sqrt(m) * raw approximates ||Z_n||, the law of sqrt(n) T3 / sigma_n
            scale = math.sqrt(m / n)
            if statistic is StatisticKind.T3:
                scale *= math.sqrt(sigma_hat_sq(sample.responses))
            replicates = raw * scale
            extra["precursor_m"] = m

        p_value = bootstrap_p_value(abs(observed.value), replicates, method.plus_one)
        replicates.setflags(write=False)

    return TestOutcome(
        statistic=observed,
        method=method,
        p_value=float(p_value),
        replicate_values=replicates,
        elapsed=time.perf_counter() - start,
        redraws=redraws,
        extra=extra,
    )
