"""Observed test statistics for H0: Theta = 0.

``t1`` and ``t2`` work on an :class:`~flmdep.fpca.FpcaDecomposition`;
``t3``/``t3s`` are built from the cross-covariance curve
``T_n = (1/n) sum (X_i - Xbar)(Y_i - Ybar)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from flmdep.errors import DegenerateVarianceError, FlmdepError
from flmdep.hilbert import norm


class StatisticKind(str, Enum):
    T1 = "t1"
    T2 = "t2"
    T3 = "t3"
    T3S = "t3s"

    @property
    def needs_kn(self):
        return self in (StatisticKind.T1, StatisticKind.T2)


@dataclass(frozen=True)
class StatisticValue:
    kind: StatisticKind
    value: float
    kn: Optional[int] = None
    sigma_hat: Optional[float] = None

    def __post_init__(self):
        if self.kind.needs_kn != (self.kn is not None):
            raise FlmdepError(f"kn must be given exactly for T1/T2, not for {self.kind.name}")
        if self.kind in (StatisticKind.T3, StatisticKind.T3S) and self.value < 0:
            raise FlmdepError(f"{self.kind.name} is a norm and cannot be negative")


def t_cross(sample):
    """The cross-covariance curve ``(1/n) sum (X_i - Xbar)(Y_i - Ybar)``."""
    xc = sample.curves - sample.curves.mean(axis=0)
    yc = sample.responses - sample.responses.mean()
    return yc @ xc / sample.n


def sigma_hat_sq(responses):
    """Divide-by-n variance of the responses."""
    y = np.asarray(responses, dtype=float)
    if y.size < 2:
        raise FlmdepError("need at least 2 responses")
    return float(np.mean((y - y.mean()) ** 2))


def t3(sample):
    return StatisticValue(StatisticKind.T3, float(norm(t_cross(sample), sample.grid)))


def t3s(sample):
    s2 = sigma_hat_sq(sample.responses)
    if s2 <= 0.0:
        raise DegenerateVarianceError("T3s is undefined for constant responses")
    sigma = math.sqrt(s2)
    value = float(norm(t_cross(sample), sample.grid)) / sigma
    return StatisticValue(StatisticKind.T3S, value, sigma_hat=sigma)


def t1_from_projections(cross, eigenvalues, n, sigma_sq):
    """``kn^{-1/2} ((n / sigma^2) sum cross_j^2 / lam_j - kn)`` over the given
    components; ``cross`` may carry a leading batch axis."""
    kn = eigenvalues.shape[-1]
    quad = np.sum(np.square(cross) / eigenvalues, axis=-1)
    return (n * quad / sigma_sq - kn) / math.sqrt(kn)


def t2_from_projections(cross, eigenvalues):
    return np.sum(np.square(cross / eigenvalues), axis=-1)


def t1(sample, dec, kn, sigma_sq=None):
    """Standardized quadratic form in the first ``kn`` principal directions.

    ``sigma_sq`` defaults to :func:`sigma_hat_sq` of the responses; any other
    consistent estimate of the error variance may be passed instead.
    """
    kn = dec.check_kn(kn)
    if sigma_sq is None:
        sigma_sq = sigma_hat_sq(sample.responses)
    if not sigma_sq > 0.0:
        raise DegenerateVarianceError(f"T1 needs a positive variance estimate, got {sigma_sq!r}")
    value = t1_from_projections(
        dec.cross_projections[:kn], dec.eigenvalues[:kn], sample.n, sigma_sq
    )
    return StatisticValue(StatisticKind.T1, float(value), kn=kn, sigma_hat=math.sqrt(sigma_sq))


def t2(dec, kn):
    kn = dec.check_kn(kn)
    value = t2_from_projections(dec.cross_projections[:kn], dec.eigenvalues[:kn])
    return StatisticValue(StatisticKind.T2, float(value), kn=kn)
