"""Functional principal components of the empirical covariance operator.

The operator ``h -> (1/n) sum <X_i - Xbar, h> (X_i - Xbar)`` is diagonalized
through the ``n x n`` weighted Gram matrix ``K = Xc W Xc^T / n``: if
``K u = lam u`` with ``|u| = 1`` then ``v = Xc^T u / sqrt(n lam)`` is an
eigenfunction with eigenvalue ``lam`` and unit norm in the grid inner
product. Nonzero spectra of the two problems coincide.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from flmdep.errors import AlignmentError, FlmdepError, RankError
from flmdep.hilbert import Grid

DEFAULT_RANK_TOLERANCE = 1e-10

# Below this fraction of the mean squared curve norm the sample is treated
# as having no variability at all (centering roundoff is ~1e-32 relative).
_ZERO_SPECTRUM_FLOOR = 1e-20


@dataclass(frozen=True, eq=False)
class FpcaDecomposition:
    """Empirical eigenpairs, scores and cross-covariance projections.

    Attributes
    ----------
    eigenvalues : ndarray, shape (m,)
        Nonincreasing, all above ``rank_tolerance * eigenvalues[0]``.
    eigenfunctions : ndarray, shape (m, p)
        Orthonormal in the grid inner product; the entry of largest
        magnitude in each row is positive.
    scores : ndarray, shape (n, m)
        ``<X_i - Xbar, v_j>``.
    cross_projections : ndarray, shape (m,)
        ``(1/n) sum_i <X_i - Xbar, v_j> (Y_i - Ybar)``.
    """

    grid: Grid
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    scores: np.ndarray
    cross_projections: np.ndarray
    rank_tolerance: float

    @property
    def m(self):
        return self.eigenvalues.size

    @property
    def n(self):
        return self.scores.shape[0]

    def check_kn(self, kn):
        if int(kn) != kn or kn < 1:
            raise FlmdepError(f"kn must be a positive integer, got {kn!r}")
        if kn > self.m:
            raise RankError(int(kn), self.m)
        return int(kn)


@dataclass(frozen=True, eq=False)
class ThetaEstimate:
    curve: np.ndarray
    kn: int


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def decompose(sample, rank_tolerance=DEFAULT_RANK_TOLERANCE):
    """Eigen-decompose the centered empirical covariance operator of ``sample``.

    Components whose eigenvalue does not exceed ``rank_tolerance`` times the
    leading eigenvalue are dropped. A sample without variability yields an
    empty decomposition (``m == 0``).
    """
    if not 0.0 < rank_tolerance < 1.0:
        raise FlmdepError(f"rank_tolerance must lie in (0, 1), got {rank_tolerance!r}")
    n, p = sample.curves.shape
    w = sample.grid.weights
    xc = sample.curves - sample.curves.mean(axis=0)
    gram = (xc * w) @ xc.T / n
    gram = (gram + gram.T) / 2
    lam, u = np.linalg.eigh(gram)
    order = np.argsort(lam)[::-1]
    lam, u = lam[order], u[:, order]

    scale = np.mean(np.sum(sample.curves**2 * w, axis=1))
    if lam.size == 0 or lam[0] <= _ZERO_SPECTRUM_FLOOR * scale or lam[0] <= 0.0:
        keep = 0
    else:
        keep = int(np.count_nonzero(lam > rank_tolerance * lam[0]))
    lam, u = lam[:keep], u[:, :keep]

    v = (u.T @ xc) / np.sqrt(n * lam)[:, None]
    if keep:
        # back-mapping loses orthogonality like eps * lam_1 / lam_j; one
        # symmetric re-orthonormalization in the weighted inner product fixes it
        gram_v = (v * w) @ v.T
        d, q = np.linalg.eigh((gram_v + gram_v.T) / 2)
        v = (q / np.sqrt(d)) @ q.T @ v
    scores = (xc * w) @ v.T

    if keep:
        lead = np.argmax(np.abs(v), axis=1)
        signs = np.sign(v[np.arange(keep), lead])
        v *= signs[:, None]
        scores *= signs[None, :]

    yc = sample.responses - sample.responses.mean()
    cross = scores.T @ yc / n
    return FpcaDecomposition(
        grid=sample.grid,
        eigenvalues=_readonly(lam),
        eigenfunctions=_readonly(v.reshape(keep, p)),
        scores=_readonly(scores.reshape(n, keep)),
        cross_projections=_readonly(cross),
        rank_tolerance=float(rank_tolerance),
    )


def cross_projections(sample, dec):
    """``Delta_n(v_j)`` for every component of ``dec``, using the responses of
    ``sample`` (which must hold the curves ``dec`` was built from)."""
    if sample.n != dec.n or sample.grid.size != dec.grid.size:
        raise AlignmentError(
            f"decomposition built for n={dec.n}, p={dec.grid.size}; "
            f"sample has n={sample.n}, p={sample.grid.size}"
        )
    yc = sample.responses - sample.responses.mean()
    return dec.scores.T @ yc / sample.n


def estimate_theta(dec, kn):
    """Truncated FPCA slope estimate ``sum_{j<=kn} Delta_n(v_j)/lam_j v_j``."""
    kn = dec.check_kn(kn)
    coef = dec.cross_projections[:kn] / dec.eigenvalues[:kn]
    return ThetaEstimate(curve=_readonly(coef @ dec.eigenfunctions[:kn]), kn=kn)
