"""Shared builders for the test modules."""

import numpy as np

from flmdep.hilbert import FunctionalSample, Grid, inner_product
from flmdep.simgen import ScenarioSpec, generate_dataset

# (criterion id, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE = []


def record(cid, passed, detail):
    ACCEPTANCE.append((cid, bool(passed), detail))
    return passed


def random_sample(n=30, p=40, seed=0, slope=None, noise=1.0):
    """Brownian curves on a uniform grid, responses ``<slope, X> + noise``."""
    sample = generate_dataset(ScenarioSpec(n=n, ns=1, seed=seed, p=p, sigma0=noise), 0)
    if slope is not None:
        y = inner_product(sample.curves, slope, sample.grid) + sample.responses
        sample = sample.with_responses(y)
    return sample


def make_sample(curves, responses, grid=None):
    curves = np.asarray(curves, dtype=float)
    grid = grid or Grid.uniform(curves.shape[1])
    return FunctionalSample(grid, curves, responses)


def dkw_band(B, level=0.01):
    """Half-width of the DKW confidence band for an empirical CDF."""
    return float(np.sqrt(np.log(2 / level) / (2 * B)))


def atom_frequencies(values, atoms, rtol=1e-9):
    """Empirical frequency of each atom; every value must hit some atom."""
    values = np.asarray(values, dtype=float)
    atoms = np.asarray(atoms, dtype=float)
    scale = max(1.0, float(np.max(np.abs(atoms))))
    dist = np.abs(values[:, None] - atoms[None, :])
    nearest = np.argmin(dist, axis=1)
    matched = dist[np.arange(values.size), nearest] <= rtol * scale
    return np.bincount(nearest, minlength=atoms.size) / values.size, bool(matched.all())


def exact_atoms(values, rtol=1e-9):
    """Distinct values of an equally weighted enumeration and their masses."""
    values = np.sort(np.asarray(values, dtype=float))
    scale = max(1.0, float(np.max(np.abs(values))))
    atoms, masses = [values[0]], [1]
    for v in values[1:]:
        if abs(v - atoms[-1]) <= rtol * scale:
            masses[-1] += 1
        else:
            atoms.append(v)
            masses.append(1)
    return np.array(atoms), np.array(masses) / values.size


# --------------------------------------------------------------------------
# independent oracles (plain numpy, no package internals)
# --------------------------------------------------------------------------


def direct_eigenpairs(sample):
    """p x p route: symmetrize C W through W^{1/2} and map back."""
    w = sample.grid.weights
    xc = sample.curves - sample.curves.mean(axis=0)
    cov = xc.T @ xc / sample.n
    root = np.sqrt(w)
    lam, e = np.linalg.eigh(root[:, None] * cov * root[None, :])
    order = np.argsort(lam)[::-1]
    return lam[order], (e[:, order] / root[:, None]).T


def _l2(curve, w):
    return float(np.sqrt(np.sum(curve * curve * w)))


def wild_enumeration(sample, statistic, kn=None, fixed_variance=False):
    """Replicate value for each of the 2^n Rademacher sign vectors."""
    import itertools

    n = sample.n
    w = sample.grid.weights
    x, y = sample.curves, sample.responses
    xc = x - x.mean(axis=0)
    yc = y - y.mean()
    if statistic in ("t1", "t2"):
        lam, v = direct_eigenpairs(sample)
        lam, v = lam[:kn], v[:kn]
        scores = xc @ (v * w).T
        s2_obs = float(np.mean(yc**2))
    out = []
    for signs in itertools.product((-1.0, 1.0), repeat=n):
        eps = np.array(signs)
        if statistic in ("t3", "t3s"):
            ystar = yc * eps
            value = _l2(sum(ystar[i] * xc[i] for i in range(n)) / n, w)
            if statistic == "t3s":
                value /= float(np.sqrt(np.mean((ystar - ystar.mean()) ** 2)))
        else:
            ystar = y * eps
            delta = np.array(
                [sum((ystar[i] - ystar.mean()) * scores[i, j] for i in range(n)) / n for j in range(kn)]
            )
            if statistic == "t2":
                value = float(np.sum((delta / lam) ** 2))
            else:
                s2 = s2_obs if fixed_variance else float(np.mean((ystar - ystar.mean()) ** 2))
                value = abs((n * float(np.sum(delta**2 / lam)) / s2 - kn) / np.sqrt(kn))
        out.append(value)
    return np.array(out)


def naive_enumeration(sample):
    """``||T_n^{N*} - T_n||`` for each of the n^n index tuples."""
    import itertools

    n = sample.n
    w = sample.grid.weights

    def cross(x, y):
        return ((y - y.mean())[:, None] * (x - x.mean(axis=0))).mean(axis=0)

    base = cross(sample.curves, sample.responses)
    out = []
    for idx in itertools.product(range(n), repeat=n):
        idx = list(idx)
        out.append(_l2(cross(sample.curves[idx], sample.responses[idx]) - base, w))
    return np.array(out)


def distribution_gap(replicates, enumeration):
    """Largest per-atom and CDF gaps between replicates and the exact law.

    Returns ``(atom_gap, cdf_gap, all_matched)``.
    """
    atoms, masses = exact_atoms(enumeration)
    freq, matched = atom_frequencies(replicates, atoms)
    atom_gap = float(np.max(np.abs(freq - masses)))
    cdf_gap = float(np.max(np.abs(np.cumsum(freq) - np.cumsum(masses))))
    return atom_gap, cdf_gap, matched
