"""One-dimensional GW_2^2 between equal-size uniform samples.

The solver compares the identity and anti-identity pairings of the sorted
samples. ``gw2_1d`` evaluates both by the direct double sum; ``gw2_1d_fast``
gets the same numbers in O(n) from power sums. Exhaustive permutation oracles
are provided for small n.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._kernels import sorted_pair_costs
from .core import DomainError, PointCloud, UnitDirection

BRUTEFORCE_MAX_1D = 9
BRUTEFORCE_MAX_CLOUD = 8


class Assignment(str, enum.Enum):
    IDENTITY = "identity"
    ANTI_IDENTITY = "anti-identity"


@dataclass(frozen=True)
class SortedProjection:
    values: np.ndarray
    perm_to_sorted: np.ndarray

    @classmethod
    def from_values(cls, x) -> "SortedProjection":
        x = np.asarray(x, dtype=np.float64).ravel()
        perm = np.argsort(x, kind="stable")
        return cls(x[perm], perm)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class GW1DResult:
    value: float
    assignment: Assignment
    s1: float = float("nan")


def project(cloud: PointCloud, theta) -> SortedProjection:
    th = theta.coords if isinstance(theta, UnitDirection) else np.asarray(theta, dtype=np.float64)
    if th.shape != (cloud.d,):
        raise DomainError(f"direction has dimension {th.shape[0]}, cloud has {cloud.d}")
    return SortedProjection.from_values(cloud.points @ th)


def _as_sorted(x) -> np.ndarray:
    if isinstance(x, SortedProjection):
        return x.values
    return np.sort(np.asarray(x, dtype=np.float64).ravel())


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DomainError(f"1D samples must have equal length, got {a.shape[0]} and {b.shape[0]}")
    if a.shape[0] < 2:
        raise DomainError("1D samples need at least 2 points")


def perm_cost(a: np.ndarray, b: np.ndarray) -> float:
    """(1/n^2) sum_ij ((a_i - a_j)^2 - (b_i - b_j)^2)^2 with a_i paired to b_i."""
    da = (a[:, None] - a[None, :]) ** 2
    db = (b[:, None] - b[None, :]) ** 2
    return float(np.sum((da - db) ** 2) / a.shape[0] ** 2)


def gw2_1d(xs, ys) -> GW1DResult:
    """Identity vs anti-identity by direct O(n^2) evaluation; ties go to identity."""
    a, b = _as_sorted(xs), _as_sorted(ys)
    _check_pair(a, b)
    c_id = perm_cost(a, b)
    c_anti = perm_cost(a, b[::-1])
    if c_anti < c_id:
        return GW1DResult(c_anti, Assignment.ANTI_IDENTITY)
    return GW1DResult(c_id, Assignment.IDENTITY)


def gw2_1d_fast(xs, ys) -> GW1DResult:
    a, b = _as_sorted(xs), _as_sorted(ys)
    _check_pair(a, b)
    c_id, c_anti = sorted_pair_costs(a, b)
    if c_anti < c_id:
        return GW1DResult(c_anti, Assignment.ANTI_IDENTITY)
    return GW1DResult(c_id, Assignment.IDENTITY)


def gw2_1d_bruteforce(xs, ys) -> float:
    a = np.asarray(xs, dtype=np.float64).ravel()
    b = np.asarray(ys, dtype=np.float64).ravel()
    _check_pair(a, b)
    n = a.shape[0]
    if n > BRUTEFORCE_MAX_1D:
        raise DomainError(f"brute force limited to n <= {BRUTEFORCE_MAX_1D}, got {n}")
    da = (a[:, None] - a[None, :]) ** 2
    db = (b[:, None] - b[None, :]) ** 2
    return _min_over_perms(da, db)


def _min_over_perms(da: np.ndarray, db: np.ndarray) -> float:
    n = da.shape[0]
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    best = math.inf
    # blocks of permutations keep the (k, n, n) temporaries small
    for s in range(0, len(perms), 2048):
        p = perms[s : s + 2048]
        dbp = db[p[:, :, None], p[:, None, :]]
        costs = np.sum((da[None] - dbp) ** 2, axis=(1, 2))
        best = min(best, float(costs.min()))
    return best / n**2


def gw2_cloud_bruteforce(mu: PointCloud, nu: PointCloud) -> float:
    """Permutation-restricted GW_2^2 with ambient squared Euclidean distances.

    An upper bound on the true GW_2^2 (which ranges over all couplings).
    """
    if mu.n != nu.n:
        raise DomainError(f"clouds must have equal size, got {mu.n} and {nu.n}")
    if mu.n > BRUTEFORCE_MAX_CLOUD:
        raise DomainError(f"brute force limited to n <= {BRUTEFORCE_MAX_CLOUD}, got {mu.n}")
    return _min_over_perms(mu.distance_matrix() ** 2, nu.distance_matrix() ** 2)


def s1_diagnostic(xs, ys, tol: float = 1e-10) -> float:
    """Coupling-independent part of the centered 1D GW_2^2 decomposition."""
    a = np.asarray(xs, dtype=np.float64).ravel()
    b = np.asarray(ys, dtype=np.float64).ravel()
    _check_pair(a, b)
    scale = max(1.0, float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    if abs(a.mean()) > tol * scale or abs(b.mean()) > tol * scale:
        raise DomainError("s1_diagnostic needs centered inputs; center the projections first")
    n = a.shape[0]
    a2, b2 = a * a, b * b
    quart_a = (2 * n * np.sum(a2 * a2) + 6 * np.sum(a2) ** 2) / n**2
    quart_b = (2 * n * np.sum(b2 * b2) + 6 * np.sum(b2) ** 2) / n**2
    return float(quart_a + quart_b - 4 * np.mean(a2) * np.mean(b2))
