"""Relation-aware projecting directions.

A direction is drawn by picking two points from each cloud, taking the unit
difference vectors inside each cloud, and centering a location-scale law at
either their normalized sum or their normalized difference (fair coin).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError, PointCloud, RngStream, ScaleFamily, UnitDirection
from .sphere import scale_directions

DEGENERATE_NORM = 1e-12
BISECTOR_TOL = 1e-10
DEFAULT_C = 1e-8


@dataclass(frozen=True)
class RelationQuartet:
    x: np.ndarray
    x_prime: np.ndarray
    y: np.ndarray
    y_prime: np.ndarray

    def __post_init__(self):
        arrs = [np.asarray(v, dtype=np.float64).ravel() for v in (self.x, self.x_prime, self.y, self.y_prime)]
        d = arrs[0].shape[0]
        if any(a.shape[0] != d for a in arrs):
            raise DomainError("quartet vectors must share one dimension; pad the lower-dimensional cloud")
        if not all(np.all(np.isfinite(a)) for a in arrs):
            raise DomainError("quartet vectors must be finite")
        for name, a in zip(("x", "x_prime", "y", "y_prime"), arrs):
            object.__setattr__(self, name, a)


@dataclass(frozen=True)
class BisectorPair:
    z_plus: UnitDirection | None
    z_minus: UnitDirection | None

    @property
    def plus_defined(self) -> bool:
        return self.z_plus is not None

    @property
    def minus_defined(self) -> bool:
        return self.z_minus is not None


def intra_relational_path(x, x_prime) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    x_prime = np.asarray(x_prime, dtype=np.float64)
    if x.shape != x_prime.shape:
        raise DomainError("IRP endpoints must have the same dimension")
    return x - x_prime


def normalize_irps(z: np.ndarray, c: float = DEFAULT_C) -> np.ndarray:
    """Row-wise unit IRPs; near-zero rows are shifted by ``c`` in every coordinate first."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    nrm = np.linalg.norm(z, axis=1)
    small = nrm <= DEGENERATE_NORM
    if np.any(small):
        z = z.copy()
        z[small] += c
        nrm = np.where(small, np.linalg.norm(z, axis=1), nrm)
    return z / nrm[:, None]


def normalize_irp(z, c: float = DEFAULT_C) -> UnitDirection:
    if not c > 0:
        raise DomainError("the additive constant c must be positive")
    return UnitDirection(normalize_irps(np.asarray(z, dtype=np.float64)[None, :], c)[0])


def bisector_pair(zx, zy) -> BisectorPair:
    zx = zx.coords if isinstance(zx, UnitDirection) else np.asarray(zx, dtype=np.float64)
    zy = zy.coords if isinstance(zy, UnitDirection) else np.asarray(zy, dtype=np.float64)
    s, t = zx + zy, zx - zy
    ns, nt = np.linalg.norm(s), np.linalg.norm(t)
    return BisectorPair(
        z_plus=UnitDirection(s / ns) if ns > BISECTOR_TOL else None,
        z_minus=UnitDirection(t / nt) if nt > BISECTOR_TOL else None,
    )


def mixture_locations(zx: np.ndarray, zy: np.ndarray, coin_plus: np.ndarray):
    """Bisector chosen by the coin for each row; an undefined pick falls back to the other one.

    Returns ``(locations, took_plus)``.
    """
    s = zx + zy
    t = zx - zy
    ns = np.linalg.norm(s, axis=1)
    nt = np.linalg.norm(t, axis=1)
    plus_ok = ns > BISECTOR_TOL
    minus_ok = nt > BISECTOR_TOL
    take_plus = np.where(coin_plus, plus_ok, ~minus_ok)
    loc = np.where(take_plus[:, None], s / np.maximum(ns, BISECTOR_TOL)[:, None], t / np.maximum(nt, BISECTOR_TOL)[:, None])
    return loc, take_plus


def _rapd_from_quartets(dx: np.ndarray, dy: np.ndarray, scale: ScaleFamily, gen: np.random.Generator) -> np.ndarray:
    zx = normalize_irps(dx)
    zy = normalize_irps(dy)
    coin = gen.random(zx.shape[0]) < 0.5
    loc, _ = mixture_locations(zx, zy, coin)
    return scale_directions(loc, scale, gen)


def sample_rapd(q: RelationQuartet, scale: ScaleFamily, rng: RngStream) -> UnitDirection:
    gen = rng.generator()
    dx = intra_relational_path(q.x, q.x_prime)[None, :]
    dy = intra_relational_path(q.y, q.y_prime)[None, :]
    return UnitDirection(_rapd_from_quartets(dx, dy, scale, gen)[0])


def rasd_directions(X: np.ndarray, Y: np.ndarray, scale: ScaleFamily, m: int, gen: np.random.Generator) -> np.ndarray:
    """``m`` directions from the relation-aware slicing distribution of two point sets.

    Quartet indices are four independent uniform draws with replacement.
    """
    if m < 1:
        raise DomainError(f"number of directions must be >= 1, got {m}")
    if X.shape[1] != Y.shape[1]:
        raise DomainError("clouds must share a dimension; pad the lower-dimensional cloud first")
    ix = gen.integers(0, X.shape[0], size=(2, m))
    iy = gen.integers(0, Y.shape[0], size=(2, m))
    return _rapd_from_quartets(X[ix[0]] - X[ix[1]], Y[iy[0]] - Y[iy[1]], scale, gen)


def sample_rasd(mu: PointCloud, nu: PointCloud, scale: ScaleFamily, m: int, rng: RngStream) -> np.ndarray:
    return rasd_directions(mu.points, nu.points, scale, m, rng.generator())


def rpsd_directions(X: np.ndarray, Y: np.ndarray, scale: ScaleFamily, m: int, gen: np.random.Generator) -> np.ndarray:
    """Cross-pair directions: location-scale law centered at the unit x - y."""
    if m < 1:
        raise DomainError(f"number of directions must be >= 1, got {m}")
    ix = gen.integers(0, X.shape[0], size=m)
    iy = gen.integers(0, Y.shape[0], size=m)
    return scale_directions(normalize_irps(X[ix] - Y[iy]), scale, gen)
