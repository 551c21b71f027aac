"""Gaussian-mixture point clouds used by the flow experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError, PointCloud, RngStream

NOISE_SIGMA = 0.1
CENTER_SCALE = 2.0

_G4_CENTERS = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]])
_R = 1.0 / np.sqrt(2.0)
_G8_CENTERS = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [_R, _R], [_R, -_R], [-_R, _R], [-_R, -_R]], dtype=np.float64)


@dataclass(frozen=True)
class MixtureSpec:
    centers: np.ndarray
    noise_sigma: float = NOISE_SIGMA
    scale: float = CENTER_SCALE
    n: int = 128

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=np.float64))
        if c.shape[0] < 1:
            raise DomainError("a mixture needs at least one center")
        if not self.noise_sigma > 0:
            raise DomainError("noise_sigma must be positive")
        object.__setattr__(self, "centers", c)

    def sample(self, rng: RngStream) -> tuple[PointCloud, np.ndarray]:
        """Points and their generating cluster labels; centers are scaled, noise is not."""
        gen = rng.generator()
        k, d = self.centers.shape
        labels = gen.integers(0, k, size=self.n)
        pts = self.scale * self.centers[labels] + self.noise_sigma * gen.standard_normal((self.n, d))
        return PointCloud(pts), labels


def gaussian4_centers(d: int = 3) -> np.ndarray:
    if d not in (2, 3):
        raise DomainError(f"gaussian4 is defined for d in {{2, 3}}, got {d}")
    return CENTER_SCALE * _G4_CENTERS[:, :d]


def gaussian8_centers() -> np.ndarray:
    return CENTER_SCALE * _G8_CENTERS


def gaussian4(d: int, n: int, rng: RngStream) -> PointCloud:
    if n < 4:
        raise DomainError("gaussian4 needs n >= 4")
    return MixtureSpec(_G4_CENTERS[:, : gaussian4_centers(d).shape[1]], n=n).sample(rng)[0]


def gaussian8(n: int, rng: RngStream) -> PointCloud:
    if n < 8:
        raise DomainError("gaussian8 needs n >= 8")
    return MixtureSpec(_G8_CENTERS, n=n).sample(rng)[0]


def flow_problem(target: str, data_dim: int, gen_dim: int, n: int, seed: int) -> tuple[PointCloud, PointCloud]:
    """Seeded ``(source_init, target)`` pair for a desk-scale flow.

    ``target`` is ``gaussian4``, ``gaussian8`` or ``csv:PATH``. The source is a
    standard normal cloud of ``n`` points in ``gen_dim`` dimensions.
    """
    if target == "gaussian4":
        tgt = gaussian4(data_dim, n, RngStream(seed, 1))
    elif target == "gaussian8":
        if data_dim != 2:
            raise DomainError("gaussian8 is two-dimensional; use --source-dim 2")
        tgt = gaussian8(n, RngStream(seed, 1))
    elif target.startswith("csv:"):
        from .core import load_csv, subsample

        tgt = load_csv(target[4:])
        if tgt.n < n:
            raise DomainError(f"target has {tgt.n} points, fewer than n = {n}")
        tgt = subsample(tgt, n, RngStream(seed, 1))
    else:
        raise DomainError(f"unknown target {target!r}; expected gaussian4, gaussian8 or csv:PATH")
    if gen_dim < 1:
        raise DomainError("generated dimension must be >= 1")
    src = PointCloud(RngStream(seed, 2).generator().standard_normal((n, gen_dim)))
    return src, tgt
