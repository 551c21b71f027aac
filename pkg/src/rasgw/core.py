"""Domain types, point-cloud I/O, distance-preserving transforms and RNG streams."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DomainError(ValueError):
    """Input violates a mathematical precondition."""


class CloudParseError(ValueError):
    """A point-cloud CSV file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


UNIT_TOL = 1e-12


@dataclass(frozen=True)
class PointCloud:
    """n points in R^d carrying uniform mass 1/n."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise DomainError(f"points must be a 2-D array, got shape {pts.shape}")
        if pts.shape[0] < 2:
            raise DomainError(f"a point cloud needs n >= 2 points, got {pts.shape[0]}")
        if pts.shape[1] < 1:
            raise DomainError("a point cloud needs dimension d >= 1")
        if not np.all(np.isfinite(pts)):
            raise DomainError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def distance_matrix(self) -> np.ndarray:
        diff = self.points[:, None, :] - self.points[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=-1))


@dataclass(frozen=True)
class UnitDirection:
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=np.float64, copy=True).ravel()
        if abs(np.linalg.norm(c) - 1.0) > UNIT_TOL:
            raise DomainError(f"direction is not unit norm (|norm - 1| = {abs(np.linalg.norm(c) - 1.0):.3g})")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def d(self) -> int:
        return self.coords.shape[0]


class Family(str, enum.Enum):
    VMF = "vmf"
    PS = "ps"


@dataclass(frozen=True)
class ScaleFamily:
    """Location-scale law on the sphere: von Mises-Fisher or Power Spherical."""

    family: Family = Family.PS
    kappa: float = 50.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not (0.0 < self.kappa < np.inf):
            raise DomainError(f"kappa must lie in (0, inf), got {self.kappa}")


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by ``(seed, stream_index)``.

    Streams with different indices come from distinct ``SeedSequence`` spawn keys
    and are statistically independent.
    """

    seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not (0 <= self.seed < 2**64 and 0 <= self.stream_index < 2**64):
            raise DomainError("seed and stream_index must be unsigned 64-bit integers")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(ss))

    def substream(self, offset: int) -> "RngStream":
        return RngStream(self.seed, (self.stream_index + offset) % 2**64)


class Method(str, enum.Enum):
    SGW = "sgw"
    MAX_SGW = "max-sgw"
    DSGW = "dsgw"
    EBSGW = "ebsgw"
    RPSGW = "rpsgw"
    RASGW = "rasgw"
    IWRASGW = "iwrasgw"


class Energy(str, enum.Enum):
    EXP = "exp"
    IDENTITY = "id"


@dataclass(frozen=True)
class EstimatorSpec:
    """Which sliced-GW estimator to run and with which hyperparameters."""

    method: Method = Method.RASGW
    projections: int = 500
    inner: int = 50
    outer: int = 1
    scale: ScaleFamily = field(default_factory=ScaleFamily)
    energy: Energy = Energy.EXP
    opt_iters: int = 100
    step_size: float = 0.05
    restarts: int = 8
    p: int = 2

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "energy", Energy(self.energy))
        if self.p != 2:
            raise DomainError("only p = 2 is supported")
        for name in ("projections", "inner", "outer", "opt_iters", "restarts"):
            if int(getattr(self, name)) < 1:
                raise DomainError(f"{name} must be a positive integer")
        if not self.step_size > 0:
            raise DomainError("step_size must be positive")

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "projections": self.projections,
            "inner": self.inner,
            "outer": self.outer,
            "family": self.scale.family.value,
            "kappa": self.scale.kappa,
            "energy": self.energy.value,
            "opt_iters": self.opt_iters,
            "step_size": self.step_size,
            "restarts": self.restarts,
            "p": self.p,
        }


# --- I/O ---------------------------------------------------------------------


def load_csv(path) -> PointCloud:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CloudParseError("empty file", line=1) from None
        header = [h.strip() for h in header]
        expected = [f"x{k}" for k in range(len(header))]
        if not header or header != expected:
            raise CloudParseError(f"header must be x0,...,x{{d-1}}, got {','.join(header)}", line=1)
        d = len(header)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) != d:
                raise CloudParseError(f"expected {d} fields, found {len(row)}", line=lineno)
            try:
                vals = [float(f) for f in row]
            except ValueError as exc:
                raise CloudParseError(str(exc), line=lineno) from None
            if not all(np.isfinite(vals)):
                raise CloudParseError("non-finite coordinate", line=lineno)
            rows.append(vals)
    if len(rows) < 2:
        raise DomainError(f"{path}: a point cloud needs at least 2 rows, found {len(rows)}")
    return PointCloud(np.asarray(rows, dtype=np.float64))


def save_csv(cloud: PointCloud, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(f"x{k}" for k in range(cloud.d)) + "\n")
        for row in cloud.points:
            fh.write(",".join(format_float(v) for v in row) + "\n")


def format_float(x: float, digits: int = 17) -> str:
    return f"{float(x):.{digits}g}"


# --- transforms --------------------------------------------------------------


def pad_uplift(cloud: PointCloud, target_d: int) -> PointCloud:
    if target_d < cloud.d:
        raise DomainError(f"cannot pad a {cloud.d}-D cloud down to {target_d} dimensions")
    if target_d == cloud.d:
        return cloud
    out = np.zeros((cloud.n, target_d))
    out[:, : cloud.d] = cloud.points
    return PointCloud(out)


def pad_to_common(mu: PointCloud, nu: PointCloud) -> tuple[PointCloud, PointCloud]:
    d = max(mu.d, nu.d)
    return pad_uplift(mu, d), pad_uplift(nu, d)


def center(cloud: PointCloud) -> PointCloud:
    return PointCloud(cloud.points - cloud.points.mean(axis=0))


def apply_translation(cloud: PointCloud, t) -> PointCloud:
    t = np.asarray(t, dtype=np.float64)
    if t.shape != (cloud.d,) or not np.all(np.isfinite(t)):
        raise DomainError(f"translation must be a finite {cloud.d}-vector")
    return PointCloud(cloud.points + t)


def apply_negation(cloud: PointCloud) -> PointCloud:
    return PointCloud(-cloud.points)


def subsample(cloud: PointCloud, n: int, rng: RngStream) -> PointCloud:
    """Uniform choice of ``n`` rows without replacement (identity when n == cloud.n)."""
    if n > cloud.n:
        raise DomainError(f"cannot subsample {n} rows from a cloud of {cloud.n}")
    if n == cloud.n:
        return cloud
    idx = rng.generator().choice(cloud.n, size=n, replace=False)
    return PointCloud(cloud.points[np.sort(idx)])


def match_sizes(mu: PointCloud, nu: PointCloud, rng: RngStream) -> tuple[PointCloud, PointCloud]:
    """Subsample the larger cloud so both have min(n_mu, n_nu) points."""
    n = min(mu.n, nu.n)
    return subsample(mu, n, rng.substream(1)), subsample(nu, n, rng.substream(2))


def as_cloud(x) -> PointCloud:
    return x if isinstance(x, PointCloud) else PointCloud(x)
