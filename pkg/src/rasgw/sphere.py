"""Samplers on the unit sphere S^{d-1}.

Vectorised routines take a ``numpy.random.Generator`` and return an ``(m, d)``
array of unit rows; the ``sample_*`` wrappers take an :class:`RngStream` and
return a single :class:`UnitDirection`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError, Family, RngStream, ScaleFamily, UnitDirection

# below this distance from e1 the reflection is replaced by the identity
_E1_TOL = 1e-14


@dataclass(frozen=True)
class SphericalSample:
    direction: UnitDirection
    family: ScaleFamily | None = None
    location: UnitDirection | None = None


def _check_locations(locations: np.ndarray) -> np.ndarray:
    loc = np.atleast_2d(np.asarray(locations, dtype=np.float64))
    err = np.abs(np.linalg.norm(loc, axis=1) - 1.0)
    if np.any(err > 1e-12):
        raise DomainError(f"location must be a unit vector (max |norm - 1| = {err.max():.3g})")
    return loc


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not (0.0 < kappa < np.inf):
        raise DomainError(f"kappa must lie in (0, inf), got {kappa}")
    return kappa


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def uniform_directions(d: int, m: int, gen: np.random.Generator) -> np.ndarray:
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    g = gen.standard_normal((m, d))
    nrm = np.linalg.norm(g, axis=1)
    # a zero Gaussian vector has probability 0; redraw defensively
    while np.any(nrm == 0):
        bad = nrm == 0
        g[bad] = gen.standard_normal((int(bad.sum()), d))
        nrm = np.linalg.norm(g, axis=1)
    return g / nrm[:, None]


def _beta_pair(a: float, b: float, size: int, gen: np.random.Generator):
    """Beta(a, b) draws as (z, 1 - z) from two Gamma variates."""
    ga = gen.gamma(a, 1.0, size)
    gb = gen.gamma(b, 1.0, size)
    s = ga + gb
    return ga / s, gb / s


def householder_apply(locations: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Map rows of ``v`` (expressed in the e1 frame) by the reflection sending e1 to each location."""
    loc = np.atleast_2d(locations)
    v = np.broadcast_to(np.atleast_2d(v), loc.shape)
    u = -loc.copy()
    u[:, 0] += 1.0
    nrm = np.linalg.norm(u, axis=1)
    out = np.array(v, copy=True)
    mask = nrm > _E1_TOL
    if np.any(mask):
        uu = u[mask] / nrm[mask, None]
        vv = v[mask]
        out[mask] = vv - 2.0 * uu * np.sum(uu * vv, axis=1, keepdims=True)
    return out


def _lift(w: np.ndarray, tang: np.ndarray, v: np.ndarray) -> np.ndarray:
    """(w, tang * v) in the e1 frame; ``tang`` is sqrt(1 - w^2)."""
    h = np.empty((w.shape[0], v.shape[1] + 1))
    h[:, 0] = w
    h[:, 1:] = tang[:, None] * v
    return h


def _vmf_propose(d: int, kappa: float, k: int, gen: np.random.Generator):
    """One round of Beta-proposal candidates for the cosine; returns (omega, accepted)."""
    dm1 = d - 1.0
    root = np.sqrt(4.0 * kappa * kappa + dm1 * dm1)
    # b = (-2k + root) / (d-1), written without the cancellation
    b = dm1 / (2.0 * kappa + root)
    a = (dm1 + 2.0 * kappa + root) / 4.0
    mm = 4.0 * a * b / (1.0 + b) - dm1 * np.log(dm1)
    psi, _ = _beta_pair(dm1 / 2.0, dm1 / 2.0, k, gen)
    u = gen.random(k)
    denom = 1.0 - (1.0 - b) * psi
    omega = (1.0 - (1.0 + b) * psi) / denom
    t = 2.0 * a * b / denom
    return omega, dm1 * np.log(t) - t + mm >= np.log(u)


def vmf_acceptance_rate(d: int, kappa: float, m: int, gen: np.random.Generator) -> float:
    """Fraction of ``m`` proposals accepted by the vMF rejection step."""
    return float(np.mean(_vmf_propose(d, _check_kappa(kappa), m, gen)[1]))


def _vmf_cosines(d: int, kappa: float, m: int, gen: np.random.Generator) -> np.ndarray:
    """Cosine to the mean direction by Beta-proposal rejection."""
    w = np.empty(m)
    todo = np.arange(m)
    while todo.size:
        omega, ok = _vmf_propose(d, kappa, todo.size, gen)
        w[todo[ok]] = omega[ok]
        todo = todo[~ok]
    return np.clip(w, -1.0, 1.0)


def _vmf_frame(d: int, kappa: float, m: int, gen: np.random.Generator) -> np.ndarray:
    v = uniform_directions(d - 1, m, gen)
    w = _vmf_cosines(d, kappa, m, gen)
    return _lift(w, np.sqrt(np.maximum(1.0 - w * w, 0.0)), v)


def _ps_frame(d: int, kappa: float, m: int, gen: np.random.Generator) -> np.ndarray:
    half = (d - 1) / 2.0
    z, one_minus_z = _beta_pair(half + kappa, half, m, gen)
    v = uniform_directions(d - 1, m, gen)
    return _lift(2.0 * z - 1.0, 2.0 * np.sqrt(z * one_minus_z), v)


def e1_frame_samples(d: int, scale: ScaleFamily, m: int, gen: np.random.Generator) -> np.ndarray:
    """Draws from the scale family located at e1, before any rotation."""
    kappa = _check_kappa(scale.kappa)
    if d < 2:
        raise DomainError(f"{scale.family.value} sampling needs d >= 2")
    if scale.family is Family.VMF:
        return _vmf_frame(d, kappa, m, gen)
    return _ps_frame(d, kappa, m, gen)


def vmf_directions(locations, kappa: float, gen: np.random.Generator) -> np.ndarray:
    loc = _check_locations(locations)
    h = e1_frame_samples(loc.shape[1], ScaleFamily(Family.VMF, kappa), loc.shape[0], gen)
    return _normalize_rows(householder_apply(loc, h))


def ps_directions(locations, kappa: float, gen: np.random.Generator) -> np.ndarray:
    loc = _check_locations(locations)
    h = e1_frame_samples(loc.shape[1], ScaleFamily(Family.PS, kappa), loc.shape[0], gen)
    return _normalize_rows(householder_apply(loc, h))


def scale_directions(locations, scale: ScaleFamily, gen: np.random.Generator) -> np.ndarray:
    if scale.family is Family.VMF:
        return vmf_directions(locations, scale.kappa, gen)
    return ps_directions(locations, scale.kappa, gen)


# --- single-draw wrappers ----------------------------------------------------


def sample_uniform(d: int, rng: RngStream) -> UnitDirection:
    return UnitDirection(uniform_directions(d, 1, rng.generator())[0])


def _loc_coords(location) -> np.ndarray:
    if isinstance(location, UnitDirection):
        return location.coords
    return np.asarray(location, dtype=np.float64)


def sample_vmf(location, kappa: float, rng: RngStream) -> UnitDirection:
    return UnitDirection(vmf_directions(_loc_coords(location)[None, :], kappa, rng.generator())[0])


def sample_power_spherical(location, kappa: float, rng: RngStream) -> UnitDirection:
    return UnitDirection(ps_directions(_loc_coords(location)[None, :], kappa, rng.generator())[0])


def householder_to(location, v) -> UnitDirection:
    loc = _check_locations(_loc_coords(location))
    vv = _check_locations(_loc_coords(v))
    return UnitDirection(_normalize_rows(householder_apply(loc, vv))[0])
