"""Monte Carlo sliced-GW estimators sharing the projection + 1D solver substrate.

Every estimator returns an :class:`EstimateResult` whose ``raw_mean`` is the
(possibly weighted) average of per-direction GW_2^2 costs and whose ``value``
is its square root.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import (
    DomainError,
    Energy,
    EstimatorSpec,
    Method,
    PointCloud,
    RngStream,
    ScaleFamily,
)
from .rapd import rasd_directions, rpsd_directions
from .sphere import e1_frame_samples, householder_apply, scale_directions, uniform_directions

FD_STEP = 1e-5


@dataclass(frozen=True)
class EstimateResult:
    value: float
    raw_mean: float
    directions: np.ndarray
    costs: np.ndarray
    weights: np.ndarray
    stderr: float
    wall_time: float
    spec: EstimatorSpec
    seed: int
    extra: dict = field(default_factory=dict)

    @property
    def per_projection(self) -> list[tuple[np.ndarray, float, float]]:
        return [(th, float(c), float(w)) for th, c, w in zip(self.directions, self.costs, self.weights)]


def _check_pair(mu: PointCloud, nu: PointCloud) -> None:
    if mu.d != nu.d:
        raise DomainError(f"clouds live in R^{mu.d} and R^{nu.d}; pad the lower-dimensional one with pad_uplift")
    if mu.n != nu.n:
        raise DomainError(f"clouds have {mu.n} and {nu.n} points; subsample both to min(n) with match_sizes")


def sliced_gw_costs(mu: PointCloud, nu: PointCloud, directions: np.ndarray) -> np.ndarray:
    """GW_2^2 between the projections of ``mu`` and ``nu`` on each row of ``directions``."""
    _check_pair(mu, nu)
    costs, _ = _kernels.sliced_costs(mu.points, nu.points, directions)
    return costs


def energy_weights(costs: np.ndarray, energy: Energy) -> np.ndarray:
    """Normalised weights proportional to f(cost)."""
    costs = np.asarray(costs, dtype=np.float64)
    if Energy(energy) is Energy.EXP:
        w = np.exp(costs - costs.max())
    else:
        w = costs.copy()
        if w.sum() <= 0:
            w = np.ones_like(costs)
    return w / w.sum()


def _unweighted(costs: np.ndarray) -> tuple[float, np.ndarray, float]:
    m = costs.shape[0]
    se = float(np.std(costs, ddof=1) / np.sqrt(m)) if m > 1 else float("nan")
    return float(np.mean(costs)), np.full(m, 1.0 / m), se


def _self_normalised_se(costs: np.ndarray, w: np.ndarray, value: float) -> float:
    return float(np.sqrt(np.sum(w * w * (costs - value) ** 2)))


def _result(raw, directions, costs, weights, se, t0, spec, rng, **extra) -> EstimateResult:
    raw = max(float(raw), 0.0)
    return EstimateResult(
        value=float(np.sqrt(raw)),
        raw_mean=raw,
        directions=directions,
        costs=costs,
        weights=weights,
        stderr=se,
        wall_time=time.perf_counter() - t0,
        spec=spec,
        seed=rng.seed,
        extra=extra,
    )


def estimate_sgw(mu: PointCloud, nu: PointCloud, M: int, rng: RngStream) -> EstimateResult:
    t0 = time.perf_counter()
    _check_pair(mu, nu)
    thetas = uniform_directions(mu.d, M, rng.generator())
    costs = sliced_gw_costs(mu, nu, thetas)
    raw, w, se = _unweighted(costs)
    return _result(raw, thetas, costs, w, se, t0, EstimatorSpec(Method.SGW, projections=M), rng)


def estimate_rasgw(mu: PointCloud, nu: PointCloud, scale: ScaleFamily, M: int, rng: RngStream) -> EstimateResult:
    t0 = time.perf_counter()
    _check_pair(mu, nu)
    thetas = rasd_directions(mu.points, nu.points, scale, M, rng.generator())
    costs = sliced_gw_costs(mu, nu, thetas)
    raw, w, se = _unweighted(costs)
    return _result(raw, thetas, costs, w, se, t0, EstimatorSpec(Method.RASGW, projections=M, scale=scale), rng)


def iw_aggregate(costs: np.ndarray, L: int, H: int, energy: Energy):
    """Per-block self-normalised weighting, averaged over blocks.

    Returns ``(raw, weights, stderr)`` where ``weights`` already carry the 1/H factor.
    """
    blocks = costs.reshape(H, L)
    w = np.vstack([energy_weights(b, energy) for b in blocks])
    block_vals = np.sum(blocks * w, axis=1)
    raw = float(np.mean(block_vals))
    if H > 1:
        se = float(np.std(block_vals, ddof=1) / np.sqrt(H))
    else:
        se = _self_normalised_se(blocks[0], w[0], block_vals[0])
    return raw, (w / H).ravel(), se


def estimate_iwrasgw(
    mu: PointCloud,
    nu: PointCloud,
    scale: ScaleFamily,
    L: int,
    H: int = 1,
    f: Energy = Energy.EXP,
    rng: RngStream | None = None,
) -> EstimateResult:
    t0 = time.perf_counter()
    _check_pair(mu, nu)
    if L < 1 or H < 1:
        raise DomainError("L and H must be positive")
    rng = rng or RngStream(0)
    thetas = rasd_directions(mu.points, nu.points, scale, H * L, rng.generator())
    costs = sliced_gw_costs(mu, nu, thetas)
    raw, w, se = iw_aggregate(costs, L, H, f)
    spec = EstimatorSpec(Method.IWRASGW, projections=H * L, inner=L, outer=H, scale=scale, energy=f)
    return _result(raw, thetas, costs, w, se, t0, spec, rng)


def estimate_ebsgw(mu: PointCloud, nu: PointCloud, L: int, f: Energy = Energy.EXP, rng: RngStream | None = None) -> EstimateResult:
    """Importance-sampled energy-based slicing with a uniform proposal (its density cancels)."""
    t0 = time.perf_counter()
    _check_pair(mu, nu)
    rng = rng or RngStream(0)
    thetas = uniform_directions(mu.d, L, rng.generator())
    costs = sliced_gw_costs(mu, nu, thetas)
    w = energy_weights(costs, f)
    raw = float(np.sum(costs * w))
    se = _self_normalised_se(costs, w, raw)
    return _result(raw, thetas, costs, w, se, t0, EstimatorSpec(Method.EBSGW, projections=L, inner=L, energy=f), rng)


def estimate_rpsgw(mu: PointCloud, nu: PointCloud, scale: ScaleFamily, M: int, rng: RngStream) -> EstimateResult:
    t0 = time.perf_counter()
    _check_pair(mu, nu)
    thetas = rpsd_directions(mu.points, nu.points, scale, M, rng.generator())
    costs = sliced_gw_costs(mu, nu, thetas)
    raw, w, se = _unweighted(costs)
    return _result(raw, thetas, costs, w, se, t0, EstimatorSpec(Method.RPSGW, projections=M, scale=scale), rng)


# --- optimisation-based baselines -------------------------------------------


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _fd_probe(theta: np.ndarray, h: float) -> np.ndarray:
    """theta followed by theta +/- h e_k for every coordinate k."""
    d = theta.shape[0]
    eye = np.eye(d) * h
    return np.vstack([theta[None, :], theta + eye, theta - eye])


def _tangent_log_grad(vals: np.ndarray, theta: np.ndarray, h: float) -> np.ndarray:
    """Tangent-plane gradient of log(mean cost) from a ``_fd_probe`` evaluation."""
    d = theta.shape[0]
    g = (vals[1 : d + 1] - vals[d + 1 :]) / (2 * h)
    g = g - np.dot(g, theta) * theta
    return g / max(vals[0], 1e-300)


def _max_sgw_ascent(X, Y, theta, T, step):
    """Projected ascent with step halving; returns the best direction and its cost."""
    best_th = theta
    best = _kernels.sliced_costs(X, Y, theta[None, :])[0][0]
    for _ in range(T):
        vals, _ = _kernels.sliced_costs(X, Y, _fd_probe(best_th, FD_STEP))
        g = _tangent_log_grad(vals, best_th, FD_STEP)
        if not np.any(g):
            break
        cand = _normalize(best_th + step * g)
        c = _kernels.sliced_costs(X, Y, cand[None, :])[0][0]
        if c >= best:
            best_th, best = cand, c
        else:
            step *= 0.5
            if step < 1e-10:
                break
    return best_th, float(best)


def estimate_max_sgw(
    mu: PointCloud,
    nu: PointCloud,
    T: int = 100,
    step: float = 0.05,
    restarts: int = 8,
    rng: RngStream | None = None,
) -> EstimateResult:
    t0 = time.perf_counter()
    _check_pair(mu, nu)
    rng = rng or RngStream(0)
    inits = uniform_directions(mu.d, restarts, rng.generator())
    dirs = np.empty_like(inits)
    costs = np.empty(restarts)
    for r in range(restarts):
        dirs[r], costs[r] = _max_sgw_ascent(mu.points, nu.points, inits[r], T, step)
    k = int(np.argmax(costs))
    w = np.zeros(restarts)
    w[k] = 1.0
    spec = EstimatorSpec(Method.MAX_SGW, projections=restarts, opt_iters=T, step_size=step, restarts=restarts)
    return _result(costs[k], dirs, costs, w, 0.0, t0, spec, rng)


def grid_max_sgw_2d(mu: PointCloud, nu: PointCloud, n_angles: int = 10_000) -> tuple[float, np.ndarray]:
    """Max raw cost (squared scale) over equispaced half-circle angles for 2D clouds; the cost is even in theta."""
    if mu.d != 2:
        raise DomainError("the angle grid oracle is for d = 2")
    ang = np.pi * np.arange(n_angles) / n_angles
    thetas = np.column_stack([np.cos(ang), np.sin(ang)])
    costs = sliced_gw_costs(mu, nu, thetas)
    k = int(np.argmax(costs))
    return float(costs[k]), thetas[k]


def estimate_dsgw(
    mu: PointCloud,
    nu: PointCloud,
    scale: ScaleFamily,
    L: int = 50,
    T: int = 100,
    step: float = 0.05,
    rng: RngStream | None = None,
) -> EstimateResult:
    """Location of a vMF/PS slicing law tuned by stochastic projected ascent.

    Each step reuses one batch of e1-frame draws for the centre and all finite
    difference probes (common random numbers).
    """
    t0 = time.perf_counter()
    _check_pair(mu, nu)
    rng = rng or RngStream(0)
    gen = rng.generator()
    X, Y = mu.points, nu.points
    d = mu.d
    eps = uniform_directions(d, 1, gen)[0]
    n_probe = 2 * d + 1
    for _ in range(T):
        base = e1_frame_samples(d, scale, L, gen)
        locs = _normalize(_fd_probe(eps, FD_STEP))
        thetas = householder_apply(np.repeat(locs, L, axis=0), np.tile(base, (n_probe, 1)))
        costs, _ = _kernels.sliced_costs(X, Y, thetas)
        vals = costs.reshape(n_probe, L).mean(axis=1)
        g = _tangent_log_grad(vals, eps, FD_STEP)
        eps = _normalize(eps + step * g)
    thetas = scale_directions(np.repeat(eps[None, :], L, axis=0), scale, gen)
    costs = sliced_gw_costs(mu, nu, thetas)
    raw, w, se = _unweighted(costs)
    spec = EstimatorSpec(Method.DSGW, projections=L, inner=L, scale=scale, opt_iters=T, step_size=step)
    return _result(raw, thetas, costs, w, se, t0, spec, rng, location=eps)


# --- dispatch ----------------------------------------------------------------


def estimate(mu: PointCloud, nu: PointCloud, spec: EstimatorSpec, rng: RngStream) -> EstimateResult:
    m = spec.method
    if m is Method.SGW:
        return estimate_sgw(mu, nu, spec.projections, rng)
    if m is Method.RASGW:
        return estimate_rasgw(mu, nu, spec.scale, spec.projections, rng)
    if m is Method.IWRASGW:
        return estimate_iwrasgw(mu, nu, spec.scale, spec.inner, spec.outer, spec.energy, rng)
    if m is Method.EBSGW:
        return estimate_ebsgw(mu, nu, spec.inner, spec.energy, rng)
    if m is Method.RPSGW:
        return estimate_rpsgw(mu, nu, spec.scale, spec.projections, rng)
    if m is Method.MAX_SGW:
        return estimate_max_sgw(mu, nu, spec.opt_iters, spec.step_size, spec.restarts, rng)
    if m is Method.DSGW:
        return estimate_dsgw(mu, nu, spec.scale, spec.inner, spec.opt_iters, spec.step_size, rng)
    raise DomainError(f"unknown method {m}")
