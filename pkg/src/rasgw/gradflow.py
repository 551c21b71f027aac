"""Frozen-assignment gradients of sliced GW losses and point-cloud gradient flows.

Directions, sorting permutations and the identity/anti-identity choice are held
constant while differentiating with respect to the source coordinates. For the
importance-weighted estimator the weights are differentiated through the costs.
"""

from __future__ import annotations

import enum
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import DomainError, Energy, EstimatorSpec, Method, PointCloud, RngStream, ScaleFamily, pad_uplift, subsample
from .estimators import energy_weights, estimate_rasgw, iw_aggregate
from .gw1d import gw2_cloud_bruteforce
from .rapd import rasd_directions
from .sphere import uniform_directions

GRADIENT_METHODS = (Method.SGW, Method.RASGW, Method.IWRASGW)


class FlowDivergedError(ArithmeticError):
    pass


class ReferenceMetric(str, enum.Enum):
    GW_CG = "gw-cg"
    PERM_GW = "perm-gw"
    RASGW_PROBE = "rasgw-probe"


@dataclass(frozen=True)
class FlowConfig:
    estimator: EstimatorSpec = field(default_factory=lambda: EstimatorSpec(Method.RASGW, projections=100))
    steps: int = 2000
    learning_rate: float = 0.01
    eval_every: int = 100
    reference_metric: ReferenceMetric = ReferenceMetric.GW_CG
    ref_subsample: int = 8
    ref_draws: int = 16
    probe_projections: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "reference_metric", ReferenceMetric(self.reference_metric))
        if self.steps < 1 or self.eval_every < 1:
            raise DomainError("steps and eval_every must be positive")
        if not self.learning_rate > 0:
            raise DomainError("learning_rate must be positive")
        if self.estimator.method not in GRADIENT_METHODS:
            raise DomainError(f"flows support {[m.value for m in GRADIENT_METHODS]}, got {self.estimator.method.value}")


@dataclass
class FlowRecord:
    step: int
    value: float
    ref: float
    t: float


@dataclass
class FlowTrace:
    records: list[FlowRecord] = field(default_factory=list)

    def append(self, rec: FlowRecord) -> None:
        if self.records and rec.step <= self.records[-1].step:
            raise ValueError("trace steps must be strictly increasing")
        self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def refs(self) -> np.ndarray:
        return np.array([r.ref for r in self.records])

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.records])

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"step": r.step, "value": float(r.value), "ref": float(r.ref), "t": float(r.t)}) + "\n"
            for r in self.records
        )


def _weight_grad_coef(L: int, H: int, energy: Energy):
    """d(raw_mean)/d(cost_l) for the block-weighted estimator."""

    def coef(costs: np.ndarray) -> np.ndarray:
        blocks = costs.reshape(H, L)
        out = np.empty_like(blocks)
        for h, c in enumerate(blocks):
            w = energy_weights(c, energy)
            v = float(np.sum(w * c))
            if Energy(energy) is Energy.EXP:
                out[h] = w * (1.0 + c - v)
            elif c.sum() > 0:
                out[h] = (2.0 * c - v) / c.sum()
            else:
                out[h] = 1.0 / L
        return (out / H).ravel()

    return coef


def draw_directions(X: np.ndarray, Y: np.ndarray, spec: EstimatorSpec, gen: np.random.Generator) -> np.ndarray:
    if spec.method is Method.SGW:
        return uniform_directions(X.shape[1], spec.projections, gen)
    if spec.method is Method.RASGW:
        return rasd_directions(X, Y, spec.scale, spec.projections, gen)
    if spec.method is Method.IWRASGW:
        return rasd_directions(X, Y, spec.scale, spec.inner * spec.outer, gen)
    raise DomainError(f"no gradient for method {spec.method.value}")


def loss_and_gradient(X: np.ndarray, Y: np.ndarray, thetas: np.ndarray, spec: EstimatorSpec):
    """Estimator raw value and its gradient in X for fixed directions."""
    if spec.method not in GRADIENT_METHODS:
        raise DomainError(f"no gradient for method {spec.method.value}")
    if spec.method is Method.IWRASGW:
        coef = _weight_grad_coef(spec.inner, spec.outer, spec.energy)
        grad, costs, _ = _kernels.sliced_grads(X, Y, thetas, coef)
        raw = iw_aggregate(costs, spec.inner, spec.outer, spec.energy)[0]
    else:
        m = thetas.shape[0]
        grad, costs, _ = _kernels.sliced_grads(X, Y, thetas, np.full(m, 1.0 / m))
        raw = float(np.mean(costs))
    return raw, grad


def frozen_loss(X: np.ndarray, Y: np.ndarray, thetas: np.ndarray, spec: EstimatorSpec) -> float:
    costs, _ = _kernels.sliced_costs(X, Y, thetas)
    if spec.method is Method.IWRASGW:
        return iw_aggregate(costs, spec.inner, spec.outer, spec.energy)[0]
    return float(np.mean(costs))


def rasgw_gradient(source: PointCloud, target: PointCloud, spec: EstimatorSpec, rng: RngStream) -> np.ndarray:
    """Gradient of the estimator's raw (squared) value with respect to the source points."""
    if source.n != target.n:
        raise DomainError(f"source and target sizes differ ({source.n} vs {target.n})")
    if source.d != target.d:
        raise DomainError("source and target must share a dimension; pad first")
    thetas = draw_directions(source.points, target.points, spec, rng.generator())
    return loss_and_gradient(source.points, target.points, thetas, spec)[1]


class _Reference:
    def __init__(self, target: PointCloud, cfg: FlowConfig, rng: RngStream):
        self.target = target
        self.cfg = cfg
        self.rng = rng

    def __call__(self, X: np.ndarray) -> float:
        src = PointCloud(X)
        if self.cfg.reference_metric is ReferenceMetric.GW_CG:
            return gw_conditional_gradient(src, self.target)
        if self.cfg.reference_metric is ReferenceMetric.RASGW_PROBE:
            probe = estimate_rasgw(src, self.target, ScaleFamily("ps", 50.0), self.cfg.probe_projections, self.rng)
            return probe.raw_mean
        k = min(self.cfg.ref_subsample, src.n, self.target.n)
        vals = []
        # one index subset per draw, shared by both clouds, so a cloud scores 0 against itself
        for r in range(self.cfg.ref_draws):
            a = subsample(src, k, self.rng.substream(r + 1))
            b = subsample(self.target, k, self.rng.substream(r + 1))
            vals.append(gw2_cloud_bruteforce(a, b))
        return float(np.mean(vals))


def _principal_axis_plans(mu: PointCloud, nu: PointCloud) -> list[np.ndarray]:
    """Permutation couplings pairing the clouds' sorted first principal coordinates."""
    def order(c: PointCloud) -> np.ndarray:
        x = c.points - c.points.mean(axis=0)
        _, _, vt = np.linalg.svd(x, full_matrices=False)
        return np.argsort(x @ vt[0], kind="stable")

    oa, ob = order(mu), order(nu)
    plans = []
    for pair in (ob, ob[::-1]):
        P = np.zeros((mu.n, nu.n))
        P[oa, pair] = 1.0 / mu.n
        plans.append(P)
    return plans


def gw_conditional_gradient(mu: PointCloud, nu: PointCloud) -> float:
    """GW_2^2 with squared Euclidean costs from conditional-gradient solves on the full clouds.

    Three starts (product coupling and the two principal-axis sortings); the
    smallest coupling cost is returned, which upper-bounds the true GW_2^2.
    """
    for backend in ("TENSORFLOW", "PYTORCH", "JAX", "CUPY"):
        os.environ.setdefault(f"POT_BACKEND_DISABLE_{backend}", "1")
    import ot

    C1 = mu.distance_matrix() ** 2
    C2 = nu.distance_matrix() ** 2
    p = np.full(mu.n, 1.0 / mu.n)
    q = np.full(nu.n, 1.0 / nu.n)
    starts = [None, *(_principal_axis_plans(mu, nu) if mu.n == nu.n else [])]
    return min(float(ot.gromov.gromov_wasserstein2(C1, C2, p, q, loss_fun="square_loss", G0=g0)) for g0 in starts)


def run_flow(
    source_init: PointCloud,
    target: PointCloud,
    cfg: FlowConfig,
    rng: RngStream,
) -> tuple[PointCloud, FlowTrace]:
    """Plain gradient descent on the source coordinates.

    Both clouds are zero-padded to a common dimension; only the source's own
    coordinates move, so the result keeps the source dimension.
    """
    if source_init.n != target.n:
        raise DomainError(f"source and target sizes differ ({source_init.n} vs {target.n}); subsample first")
    d_src = source_init.d
    D = max(d_src, target.d)
    X = pad_uplift(source_init, D).points.copy()
    Y = pad_uplift(target, D).points
    ref = _Reference(PointCloud(Y), cfg, rng.substream(1_000_003))
    spec = cfg.estimator
    trace = FlowTrace()
    t0 = time.perf_counter()
    for step in range(cfg.steps + 1):
        thetas = draw_directions(X, Y, spec, rng.substream(step).generator())
        raw, grad = loss_and_gradient(X, Y, thetas, spec)
        if step % cfg.eval_every == 0 or step == cfg.steps:
            trace.append(FlowRecord(step, raw, ref(X), time.perf_counter() - t0))
        if step == cfg.steps:
            break
        if not np.all(np.isfinite(grad)):
            raise FlowDivergedError(f"non-finite gradient at step {step}; lower the learning rate")
        X[:, :d_src] -= cfg.learning_rate * grad[:, :d_src]
    return PointCloud(X[:, :d_src]), trace
