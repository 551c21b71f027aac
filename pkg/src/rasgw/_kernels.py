"""Hot loops: per-direction 1D GW costs and frozen-assignment gradients.

Two interchangeable backends share one contract. The numba backend is used when
numba imports and ``RASGW_DISABLE_NUMBA`` is unset (or "0"); otherwise the
pure-numpy path runs. Both reduce over directions in ascending index order, so
results do not depend on the thread count.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("RASGW_DISABLE_NUMBA", "0").lower() not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError
    import numba
    from numba import njit, prange

    # the bundled TBB is too old for numba and only produces a warning
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"

# columns processed per numpy block; bounds temporary memory at ~8*n*_CHUNK bytes
_CHUNK = 4096


def set_threads(n: int | None) -> None:
    if HAVE_NUMBA and n:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


# --- numpy path --------------------------------------------------------------


def _uv_cost(u: np.ndarray, v: np.ndarray, n: int) -> np.ndarray:
    # with u = a - b, v = a + b (centered): (a_i-a_j)^2 - (b_i-b_j)^2 = (u_i-u_j)(v_i-v_j),
    # and the double sum expands into non-negative power sums (no cancellation)
    return (2 * n * (u * u * v * v).sum(axis=0) + 2 * (u * u).sum(axis=0) * (v * v).sum(axis=0) + 4 * (u * v).sum(axis=0) ** 2) / n**2


def _pair_costs_np(a: np.ndarray, b: np.ndarray):
    """Identity and anti-identity costs for sorted columns a, b of shape (n, m)."""
    n = a.shape[0]
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    br = b[::-1]
    return _uv_cost(a - b, a + b, n), _uv_cost(a - br, a + br, n)


def _sorted_costs_np(a_sorted: np.ndarray, b_sorted: np.ndarray):
    c_id, c_anti = _pair_costs_np(a_sorted, b_sorted)
    anti = c_anti < c_id
    return np.where(anti, c_anti, c_id), anti


def _sliced_costs_np(X, Y, thetas):
    m = thetas.shape[0]
    costs = np.empty(m)
    anti = np.empty(m, dtype=np.bool_)
    for s in range(0, m, _CHUNK):
        th = thetas[s : s + _CHUNK]
        a = np.sort(X @ th.T, axis=0)
        b = np.sort(Y @ th.T, axis=0)
        costs[s : s + _CHUNK], anti[s : s + _CHUNK] = _sorted_costs_np(a, b)
    return costs, anti


def _matched_projections(a, b):
    """Centered source projections and the target value each source point is paired with."""
    cols = np.arange(a.shape[1])
    pa = np.argsort(a, axis=0, kind="stable")
    pb = np.argsort(b, axis=0, kind="stable")
    a_s = np.take_along_axis(a, pa, axis=0)
    b_s = np.take_along_axis(b, pb, axis=0)
    c_id, c_anti = _pair_costs_np(a_s, b_s)
    anti = c_anti < c_id
    b_match = np.where(anti[None, :], b_s[::-1], b_s)
    c = np.empty_like(a)
    c[pa, cols[None, :]] = b_match
    return a - a.mean(axis=0), c - c.mean(axis=0), np.where(anti, c_anti, c_id), anti


def _scalar_grads_np(a, c):
    """d cost / d a_k for every source point k and every column."""
    n = a.shape[0]
    s2a = (a * a).sum(axis=0)
    s3a = (a**3).sum(axis=0)
    s2c = (c * c).sum(axis=0)
    sca = (c * a).sum(axis=0)
    sc2a = (c * c * a).sum(axis=0)
    g = n * a**3 + 3 * a * s2a - s3a - n * c * c * a - 2 * c * sca - a * s2c + sc2a
    return g * (8.0 / n**2)


def _scalar_grads_all_np(X, Y, thetas):
    n = X.shape[0]
    m = thetas.shape[0]
    G = np.empty((m, n))
    costs = np.empty(m)
    anti = np.empty(m, dtype=np.bool_)
    for s in range(0, m, _CHUNK):
        th = thetas[s : s + _CHUNK]
        a, c, costs[s : s + _CHUNK], anti[s : s + _CHUNK] = _matched_projections(X @ th.T, Y @ th.T)
        G[s : s + _CHUNK] = _scalar_grads_np(a, c).T
    return G, costs, anti


def _reduce_grads_np(G, thetas, coef):
    grad = np.zeros((G.shape[1], thetas.shape[1]))
    for j in range(G.shape[0]):
        grad += np.outer(G[j] * coef[j], thetas[j])
    return grad


# --- numba path --------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _pair_costs_nb(a, b):
        n = a.shape[0]
        ma = 0.0
        mb = 0.0
        for i in range(n):
            ma += a[i]
            mb += b[i]
        ma /= n
        mb /= n
        costs = np.zeros(2)
        for k in range(2):
            s_uuvv = 0.0
            s_uu = 0.0
            s_vv = 0.0
            s_uv = 0.0
            for i in range(n):
                ai = a[i] - ma
                bi = (b[i] if k == 0 else b[n - 1 - i]) - mb
                u = ai - bi
                v = ai + bi
                s_uuvv += u * u * v * v
                s_uu += u * u
                s_vv += v * v
                s_uv += u * v
            costs[k] = (2 * n * s_uuvv + 2 * s_uu * s_vv + 4 * s_uv * s_uv) / (n * n)
        return costs[0], costs[1]

    @njit(cache=True)
    def _project(X, theta, out):
        n, d = X.shape
        for i in range(n):
            s = 0.0
            for k in range(d):
                s += X[i, k] * theta[k]
            out[i] = s

    @njit(parallel=True, cache=True)
    def _sliced_costs_nb(X, Y, thetas):
        n = X.shape[0]
        m = thetas.shape[0]
        costs = np.empty(m)
        anti = np.empty(m, dtype=np.bool_)
        for j in prange(m):
            a = np.empty(n)
            b = np.empty(n)
            _project(X, thetas[j], a)
            _project(Y, thetas[j], b)
            a.sort()
            b.sort()
            c_id, c_anti = _pair_costs_nb(a, b)
            if c_anti < c_id:
                costs[j] = c_anti
                anti[j] = True
            else:
                costs[j] = c_id
                anti[j] = False
        return costs, anti

    @njit(parallel=True, cache=True)
    def _scalar_grads_nb(X, Y, thetas):
        n = X.shape[0]
        m = thetas.shape[0]
        G = np.empty((m, n))
        costs = np.empty(m)
        anti = np.empty(m, dtype=np.bool_)
        for j in prange(m):
            a = np.empty(n)
            b = np.empty(n)
            _project(X, thetas[j], a)
            _project(Y, thetas[j], b)
            pa = np.argsort(a, kind="mergesort")
            pb = np.argsort(b, kind="mergesort")
            a_s = a[pa]
            b_s = b[pb]
            c_id, c_anti = _pair_costs_nb(a_s, b_s)
            flip = c_anti < c_id
            anti[j] = flip
            costs[j] = c_anti if flip else c_id
            c = np.empty(n)
            for r in range(n):
                c[pa[r]] = b_s[n - 1 - r] if flip else b_s[r]
            ma = a.mean()
            mc = c.mean()
            s2a = 0.0
            s3a = 0.0
            s2c = 0.0
            sca = 0.0
            sc2a = 0.0
            for i in range(n):
                ai = a[i] - ma
                ci = c[i] - mc
                a[i] = ai
                c[i] = ci
                s2a += ai * ai
                s3a += ai * ai * ai
                s2c += ci * ci
                sca += ci * ai
                sc2a += ci * ci * ai
            scale = 8.0 / (n * n)
            for i in range(n):
                ai = a[i]
                ci = c[i]
                G[j, i] = scale * (
                    n * ai * ai * ai + 3 * ai * s2a - s3a - n * ci * ci * ai - 2 * ci * sca - ai * s2c + sc2a
                )
        return G, costs, anti

    @njit(cache=True)
    def _reduce_grads_nb(G, thetas, coef):
        m, n = G.shape
        d = thetas.shape[1]
        grad = np.zeros((n, d))
        for j in range(m):
            w = coef[j]
            for i in range(n):
                g = G[j, i] * w
                for k in range(d):
                    grad[i, k] += g * thetas[j, k]
        return grad



# --- public dispatch ---------------------------------------------------------


def _prep(X, Y, thetas):
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    thetas = np.ascontiguousarray(np.atleast_2d(thetas), dtype=np.float64)
    return X, Y, thetas


def sliced_costs(X, Y, thetas, backend: str | None = None):
    """1D GW_2^2 cost and anti-identity flag for each row of ``thetas``."""
    X, Y, thetas = _prep(X, Y, thetas)
    if (backend or BACKEND) == "numba":
        return _sliced_costs_nb(X, Y, thetas)
    return _sliced_costs_np(X, Y, thetas)


def sliced_grads(X, Y, thetas, coef, backend: str | None = None):
    """Gradient of sum_l coef_l * cost_l with respect to the rows of X.

    Directions, sorting permutations and the winning assignment are frozen.
    ``coef`` is an array, or a callable mapping the costs to one (used when the
    weights depend on the costs). Returns ``(grad, costs, anti)``.
    """
    X, Y, thetas = _prep(X, Y, thetas)
    use_nb = (backend or BACKEND) == "numba"
    G, costs, anti = (_scalar_grads_nb if use_nb else _scalar_grads_all_np)(X, Y, thetas)
    c = coef(costs) if callable(coef) else coef
    c = np.ascontiguousarray(c, dtype=np.float64)
    grad = _reduce_grads_nb(G, thetas, c) if use_nb else _reduce_grads_np(G, thetas, c)
    return grad, costs, anti


def sorted_pair_costs(a_sorted, b_sorted):
    """Identity and anti-identity costs for a single pair of sorted 1D samples."""
    a = np.asarray(a_sorted, dtype=np.float64)[:, None]
    b = np.asarray(b_sorted, dtype=np.float64)[:, None]
    c_id, c_anti = _pair_costs_np(a, b)
    return float(c_id[0]), float(c_anti[0])
