"""Forecast matrices drawn from a learned model around a realization."""

from __future__ import annotations

import logging

import numpy as np
from scipy import stats

from .learn import ForecastModel
from .matrix import ForecastMatrix

log = logging.getLogger(__name__)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator; the same seed gives the same stream on every platform."""
    return np.random.Generator(np.random.Philox(int(seed) & (2**64 - 1)))


def copula_uniforms(model: ForecastModel, rng: np.random.Generator, n: int,
                    width: int) -> np.ndarray:
    """``n`` launches x ``width`` horizons of uniforms with the learned dependence."""
    z = rng.standard_normal((n, width))
    d = min(model.copula.dim, width)
    z[:, :d] = z[:, :d] @ model.copula.cholesky[:d, :d].T
    return stats.norm.cdf(z)


def rebuild(final: np.ndarray, H: int, update) -> np.ndarray:
    """Table ``f[t, h]`` of forecasts, walking back from the last value ``final[T]``.

    ``update(h, T, cur)`` returns the updates issued at launches ``T - h`` for
    targets ``T`` whose latest known forecast is ``cur``.
    """
    n = final.size
    f = np.full((n, H + 1), np.nan)
    cur = final.astype(float).copy()
    f[:, 0] = cur
    for h in range(H):
        T = np.arange(h + 1, n)
        cur[T] = cur[T] - update(h, T, cur[T])
        f[T - h - 1, h + 1] = cur[T]
    return f


def reconstruct(realization, errors, updates: np.ndarray) -> np.ndarray:
    """Forecast table from recorded updates ``updates[i, h]`` (launch ``i``, horizon ``h``)."""
    final = np.asarray(realization, float) + np.asarray(errors, float)
    return rebuild(final, updates.shape[1], lambda h, T, cur: updates[T - h, h])


def simulate(model: ForecastModel, observations, seed: int, *, start_day: float = 1.0,
             horizon: int | None = None, launches=None, lower: float | None = 0.0,
             tol: float = 0.05) -> ForecastMatrix:
    """Forecast matrix whose values at horizon ``h`` carry ``h`` simulated updates.

    Forecasts are rebuilt backwards from the realization: the value seen at
    launch ``t`` for target ``T`` is ``P_T + eps_T`` minus every update issued
    after ``t``. Values are clipped to ``[lower, Max_T * (1 + tol)]``.
    """
    obs = np.asarray(observations, dtype=float)
    n = obs.size
    if n == 0:
        raise ValueError("empty realization")
    dt = model.delta_t
    mx = model.normalization.at_steps(np.arange(n), dt, start_day)
    hi = mx * (1 + tol)
    lo = -np.inf if lower is None else lower
    clipped = np.clip(obs, lo, hi)
    if np.any(clipped != obs):
        log.warning("%d observations outside [%s, Max*(1+%g)] clipped",
                    int(np.sum(clipped != obs)), lower, tol)
    p = clipped / mx
    H = min(n - 1, model.n_horizons if horizon is None else int(horizon))
    rng = make_rng(seed)
    U = copula_uniforms(model, rng, n, max(H, 1))
    errors = model.updates.errors
    eps = np.quantile(errors, rng.random(n)) if np.ptp(errors) > 0 else np.full(n, errors[0])

    def draw(h, T, cur):
        marg = model.updates.for_horizon(h)
        u = U[T - h, h]
        delta = marg.inverse(u, cur)
        return marg.inverse(u, cur - delta)   # condition on the earlier value

    f = rebuild(p + eps, H, draw)
    steps = np.arange(n)
    absolute = np.full_like(f, np.nan)
    for h in range(H + 1):
        t = steps[: n - h]
        absolute[t, h] = np.clip(clipped[t + h] + mx[t + h] * (f[t, h] - p[t + h]),
                                 lo, hi[t + h])
    launch_steps = range(n) if launches is None else sorted(int(t) for t in launches)
    columns = {}
    for t in launch_steps:
        col = clipped.copy()
        T = np.arange(t, n)
        h = T - t
        near = h <= H
        col[T[near]] = absolute[t, h[near]]
        far = T[~near]
        col[far] = absolute[far - H, H]
        columns[t] = col
    return ForecastMatrix(clipped, columns, eps * mx)


def rmse_by_horizon(matrix: ForecastMatrix, max_h: int) -> np.ndarray:
    """Root mean squared error of the forecast issued ``h`` steps ahead."""
    real = matrix.realization
    out = np.zeros(max_h + 1)
    for h in range(max_h + 1):
        err = [matrix.columns[t][t + h] - real[t + h] for t in matrix.columns
               if t + h < real.size]
        out[h] = np.sqrt(np.mean(np.square(err))) if err else np.nan
    return out
