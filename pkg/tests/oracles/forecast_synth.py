"""Synthetic forecast archives with known update structure."""

import numpy as np

from gridmarket.forecast import Archive


def realization(n: int, cap: float = 100.0, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    x = np.empty(n)
    x[0] = 0.5
    for t in range(1, n):
        x[t] = np.clip(0.9 * x[t - 1] + 0.05 + 0.08 * rng.standard_normal(), 0, 1)
    return cap * 0.95 * x


def archive_from_updates(obs: np.ndarray, updates: np.ndarray, errors: np.ndarray,
                         start_day: float = 1.0) -> Archive:
    """Forecasts rebuilt from updates[i, h] (launch i, horizon h) and real-time errors."""
    n, H = updates.shape
    table = np.full((n, H + 1), np.nan)
    for t in range(n):
        for h in range(H + 1):
            T = t + h
            if T >= n:
                break
            table[t, h] = obs[T] + errors[T] - sum(updates[i, T - i] for i in range(t + 1, T + 1))
    return Archive(table, obs, 1.0, start_day)


def gaussian_updates(n: int, H: int, sigma: float, rho: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    corr = rho ** np.abs(np.subtract.outer(np.arange(H), np.arange(H)))
    return rng.multivariate_normal(np.zeros(H), corr, size=n) * sigma
