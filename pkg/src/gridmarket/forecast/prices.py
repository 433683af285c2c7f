"""Intraday price expectation and series resampling."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .matrix import forecast_values


def price_sensitivity(price_high, price_low, demand_high, demand_low) -> np.ndarray:
    """€/MWh per MW of residual demand, from two long-term scenarios."""
    dp = np.asarray(price_high, float) - np.asarray(price_low, float)
    dd = np.asarray(demand_high, float) - np.asarray(demand_low, float)
    if np.any(dd == 0):
        raise ValueError("degenerate sensitivity: high and low demand scenarios coincide")
    return dp / dd


def residual_demand_change(load, wind, pv, t_prev: int, t_now: int, n: int) -> np.ndarray:
    """Change of load minus wind minus PV between two forecast launches."""
    def change(src, name):
        if src is None:
            return np.zeros(n)
        return forecast_values(src, t_now, n, name) - forecast_values(src, t_prev, n, name)
    return change(load, "load") - change(wind, "wind") - change(pv, "pv")


def intraday_price_forecast(known_prices: Sequence, price_high, price_low, demand_high,
                            demand_low, load=None, wind=None, pv=None, t_prev: int = 0,
                            t_now: int = 0, n: int | None = None) -> np.ndarray:
    """Expected price: mean of the prices cleared so far plus the residual-demand effect.

    ``known_prices`` lists cleared price series, day-ahead first; a single
    entry means the first intraday session.
    """
    if not known_prices:
        raise ValueError("at least the day-ahead price is required")
    known = [np.asarray(k, float) for k in known_prices]
    n = n or known[0].size
    base = np.mean([k[:n] for k in known], axis=0)
    sens = price_sensitivity(price_high, price_low, demand_high, demand_low)
    sens = np.broadcast_to(sens, (n,)) if sens.ndim == 0 else sens[:n]
    return base + residual_demand_change(load, wind, pv, t_prev, t_now, n) * sens


def interpolate(values, source_dt: float, target_dt: float) -> np.ndarray:
    """Piecewise-linear resampling onto a finer grid that divides the source step."""
    v = np.asarray(values, dtype=float)
    ratio = source_dt / target_dt
    k = int(round(ratio))
    if target_dt <= 0 or k < 1 or abs(ratio - k) > 1e-9:
        raise ValueError(f"target step {target_dt} does not divide source step {source_dt}")
    if v.size < 2 or k == 1:
        return v.copy()
    x = np.arange(v.size) * source_dt
    xi = np.arange((v.size - 1) * k + 1) * target_dt
    return np.interp(xi, x, v)
