"""Random thermal instances covering the eight structural cases."""

from __future__ import annotations

import itertools

import numpy as np

from gridmarket.core import ThermalUnit, TimeGrid

# (has STOP, has FLAT, has START)
CASES = list(itertools.product((False, True), repeat=3))


def random_instance(case, rng: np.random.Generator, n_steps=None):
    has_stop, has_flat, has_start = case
    n = int(n_steps or rng.integers(4, 9))
    p_max = float(rng.choice([60.0, 80.0, 100.0]))
    p_min = float(rng.choice([20.0, 30.0, 40.0]))
    t_su = int(rng.integers(1, 3)) if has_start else 0
    t_sd = int(rng.integers(1, 3)) if has_stop else 0
    t_st = int(rng.integers(2, 4)) if has_flat else 0
    t_on = int(rng.integers(1, 4))
    t_off = int(rng.integers(1, 4))
    ramp = float(rng.choice([0.0, 10.0, 15.0, 25.0]))
    hist_kind = rng.integers(0, 3)
    history = ()
    if hist_kind == 1:
        history = (p_min,) * 8
    elif hist_kind == 2:
        level = float(rng.uniform(p_min, p_max))
        history = (0.0,) * 4 + (p_min,) * 3 + (level, level)
        if ramp and level - p_min > ramp:
            history = (0.0,) * 4 + (p_min,) * 3 + (p_min + ramp, p_min + ramp)
    unit = ThermalUnit(
        "u", "Z", p_min=p_min, p_max=p_max, ramp_max=ramp,
        c_var=float(rng.uniform(20, 60)), c_startup=float(rng.choice([0.0, 200.0, 1500.0])),
        d_startup=t_su + 0.0, d_shutdown=t_sd + 0.0,
        d_min_on=float(max(t_on, t_st)), d_min_off=float(t_off), d_min_stable=float(t_st),
        max_daily_energy=None if rng.random() < 0.7 else float(rng.uniform(0.3, 1.0) * p_max * 24),
        history=history)
    price = rng.uniform(0, 100, size=n).round(2)
    return unit, TimeGrid(1.0, n), price
