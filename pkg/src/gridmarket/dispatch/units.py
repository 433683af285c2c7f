"""Renewables, must-run units, fixed loads, power-to-gas and reservoir hydro."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import (FlexibleLoad, HydroUnit, LoadUnit, NonDispatchableUnit, RenewableUnit,
                    TimeGrid, series_at)
from ..forecast.matrix import forecast_values
from ..optim import LinExpr, Model, quicksum


@dataclass
class SimpleVars:
    """Power expressions of one non-thermal, non-storage unit."""

    unit: object
    grid: TimeGrid
    power: dict[int, LinExpr] = field(default_factory=dict)
    available: np.ndarray | None = None      # renewable forecast, for spill
    cost: LinExpr = field(default_factory=LinExpr)
    fragments: dict[int, list] = field(default_factory=dict)
    energy: dict[int, LinExpr] = field(default_factory=dict)

    def p(self, t: int) -> LinExpr:
        return self.power[t]


def build_renewable(m: Model, unit: RenewableUnit, grid: TimeGrid, t_ex: int) -> SimpleVars:
    avail = np.maximum(forecast_values(unit.forecast, t_ex, grid.n_opt, unit.id), 0.0)
    sv = SimpleVars(unit, grid, available=avail)
    for k, t in enumerate(grid.opt):
        v = m.add_var(f"{unit.id}_P_{t}", unit.curtailment * avail[k], avail[k])
        sv.power[t] = LinExpr.of(v)
    sv.cost = quicksum(unit.c_var * grid.delta_t * sv.power[t] for t in grid.opt)
    return sv


def build_nondispatchable(m: Model, unit: NonDispatchableUnit, grid: TimeGrid,
                          t_ex: int) -> SimpleVars:
    avail = np.abs(forecast_values(unit.forecast, t_ex, grid.n_opt, unit.id))
    sign = 1.0 if unit.producer else -1.0
    sv = SimpleVars(unit, grid)
    for k, t in enumerate(grid.opt):
        v = m.add_var(f"{unit.id}_P_{t}", -np.inf, np.inf)
        m.add(v == sign * avail[k], f"{unit.id}_mustrun_{t}")
        sv.power[t] = LinExpr.of(v)
    return sv


def build_load(unit: LoadUnit, grid: TimeGrid, t_ex: int) -> SimpleVars:
    demand = np.abs(forecast_values(unit.forecast, t_ex, grid.n_opt, unit.id))
    sv = SimpleVars(unit, grid)
    for k, t in enumerate(grid.opt):
        sv.power[t] = LinExpr.of(-demand[k])
    return sv


def build_flexload(m: Model, unit: FlexibleLoad, grid: TimeGrid) -> SimpleVars:
    """Consumption between ``p_min`` and ``p_max``, valued at the gas it produces."""
    sv = SimpleVars(unit, grid)
    for t in grid.opt:
        v = m.add_var(f"{unit.id}_P_{t}", -series_at(unit.p_max, t), -series_at(unit.p_min, t))
        sv.power[t] = LinExpr.of(v)
    sv.cost = quicksum(series_at(unit.gas_price, t) * unit.efficiency * grid.delta_t * sv.power[t]
                       for t in grid.opt)
    return sv


def fragment_prices(unit: HydroUnit) -> list[float]:
    return [unit.water_value * k for k in unit.fragment_multipliers]


def build_hydro(m: Model, unit: HydroUnit, grid: TimeGrid) -> SimpleVars:
    """Reservoir unit whose output is split into equal fragments priced around the water value."""
    sv = SimpleVars(unit, grid)
    prices = fragment_prices(unit)
    n = len(prices)
    dt = grid.delta_t
    level = LinExpr.of(unit.e_init)
    cost = LinExpr()
    for t in grid.opt:
        pmax, pmin = series_at(unit.p_max, t), series_at(unit.p_min, t)
        frags = [m.add_var(f"{unit.id}_frag{i}_{t}", 0.0, pmax / n) for i in range(n)]
        p = quicksum(frags)
        m.add(p >= pmin, f"{unit.id}_pmin_{t}")
        for price, f in zip(prices, frags):
            cost += price * dt * f
        level = level + series_at(unit.inflow, t) * dt - dt * p
        m.add(level >= 0.0, f"{unit.id}_reservoir_{t}")
        sv.power[t], sv.fragments[t], sv.energy[t] = p, frags, level
    sv.cost = cost
    return sv
