"""Assembled dispatch problems: single-unit day-ahead support and portfolio re-dispatch."""

from __future__ import annotations

import logging

import numpy as np

from ..core import (FlexibleLoad, HydroUnit, LoadUnit, NonDispatchableUnit, Portfolio,
                    RenewableUnit, StorageUnit, ThermalUnit, TimeGrid, series_at)
from ..forecast.matrix import extend_periodic
from ..optim import LinExpr, Model, Solution, Status, quicksum
from .config import DispatchConfig
from .imbalance import PARTS, build_imbalance
from .reserves import DIRECTIONS, ReserveVars, build_reserves
from .result import DispatchResult, UnitPlan
from .storage import StorageVars, build_storage, replay_energy, storage_value
from .thermal import ThermalVars, build_thermal, decode_states
from .units import (build_flexload, build_hydro, build_load, build_nondispatchable,
                    build_renewable)

log = logging.getLogger(__name__)


def thermal_cost_terms(tv: ThermalVars, price) -> tuple[LinExpr, LinExpr]:
    """(operating cost, market value of production) of a thermal unit."""
    dt = tv.grid.delta_t
    op = quicksum(tv.unit.c_var * dt * tv.p(t) + tv.unit.c_startup * tv.a("turned_on", t)
                  for t in tv.grid.opt)
    value = quicksum(series_at(price, t) * dt * tv.p(t) for t in tv.grid.opt)
    return op, value


def thermal_plan(tv: ThermalVars, rv: ReserveVars | None, sol: Solution) -> UnitPlan:
    opt = tv.grid.opt
    power = np.array([sol.value(tv.p(t)) for t in opt])
    reserves = {}
    if rv is not None:
        for d in DIRECTIONS:
            reserves[f"auto_{d}"] = np.array([sol.value(rv.auto[d][t]) for t in opt])
            reserves[f"manual_{d}"] = np.array([sol.value(rv.manual[d][t]) for t in opt])
            reserves[f"unprovided_{d}"] = np.array([sol.value(rv.unprovided[d][t]) for t in opt])
            reserves[f"shortfall_auto_{d}"] = np.array(
                [sol.value(rv.shortfall_auto[d][t]) for t in opt])
            reserves[f"shortfall_manual_{d}"] = np.array(
                [sol.value(rv.shortfall_manual[d][t]) for t in opt])
        reserves["relaxed"] = np.array([sol.value(rv.relaxed[t]) for t in opt])
    return UnitPlan(tv.unit.id, power, decode_states(tv, sol.values), reserves)


def solve_dao_thermal(unit: ThermalUnit, grid: TimeGrid, price,
                      cfg: DispatchConfig = DispatchConfig(),
                      with_reserves: bool = True) -> DispatchResult:
    """Profit-maximising plan of one thermal unit against a price forecast."""
    m = Model(f"dao_{unit.id}", eq_slack=cfg.eq_slack, strict_aux=cfg.strict_aux)
    tv = build_thermal(m, unit, grid)
    rv = build_reserves(m, tv, cfg) if with_reserves else None
    op, value = thermal_cost_terms(tv, price)
    penalty = rv.penalty if rv is not None else LinExpr()
    m.minimize(op - value + penalty)
    sol = m.solve(cfg.time_limit, cfg.mip_gap, cfg.dump_lp)
    if not sol.ok:
        log.warning("unit %s: day-ahead dispatch %s", unit.id, sol.status.value)
        return DispatchResult(sol.status)
    res = DispatchResult(sol.status, {unit.id: thermal_plan(tv, rv, sol)}, sol.objective)
    res.pieces = {"operating_cost": sol.value(op), "potential_profit": sol.value(value),
                  "unprovided_reserves": sol.value(penalty)}
    res.model = m  # kept for inspection in tests and LP dumps
    return res


def storage_plan(sv: StorageVars, sol: Solution) -> UnitPlan:
    opt = sv.grid.opt
    return UnitPlan(sv.unit.id, np.array([sol.value(sv.p(t)) for t in opt]),
                    energy=np.array([sol.value(sv.energy[t]) for t in opt]),
                    reserves={"buy": np.array([sol.value(sv.buy[t]) for t in opt]),
                              "sell": np.array([sol.value(sv.sell[t]) for t in opt])})


def solve_dao_storage(unit: StorageUnit, grid: TimeGrid, price,
                      cfg: DispatchConfig = DispatchConfig()) -> DispatchResult:
    """Arbitrage plan over the extended horizon, returned for the simulated steps only.

    Prices shorter than the horizon are repeated cyclically.
    """
    m = Model(f"dao_{unit.id}", eq_slack=cfg.eq_slack, strict_aux=cfg.strict_aux)
    sv = build_storage(m, unit, grid)
    value = storage_value(sv, extend_periodic(np.atleast_1d(price), grid.n_opt))
    m.minimize(-value)
    sol = m.solve(cfg.time_limit, cfg.mip_gap, cfg.dump_lp)
    if not sol.ok:
        log.warning("unit %s: day-ahead dispatch %s", unit.id, sol.status.value)
        return DispatchResult(sol.status)
    res = DispatchResult(sol.status, {unit.id: storage_plan(sv, sol)}, sol.objective,
                         {"potential_profit": sol.value(value)})
    return res.truncated(grid.n_sim)


def _build_unit(m: Model, unit, grid: TimeGrid, t_ex: int, target, cfg: DispatchConfig):
    """(vars, cost expression, reserve vars) of one unit inside a portfolio model."""
    if isinstance(unit, ThermalUnit):
        tv = build_thermal(m, unit, grid)
        rv = build_reserves(m, tv, cfg)
        op, _ = thermal_cost_terms(tv, 0.0)
        return tv, op, rv
    if isinstance(unit, StorageUnit):
        # The cleared schedule fixes how much energy the unit is expected to hold at the end.
        planned = replay_energy(unit, [series_at(target, t) for t in grid.opt], grid.delta_t)
        return build_storage(m, unit, grid, neutral=False, terminal_energy=planned[-1]), \
            LinExpr(), None
    if isinstance(unit, RenewableUnit):
        sv = build_renewable(m, unit, grid, t_ex)
    elif isinstance(unit, NonDispatchableUnit):
        sv = build_nondispatchable(m, unit, grid, t_ex)
    elif isinstance(unit, LoadUnit):
        sv = build_load(unit, grid, t_ex)
    elif isinstance(unit, FlexibleLoad):
        sv = build_flexload(m, unit, grid)
    elif isinstance(unit, HydroUnit):
        sv = build_hydro(m, unit, grid)
    else:
        raise TypeError(f"unit {unit.id}: unsupported technology {type(unit).__name__}")
    return sv, sv.cost, None


def _plan(vars_, rv, sol: Solution) -> UnitPlan:
    if isinstance(vars_, ThermalVars):
        return thermal_plan(vars_, rv, sol)
    if isinstance(vars_, StorageVars):
        return storage_plan(vars_, sol)
    opt = vars_.grid.opt
    power = np.array([sol.value(vars_.p(t)) for t in opt])
    plan = UnitPlan(vars_.unit.id, power)
    if vars_.available is not None:
        plan.spill = vars_.available - power
    if vars_.energy:
        plan.energy = np.array([sol.value(vars_.energy[t]) for t in opt])
    return plan


def solve_portfolio(portfolio: Portfolio, units, grid: TimeGrid, targets: dict, price,
                    t_ex: int = 0, cfg: DispatchConfig = DispatchConfig()) -> DispatchResult:
    """Re-dispatch a portfolio after clearing, trading operating cost against imbalance cost.

    ``targets`` maps unit id to its cleared net position per step (production
    positive). The market value of that position is already settled, so only
    operating costs, reserve penalties and imbalance costs enter the objective.
    """
    m = Model(f"po_{portfolio.id}", eq_slack=cfg.eq_slack, strict_aux=cfg.strict_aux)
    built = {}
    cost, penalty = LinExpr(), LinExpr()
    for u in units:
        target = targets.get(u.id, 0.0)
        vars_, c, rv = _build_unit(m, u, grid, t_ex, target, cfg)
        built[u.id] = (vars_, rv)
        cost += c
        if rv is not None:
            penalty += rv.penalty
    net = {t: quicksum(v.p(t) for v, _ in built.values()) for t in grid.opt}
    total_target = np.zeros(grid.n_opt)
    for u in units:
        total_target += np.array([series_at(targets.get(u.id, 0.0), t) for t in grid.opt])
    iv = build_imbalance(m, portfolio, grid, net, total_target, price)
    m.minimize(cost + penalty + iv.cost)
    sol = m.solve(cfg.time_limit, cfg.mip_gap, cfg.dump_lp)
    if not sol.ok:
        culprits = _infeasible_units(units, grid, t_ex, cfg)
        log.warning("portfolio %s: re-dispatch %s (units alone infeasible: %s)",
                    portfolio.id, sol.status.value, ", ".join(culprits) or "none")
        res = DispatchResult(sol.status)
        res.infeasible_units = culprits
        return res
    plans = {uid: _plan(v, rv, sol) for uid, (v, rv) in built.items()}
    imb = {part: np.array([sol.value(iv.parts[part][t]) for t in grid.opt]) for part in PARTS}
    imb["total"] = imb["small_up"] + imb["large_up"] - imb["small_down"] - imb["large_down"]
    imb["target"] = total_target
    pieces = {"operating_cost": sol.value(cost), "unprovided_reserves": sol.value(penalty),
              "imbalance_cost": sol.value(iv.cost)}
    return DispatchResult(sol.status, plans, sol.objective, pieces, imb)


def _infeasible_units(units, grid: TimeGrid, t_ex: int, cfg: DispatchConfig) -> list[str]:
    bad = []
    for u in units:
        m = Model(f"check_{u.id}", eq_slack=cfg.eq_slack)
        try:
            _, c, _ = _build_unit(m, u, grid, t_ex, 0.0, cfg)
        except (KeyError, ValueError) as exc:
            log.warning("unit %s: %s", u.id, exc)
            bad.append(u.id)
            continue
        m.minimize(c)
        if m.solve(cfg.time_limit).status is Status.INFEASIBLE:
            bad.append(u.id)
    return bad


__all__ = ["solve_dao_thermal", "solve_dao_storage", "solve_portfolio", "thermal_cost_terms",
           "thermal_plan", "Status"]
