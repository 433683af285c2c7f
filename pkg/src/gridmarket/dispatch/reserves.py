"""Reserve provision attached to a thermal unit."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..optim import LinExpr, Model, quicksum
from .config import DispatchConfig
from .history import DOWN, OFF, START, STOP, UP
from .thermal import ThermalVars

DIRECTIONS = ("up", "down")


@dataclass
class ReserveVars:
    auto: dict[str, dict[int, object]] = field(default_factory=dict)
    manual: dict[str, dict[int, object]] = field(default_factory=dict)
    unprovided: dict[str, dict[int, object]] = field(default_factory=dict)
    relaxed: dict[int, object] = field(default_factory=dict)
    shortfall_auto: dict[str, dict[int, object]] = field(default_factory=dict)
    shortfall_manual: dict[str, dict[int, object]] = field(default_factory=dict)
    penalty: LinExpr = field(default_factory=LinExpr)
    infeasible_auto: float = 0.0   # MW.steps of automated procurement above the unit's cap


def build_reserves(m: Model, tv: ThermalVars, cfg: DispatchConfig) -> ReserveVars:
    unit, grid = tv.unit, tv.grid
    rv = ReserveVars()
    uid = unit.id
    dt = grid.delta_t
    auto_cap = unit.afrr_max + unit.fcr_max
    for d in DIRECTIONS:
        rv.auto[d], rv.manual[d], rv.unprovided[d] = {}, {}, {}
        rv.shortfall_auto[d], rv.shortfall_manual[d] = {}, {}
    s, on = tv.s, tv.on
    for k, t in enumerate(grid.opt):
        pmax, pmin = float(tv.p_max[k]), float(tv.p_min[k])
        rv.relaxed[t] = m.add_var(f"{uid}_Rrel_{t}", 0.0, pmin)
        for d in DIRECTIONS:
            rv.auto[d][t] = m.add_var(f"{uid}_Rauto_{d}_{t}", 0.0, pmax)
            rv.manual[d][t] = m.add_var(f"{uid}_Rmanu_{d}_{t}", 0.0, pmax)
            rv.unprovided[d][t] = m.add_var(f"{uid}_Runpr_{d}_{t}", 0.0, pmax)
        p = tv.p(t)
        if tv.has_flat:
            m.add(p + rv.auto["up"][t] + rv.manual["up"][t] + rv.unprovided["up"][t] == pmax,
                  f"{uid}_fill_up_{t}")
            m.add(p - rv.auto["down"][t] + rv.relaxed[t] - rv.manual["down"][t]
                  - rv.unprovided["down"][t] == pmin, f"{uid}_fill_dn_{t}")
        else:
            m.add(p + rv.manual["up"][t] + rv.unprovided["up"][t] == pmax, f"{uid}_fill_up_{t}")
            m.add(p + rv.relaxed[t] - rv.manual["down"][t] - rv.unprovided["down"][t] == pmin,
                  f"{uid}_fill_dn_{t}")
        m.add(rv.relaxed[t] <= pmin * (1 - on(t)), f"{uid}_relax_off_{t}")
        idle = s(OFF, t) + s(START, t) + s(STOP, t)
        for d in DIRECTIONS:
            m.add(rv.manual[d][t] <= pmax * (1 - idle), f"{uid}_manu_idle_{d}_{t}")
            m.add(rv.auto[d][t] <= auto_cap * (1 - idle), f"{uid}_auto_idle_{d}_{t}")
            if tv.has_flat:
                m.add(rv.manual[d][t] <= pmax * (1 - s(UP, t) - s(DOWN, t)),
                      f"{uid}_manu_ramp_{d}_{t}")

            proc_auto = unit.reserves.automated(d, t)
            proc_manu = unit.reserves.manual(d, t)
            if proc_auto > auto_cap:
                rv.infeasible_auto += proc_auto - auto_cap
                proc_auto = auto_cap
            sa = m.add_var(f"{uid}_dRauto_{d}_{t}", 0.0)
            sm = m.add_var(f"{uid}_dRmanu_{d}_{t}", 0.0)
            m.add(sa >= proc_auto - rv.auto[d][t], f"{uid}_short_auto_{d}_{t}")
            m.add(sm >= proc_manu - rv.manual[d][t], f"{uid}_short_manu_{d}_{t}")
            rv.shortfall_auto[d][t], rv.shortfall_manual[d][t] = sa, sm
    rv.penalty = dt * quicksum(
        cfg.penalty_auto * rv.shortfall_auto[d][t] + cfg.penalty_manual * rv.shortfall_manual[d][t]
        for d in DIRECTIONS for t in grid.opt)
    rv.penalty += cfg.penalty_auto * dt * rv.infeasible_auto
    return rv
