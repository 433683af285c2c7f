"""Mixed-integer model of a thermal unit.

The unit moves through OFF, START, ON and STOP states. ON carries a direction
label (UP, DOWN, FLAT): the label at ``t`` says how power moves from ``t`` to
``t + 1``. START, STOP and FLAT only exist when the discretised durations ask
for them, which yields eight structural cases.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..core import Durations, ThermalUnit, TimeGrid, series_at
from ..optim import LinExpr, Model, quicksum
from .history import DOWN, FLAT, OFF, ON_LABELS, START, STOP, UP, History, init_from_history

log = logging.getLogger(__name__)


@dataclass
class ThermalVars:
    unit: ThermalUnit
    grid: TimeGrid
    durations: Durations
    history: History
    power: dict[int, LinExpr] = field(default_factory=dict)
    states: dict[str, dict[int, LinExpr]] = field(default_factory=dict)
    aux: dict[str, dict[int, LinExpr]] = field(default_factory=dict)
    p_min: np.ndarray = None
    p_max: np.ndarray = None
    step_up: float = 0.0
    step_down: float = 0.0
    gradient: float = 0.0

    @property
    def has_start(self) -> bool:
        return self.durations.startup >= 1

    @property
    def has_stop(self) -> bool:
        return self.durations.shutdown >= 1

    @property
    def has_flat(self) -> bool:
        return self.durations.stable >= 2

    def s(self, name: str, t: int) -> LinExpr:
        """State indicator as an expression; undefined states and out-of-window steps are 0."""
        return self.states.get(name, {}).get(t, LinExpr())

    def on(self, t: int) -> LinExpr:
        return self.s(UP, t) + self.s(DOWN, t) + self.s(FLAT, t)

    def a(self, name: str, t: int) -> LinExpr:
        return self.aux.get(name, {}).get(t, LinExpr())

    def p(self, t: int) -> LinExpr:
        return self.power.get(t, LinExpr())

    def defined_states(self) -> list[str]:
        out = [OFF, UP, DOWN]
        if self.has_start:
            out.append(START)
        if self.has_stop:
            out.append(STOP)
        if self.has_flat:
            out.append(FLAT)
        return out


def _const(v: float) -> LinExpr:
    return LinExpr(const=float(v))


def _transition_indicator(m: Model, name: str, now: LinExpr, before: LinExpr) -> LinExpr:
    """Indicator of ``now`` switching from 0 to 1, defined by three rows."""
    d = m.add_var(name, aux=True)
    m.add(d <= now, name + "_a")
    m.add(d <= 1 - before, name + "_b")
    m.add(d >= now - before, name + "_c")
    return LinExpr.of(d)


def _and(m: Model, name: str, *factors: LinExpr) -> LinExpr:
    d = m.add_var(name, aux=True)
    for k, f in enumerate(factors):
        m.add(d <= f, f"{name}_{k}")
    m.add(d >= quicksum(factors) - (len(factors) - 1), name + "_all")
    return LinExpr.of(d)


def thermal_grid(unit: ThermalUnit, grid: TimeGrid) -> TimeGrid:
    """``grid`` with a traceback long enough for the unit's durations."""
    need = unit.durations(grid.delta_t).traceback
    if grid.traceback >= need:
        return grid
    return TimeGrid(grid.delta_t, grid.n_sim, grid.n_addl, need, grid.n_post, grid.t_start)


def build_thermal(m: Model, unit: ThermalUnit, grid: TimeGrid,
                  history: History | None = None) -> ThermalVars:
    grid = thermal_grid(unit, grid)
    dur = unit.durations(grid.delta_t)
    hist = history if history is not None else init_from_history(unit, dur, grid)
    tv = ThermalVars(unit, grid, dur, hist)
    opt = list(grid.opt)
    tv.p_min = np.array([series_at(unit.p_min, t) for t in opt])
    tv.p_max = np.array([series_at(unit.p_max, t) for t in opt])
    pm = float(max(tv.p_max.max(), max(hist.power, default=0.0)))
    pmin_ref = float(tv.p_min.max())
    tv.step_up = pmin_ref / (dur.startup + 1)
    tv.step_down = pmin_ref / (dur.shutdown + 1)
    tv.gradient = unit.ramp_max if unit.ramp_max > 0 else pm
    # Coefficient that switches off slope terms on a shutdown step.
    release = 3.0 * pm
    uid = unit.id
    defined = tv.defined_states()
    flat = tv.has_flat

    # --- states -------------------------------------------------------------
    for name in defined:
        tv.states[name] = {}
    for t in hist_steps(grid):
        h = hist.state(t)
        for name in defined:
            tv.states[name][t] = _const(1.0 if h == name else 0.0)
    on_before = 1.0 if hist.is_on(-1) else 0.0
    for t in [-1] + opt:
        names = ON_LABELS if t == -1 else defined
        for name in names:
            if name in defined:
                tv.states[name][t] = LinExpr.of(m.add_var(f"{uid}_{name}_{t}", binary=True))
    m.add(tv.on(-1) == on_before, f"{uid}_onlabel_m1")
    for t in opt:
        m.add(quicksum(tv.s(n, t) for n in defined) == 1, f"{uid}_excl_{t}")

    # --- power --------------------------------------------------------------
    for t in hist_steps(grid):
        tv.power[t] = _const(hist.p(t))
    for t in opt:
        tv.power[t] = LinExpr.of(m.add_var(f"{uid}_P_{t}", 0.0, float(tv.p_max[t - opt[0]])))

    # --- auxiliary indicators ---------------------------------------------------
    aux_names = ["turned_on", "turned_off"]
    if flat:
        aux_names += ["entered_stable", "entered_up", "entered_down"]
    for name in aux_names:
        tv.aux[name] = {t: _const(hist.indicator(name, t)) for t in hist_steps(grid)}
    for t in opt:
        tv.aux["turned_on"][t] = _transition_indicator(
            m, f"{uid}_don_{t}", 1 - tv.s(OFF, t), 1 - tv.s(OFF, t - 1))
        entry = STOP if tv.has_stop else OFF
        tv.aux["turned_off"][t] = _transition_indicator(
            m, f"{uid}_doff_{t}", tv.s(entry, t), tv.s(entry, t - 1))
    if flat:
        for t in [-1] + opt:
            for name, label in (("entered_stable", FLAT), ("entered_up", UP),
                                ("entered_down", DOWN)):
                tv.aux[name][t] = _transition_indicator(
                    m, f"{uid}_{name}_{t}", tv.s(label, t), tv.s(label, t - 1))

    on, s, a, p = tv.on, tv.s, tv.a, tv.p
    d_on = lambda t: a("turned_on", t)   # noqa: E731
    d_off = lambda t: a("turned_off", t)  # noqa: E731

    # --- transition rules ---------------------------------------------------------
    for t in opt:
        if tv.has_start:
            m.add(on(t - 1) + s(START, t) <= 1, f"{uid}_on_start_{t}")
            m.add(s(START, t - 1) + s(OFF, t) <= 1, f"{uid}_start_off_{t}")
            m.add(s(OFF, t - 1) + on(t) <= 1, f"{uid}_off_on_{t}")
            m.add(d_on(t - dur.startup) + s(START, t) <= 1, f"{uid}_evict_start_{t}")
            for k in range(1, dur.startup):
                m.add(d_on(t - k) <= s(START, t), f"{uid}_lock_start_{t}_{k}")
        if tv.has_stop:
            m.add(s(OFF, t - 1) + s(STOP, t) <= 1, f"{uid}_off_stop_{t}")
            m.add(s(STOP, t - 1) + on(t) <= 1, f"{uid}_stop_on_{t}")
            m.add(on(t - 1) + s(OFF, t) <= 1, f"{uid}_on_off_{t}")
            m.add(d_off(t - dur.shutdown) + s(STOP, t) <= 1, f"{uid}_evict_stop_{t}")
            for k in range(1, dur.shutdown):
                m.add(d_off(t - k) <= s(STOP, t), f"{uid}_lock_stop_{t}_{k}")
        if tv.has_start and tv.has_stop:
            m.add(s(START, t - 1) + s(STOP, t) <= 1, f"{uid}_start_stop_{t}")
            m.add(s(STOP, t - 1) + s(START, t) <= 1, f"{uid}_stop_start_{t}")
        for k in range(1, dur.on):
            m.add(d_on(t - k - dur.startup) <= on(t), f"{uid}_min_on_{t}_{k}")
        for k in range(1, dur.off):
            m.add(d_off(t - k - dur.shutdown) <= s(OFF, t), f"{uid}_min_off_{t}_{k}")

    if flat:
        for t in [-1] + opt:
            m.add(s(UP, t - 1) + s(DOWN, t) <= 1, f"{uid}_up_down_{t}")
            m.add(s(DOWN, t - 1) + s(UP, t) <= 1, f"{uid}_down_up_{t}")
            for k in range(1, max(1, dur.stable - 2) + 1):
                m.add(a("entered_stable", t - k) <= s(FLAT, t), f"{uid}_lock_flat_{t}_{k}")
            if tv.has_stop and t >= 0:
                m.add(s(UP, t - 1) + s(STOP, t) <= 1, f"{uid}_up_stop_{t}")

    # Shutdown-from-slope indicators used by the downward gradient.
    tv.aux["down_to_stop"] = {}
    tv.aux["flat_down_stop"] = {}
    if tv.has_stop:
        for t in opt:
            if flat:
                tv.aux["flat_down_stop"][t] = _and(
                    m, f"{uid}_dfds_{t}", s(STOP, t), s(DOWN, t - 1), s(FLAT, t - 2))
            else:
                tv.aux["down_to_stop"][t] = _and(
                    m, f"{uid}_ddts_{t}", s(STOP, t), s(DOWN, t - 1))

    # --- power bounds -----------------------------------------------------------
    for t in opt:
        k = t - opt[0]
        lo = tv.p_min[k] * on(t)
        hi = tv.p_max[k] * on(t)
        if tv.has_stop:
            lo += (tv.p_min[k] - tv.step_down) * d_off(t)
            hi += tv.p_min[k] * s(STOP, t) - tv.step_down * d_off(t)
        if tv.has_start:
            hi += tv.p_min[k] * s(START, t)
        m.add(p(t) >= lo, f"{uid}_pmin_{t}")
        m.add(p(t) <= hi, f"{uid}_pmax_{t}")

    # --- gradients ----------------------------------------------------------------
    g = tv.gradient
    rise, fall, fall_stop = {}, {}, {}
    if flat:
        for t in grid.grad:
            if t == -1:
                # Both powers are known here, so the products stay linear.
                last_step = hist.p(-1) - hist.p(-2)
                rise[t] = (last_step if hist.state(-2) == UP else 0.0) * s(UP, -1)
                fall[t] = (last_step if hist.state(-2) == DOWN else 0.0) * s(DOWN, -1)
            else:
                delta = p(t) - p(t - 1)
                u_pre = m.indicator_product(s(UP, t - 1), delta, -pm, pm, f"{uid}_Ut_{t}")
                d_pre = m.indicator_product(s(DOWN, t - 1), delta, -pm, pm, f"{uid}_Dt_{t}")
                rise[t] = LinExpr.of(m.indicator_product(s(UP, t), u_pre, -pm, pm, f"{uid}_U_{t}"))
                fall[t] = LinExpr.of(m.indicator_product(s(DOWN, t), d_pre, -pm, pm, f"{uid}_D_{t}"))
            if tv.has_stop:
                fall_stop[t] = LinExpr.of(
                    m.indicator_product(s(STOP, t + 1), fall[t], -pm, pm, f"{uid}_DD_{t}"))
            else:
                fall_stop[t] = LinExpr()

    for t in grid.grad:
        step = p(t + 1) - p(t)
        if flat:
            slope = rise[t] + fall[t] - fall_stop[t]
            up_rhs = g * a("entered_up", t) + slope
            dn_rhs = -g * a("entered_down", t) + slope + g * a("flat_down_stop", t + 1)
        else:
            up_rhs = g * s(UP, t)
            dn_rhs = -g * s(DOWN, t) + g * a("down_to_stop", t + 1)
        if tv.has_start:
            up_rhs += tv.step_up * (d_on(t + 1) + s(START, t))
        else:
            up_rhs += pm * d_on(t + 1)
        dn_rhs += tv.step_up * (d_on(t + 1) + s(START, t))
        up_rhs -= tv.step_down * (d_off(t + 1) + s(STOP, t))
        if tv.has_stop:
            dn_rhs -= tv.step_down * (d_off(t + 1) + s(STOP, t))
        else:
            dn_rhs -= release * d_off(t + 1)
            if flat:
                up_rhs += release * d_off(t + 1)
        m.add(step <= up_rhs, f"{uid}_grad_up_{t}")
        m.add(step >= dn_rhs, f"{uid}_grad_dn_{t}")

    # --- daily energy -------------------------------------------------------------
    if unit.max_daily_energy is not None:
        days: dict[int, list[int]] = {}
        for t in opt:
            days.setdefault(grid.day_of(t), []).append(t)
        for d, steps in days.items():
            cap = series_at(unit.max_daily_energy, d) * grid.delta_t * len(steps) / 24.0
            m.add(quicksum(p(t) for t in steps) * grid.delta_t <= cap, f"{uid}_energy_{d}")
    return tv


def hist_steps(grid: TimeGrid) -> range:
    return grid.prev


def decode_states(tv: ThermalVars, values) -> list[str]:
    """Most likely state per optimisation step from a solved vector."""
    out = []
    for t in tv.grid.opt:
        best, best_v = OFF, -1.0
        for name in tv.defined_states():
            v = _eval(tv.s(name, t), values)
            if v > best_v:
                best, best_v = name, v
        out.append(best)
    return out


def decode_label_before(tv: ThermalVars, values) -> str | None:
    if not tv.history.is_on(-1):
        return None
    return max(ON_LABELS, key=lambda n: _eval(tv.s(n, -1), values))


def _eval(expr: LinExpr, values) -> float:
    return expr.const + sum(c * values[i] for i, c in expr.terms.items())
