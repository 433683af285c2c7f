"""Exhaustive thermal oracle: every admissible state string, each priced by its own LP.

The LP encodes the unit physics directly (power bands per state, fixed ramp
steps during startup and shutdown, direction labels, slope carry-over while a
ramp continues). It shares no rows with the mixed-integer model.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linprog

from gridmarket.core import ThermalUnit, TimeGrid, series_at
from gridmarket.dispatch.history import DOWN, FLAT, OFF, ON, START, STOP, UP, init_from_history
from gridmarket.dispatch.thermal import thermal_grid
from gridmarket.dispatch.validator import allowed_successors, is_valid_state_string

ONLINE = (UP, DOWN, FLAT, ON)


def _alphabet(dur):
    has_stop, has_flat, has_start = dur.case
    out = [OFF] + ([UP, DOWN, FLAT] if has_flat else [ON])
    if has_start:
        out.append(START)
    if has_stop:
        out.append(STOP)
    return out


def history_sequence(unit, grid):
    dur = unit.durations(grid.delta_t)
    hist = init_from_history(unit, dur, grid)
    has_flat = dur.case[1]
    seq = []
    for s in hist.states:
        if s in (UP, DOWN, FLAT) and not has_flat:
            s = ON
        seq.append(s)
    return hist, seq


def enumerate_strings(unit: ThermalUnit, grid: TimeGrid):
    grid = thermal_grid(unit, grid)
    dur = unit.durations(grid.delta_t)
    hist, base = history_sequence(unit, grid)
    first = len(base)
    alphabet = _alphabet(dur)
    has_flat = dur.case[1]
    prefixes = []
    if base[-1] == ON and has_flat:
        for lab in (UP, DOWN, FLAT):
            cand = base[:-1] + [lab]
            if base[-2] not in ONLINE or lab in allowed_successors(base[-2], dur):
                prefixes.append(cand)
    else:
        prefixes.append(list(base))
    n_opt = grid.n_opt
    out = []

    def dfs(seq):
        if len(seq) == first + n_opt:
            if is_valid_state_string(seq, dur, first):
                out.append(list(seq))
            return
        nxt = allowed_successors(seq[-1], dur)
        for s in alphabet:
            if s in nxt:
                seq.append(s)
                dfs(seq)
                seq.pop()

    for pre in prefixes:
        dfs(pre)
    return hist, first, out


def string_lp(unit, grid, hist, first, seq, price):
    """Optimal cost of one state string, or ``inf`` when its power path is infeasible."""
    dur = unit.durations(grid.delta_t)
    has_stop, has_flat, has_start = dur.case
    n = grid.n_opt
    dt = grid.delta_t
    pmax_all = max(max(series_at(unit.p_max, t) for t in range(n)), max(hist.power))
    pmin = series_at(unit.p_min, 0)
    step_up = pmin / (dur.startup + 1)
    step_dn = pmin / (dur.shutdown + 1)
    grad = unit.ramp_max if unit.ramp_max > 0 else pmax_all

    def st(t):
        return seq[first + t]

    def pw(t):
        # (coefficient vector, constant) of P_t
        v = np.zeros(n)
        if t >= 0:
            v[t] = 1.0
            return v, 0.0
        return v, hist.p(t)

    A_eq, b_eq, A_ub, b_ub = [], [], [], []

    def eq(v, c, rhs):
        A_eq.append(v)
        b_eq.append(rhs - c)

    def le(v, c, rhs):
        A_ub.append(v)
        b_ub.append(rhs - c)

    bounds = []
    for t in range(n):
        s = st(t)
        pmin_t, pmax_t = series_at(unit.p_min, t), series_at(unit.p_max, t)
        if s == OFF:
            bounds.append((0.0, 0.0))
        elif s in (START, STOP):
            bounds.append((0.0, pmin_t))
        else:
            bounds.append((pmin_t, pmax_t))

    for t in range(-1, n - 1):
        a, b = st(t), st(t + 1)
        v1, c1 = pw(t + 1)
        v0, c0 = pw(t)
        g, gc = v1 - v0, c1 - c0
        if a == START:
            eq(g, gc, step_up)
        elif a == STOP:
            eq(g, gc, -step_dn)
        elif a == OFF:
            if b == START:
                eq(v1, c1, step_up)
        elif b == STOP:
            eq(v0, c0, pmin)
            eq(g, gc, -step_dn)
        elif b == OFF:
            pass
        elif not has_flat:
            le(g, gc, grad)
            le(-g, -gc, grad)
        elif a == FLAT:
            eq(g, gc, 0.0)
        else:
            prev = st(t - 1) if first + t - 1 >= 0 else None
            if prev == a:
                vp, cp = pw(t - 1)
                last = v0 - vp
                eq(g - last, gc - (c0 - cp), 0.0)
            elif a == UP:
                le(-g, -gc, 0.0)
                le(g, gc, grad)
            else:
                le(g, gc, 0.0)
                le(-g, -gc, grad)

    if unit.max_daily_energy is not None:
        days = {}
        for t in range(n):
            days.setdefault(grid.day_of(t), []).append(t)
        for d, steps in days.items():
            cap = series_at(unit.max_daily_energy, d) * dt * len(steps) / 24.0
            v = np.zeros(n)
            v[steps] = dt
            le(v, 0.0, cap)

    starts = sum(1 for t in range(n) if st(t - 1) == OFF and st(t) != OFF)
    c = np.array([(unit.c_var - series_at(price, t)) * dt for t in range(n)])
    res = linprog(c,
                  A_ub=np.array(A_ub) if A_ub else None, b_ub=np.array(b_ub) if b_ub else None,
                  A_eq=np.array(A_eq) if A_eq else None, b_eq=np.array(b_eq) if b_eq else None,
                  bounds=bounds, method="highs")
    if res.status != 0:
        return math.inf, None
    return res.fun + unit.c_startup * starts, res.x


def string_bound(unit, grid, first, seq, price):
    """Lower bound on a string's cost: each step at its cheapest bound, plus startups."""
    n, dt = grid.n_opt, grid.delta_t
    cost = 0.0
    for t in range(n):
        s = seq[first + t]
        if s == OFF:
            continue
        lo = 0.0 if s in (START, STOP) else series_at(unit.p_min, t)
        hi = series_at(unit.p_min, t) if s in (START, STOP) else series_at(unit.p_max, t)
        margin = (unit.c_var - series_at(price, t)) * dt
        cost += min(margin * lo, margin * hi)
    starts = sum(1 for t in range(n) if seq[first + t - 1] == OFF and seq[first + t] != OFF)
    return cost + unit.c_startup * starts


def thermal_oracle(unit, grid, price):
    """(best cost, best string, best power, strings enumerated) by exhaustive search.

    Strings are visited in order of a valid lower bound; once the bound reaches
    the incumbent no remaining string can improve on it.
    """
    grid = thermal_grid(unit, grid)
    hist, first, strings = enumerate_strings(unit, grid)
    ranked = sorted(strings, key=lambda q: string_bound(unit, grid, first, q, price))
    best = (math.inf, None, None)
    for seq in ranked:
        if string_bound(unit, grid, first, seq, price) >= best[0] - 1e-9:
            break
        cost, x = string_lp(unit, grid, hist, first, seq, price)
        if cost < best[0] - 1e-9:
            best = (cost, seq, x)
    return best + (len(strings),)
