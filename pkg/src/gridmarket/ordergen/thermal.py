"""Thermal order books: state sequences, block translation, Peak heuristic and intraday deltas."""

from __future__ import annotations

import logging

import numpy as np

from ..core import (PURCHASE, SALE, Coupling, CouplingKind, Divisibility, Order, OrderBook,
                    ThermalUnit, TimeGrid, Zone, series_at)
from ..dispatch import DispatchConfig, solve_dao_thermal
from ..dispatch.history import OFF, START, STOP
from .config import OrderConfig
from .history import ClearedHistory

log = logging.getLogger(__name__)

OFFLINE, STABLE, STARTUP, SHUTDOWN = 0, 1, 2, 3
RESERVE_KINDS = (("auto", "up"), ("auto", "down"), ("manual", "up"), ("manual", "down"))


def must_run_price(zone: Zone | None, cfg: OrderConfig) -> float:
    return (zone or Zone("_")).p_min + cfg.must_run_offset


def online_blocks(codes) -> list[tuple[int, int]]:
    """Maximal runs ``[a, b)`` of non-offline codes."""
    out, start = [], None
    for t, c in enumerate(list(codes) + [OFFLINE]):
        if c != OFFLINE and start is None:
            start = t
        elif c == OFFLINE and start is not None:
            out.append((start, t))
            start = None
    return out


def initially_online(unit: ThermalUnit, tol: float = 1e-6) -> bool:
    """Units without recorded history start offline, as dispatch assumes."""
    if not unit.history:
        return False
    return unit.history[-1] >= series_at(unit.p_min, -1) - tol and unit.history[-1] > tol


def base_states(unit: ThermalUnit, grid: TimeGrid) -> list[int]:
    """State codes of a unit that runs whenever it is available.

    Steps with zero maximum power are maintenance. Each available window gets a
    startup phase unless the unit is already running at step 0 and a shutdown
    phase unless it reaches the end of the window. Windows too short to hold
    both phases and the minimum online time stay offline.
    """
    dur = unit.durations(grid.delta_t)
    n = grid.n_sim
    avail = [series_at(unit.p_max, t) > 0 for t in range(n)]
    codes = [OFFLINE] * n
    for a, b in online_blocks([STABLE if v else OFFLINE for v in avail]):
        su = 0 if (a == 0 and initially_online(unit)) else dur.startup
        sd = dur.shutdown if b < n else 0
        if b - a < su + sd + (dur.on if su else 1):
            log.warning("unit %s: available window %d-%d too short to start and stop", unit.id,
                        a, b)
            continue
        codes[a:b] = [STARTUP] * su + [STABLE] * (b - a - su - sd) + [SHUTDOWN] * sd
    return codes


def plan_codes(states) -> list[int]:
    return [{OFF: OFFLINE, START: STARTUP, STOP: SHUTDOWN}.get(s, STABLE) for s in states]


def block_q(k_start: int, k_stop: int, t_su: int, t_sd: int, p_min: float,
            flex_p_min) -> float:
    """Energy of the indivisible part of one online block (MW summed over steps)."""
    q = float(np.sum(flex_p_min))
    if k_start:
        q += k_start * (t_su + (3 - k_start) / 2) * p_min / (t_su + 1)
    if k_stop:
        q += k_stop * (t_sd + (3 - k_stop) / 2) * p_min / (t_sd + 1)
    return q


def ramp_powers(codes, a: int, b: int, p_min: float, t_su: int, t_sd: int) -> dict[int, float]:
    """Power of each startup and shutdown step in block ``[a, b)``."""
    out = {}
    starts = [t for t in range(a, b) if codes[t] == STARTUP]
    for k, t in enumerate(starts, start=t_su - len(starts) + 1):
        out[t] = k * p_min / (t_su + 1)
    stops = [t for t in range(a, b) if codes[t] == SHUTDOWN]
    for k, t in enumerate(stops, start=1):
        out[t] = (t_sd + 1 - k) * p_min / (t_sd + 1)
    return out


def _sale(oid, unit, t, price, q, market, indivisible=False):
    div = Divisibility.INDIVISIBLE if indivisible else Divisibility.DIVISIBLE
    return Order(oid, unit.zone, SALE, float(price), float(q) if indivisible else 0.0, float(q),
                 t, 1, div, unit.id, market)


def translate(unit: ThermalUnit, grid: TimeGrid, codes, zone: Zone | None = None,
              cfg: OrderConfig = OrderConfig(), market: str = "DA") -> OrderBook:
    """Orders for a sequence of state codes, one independent group per online block.

    Ramp and stable steps carry indivisible orders at the must-run price, tied
    together by identical volume (flat) or identical ratio (with ramps). Each
    stable step adds a divisible order for the flexible range and one order per
    procured reserve volume; these are children of the block's first
    indivisible order.
    """
    dur = unit.durations(grid.delta_t)
    floor = (zone or Zone("_")).p_min
    must_run = must_run_price(zone, cfg)
    book = OrderBook(market, meta={"blocks": []})
    res = unit.reserves
    for a, b in online_blocks(codes):
        pmin_ref = series_at(unit.p_min, a)
        ramps = ramp_powers(codes, a, b, pmin_ref, dur.startup, dur.shutdown)
        flex = [t for t in range(a, b) if codes[t] == STABLE]
        k_start, k_stop = int(codes[a] == STARTUP), int(codes[b - 1] == SHUTDOWN)
        book.meta["blocks"].append({
            "start": a, "end": b, "k_start": k_start, "k_stop": k_stop,
            "q": block_q(k_start, k_stop, dur.startup, dur.shutdown, pmin_ref,
                         [series_at(unit.p_min, t) for t in flex])})
        blocks, children = [], []
        for t in range(a, b):
            base = f"{unit.id}:{market}:{t}"
            if t in ramps:
                if ramps[t] > cfg.tol:
                    blocks.append(_sale(f"{base}:ramp", unit, t, must_run, ramps[t], market, True))
                continue
            pmin, pmax = series_at(unit.p_min, t), series_at(unit.p_max, t)
            if pmin > cfg.tol:
                blocks.append(_sale(f"{base}:min", unit, t, must_run, pmin, market, True))
            held = 0.0
            for kind, d in RESERVE_KINDS:
                vol = res.automated(d, t) if kind == "auto" else res.manual(d, t)
                if vol <= cfg.tol:
                    continue
                held += vol
                penalty = cfg.penalty_auto if kind == "auto" else cfg.penalty_manual
                children.append(_sale(f"{base}:res_{kind}_{d}", unit, t,
                                      max(unit.c_var - penalty, floor), vol, market))
            flexible = pmax - pmin - held
            if flexible > cfg.tol:
                children.append(_sale(f"{base}:flex", unit, t, unit.c_var, flexible, market))
            elif flexible < -cfg.tol:
                log.warning("unit %s step %d: procured reserves exceed the flexible range",
                            unit.id, t)
        book.orders.extend(blocks + children)
        tag = f"{unit.id}:{market}:{a}-{b}"
        if len(blocks) > 1:
            flat = len({o.q_max for o in blocks}) == 1
            kind = CouplingKind.IDENTICAL_VOLUME if flat else CouplingKind.IDENTICAL_RATIO
            book.couplings.append(Coupling(f"{tag}:block", kind, tuple(o.id for o in blocks)))
        if blocks and children:
            parent = blocks[0].id
            book.couplings.append(Coupling(f"{tag}:flex", CouplingKind.PARENT_CHILD,
                                           (parent,) + tuple(o.id for o in children), parent))
    return book


def da_orders_base(unit: ThermalUnit, grid: TimeGrid, zone: Zone | None = None,
                   cfg: OrderConfig = OrderConfig(), market: str = "DA") -> OrderBook:
    return translate(unit, grid, base_states(unit, grid), zone, cfg, market)


def da_orders_peak(unit: ThermalUnit, grid: TimeGrid, cfg: OrderConfig = OrderConfig(),
                   market: str = "DA") -> OrderBook:
    """Per step: minimum power carrying the whole startup cost, plus the flexible range."""
    book = OrderBook(market)
    for t in grid.sim:
        pmin, pmax = series_at(unit.p_min, t), series_at(unit.p_max, t)
        if pmax <= cfg.tol:
            continue
        base = f"{unit.id}:{market}:{t}"
        step = []
        if pmin > cfg.tol:
            price = unit.c_var + unit.c_startup / (pmin * grid.delta_t)
            step.append(_sale(f"{base}:min", unit, t, price, pmin, market, True))
        if pmax - pmin > cfg.tol:
            step.append(_sale(f"{base}:flex", unit, t, unit.c_var, pmax - pmin, market))
        book.orders.extend(step)
        if len(step) == 2:
            book.couplings.append(Coupling(f"{base}:pc", CouplingKind.PARENT_CHILD,
                                           (step[0].id, step[1].id), step[0].id))
    return book


def da_orders_intermediate(unit: ThermalUnit, grid: TimeGrid, price, zone: Zone | None = None,
                           cfg: OrderConfig = OrderConfig(),
                           dispatch: DispatchConfig = DispatchConfig(),
                           market: str = "DA") -> OrderBook:
    """Orders translated from the unit's own profit-maximising plan."""
    res = solve_dao_thermal(unit, grid, price, dispatch)
    if not res.ok:
        log.warning("unit %s: no dispatch plan, empty order book", unit.id)
        return OrderBook(market)
    plan = res.plans[unit.id]
    return translate(unit, grid, plan_codes(plan.states[:grid.n_sim]), zone, cfg, market)


def id_orders_thermal(unit: ThermalUnit, grid: TimeGrid, plan, history: ClearedHistory,
                      market: str, cfg: OrderConfig = OrderConfig()) -> OrderBook:
    """Orders moving the cleared position towards a re-optimised plan.

    Steps newly online form an all-or-nothing sale block carrying the startup
    cost when the plan starts the unit. Steps newly offline form an
    all-or-nothing buy-back at c_var. Elsewhere the difference is traded as
    divisible volume at c_var.
    """
    book = OrderBook(market)
    n = grid.n_sim
    codes = plan_codes(plan.states[:n]) if plan.states else [
        STABLE if p > cfg.tol else OFFLINE for p in plan.power[:n]]
    power = cfg.snap(plan.power[:n])
    cleared = np.array([history.position(unit.id, t) for t in range(n)])
    on_new = [codes[t] != OFFLINE and cleared[t] <= cfg.tol for t in range(n)]
    off_new = [codes[t] == OFFLINE and cleared[t] > cfg.tol for t in range(n)]

    def runs(mask):
        return online_blocks([1 if m else 0 for m in mask])

    for a, b in runs(on_new):
        steps = [t for t in range(a, b) if power[t] > cfg.tol]
        if not steps:
            continue
        energy = float(power[steps].sum()) * grid.delta_t
        starts = STARTUP in codes[a:b] or (codes[a - 1] == OFFLINE if a > 0
                                           else not initially_online(unit))
        price = unit.c_var + (unit.c_startup / energy if starts else 0.0)
        orders = [_sale(f"{unit.id}:{market}:{t}:start", unit, t, price, power[t], market, True)
                  for t in steps]
        _tie(book, orders, f"{unit.id}:{market}:{a}-{b}:start")
    for a, b in runs(off_new):
        orders = [Order(f"{unit.id}:{market}:{t}:stop", unit.zone, PURCHASE, unit.c_var,
                        float(cleared[t]), float(cleared[t]), t, 1, Divisibility.INDIVISIBLE,
                        unit.id, market) for t in range(a, b)]
        _tie(book, orders, f"{unit.id}:{market}:{a}-{b}:stop")
    for t in range(n):
        if on_new[t] or off_new[t] or codes[t] == OFFLINE:
            continue
        delta = power[t] - cleared[t]
        if abs(delta) < cfg.min_volume:
            continue
        side = SALE if delta > 0 else PURCHASE
        book.orders.append(Order(f"{unit.id}:{market}:{t}:mod", unit.zone, side, unit.c_var,
                                 0.0, float(abs(delta)), t, 1, Divisibility.DIVISIBLE,
                                 unit.id, market))
    return book


def _tie(book: OrderBook, orders: list[Order], cid: str) -> None:
    book.orders.extend(orders)
    if len(orders) > 1:
        flat = len({o.q_max for o in orders}) == 1
        kind = CouplingKind.IDENTICAL_VOLUME if flat else CouplingKind.IDENTICAL_RATIO
        book.couplings.append(Coupling(cid, kind, tuple(o.id for o in orders)))
