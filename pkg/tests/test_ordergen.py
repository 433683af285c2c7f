import logging

import numpy as np
import pytest

from gridmarket.core import (PURCHASE, SALE, CouplingKind, Divisibility, HydroUnit, LoadUnit,
                             NonDispatchableUnit, Order, ProcuredReserves, RenewableUnit,
                             StorageUnit, Strategy, ThermalUnit, TimeGrid, Zone)
from gridmarket.dispatch.history import OFF, ON, START, STOP
from gridmarket.dispatch.result import UnitPlan
from gridmarket.dispatch.validator import state_string_violations
from gridmarket.ordergen import (OFFLINE, SHUTDOWN, STABLE, STARTUP, ClearedHistory,
                                 OrderConfig, base_states, block_q, break_even_prices,
                                 da_orders, da_orders_base, da_orders_hydro,
                                 da_orders_intermediate, da_orders_load,
                                 da_orders_nondispatchable, da_orders_peak, da_orders_renewable,
                                 da_orders_storage, id_orders, id_orders_renewable,
                                 id_orders_storage, id_orders_thermal, translate)

ZONE = Zone("Z")
MUST_RUN = ZONE.p_min + 0.1


def thermal(**kw):
    base = dict(p_min=40.0, p_max=100.0, c_var=50.0, strategy=Strategy.BASE)
    base.update(kw)
    return ThermalUnit("g", "Z", **base)


def by_tag(book, tag):
    return [o for o in book.orders if o.id.endswith(tag)]


def couplings(book, kind):
    return [c for c in book.couplings if c.kind is kind]


def accept(book, qty=None):
    """History holding ``book`` with every order accepted at ``qty[id]`` (default q_max)."""
    h = ClearedHistory()
    h.add(book.orders, {o.id: (qty or {}).get(o.id, o.q_max) for o in book.orders})
    return h


# --- thermal: Base -------------------------------------------------------------------

def test_constant_online_unit():
    book = da_orders_base(thermal(), TimeGrid(1.0, 4), ZONE)
    mins, flex = by_tag(book, ":min"), by_tag(book, ":flex")
    assert [(o.q_min, o.q_max, o.price) for o in mins] == [(40, 40, MUST_RUN)] * 4
    assert all(o.divisibility is Divisibility.INDIVISIBLE for o in mins)
    assert [(o.q_min, o.q_max, o.price) for o in flex] == [(0, 60, 50)] * 4
    (iv,) = couplings(book, CouplingKind.IDENTICAL_VOLUME)
    assert set(iv.members) == {o.id for o in mins}
    (pc,) = couplings(book, CouplingKind.PARENT_CHILD)
    assert pc.parent == mins[0].id and set(pc.children) == {o.id for o in flex}
    assert book.meta["blocks"][0]["q"] == pytest.approx(160)
    book.validate()


def test_q_startup_term():
    assert block_q(1, 0, 2, 0, 40.0, []) == pytest.approx(40)
    assert block_q(1, 0, 2, 0, 40.0, [40, 40, 40]) == pytest.approx(160)


def test_q_shutdown_term_mirrors_startup():
    assert block_q(0, 1, 2, 2, 40.0, []) == block_q(1, 0, 2, 2, 40.0, [])
    assert block_q(0, 0, 2, 2, 40.0, [10, 20]) == 30


def test_startup_block_ramps_and_ratio_coupling():
    unit = thermal(d_startup=2.0, history=(0.0,))
    book = da_orders_base(unit, TimeGrid(1.0, 5), ZONE)
    assert base_states(unit, TimeGrid(1.0, 5)) == [STARTUP, STARTUP, STABLE, STABLE, STABLE]
    ramps = by_tag(book, ":ramp")
    assert [o.q_max for o in ramps] == pytest.approx([40 / 3, 80 / 3])
    (ir,) = couplings(book, CouplingKind.IDENTICAL_RATIO)
    assert ir.members[:2] == tuple(o.id for o in ramps)
    blk = book.meta["blocks"][0]
    assert (blk["k_start"], blk["k_stop"]) == (1, 0)
    assert blk["q"] == pytest.approx(40 + 3 * 40)


def test_maintenance_splits_blocks():
    unit = thermal(p_max=[100, 100, 100, 0, 0, 100, 100], d_shutdown=1.0, d_startup=1.0,
                   history=(60.0,))
    grid = TimeGrid(1.0, 7)
    assert base_states(unit, grid) == [STABLE, STABLE, SHUTDOWN, OFFLINE, OFFLINE, STARTUP,
                                       STABLE]
    book = da_orders_base(unit, grid, ZONE)
    assert not [o for o in book.orders if o.t_start in (3, 4)]
    assert [(b["start"], b["end"]) for b in book.meta["blocks"]] == [(0, 3), (5, 7)]
    groups = [set(c.members) for c in book.couplings]
    early = {o.id for o in book.orders if o.t_start < 3}
    assert all(g <= early or not g & early for g in groups)


def test_window_too_short_is_skipped(caplog):
    unit = thermal(p_max=[0, 100, 0, 0], d_startup=1.0, d_shutdown=1.0)
    with caplog.at_level(logging.WARNING):
        book = da_orders_base(unit, TimeGrid(1.0, 4), ZONE)
    assert len(book) == 0 and "too short" in caplog.text


def test_reserve_volume_orders():
    unit = thermal(reserves=ProcuredReserves(afrr_up=10.0, rr_down=5.0), c_var=50)
    cfg = OrderConfig(penalty_auto=30.0, penalty_manual=20.0)
    book = da_orders_base(unit, TimeGrid(1.0, 2), ZONE, cfg)
    up = by_tag(book, ":res_auto_up")
    assert [(o.q_max, o.price, o.side) for o in up] == [(10, 20, SALE)] * 2
    assert [o.price for o in by_tag(book, ":res_manual_down")] == [30, 30]
    assert [o.q_max for o in by_tag(book, ":flex")] == [45, 45]
    deep = da_orders_base(unit, TimeGrid(1.0, 1), ZONE)
    assert by_tag(deep, ":res_auto_up")[0].price == ZONE.p_min


def test_base_book_at_q_min_is_a_valid_schedule():
    unit = thermal(p_max=[100] * 3 + [0] * 3 + [100] * 6, d_startup=2.0, d_shutdown=1.0,
                   d_min_on=2.0, d_min_off=1.0, history=(60.0,))
    grid = TimeGrid(1.0, 12)
    book = da_orders_base(unit, grid, ZONE)
    power = np.zeros(grid.n_sim)
    for o in book.orders:
        power[o.t_start] += o.q_min
    codes = base_states(unit, grid)
    label = {OFFLINE: OFF, STABLE: ON, STARTUP: START, SHUTDOWN: STOP}
    dur = unit.durations(1.0)
    seq = [ON] * dur.traceback + [label[c] for c in codes]
    assert state_string_violations(seq, dur, dur.traceback) == []
    for t, c in enumerate(codes):
        if c == STABLE:
            assert power[t] == pytest.approx(40)
        elif c == OFFLINE:
            assert power[t] == 0
        else:
            assert 0 < power[t] < 40


def test_regeneration_is_identical():
    unit = thermal(d_startup=1.0, history=(0.0,), reserves=ProcuredReserves(fcr_up=5.0))
    a = da_orders_base(unit, TimeGrid(1.0, 6), ZONE)
    b = da_orders_base(unit, TimeGrid(1.0, 6), ZONE)
    assert a.orders == b.orders and a.couplings == b.couplings


# --- thermal: Peak and Intermediate --------------------------------------------------

def test_peak_amortises_startup():
    unit = thermal(p_min=50.0, p_max=50.0, c_var=80.0, c_startup=1000.0, strategy=Strategy.PEAK)
    book = da_orders_peak(unit, TimeGrid(1.0, 1))
    (o,) = book.orders
    assert (o.q_max, o.price, o.divisibility) == (50, 100, Divisibility.INDIVISIBLE)


def test_peak_without_startup_cost():
    book = da_orders_peak(thermal(c_var=80.0, strategy=Strategy.PEAK), TimeGrid(1.0, 1))
    assert {o.price for o in book.orders} == {80}


def test_peak_pairs_stay_within_their_step():
    book = da_orders_peak(thermal(c_startup=400.0), TimeGrid(1.0, 24))
    assert len(book.orders) == 48 and len(book.couplings) == 24
    starts = {o.id: o.t_start for o in book.orders}
    for c in book.couplings:
        assert c.kind is CouplingKind.PARENT_CHILD
        assert len({starts[m] for m in c.members}) == 1


def test_intermediate_all_off():
    unit = thermal(strategy=Strategy.INTERMEDIATE, history=(0.0,), c_startup=100.0)
    assert len(da_orders_intermediate(unit, TimeGrid(1.0, 6), np.full(6, 10.0), ZONE)) == 0


def test_intermediate_matches_base_when_plans_agree():
    unit = thermal(strategy=Strategy.INTERMEDIATE, history=(100.0,))
    grid = TimeGrid(1.0, 6)
    inter = da_orders_intermediate(unit, grid, np.full(6, 200.0), ZONE)
    base = da_orders_base(unit, grid, ZONE)
    assert inter.orders == base.orders and inter.couplings == base.couplings


def test_intermediate_startup_block():
    unit = thermal(strategy=Strategy.INTERMEDIATE, history=(0.0,), d_startup=1.0,
                   c_startup=10.0)
    price = np.array([0, 0, 200, 200, 200, 200.0])
    book = da_orders_intermediate(unit, TimeGrid(1.0, 6), price, ZONE)
    ramps = by_tag(book, ":ramp")
    assert len(ramps) == 1 and ramps[0].q_max == pytest.approx(20)
    (pc,) = couplings(book, CouplingKind.PARENT_CHILD)
    assert pc.parent == ramps[0].id
    assert all(o.t_start >= ramps[0].t_start for o in book.orders)


def test_dispatcher_routes_strategies():
    grid = TimeGrid(1.0, 2)
    assert da_orders(thermal(strategy=Strategy.PEAK), grid).orders == \
        da_orders_peak(thermal(strategy=Strategy.PEAK), grid).orders
    with pytest.raises(TypeError):
        da_orders(object(), grid)


# --- simple units ----------------------------------------------------------------------

def test_load_purchase():
    (o,) = da_orders_load(LoadUnit("l", "Z", forecast=[100.0]), TimeGrid(1.0, 1)).orders
    assert (o.side, o.q_min, o.q_max, o.price) == (PURCHASE, 0, 100, 3000)


def test_wind_sale_with_curtailment_floor():
    unit = RenewableUnit("w", "Z", curtailment=0.1, forecast=[50.0])
    (o,) = da_orders_renewable(unit, TimeGrid(1.0, 1)).orders
    assert (o.side, o.q_min, o.q_max, o.price) == (SALE, 5, 50, 0)
    assert o.divisibility is Divisibility.PARTIAL
    (alt,) = da_orders_renewable(unit, TimeGrid(1.0, 1),
                                 cfg=OrderConfig(curtailment_reading="allowed")).orders
    assert alt.q_min == pytest.approx(45)


def test_must_run_sale():
    unit = NonDispatchableUnit("n", "Z", c_var=7.0, forecast=[80.0])
    (o,) = da_orders_nondispatchable(unit, TimeGrid(1.0, 1)).orders
    assert (o.q_min, o.q_max, o.price, o.divisibility) == (80, 80, 7, Divisibility.INDIVISIBLE)
    cons = NonDispatchableUnit("c", "Z", producer=False, forecast=[30.0])
    (p,) = da_orders_nondispatchable(cons, TimeGrid(1.0, 1), zone=ZONE).orders
    assert (p.side, p.price) == (PURCHASE, ZONE.p_max)


def test_direction_consistency_day_ahead():
    grid = TimeGrid(1.0, 3)
    gen = [thermal(), RenewableUnit("w", "Z", forecast=[5.0]),
           HydroUnit("h", "Z", p_max=7.0, water_value=10.0),
           NonDispatchableUnit("n", "Z", forecast=[1.0])]
    for u in gen:
        assert {o.side for o in da_orders(u, grid, zone=ZONE).orders} == {SALE}
    assert {o.side for o in da_orders(LoadUnit("l", "Z", forecast=[4.0]), grid).orders} == \
        {PURCHASE}


def test_hydro_fragments():
    book = da_orders_hydro(HydroUnit("h", "Z", p_max=70.0, water_value=42.0), TimeGrid(1.0, 1))
    assert [o.q_max for o in book.orders] == pytest.approx([10] * 7)
    assert [o.price for o in book.orders] == pytest.approx(
        [35.7, 37.8, 39.9, 42.0, 44.1, 46.2, 48.3])
    assert sum(o.q_max for o in book.orders) == pytest.approx(70)


def test_hydro_unavailable():
    assert len(da_orders_hydro(HydroUnit("h", "Z", p_max=0.0, water_value=42.0),
                               TimeGrid(1.0, 3))) == 0


# --- storage ---------------------------------------------------------------------------

def battery(**kw):
    base = dict(p_min=-10.0, p_max=10.0, eta_charge=0.9, eta_discharge=0.9, e_max=20.0,
                e_init=0.0)
    base.update(kw)
    return StorageUnit("s", "Z", **base)


def test_storage_flat_price_no_orders():
    assert len(da_orders_storage(battery(), TimeGrid(1.0, 4), np.full(4, 50.0))) == 0


def test_storage_two_period_break_even():
    book = da_orders_storage(battery(), TimeGrid(1.0, 2), np.array([20.0, 100.0]))
    (buy,) = [o for o in book.orders if o.side == PURCHASE]
    (sell,) = [o for o in book.orders if o.side == SALE]
    assert buy.t_start == 0 and sell.t_start == 1
    assert sell.price == pytest.approx(20 / 0.81)
    assert buy.price == pytest.approx(100 * 0.81)
    assert sell.price <= 100 and buy.price >= 20


def test_storage_buys_at_cheapest_hour():
    price = np.array([60, 40, 10, 70, 90, 50.0])
    book = da_orders_storage(battery(), TimeGrid(1.0, 6), price)
    buys = [o.t_start for o in book.orders if o.side == PURCHASE]
    assert 2 in buys


def test_break_even_without_planned_buys():
    lo, hi = break_even_prices(battery(), [0, 5, 0], [30, 80, 60])
    assert lo == pytest.approx(30 / 0.81) and hi == pytest.approx(80 * 0.81)


# --- intraday ------------------------------------------------------------------------

def test_unchanged_forecast_no_load_or_wind_delta():
    grid = TimeGrid(1.0, 2)
    load = LoadUnit("l", "Z", forecast=[100.0, 80.0])
    da = da_orders_load(load, grid)
    assert len(id_orders(load, grid, accept(da), "ID1")) == 0
    wind = RenewableUnit("w", "Z", forecast=[50.0, 20.0])
    book = id_orders(wind, grid, accept(da_orders_renewable(wind, grid)), "ID1")
    assert not by_tag(book, ":fc")
    assert [o.q_max for o in by_tag(book, ":curt")] == [50, 20]


def test_wind_shortfall_buy_back():
    grid = TimeGrid(1.0, 1)
    sold = RenewableUnit("w", "Z", c_var=2.0, forecast=[50.0])
    hist = accept(da_orders_renewable(sold, grid))
    now = RenewableUnit("w", "Z", c_var=2.0, forecast=[40.0])
    book = id_orders_renewable(now, grid, 0, hist, "ID1", imbalance_price=[120.0])
    (fc,) = by_tag(book, ":fc")
    assert (fc.side, fc.q_max, fc.price) == (PURCHASE, 10, 122)
    (curt,) = by_tag(book, ":curt")
    assert (curt.side, curt.q_max, curt.price) == (PURCHASE, 40, 2)


def test_wind_surplus_sold():
    grid = TimeGrid(1.0, 1)
    hist = accept(da_orders_renewable(RenewableUnit("w", "Z", forecast=[30.0]), grid))
    book = id_orders(RenewableUnit("w", "Z", forecast=[45.0]), grid, hist, "ID1")
    (fc,) = by_tag(book, ":fc")
    assert (fc.side, fc.q_max) == (SALE, 15)


def test_load_forecast_increase_buys_more():
    grid = TimeGrid(1.0, 1)
    hist = accept(da_orders_load(LoadUnit("l", "Z", forecast=[100.0]), grid))
    (o,) = id_orders(LoadUnit("l", "Z", forecast=[110.0]), grid, hist, "ID1").orders
    assert (o.side, o.q_max, o.price) == (PURCHASE, 10, 3000)


def test_missing_history_counts_as_nothing_cleared():
    (o,) = id_orders(LoadUnit("l", "Z", forecast=[25.0]), TimeGrid(1.0, 1), None, "ID1").orders
    assert o.q_max == 25


def test_hydro_buy_back_of_accepted_fragment():
    unit = HydroUnit("h", "Z", p_max=70.0, water_value=42.0)
    grid = TimeGrid(1.0, 1)
    da = da_orders_hydro(unit, grid)
    qty = {o.id: 0.0 for o in da.orders}
    qty["h:DA:0:frag3"] = 10.0
    qty["h:DA:0:frag4"] = 4.0
    book = id_orders(unit, grid, accept(da, qty), "ID1")
    buys = {o.id: (o.q_max, o.price) for o in book.orders if o.side == PURCHASE}
    assert buys["h:ID1:0:buy:frag3"] == pytest.approx((10, 42))
    assert buys["h:ID1:0:buy:frag4"] == pytest.approx((4, 44.1))
    sells = {o.id: o.q_max for o in book.orders if o.side == SALE}
    assert "h:ID1:0:sell:frag3" not in sells
    assert sells["h:ID1:0:sell:frag4"] == pytest.approx(6)
    assert sum(sells.values()) == pytest.approx(70 - 14)


def test_nondispatchable_silent_intraday():
    unit = NonDispatchableUnit("n", "Z", forecast=[10.0])
    assert len(id_orders(unit, TimeGrid(1.0, 2), None, "ID1")) == 0


def test_thermal_intraday_start_stop_modulate():
    unit = thermal(c_startup=300.0, c_var=50.0)
    grid = TimeGrid(1.0, 6)
    da = [Order(f"g:DA:{t}:x", "Z", SALE, 50, 0, 60, t, unit="g") for t in range(6)]
    hist = ClearedHistory()
    hist.add(da, {"g:DA:0:x": 60, "g:DA:1:x": 60, "g:DA:2:x": 60, "g:DA:3:x": 60})
    plan = UnitPlan("g", np.array([80, 50, 0, 0, 70, 70.0]),
                    ["UP", "DOWN", "OFF", "OFF", "UP", "UP"])
    book = id_orders_thermal(unit, grid, plan, hist, "ID1")
    mod = {o.t_start: (o.side, o.q_max) for o in by_tag(book, ":mod")}
    assert mod == {0: (SALE, 20), 1: (PURCHASE, 10)}
    stop = by_tag(book, ":stop")
    assert [(o.t_start, o.side, o.q_max, o.price) for o in stop] == \
        [(2, PURCHASE, 60, 50), (3, PURCHASE, 60, 50)]
    start = by_tag(book, ":start")
    assert [o.t_start for o in start] == [4, 5]
    assert start[0].price == pytest.approx(50 + 300 / 140)
    kinds = sorted(c.kind.value for c in book.couplings)
    assert kinds == ["identical_volume", "identical_volume"]


def test_thermal_sale_volumes_within_headroom():
    unit = thermal()
    grid = TimeGrid(1.0, 3)
    da = da_orders_base(unit, grid, ZONE)
    hist = accept(da, {o.id: o.q_min for o in da.orders})
    plan = UnitPlan("g", np.array([100, 90, 40.0]), ["UP", "DOWN", "FLAT"])
    book = id_orders_thermal(unit, grid, plan, hist, "ID1")
    for o in book.orders:
        if o.side == SALE:
            assert o.q_max <= 100 - hist.position("g", o.t_start) + 1e-9


def test_storage_intraday_delta_and_ev_complement():
    grid = TimeGrid(1.0, 3)
    unit = battery(is_ev=True, e_init=15.0)
    hist = ClearedHistory()
    hist.add([Order("s:DA:1:sell", "Z", SALE, 40, 0, 10, 1, unit="s")], {"s:DA:1:sell": 4.0})
    plan = UnitPlan("s", np.array([-5.0, 10.0, 2.0]))
    book = id_orders_storage(unit, grid, plan, [30, 90, 60], hist, "ID1")
    got = {o.t_start: (o.side, o.q_max) for o in book.orders}
    assert got == {0: (PURCHASE, 5), 1: (SALE, 6), 2: (SALE, 2)}
    (c,) = book.couplings
    assert c.kind is CouplingKind.COMPLEMENT and len(c.members) == 3
    plain = id_orders_storage(battery(e_init=15.0), grid, plan, [30, 90, 60], hist, "ID1")
    assert not plain.couplings


def test_intraday_peak_resubmits_capacity():
    unit = thermal(strategy=Strategy.PEAK)
    assert len(id_orders(unit, TimeGrid(1.0, 2), None, "ID1")) == 4


def test_translate_empty_for_offline_codes():
    assert len(translate(thermal(), TimeGrid(1.0, 3), [OFFLINE] * 3)) == 0
