"""Loads, renewables, must-run units, power-to-gas consumers and reservoir hydro."""

from __future__ import annotations

import numpy as np

from ..core import (PURCHASE, SALE, Divisibility, FlexibleLoad, HydroUnit, LoadUnit,
                    NonDispatchableUnit, Order, OrderBook, RenewableUnit, TimeGrid, Zone,
                    series_at)
from ..dispatch import fragment_prices
from ..forecast.matrix import forecast_values
from .config import OrderConfig
from .history import ClearedHistory


def _divisibility(q_min: float, q_max: float) -> Divisibility:
    if q_min <= 0:
        return Divisibility.DIVISIBLE
    return Divisibility.INDIVISIBLE if q_min >= q_max else Divisibility.PARTIAL


def _order(unit, market, t, tag, side, price, q_min, q_max) -> Order:
    q_min = min(q_min, q_max)
    return Order(f"{unit.id}:{market}:{t}:{tag}", unit.zone, side, float(price), float(q_min),
                 float(q_max), t, 1, _divisibility(q_min, q_max), unit.id, market)


def da_orders_load(unit: LoadUnit, grid: TimeGrid, t_ex: int = 0,
                   cfg: OrderConfig = OrderConfig(), market: str = "DA") -> OrderBook:
    demand = np.abs(forecast_values(unit.forecast, t_ex, grid.n_sim, unit.id))
    return OrderBook(market, [_order(unit, market, t, "load", PURCHASE, unit.p_load, 0.0, q)
                              for t, q in enumerate(demand) if q > cfg.tol])


def renewable_floor(unit: RenewableUnit, power: float, cfg: OrderConfig) -> float:
    share = unit.curtailment if cfg.curtailment_reading == "minimum" else 1 - unit.curtailment
    return share * power


def da_orders_renewable(unit: RenewableUnit, grid: TimeGrid, t_ex: int = 0,
                        cfg: OrderConfig = OrderConfig(), market: str = "DA") -> OrderBook:
    avail = np.maximum(forecast_values(unit.forecast, t_ex, grid.n_sim, unit.id), 0.0)
    return OrderBook(market, [
        _order(unit, market, t, "gen", SALE, unit.c_var, renewable_floor(unit, p, cfg), p)
        for t, p in enumerate(avail) if p > cfg.tol])


def da_orders_nondispatchable(unit: NonDispatchableUnit, grid: TimeGrid, t_ex: int = 0,
                              zone: Zone | None = None, cfg: OrderConfig = OrderConfig(),
                              market: str = "DA") -> OrderBook:
    """All-or-nothing production at c_var, or consumption at the zone price cap."""
    power = np.abs(forecast_values(unit.forecast, t_ex, grid.n_sim, unit.id))
    if unit.producer:
        side, price = SALE, unit.c_var
    else:
        side, price = PURCHASE, (zone or Zone("_")).p_max
    return OrderBook(market, [_order(unit, market, t, "fixed", side, price, p, p)
                              for t, p in enumerate(power) if p > cfg.tol])


def da_orders_flexload(unit: FlexibleLoad, grid: TimeGrid, cfg: OrderConfig = OrderConfig(),
                       market: str = "DA") -> OrderBook:
    """Consumption worth the gas it produces."""
    book = OrderBook(market)
    for t in grid.sim:
        hi = series_at(unit.p_max, t)
        if hi > cfg.tol:
            price = series_at(unit.gas_price, t) * unit.efficiency
            book.orders.append(_order(unit, market, t, "p2g", PURCHASE, price,
                                      series_at(unit.p_min, t), hi))
    return book


def da_orders_hydro(unit: HydroUnit, grid: TimeGrid, cfg: OrderConfig = OrderConfig(),
                    market: str = "DA") -> OrderBook:
    """Available power split into equal fragments priced around the water value."""
    prices = fragment_prices(unit)
    n = len(prices)
    book = OrderBook(market)
    for t in grid.sim:
        pmax = series_at(unit.p_max, t)
        if pmax <= cfg.tol:
            continue
        for i, price in enumerate(prices):
            book.orders.append(_order(unit, market, t, f"frag{i}", SALE, price, 0.0, pmax / n))
    return book


def id_orders_load(unit: LoadUnit, grid: TimeGrid, t_ex: int, history: ClearedHistory,
                   market: str, cfg: OrderConfig = OrderConfig()) -> OrderBook:
    demand = np.abs(forecast_values(unit.forecast, t_ex, grid.n_sim, unit.id))
    book = OrderBook(market)
    for t in grid.sim:
        delta = history.position(unit.id, t) + demand[t]   # > 0: bought too little
        if abs(delta) > cfg.tol:
            side = PURCHASE if delta > 0 else SALE
            book.orders.append(_order(unit, market, t, "load", side, unit.p_load, 0.0,
                                      abs(delta)))
    return book


def id_orders_renewable(unit: RenewableUnit, grid: TimeGrid, t_ex: int,
                        history: ClearedHistory, market: str, imbalance_price,
                        cfg: OrderConfig = OrderConfig()) -> OrderBook:
    """A forecast-correction order and a buy-back covering the whole new forecast.

    Shortfalls are bought only up to c_var plus the expected imbalance price,
    the cost of simply being short.
    """
    avail = np.maximum(forecast_values(unit.forecast, t_ex, grid.n_sim, unit.id), 0.0)
    book = OrderBook(market)
    for t in grid.sim:
        delta = avail[t] - history.position(unit.id, t)
        if delta > cfg.tol:
            book.orders.append(_order(unit, market, t, "fc", SALE, unit.c_var, 0.0, delta))
        elif delta < -cfg.tol:
            price = unit.c_var + series_at(imbalance_price, t)
            book.orders.append(_order(unit, market, t, "fc", PURCHASE, price, 0.0, -delta))
        if avail[t] > cfg.tol:
            book.orders.append(_order(unit, market, t, "curt", PURCHASE, unit.c_var, 0.0,
                                      avail[t]))
    return book


def id_orders_hydro(unit: HydroUnit, grid: TimeGrid, history: ClearedHistory, market: str,
                    cfg: OrderConfig = OrderConfig()) -> OrderBook:
    """Sold fragment volume offered back as purchases, unsold volume offered as sales."""
    prices = fragment_prices(unit)
    n = len(prices)
    book = OrderBook(market)
    for t in grid.sim:
        size = series_at(unit.p_max, t) / n
        for i, price in enumerate(prices):
            sold = min(max(history.fragment_position(unit.id, t, i), 0.0), size)
            if sold > cfg.tol:
                book.orders.append(_order(unit, market, t, f"buy:frag{i}", PURCHASE, price,
                                          0.0, sold))
            if size - sold > cfg.tol:
                book.orders.append(_order(unit, market, t, f"sell:frag{i}", SALE, price, 0.0,
                                          size - sold))
    return book
