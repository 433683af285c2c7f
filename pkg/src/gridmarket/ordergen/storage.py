"""Storage order books priced at efficiency break-even."""

from __future__ import annotations

import logging

import numpy as np

from ..core import (PURCHASE, SALE, Coupling, CouplingKind, Divisibility, Order, OrderBook,
                    StorageUnit, TimeGrid)
from ..dispatch import DispatchConfig, solve_dao_storage
from ..forecast.matrix import extend_periodic
from .config import OrderConfig
from .history import ClearedHistory

log = logging.getLogger(__name__)


def break_even_prices(unit: StorageUnit, power, price,
                      tol: float = 0.01) -> tuple[float, float]:
    """(minimum sell price, maximum buy price) for a planned schedule.

    Selling must recover the mean price paid for charging after both
    efficiency losses; buying must not cost more than the mean resale price
    after losses. Without planned purchases (sales) the cheapest (dearest)
    forecast price stands in.
    """
    power = np.asarray(power, float)
    power = np.where(np.abs(power) > tol, power, 0.0)
    price = extend_periodic(np.atleast_1d(price), power.size)
    eta = unit.eta_charge * unit.eta_discharge
    buys, sells = price[power < 0], price[power > 0]
    min_sell = (buys.mean() if buys.size else price.min()) / eta
    max_buy = (sells.mean() if sells.size else price.max()) * eta
    return float(min_sell), float(max_buy)


def schedule_orders(unit: StorageUnit, delta, min_sell: float, max_buy: float, market: str,
                    tol: float) -> OrderBook:
    book = OrderBook(market)
    for t, q in enumerate(delta):
        if abs(q) <= tol:
            continue
        side, price = (SALE, min_sell) if q > 0 else (PURCHASE, max_buy)
        book.orders.append(Order(f"{unit.id}:{market}:{t}:{'sell' if q > 0 else 'buy'}",
                                 unit.zone, side, price, 0.0, float(abs(q)), t, 1,
                                 Divisibility.DIVISIBLE, unit.id, market))
    return book


def da_orders_storage(unit: StorageUnit, grid: TimeGrid, price,
                      cfg: OrderConfig = OrderConfig(),
                      dispatch: DispatchConfig = DispatchConfig(),
                      market: str = "DA") -> OrderBook:
    res = solve_dao_storage(unit, grid, price, dispatch)
    if not res.ok:
        log.warning("unit %s: no dispatch plan, empty order book", unit.id)
        return OrderBook(market)
    power = cfg.snap(res.plans[unit.id].power[:grid.n_sim])
    min_sell, max_buy = break_even_prices(unit, power, price, cfg.min_volume)
    book = schedule_orders(unit, power, min_sell, max_buy, market, cfg.min_volume)
    book.meta.update(min_sell=min_sell, max_buy=max_buy)
    return book


def id_orders_storage(unit: StorageUnit, grid: TimeGrid, plan, price,
                      history: ClearedHistory, market: str,
                      cfg: OrderConfig = OrderConfig()) -> OrderBook:
    """Orders closing the gap between the cleared position and a re-optimised plan.

    Electric vehicles tie their orders into one complement group so the market
    may reshuffle volumes between steps.
    """
    power = cfg.snap(plan.power[:grid.n_sim])
    cleared = np.array([history.position(unit.id, t) for t in grid.sim])
    min_sell, max_buy = break_even_prices(unit, power, price, cfg.min_volume)
    book = schedule_orders(unit, power - cleared, min_sell, max_buy, market,
                          cfg.min_volume)
    if unit.is_ev and len(book.orders) > 1:
        book.couplings.append(Coupling(f"{unit.id}:{market}:ev", CouplingKind.COMPLEMENT,
                                       tuple(o.id for o in book.orders)))
    return book
