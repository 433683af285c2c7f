"""Dispatch of every unit type to its order generator."""

from __future__ import annotations

import logging

from ..core import (FlexibleLoad, HydroUnit, LoadUnit, NonDispatchableUnit, OrderBook,
                    RenewableUnit, StorageUnit, Strategy, ThermalUnit, TimeGrid, Zone)
from ..dispatch import DispatchConfig
from .config import OrderConfig
from .history import ClearedHistory
from .simple import (da_orders_flexload, da_orders_hydro, da_orders_load,
                     da_orders_nondispatchable, da_orders_renewable, id_orders_hydro,
                     id_orders_load, id_orders_renewable)
from .storage import da_orders_storage, id_orders_storage
from .thermal import da_orders_base, da_orders_intermediate, da_orders_peak, id_orders_thermal

log = logging.getLogger(__name__)


def _unsupported(unit) -> TypeError:
    return TypeError(f"unit {getattr(unit, 'id', unit)!r}: unsupported technology "
                     f"{type(unit).__name__}")


def da_orders(unit, grid: TimeGrid, *, price=None, t_ex: int = 0, zone: Zone | None = None,
              cfg: OrderConfig = OrderConfig(), dispatch: DispatchConfig = DispatchConfig(),
              market: str = "DA") -> OrderBook:
    """Day-ahead book of one unit; ``price`` is the forecast used by optimising strategies."""
    if isinstance(unit, ThermalUnit):
        if unit.strategy is Strategy.BASE:
            return da_orders_base(unit, grid, zone, cfg, market)
        if unit.strategy is Strategy.PEAK:
            return da_orders_peak(unit, grid, cfg, market)
        return da_orders_intermediate(unit, grid, price, zone, cfg, dispatch, market)
    if isinstance(unit, StorageUnit):
        return da_orders_storage(unit, grid, price, cfg, dispatch, market)
    if isinstance(unit, HydroUnit):
        return da_orders_hydro(unit, grid, cfg, market)
    if isinstance(unit, RenewableUnit):
        return da_orders_renewable(unit, grid, t_ex, cfg, market)
    if isinstance(unit, LoadUnit):
        return da_orders_load(unit, grid, t_ex, cfg, market)
    if isinstance(unit, NonDispatchableUnit):
        return da_orders_nondispatchable(unit, grid, t_ex, zone, cfg, market)
    if isinstance(unit, FlexibleLoad):
        return da_orders_flexload(unit, grid, cfg, market)
    raise _unsupported(unit)


def id_orders(unit, grid: TimeGrid, history: ClearedHistory | None, market: str, *,
              t_ex: int = 0, plan=None, price=None, imbalance_price=0.0,
              zone: Zone | None = None, cfg: OrderConfig = OrderConfig()) -> OrderBook:
    """Intraday book of one unit.

    ``plan`` is the unit's re-optimised schedule (thermal and storage),
    ``price`` the intraday price expectation and ``imbalance_price`` the
    expected cost of a shortfall. Missing history counts as nothing cleared.
    """
    history = history or ClearedHistory()
    if isinstance(unit, ThermalUnit):
        if unit.strategy is Strategy.PEAK:
            return da_orders_peak(unit, grid, cfg, market)
        if plan is None:
            log.warning("unit %s: no re-optimised plan, no intraday orders", unit.id)
            return OrderBook(market)
        return id_orders_thermal(unit, grid, plan, history, market, cfg)
    if isinstance(unit, StorageUnit):
        if plan is None:
            log.warning("unit %s: no re-optimised plan, no intraday orders", unit.id)
            return OrderBook(market)
        return id_orders_storage(unit, grid, plan, price, history, market, cfg)
    if isinstance(unit, HydroUnit):
        return id_orders_hydro(unit, grid, history, market, cfg)
    if isinstance(unit, RenewableUnit):
        return id_orders_renewable(unit, grid, t_ex, history, market, imbalance_price, cfg)
    if isinstance(unit, LoadUnit):
        return id_orders_load(unit, grid, t_ex, history, market, cfg)
    if isinstance(unit, (NonDispatchableUnit, FlexibleLoad)):
        return OrderBook(market)
    raise _unsupported(unit)
