from .model import (DEFAULT_FRAGMENT_MULTIPLIERS, CriticalBranch, FlexibleLoad, HydroUnit,
                    ImbalancePricing, LoadUnit, MarketBorder, NonDispatchableUnit, Portfolio,
                    ProcuredReserves, RenewableUnit, StorageUnit, Strategy, ThermalUnit, Unit,
                    Zone, as_series, series_at)
from .orders import (PURCHASE, SALE, Coupling, CouplingKind, Divisibility, Order, OrderBook,
                     cleared_quantity)
from .timegrid import (ADDITIONAL_HOURS, Durations, TimeGrid, TimeGridError, build_time_grid,
                       discretize_durations)

__all__ = [name for name in dir() if not name.startswith("_")]
