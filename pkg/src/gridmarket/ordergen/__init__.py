from .books import da_orders, id_orders
from .config import OrderConfig
from .history import ClearedHistory
from .simple import (da_orders_flexload, da_orders_hydro, da_orders_load,
                     da_orders_nondispatchable, da_orders_renewable, id_orders_hydro,
                     id_orders_load, id_orders_renewable)
from .storage import break_even_prices, da_orders_storage, id_orders_storage
from .thermal import (OFFLINE, SHUTDOWN, STABLE, STARTUP, base_states, block_q, da_orders_base,
                      da_orders_intermediate, da_orders_peak, id_orders_thermal, must_run_price,
                      online_blocks, plan_codes, translate)

__all__ = [name for name in dir() if not name.startswith("_")]
