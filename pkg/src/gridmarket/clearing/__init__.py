from .clear import ClearingError, ClearingResult, clear, structural_problems, welfare
from .config import ClearingConfig
from .exchange import fix_exchanges
from .marginal import fix_marginal, marginal_orders
from .network import ATC, FLOW_BASED, Network
from .pricing import (PricingResult, compute_prices, find_price_groups, obvious_price,
                      price_bounds, price_first, price_second)
from .rents import congestion_rents
from .session import SessionResult, run_session

__all__ = [name for name in dir() if not name.startswith("_")]
