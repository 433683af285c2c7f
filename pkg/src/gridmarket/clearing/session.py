"""All clearing phases for one order book, in order."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from ..core import OrderBook
from .clear import ClearingResult, clear, welfare
from .config import ClearingConfig
from .exchange import fix_exchanges
from .marginal import fix_marginal
from .network import Network
from .pricing import PricingResult, compute_prices
from .rents import congestion_rents

log = logging.getLogger(__name__)


@dataclass
class SessionResult:
    clearing: ClearingResult
    pricing: PricingResult | None = None
    flows: dict = field(default_factory=dict)
    rents: dict = field(default_factory=dict)
    welfare_before_fixing: float = float("nan")

    @property
    def ok(self) -> bool:
        return self.clearing.ok and self.pricing is not None and self.pricing.ok

    @property
    def quantity(self) -> dict[str, float]:
        return self.clearing.quantity

    @property
    def prices(self) -> dict:
        return self.pricing.prices if self.pricing else {}


def run_session(book: OrderBook, network: Network, config: ClearingConfig = ClearingConfig(),
                n_steps: int | None = None, marginal: bool = True) -> SessionResult:
    res = clear(book, network, config, n_steps)
    out = SessionResult(res)
    if not res.ok:
        return out
    flows = fix_exchanges(res, config)
    pr = compute_prices(res, flows, config)
    out.welfare_before_fixing = res.welfare
    if pr.ok and marginal:
        res, flows = fix_marginal(res, pr, flows, config)
        res.welfare = welfare(res.orders.values(), res.quantity, config.delta_t)
    out.clearing, out.pricing, out.flows = res, pr, flows
    if pr.ok:
        out.rents = congestion_rents(res, pr, flows, config.delta_t)
    return out
