from __future__ import annotations

from .clear import ClearingResult
from .pricing import PricingResult


def congestion_rents(res: ClearingResult, pr: PricingResult, flows: dict,
                     delta_t: float = 1.0) -> dict[tuple[str, int], float]:
    """Signed rent per border and step: price spread times flow times step length."""
    out = {}
    for b in res.network.borders:
        for t in res.steps:
            spread = pr.prices[(b.downstream, t)] - pr.prices[(b.upstream, t)]
            out[(b.id, t)] = spread * flows.get((b.id, t), 0.0) * delta_t
    return out
