"""Border exchanges that realise the cleared zone balances with the least total flow."""

from __future__ import annotations

import logging

from ..core import series_at
from ..optim import Model, quicksum
from .clear import ClearingResult, border_terms
from .config import ClearingConfig
from .network import ATC

log = logging.getLogger(__name__)


def fix_exchanges(res: ClearingResult, config: ClearingConfig = ClearingConfig()) -> dict:
    """Return ``{(border, t): flow}`` with minimal sum of absolute flows.

    Circular exchanges left by the clearing problem are removed. In ATC mode
    NTC limits and losses stay in force; with flow-based clearing the borders
    only carry the balances, so they are unbounded and lossless.
    """
    network = res.network
    if not network.borders:
        return {}
    atc = network.mode == ATC
    flows = {}
    for t in res.steps:
        m = Model(f"exchange_{t}", eq_slack=0.0)
        net, fl, lossy = border_terms(m, network, t, ntc=atc, lossless=not atc)
        for z in network.zones:
            m.add(net[z] == res.balance[(z, t)], f"balance_{z}_{t}")
        terms = []
        for b in network.borders:
            span = 2 * max(abs(series_at(b.ntc_min, t)), abs(series_at(b.ntc_max, t))) if atc \
                else 1e9
            terms.append(m.abs_value(fl[b.id], span + 1.0, f"abs_{b.id}_{t}"))
        m.minimize(quicksum(terms))
        sol = m.solve(config.time_limit)
        if not sol.ok:
            log.warning("exchange fixing failed at step %d (%s); keeping clearing flows",
                        t, sol.status.value)
            flows.update({(b.id, t): res.flow.get((b.id, t), 0.0) for b in network.borders})
            continue
        for b in network.borders:
            v = sol.value(fl[b.id])
            flows[(b.id, t)] = 0.0 if abs(v) < config.tol else v
    return flows
