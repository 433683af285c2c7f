"""Raise partially accepted at-the-money orders as far as the network allows."""

from __future__ import annotations

import logging
from dataclasses import replace

from ..core import series_at
from ..optim import LinExpr, Model, quicksum
from .clear import ClearingResult, border_terms, branch_flow
from .config import ClearingConfig
from .network import ATC, FLOW_BASED
from .pricing import VOLUME_COUPLINGS, PricingResult, coupling_kinds, group_index, marginal_tol

log = logging.getLogger(__name__)


def marginal_orders(res: ClearingResult, pr: PricingResult, tol: float) -> list[str]:
    """Single-step orders priced at their group price with room left to grow."""
    kinds = coupling_kinds(res)
    out = []
    for oid, o in sorted(res.orders.items()):
        if o.steps != 1 or kinds[oid] & set(VOLUME_COUPLINGS):
            continue
        if o.needs_binary and not res.accepted[oid]:
            continue
        if res.quantity[oid] >= o.q_max - marginal_tol(o, tol):
            continue
        if abs(pr.prices[(o.zone, o.t_start)] - o.price) <= 1e-6 * max(1.0, abs(o.price)):
            out.append(oid)
    return out


def fix_marginal(res: ClearingResult, pr: PricingResult, flows: dict,
                 config: ClearingConfig = ClearingConfig()) -> tuple[ClearingResult, dict]:
    """Return an updated clearing result and border flows.

    Each price group keeps its net position, so exchanges between groups and
    the welfare are unchanged while the accepted volume grows.
    """
    cand = marginal_orders(res, pr, config.tol)
    if not cand:
        return res, dict(flows)
    network = res.network
    m = Model("marginal", eq_slack=0.0)
    raise_ = {oid: m.add_var(f"dq_{oid}", 0.0, res.orders[oid].q_max - res.quantity[oid])
              for oid in cand}
    flow_expr, branch_rows = {}, []
    for t in res.steps:
        extra = {z: LinExpr() for z in network.zones}
        for oid in cand:
            o = res.orders[oid]
            if o.covers(t):
                extra[o.zone] += -o.side * raise_[oid]
        groups = pr.groups[t]
        for i, grp in enumerate(groups):
            m.add(quicksum(extra[z] for z in grp) == 0, f"group_{t}_{i}")
        if network.mode == FLOW_BASED:
            for cb in network.branches:
                f = branch_flow(cb, res.balance, network, t) + quicksum(
                    cb.ptdf[z] * extra[z] for z in network.zones)
                cap = series_at(cb.q_max, t) - series_at(cb.frm, t)
                m.add(f <= cap, f"cb_{cb.id}_{t}_fwd")
                m.add(f >= -cap, f"cb_{cb.id}_{t}_rev")
        if network.borders:
            net, fl, _ = border_terms(m, network, t, ntc=network.mode == ATC,
                                      lossless=network.mode != ATC)
            for z in network.zones:
                m.add(net[z] == res.balance[(z, t)] + extra[z], f"balance_{z}_{t}")
            for b in network.borders:
                flow_expr[(b.id, t)] = fl[b.id]
                if group_index(groups, b.upstream) != group_index(groups, b.downstream):
                    m.add(fl[b.id] == flows.get((b.id, t), 0.0), f"hold_{b.id}_{t}")
    m.maximize(quicksum(raise_.values()))
    sol = m.solve(config.time_limit)
    if not sol.ok:
        log.warning("marginal fixing %s; acceptances kept", sol.status.value)
        return res, dict(flows)
    quantity = dict(res.quantity)
    for oid, v in raise_.items():
        quantity[oid] += max(sol.value(v), 0.0)
    out = replace(res, quantity=quantity, accepted=dict(res.accepted), balance={},
                  branch_flow={})
    for oid in cand:
        if quantity[oid] > config.tol:
            out.accepted[oid] = 1
    for t in res.steps:
        for z in network.zones:
            out.balance[(z, t)] = sum(-o.side * quantity[o.id] for o in res.orders.values()
                                      if o.zone == z and o.covers(t))
        for cb in network.branches:
            out.branch_flow[(cb.id, t)] = branch_flow(cb, out.balance, network, t)
    new_flows = dict(flows)
    for key, f in flow_expr.items():
        new_flows[key] = sol.value(f)
    gain = sum(sol.value(v) for v in raise_.values())
    log.debug("marginal fixing raised %d orders by %.6g MW", len(cand), gain)
    return out, new_flows
