"""Welfare-maximising acceptance of orders under ATC or flow-based network limits."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from ..core import CouplingKind, Order, OrderBook, series_at
from ..optim import LinExpr, Model, Status, quicksum
from .config import ClearingConfig
from .network import ATC, FLOW_BASED, Network

log = logging.getLogger(__name__)

BINARY_COUPLINGS = (CouplingKind.EXCLUSION, CouplingKind.PARENT_CHILD)


class ClearingError(RuntimeError):
    pass


@dataclass
class ClearingResult:
    status: Status
    orders: dict[str, Order]
    book: OrderBook
    network: Network
    n_steps: int
    quantity: dict[str, float] = field(default_factory=dict)
    accepted: dict[str, int] = field(default_factory=dict)
    balance: dict[tuple[str, int], float] = field(default_factory=dict)
    flow: dict[tuple[str, int], float] = field(default_factory=dict)
    exports: dict[tuple[str, int], float] = field(default_factory=dict)   # lossy borders
    imports: dict[tuple[str, int], float] = field(default_factory=dict)
    loss_direction: dict[tuple[str, int], float] = field(default_factory=dict)
    loss_aux: dict[tuple[str, int], tuple[float, float]] = field(default_factory=dict)
    branch_flow: dict[tuple[str, int], float] = field(default_factory=dict)
    objective: float = float("nan")
    welfare: float = float("nan")
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.TIME_LIMIT)

    @property
    def steps(self) -> range:
        return range(self.n_steps)

    def zone_orders(self, zone: str, t: int) -> list[Order]:
        return [o for o in self.orders.values() if o.zone == zone and o.covers(t)]


def welfare(orders, quantity: dict[str, float], delta_t: float) -> float:
    """Surplus of accepted orders: purchases count positive, sales negative."""
    return sum(o.side * o.steps * delta_t * quantity.get(o.id, 0.0) * o.price for o in orders)


def horizon(book: OrderBook, n_steps: int | None = None) -> int:
    need = max((o.t_end for o in book.orders), default=1)
    return max(need, n_steps or 0)


def binary_orders(book: OrderBook) -> set[str]:
    ids = {o.id for o in book.orders if o.needs_binary}
    for c in book.couplings:
        if c.kind in BINARY_COUPLINGS:
            ids.update(c.members)
    return ids


def loss_bounds(border, t: int) -> tuple[float, float]:
    """Range of the sending-end quantity on a lossy border, implied by its NTC limits."""
    lo, hi = series_at(border.ntc_min, t), series_at(border.ntc_max, t)
    return 2.0 * min(lo, 0.0), 2.0 * max(hi, 0.0)


def add_lossy_border(m: Model, b, t: int, *, ntc: bool = True) -> dict:
    """Sending/receiving quantities of a DC border with losses, linearised with a direction flag."""
    a = b.loss
    lo, hi = loss_bounds(b, t)
    exp = m.add_var(f"exp_{b.id}_{t}", lo, hi)
    imp = m.add_var(f"imp_{b.id}_{t}", -abs(lo) / (1 - a), abs(hi) / (1 - a))
    nu = m.add_var(f"nu_{b.id}_{t}", binary=True)
    xi = m.add_var(f"xi_{b.id}_{t}", lo, hi)
    xi_aux = m.add_var(f"xiaux_{b.id}_{t}", lo, hi)
    m.add(imp == ((1 - a) - 1 / (1 - a)) * xi + exp * (1 / (1 - a)), f"loss_{b.id}_{t}")
    m.add(xi - 0.5 * exp >= 0, f"lossdir_{b.id}_{t}")
    m.add(xi == exp - xi_aux, f"losssplit_{b.id}_{t}")
    m.add(xi >= lo * nu, f"xi_lo_{b.id}_{t}")
    m.add(xi <= hi * nu, f"xi_hi_{b.id}_{t}")
    m.add(xi_aux >= lo * (1 - nu), f"xiaux_lo_{b.id}_{t}")
    m.add(xi_aux <= hi * (1 - nu), f"xiaux_hi_{b.id}_{t}")
    avg = 0.5 * (exp + imp)
    if ntc:
        m.add(avg >= series_at(b.ntc_min, t), f"ntc_lo_{b.id}_{t}")
        m.add(avg <= series_at(b.ntc_max, t), f"ntc_hi_{b.id}_{t}")
    return {"exp": exp, "imp": imp, "nu": nu, "xi": xi, "xi_aux": xi_aux, "avg": avg}


def border_terms(m: Model, network: Network, t: int, *, ntc: bool = True,
                 lossless: bool = False):
    """(per-zone net export expression, per-border flow expression, lossy-border variables)."""
    net = {z: LinExpr() for z in network.zones}
    flows, lossy = {}, {}
    for b in network.borders:
        if b.lossy_dc and b.loss > 0 and not lossless:
            lv = add_lossy_border(m, b, t, ntc=ntc)
            lossy[b.id] = lv
            net[b.upstream] += lv["exp"]
            net[b.downstream] -= lv["imp"]
            flows[b.id] = lv["avg"]
        else:
            lo, hi = (series_at(b.ntc_min, t), series_at(b.ntc_max, t)) if ntc else (-1e9, 1e9)
            f = m.add_var(f"flow_{b.id}_{t}", lo, hi)
            net[b.upstream] += f
            net[b.downstream] -= f
            flows[b.id] = LinExpr.of(f)
    return net, flows, lossy


def structural_problems(book: OrderBook, network: Network, n_steps: int) -> list[str]:
    """Reasons why no acceptance vector could be feasible."""
    out = []
    if network.mode == ATC:
        for b in network.borders:
            for t in range(n_steps):
                lo, hi = series_at(b.ntc_min, t), series_at(b.ntc_max, t)
                if lo > 0 or hi < 0:
                    out.append(f"border {b.id} at step {t} forces a non-zero exchange "
                               f"[{lo:g}, {hi:g}]")
                    break
    else:
        for cb in network.branches:
            for t in range(n_steps):
                cap = series_at(cb.q_max, t) - series_at(cb.frm, t)
                base = series_at(cb.q_ref, t) - sum(
                    cb.ptdf[z] * cb.balance_ref.get(z, 0.0) for z in network.zones)
                if abs(base) > cap:
                    out.append(f"branch {cb.id} at step {t} is overloaded with all zones "
                               f"balanced ({base:g} vs {cap:g})")
                    break
    return out


def clear(book: OrderBook, network: Network, config: ClearingConfig = ClearingConfig(),
          n_steps: int | None = None) -> ClearingResult:
    book.validate()
    for o in book.orders:
        if o.zone not in network.zones:
            raise ClearingError(f"order {o.id} placed in unknown zone {o.zone}")
    n = horizon(book, n_steps)
    dt = config.delta_t
    orders = {o.id: o for o in sorted(book.orders, key=lambda o: o.id)}
    m = Model("clearing", eq_slack=0.0)
    need_delta = binary_orders(book)
    q, delta = {}, {}
    for oid, o in orders.items():
        v = m.add_var(f"q_{oid}", 0.0, o.q_max)
        q[oid] = v
        if oid in need_delta:
            d = m.add_var(f"d_{oid}", binary=True)
            delta[oid] = d
            lo = o.q_min if o.needs_binary else 0.0
            m.add(v >= lo * d, f"qmin_{oid}")
            m.add(v <= o.q_max * d, f"qmax_{oid}")
    add_coupling_rows(m, book, orders, q, delta, dt)

    obj = quicksum(o.side * o.steps * dt * q[oid] * (o.price + o.side * config.volume_bonus)
                   for oid, o in orders.items())
    zone_net = {}
    flows, lossy_vars, bal_vars = {}, {}, {}
    for t in range(n):
        sold = {z: LinExpr() for z in network.zones}
        for oid, o in orders.items():
            if o.covers(t):
                sold[o.zone] += -o.side * q[oid]
        if network.mode == FLOW_BASED:
            for z in network.zones:
                bv = m.add_var(f"bal_{z}_{t}", -1e9, 1e9)
                bal_vars[(z, t)] = bv
                m.add(sold[z] == bv, f"balance_{z}_{t}")
            m.add(quicksum(bal_vars[(z, t)] for z in network.zones) == 0, f"zonesum_{t}")
            for cb in network.branches:
                f = series_at(cb.q_ref, t) + quicksum(
                    cb.ptdf[z] * (bal_vars[(z, t)] - cb.balance_ref.get(z, 0.0))
                    for z in network.zones)
                cap = series_at(cb.q_max, t) - series_at(cb.frm, t)
                m.add(f <= cap, f"cb_{cb.id}_{t}_fwd")
                m.add(f >= -cap, f"cb_{cb.id}_{t}_rev")
            continue
        net, fl, lossy = border_terms(m, network, t)
        for z in network.zones:
            m.add(sold[z] == net[z], f"balance_{z}_{t}")
        for b in network.borders:
            f = fl[b.id]
            flows[(b.id, t)] = f
            lo, hi = series_at(b.ntc_min, t), series_at(b.ntc_max, t)
            span = max(abs(lo), abs(hi), hi - lo) + 1.0
            if config.flow_weight > 0:
                obj -= config.flow_weight * m.abs_value(f, span, f"absflow_{b.id}_{t}")
            if config.to_max_weight > 0:
                obj -= config.to_max_weight * m.abs_value(f - hi, 2 * span, f"tomax_{b.id}_{t}")
            if config.to_min_weight > 0:
                obj -= config.to_min_weight * m.abs_value(f - lo, 2 * span, f"tomin_{b.id}_{t}")
        for bid, lv in lossy.items():
            lossy_vars[(bid, t)] = lv
        zone_net[t] = net
    m.maximize(obj)
    sol = m.solve(config.time_limit, config.mip_gap, config.dump_lp, polish=True)
    res = ClearingResult(sol.status, orders, book, network, n)
    if not sol.ok:
        problems = structural_problems(book, network, n)
        res.message = problems[0] if problems else f"clearing {sol.status.value}"
        log.warning("clearing failed: %s", res.message)
        return res
    for oid, o in orders.items():
        val = sol.value(q[oid])
        if abs(val) < config.tol:
            val = 0.0
        res.quantity[oid] = val
        res.accepted[oid] = int(round(sol.value(delta[oid]))) if oid in delta else int(
            val > config.tol)
    for t in range(n):
        for z in network.zones:
            res.balance[(z, t)] = sum(-o.side * res.quantity[o.id] for o in orders.values()
                                      if o.zone == z and o.covers(t))
        for b in network.borders:
            if (b.id, t) in flows:
                res.flow[(b.id, t)] = sol.value(flows[(b.id, t)])
            if (b.id, t) in lossy_vars:
                lv = lossy_vars[(b.id, t)]
                res.exports[(b.id, t)] = sol.value(lv["exp"])
                res.imports[(b.id, t)] = sol.value(lv["imp"])
                res.loss_direction[(b.id, t)] = sol.value(lv["nu"])
                res.loss_aux[(b.id, t)] = (sol.value(lv["xi"]), sol.value(lv["xi_aux"]))
        for cb in network.branches:
            res.branch_flow[(cb.id, t)] = branch_flow(cb, res.balance, network, t)
    res.objective = sol.objective
    res.welfare = welfare(orders.values(), res.quantity, dt)
    return res


def branch_flow(cb, balance, network: Network, t: int) -> float:
    return series_at(cb.q_ref, t) + sum(
        cb.ptdf[z] * (balance[(z, t)] - cb.balance_ref.get(z, 0.0)) for z in network.zones)


def add_coupling_rows(m: Model, book: OrderBook, orders, q, delta, dt: float) -> None:
    for c in book.couplings:
        members = [orders[i] for i in c.members]
        if c.kind is CouplingKind.EXCLUSION:
            m.add(quicksum(delta[o.id] for o in members) <= 1, f"excl_{c.id}")
        elif c.kind is CouplingKind.PARENT_CHILD:
            for child in c.children:
                m.add(delta[child] <= delta[c.parent], f"pc_{c.id}_{child}")
        elif c.kind is CouplingKind.COMPLEMENT:
            m.add(quicksum(q[o.id] * (1.0 / o.q_max) for o in members if o.q_max > 0) <= 1,
                  f"comp_{c.id}")
            if c.energy_cap is not None:
                m.add(quicksum(q[o.id] * (o.steps * dt) for o in members) <= c.energy_cap,
                      f"comp_energy_{c.id}")
        elif c.kind is CouplingKind.IDENTICAL_VOLUME:
            first = members[0]
            for o in members[1:]:
                m.add(q[o.id] == q[first.id], f"iv_{c.id}_{o.id}")
        elif c.kind is CouplingKind.IDENTICAL_RATIO:
            ratios = [ratio_expr(o, q) for o in members]
            for o, r in zip(members[1:], ratios[1:]):
                m.add(r == ratios[0], f"ir_{c.id}_{o.id}")


def ratio_expr(o: Order, q) -> LinExpr:
    span = o.q_max - o.q_min
    if span > 0:
        return (q[o.id] - o.q_min) * (1.0 / span)
    return q[o.id] * (1.0 / o.q_max)
