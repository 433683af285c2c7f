"""Zonal prices from fixed acceptances: price groups, obvious prices and the two pricing LPs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import networkx as nx

from ..core import CouplingKind, Divisibility, Order, series_at
from ..optim import Model, Status, quicksum
from .clear import ClearingResult
from .config import ClearingConfig
from .network import ATC

log = logging.getLogger(__name__)

VOLUME_COUPLINGS = (CouplingKind.IDENTICAL_VOLUME, CouplingKind.IDENTICAL_RATIO,
                    CouplingKind.COMPLEMENT)
FIRST, SECOND = "first", "second"


@dataclass
class PricingResult:
    status: Status
    problem: str = ""
    groups: dict[int, list[frozenset[str]]] = field(default_factory=dict)
    group_prices: dict[tuple[int, int], float] = field(default_factory=dict)  # (t, group idx)
    prices: dict[tuple[str, int], float] = field(default_factory=dict)       # (zone, t)
    bounds: dict[tuple[int, int], tuple[float, float]] = field(default_factory=dict)
    obvious: dict[tuple[int, int], float] = field(default_factory=dict)
    make_whole: dict[str, float] = field(default_factory=dict)
    paradoxical: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL

    def group_of(self, zone: str, t: int) -> int:
        for i, g in enumerate(self.groups[t]):
            if zone in g:
                return i
        raise KeyError(f"zone {zone} is not in any price group at step {t}")

    def average_price(self, o: Order) -> float:
        return sum(self.prices[(o.zone, t)] for t in range(o.t_start, o.t_end)) / o.steps


# ---------------------------------------------------------------------------
# groups

def find_price_groups(res: ClearingResult, flows: dict, t: int,
                      tol: float = 1e-6) -> list[frozenset[str]]:
    """Zones joined by borders whose flow is strictly inside both NTC limits."""
    network = res.network
    g = nx.Graph()
    g.add_nodes_from(sorted(network.zones))
    if network.mode == ATC:
        for b in network.borders:
            f = flows.get((b.id, t), 0.0)
            if series_at(b.ntc_min, t) + tol < f < series_at(b.ntc_max, t) - tol:
                g.add_edge(b.upstream, b.downstream)
    comps = [frozenset(c) for c in nx.connected_components(g)]
    return sorted(comps, key=lambda c: min(c))


def neighbour_pairs(res: ClearingResult, groups: list[frozenset[str]]) -> list[tuple[int, int]]:
    index = {z: i for i, grp in enumerate(groups) for z in grp}
    pairs = set()
    for b in res.network.borders:
        i, j = index[b.upstream], index[b.downstream]
        if i != j:
            pairs.add((min(i, j), max(i, j)))
    return sorted(pairs)


# ---------------------------------------------------------------------------
# order classification

def coupling_kinds(res: ClearingResult) -> dict[str, set[CouplingKind]]:
    out: dict[str, set[CouplingKind]] = {oid: set() for oid in res.orders}
    for c in res.book.couplings:
        for m in c.members:
            out[m].add(c.kind)
    return out


def marginal_tol(o: Order, tol: float) -> float:
    return tol * max(o.q_max, 1.0)


def is_accepted(res: ClearingResult, o: Order, tol: float) -> bool:
    return res.quantity[o.id] > marginal_tol(o, tol)


def is_rejected(res: ClearingResult, o: Order, tol: float) -> bool:
    return res.quantity[o.id] < o.q_max - marginal_tol(o, tol)


def bound_eligible(res: ClearingResult, o: Order, kinds: set[CouplingKind], tol: float) -> bool:
    """Orders whose acceptance state says something about the market price."""
    if o.steps > 1 or o.divisibility is Divisibility.INDIVISIBLE:
        return False
    if kinds & (set(VOLUME_COUPLINGS) | {CouplingKind.PARENT_CHILD}):
        return False
    if o.needs_binary or CouplingKind.EXCLUSION in kinds:
        if not res.accepted[o.id]:
            return False
        lo = o.q_min if o.needs_binary else 0.0
        if res.quantity[o.id] <= lo + marginal_tol(o, tol):
            return False
    return True


def price_bounds(res: ClearingResult, groups: list[frozenset[str]], t: int,
                 tol: float = 1e-6) -> list[tuple[float, float]]:
    """Interval implied by zone limits and by accepted/rejected eligible orders."""
    kinds = coupling_kinds(res)
    out = []
    for grp in groups:
        lo = max(res.network.zones[z].p_min for z in grp)
        hi = min(res.network.zones[z].p_max for z in grp)
        for o in res.orders.values():
            if o.zone not in grp or not o.covers(t) or not bound_eligible(res, o, kinds[o.id], tol):
                continue
            if is_accepted(res, o, tol):
                if o.is_sale:
                    lo = max(lo, o.price)
                else:
                    hi = min(hi, o.price)
            if is_rejected(res, o, tol):
                if o.is_sale:
                    hi = min(hi, o.price)
                else:
                    lo = max(lo, o.price)
        out.append((lo, hi))
    return out


def zone_limits(res: ClearingResult, grp: frozenset[str]) -> tuple[float, float]:
    return (max(res.network.zones[z].p_min for z in grp),
            min(res.network.zones[z].p_max for z in grp))


# ---------------------------------------------------------------------------
# obvious price

def obvious_price(res: ClearingResult, group: frozenset[str], t: int,
                  tol: float = 1e-6) -> float | None:
    kinds = coupling_kinds(res)
    pc = {c.id: c for c in res.book.couplings if c.kind is CouplingKind.PARENT_CHILD}
    found = []
    for oid in sorted(res.orders):
        o = res.orders[oid]
        if o.zone not in group or not o.covers(t) or o.steps != 1:
            continue
        if kinds[oid] & set(VOLUME_COUPLINGS):
            continue
        q, eps = res.quantity[oid], marginal_tol(o, tol)
        lo = o.q_min if o.needs_binary else 0.0
        if not (lo + eps < q < o.q_max - eps):
            continue
        price = o.price
        for c in pc.values():
            if oid in c.children and o.price < res.orders[c.parent].price:
                members = [res.orders[m] for m in c.members if res.quantity[m] > 0]
                vol = sum(res.quantity[m.id] * m.steps for m in members)
                price = sum(m.price * res.quantity[m.id] * m.steps for m in members) / vol
                break
        found.append((oid, price))
    if not found:
        return None
    if len({round(p, 9) for _, p in found}) > 1:
        log.info("conflicting obvious prices at step %d in %s: %s; using order %s",
                 t, sorted(group), found, found[0][0])
    return found[0][1]


# ---------------------------------------------------------------------------
# pricing LPs

def itm_orders(res: ClearingResult, tol: float) -> list[Order]:
    """Accepted orders that the price bounds do not cover."""
    kinds = coupling_kinds(res)
    return [o for oid, o in sorted(res.orders.items())
            if is_accepted(res, o, tol) and not bound_eligible(res, o, kinds[oid], tol)]


def make_whole(res: ClearingResult, pr: PricingResult, delta_t: float, tol: float) -> None:
    pr.make_whole.clear()
    pr.paradoxical.clear()
    for o in itm_orders(res, tol):
        avg = pr.average_price(o)
        gap = (o.price - avg) if o.is_sale else (avg - o.price)
        if gap > 1e-6:
            pr.paradoxical.append(o.id)
            pr.make_whole[o.id] = gap * res.quantity[o.id] * o.steps * delta_t


def _solve_prices(res: ClearingResult, groups, bounds, obvious, config: ClearingConfig,
                  second: bool) -> PricingResult:
    m = Model("pricing", eq_slack=0.0)
    M = config.paradox_penalty
    pvar, obj_terms = {}, []
    for t in res.steps:
        for i, grp in enumerate(groups[t]):
            zlo, zhi = zone_limits(res, grp)
            lo, hi = bounds[(t, i)]
            p = m.add_var(f"p_{t}_{i}", zlo, zhi) if second else m.add_var(
                f"p_{t}_{i}", lo, hi)
            pvar[(t, i)] = p
            if (t, i) in obvious:
                m.add(p == min(max(obvious[(t, i)], zlo), zhi), f"obvious_{t}_{i}")
            if second:
                span = zhi - zlo
                if lo > zlo:
                    s = m.add_var(f"slo_{t}_{i}", 0.0, span)
                    m.add(p + s >= lo, f"soft_lo_{t}_{i}")
                    obj_terms.append(M * s)
                if hi < zhi:
                    s = m.add_var(f"shi_{t}_{i}", 0.0, span)
                    m.add(p - s <= hi, f"soft_hi_{t}_{i}")
                    obj_terms.append(M * s)
            obj_terms.append(config.alpha * p)
            if config.beta > 0:
                obj_terms.append(config.beta * m.abs_value(p, max(abs(zlo), abs(zhi)),
                                                           f"absp_{t}_{i}"))
        for i, j in neighbour_pairs(res, groups[t]):
            span = 2 * max(abs(res.network.zones[z].p_max) + abs(res.network.zones[z].p_min)
                           for z in res.network.zones)
            obj_terms.append(m.abs_value(pvar[(t, j)] - pvar[(t, i)], span, f"dp_{t}_{i}_{j}"))

    def avg(o: Order):
        return quicksum(pvar[(t, group_index(groups[t], o.zone))]
                        for t in range(o.t_start, o.t_end)) * (1.0 / o.steps)

    for o in itm_orders(res, config.tol):
        gap = (o.price - avg(o)) if o.is_sale else (avg(o) - o.price)
        if second:
            h = m.add_var(f"hinge_{o.id}", 0.0)
            m.add(h >= gap, f"hinge_{o.id}")
            obj_terms.append(M * h)
        elif config.in_the_money:
            m.add(gap <= 0, f"itm_{o.id}")
    m.minimize(quicksum(obj_terms))
    sol = m.solve(config.time_limit)
    pr = PricingResult(sol.status, SECOND if second else FIRST, groups=groups,
                       bounds=dict(bounds), obvious=dict(obvious))
    if not sol.ok:
        return pr
    for (t, i), p in pvar.items():
        val = sol.value(p)
        pr.group_prices[(t, i)] = val
        for z in groups[t][i]:
            pr.prices[(z, t)] = val
    make_whole(res, pr, config.delta_t, config.tol)
    return pr


def group_index(groups: list[frozenset[str]], zone: str) -> int:
    return next(i for i, g in enumerate(groups) if zone in g)


def pricing_inputs(res: ClearingResult, flows: dict, tol: float):
    groups, bounds, obvious = {}, {}, {}
    for t in res.steps:
        groups[t] = find_price_groups(res, flows, t, tol)
        for i, (b, grp) in enumerate(zip(price_bounds(res, groups[t], t, tol), groups[t])):
            bounds[(t, i)] = b
            op = obvious_price(res, grp, t, tol)
            if op is not None:
                obvious[(t, i)] = op
    return groups, bounds, obvious


def price_first(res: ClearingResult, flows: dict,
                config: ClearingConfig = ClearingConfig()) -> PricingResult:
    groups, bounds, obvious = pricing_inputs(res, flows, config.tol)
    if any(lo > hi + config.tol for lo, hi in bounds.values()):
        return PricingResult(Status.INFEASIBLE, FIRST, groups=groups, bounds=bounds,
                             obvious=obvious)
    bounds = {k: (lo, max(lo, hi)) for k, (lo, hi) in bounds.items()}
    return _solve_prices(res, groups, bounds, obvious, config, second=False)


def price_second(res: ClearingResult, flows: dict,
                 config: ClearingConfig = ClearingConfig()) -> PricingResult:
    groups, bounds, obvious = pricing_inputs(res, flows, config.tol)
    return _solve_prices(res, groups, bounds, obvious, config, second=True)


def compute_prices(res: ClearingResult, flows: dict,
                   config: ClearingConfig = ClearingConfig()) -> PricingResult:
    """First pricing, falling back to the relaxed problem when it is infeasible."""
    pr = price_first(res, flows, config)
    if pr.ok:
        return pr
    log.info("first pricing %s; relaxing in-the-money conditions", pr.status.value)
    return price_second(res, flows, config)
