"""Execution of a scenario's module chain, day by day."""

from __future__ import annotations

import dataclasses
import hashlib
import logging
import math
import time
from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path

import numpy as np

from ..clearing import SessionResult, run_session
from ..clearing.clear import branch_flow
from ..core import (ADDITIONAL_HOURS, LoadUnit, MarketBorder, OrderBook, RenewableUnit,
                    StorageUnit, TimeGrid, series_at)
from ..dispatch import solve_portfolio
from ..forecast import (ForecastMatrix, extend_periodic, forecast_values,
                        intraday_price_forecast, learn, read_archive, simulate)
from ..ordergen import da_orders, id_orders
from .ledger import SessionLedger, SessionRecord, apply_results
from .outputs import Recorder
from .scenario import DAO, FORECAST, IDO, MC, PO, Scenario, ScenarioError

log = logging.getLogger(__name__)


class ModuleError(RuntimeError):
    """Failure of one module invocation, located by module, market, day and step."""

    def __init__(self, module: str, market: str, day: int, t_ex: int, timestamp: str,
                 message: str):
        super().__init__(f"{module} {market} day {day} t_ex {t_ex} ({timestamp}): {message}")
        self.report = {"module": module, "market": market, "day": day, "t_ex": t_ex,
                       "timestamp": timestamp, "message": message}


@dataclass
class RunResult:
    path: Path | None
    ledger: SessionLedger
    errors: list[dict] = field(default_factory=list)
    manifest: dict = field(default_factory=dict)
    sessions: dict[tuple[str, int], SessionResult] = field(default_factory=dict)
    plans: dict[tuple[str, int], dict] = field(default_factory=dict)   # (market, day) -> plans
    books: dict[tuple[str, int], OrderBook] = field(default_factory=dict)
    units: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.errors


def derive_seed(seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def build_forecasts(sc: Scenario, seed: int) -> tuple[dict[str, ForecastMatrix], dict]:
    """Forecast matrices over the whole run and the seed used for each."""
    launches = sorted({d * sc.steps + s.t_ex for d in range(sc.days) for s in sc.chain
                       if s.module in (FORECAST, DAO, IDO)})
    out, seeds = {}, {}
    for name in sorted(sc.forecasts):
        spec = sc.forecasts[name]
        if spec.columns is not None:
            out[name] = ForecastMatrix(spec.realization.copy(), dict(spec.columns))
            continue
        if spec.archive is None:
            out[name] = ForecastMatrix.perfect(spec.realization)
            continue
        origin = spec.history_start or sc.start
        archive = read_archive(spec.archive, spec.history, origin, sc.delta_t,
                               start_day=origin.timetuple().tm_yday)
        model = learn(archive)
        seeds[name] = derive_seed(seed, name)
        out[name] = simulate(model, spec.realization, seeds[name], launches=launches,
                             horizon=spec.horizon,
                             start_day=sc.start.timetuple().tm_yday)
    return out, seeds


class ChainRunner:
    """Runs the chain of every simulated day, keeping unit state between days."""

    def __init__(self, sc: Scenario, out: Path | None = None, *, seed: int | None = None,
                 time_limit: float | None = None, network_mode: str | None = None,
                 dump_lp: bool = False):
        self.sc = sc
        self.out = out
        self.seed = sc.seed if seed is None else int(seed)
        self.network = sc.network if network_mode is None else sc.network.with_mode(network_mode)
        self.clearing = sc.clearing
        self.dispatch = sc.dispatch
        if time_limit is not None:
            self.clearing = dataclasses.replace(self.clearing, time_limit=time_limit)
            self.dispatch = dataclasses.replace(self.dispatch, time_limit=time_limit)
        self.dump_lp = dump_lp and out is not None
        self.ledger = SessionLedger()
        self.rec = Recorder()
        self.state = {u.id: u for u in sc.units}
        self.result = RunResult(out, self.ledger)
        self.matrices: dict[str, ForecastMatrix] = {}

    # --- helpers -------------------------------------------------------------------

    def _lp(self, name: str) -> str | None:
        if not self.dump_lp:
            return None
        path = self.out / "lp"
        path.mkdir(parents=True, exist_ok=True)
        return str(path / f"{name}.lp")

    def _timestamp(self, day: int, t: int) -> str:
        hours = self.sc.delta_t * (day * self.sc.steps + t)
        return (self.sc.start + timedelta(hours=hours)).isoformat()

    def _grid(self, day: int, n_addl: int = 0) -> TimeGrid:
        start = self.sc.start + timedelta(hours=self.sc.delta_t * day * self.sc.steps)
        return TimeGrid(self.sc.delta_t, self.sc.steps, n_addl, 1, 0, start)

    def _views(self, day: int) -> dict:
        """Units of ``day`` with forecasts counted from the day's first step."""
        offset = day * self.sc.steps
        out = {}
        for uid, u in self.state.items():
            ref = getattr(u, "forecast", None)
            if isinstance(ref, str):
                u = dataclasses.replace(u, forecast=self.matrices[ref].window(offset))
            out[uid] = u
        return out

    def _price(self, zone: str, day: int, n: int) -> np.ndarray:
        spec = self.sc.prices.get(zone)
        if spec is None:
            raise ScenarioError(f"no price forecast for zone {zone}")
        offset = day * self.sc.steps
        return extend_periodic(np.roll(spec.day_ahead, -offset), n)

    # --- modules -------------------------------------------------------------------

    def forecast(self, day: int, t_ex: int, views: dict) -> None:
        offset = day * self.sc.steps
        for name in sorted(self.matrices):
            m = self.matrices[name].window(offset)
            col = m.at(t_ex)
            for t in range(self.sc.steps):
                self.rec.forecasts.append([day, t_ex, name, t, self._timestamp(day, t),
                                           float(col[t]), float(m.realization[t])])

    def dao(self, day: int, market: str, t_ex: int, views: dict) -> OrderBook:
        book = OrderBook(market)
        for u in views.values():
            n_addl = 0
            if isinstance(u, StorageUnit):
                n_addl = math.ceil(ADDITIONAL_HOURS[u.addl_key] / self.sc.delta_t)
            grid = self._grid(day, n_addl)
            needs_price = isinstance(u, StorageUnit) or getattr(u, "strategy", None) == \
                "intermediate"
            price = self._price(u.zone, day, grid.n_opt) if needs_price else None
            cfg = dataclasses.replace(self.dispatch, dump_lp=self._lp(f"dao_{u.id}_d{day}"))
            book.extend(da_orders(u, grid, price=price, t_ex=t_ex,
                                  zone=self.network.zones[u.zone], cfg=self.sc.orders,
                                  dispatch=cfg, market=market))
        book.validate()
        return book

    def residual_network(self, day: int):
        """Network left for a later session after the day's earlier exchanges."""
        net = self.network
        done = [self.result.sessions[(s.market, day)] for s in self.ledger.day(day)
                if (s.market, day) in self.result.sessions]
        if not done:
            return net
        n = self.sc.steps
        borders = []
        for b in net.borders:
            f = [sum(r.flows.get((b.id, t), 0.0) for r in done) for t in range(n)]
            lo = tuple(min(series_at(b.ntc_min, t) - f[t], 0.0) for t in range(n))
            hi = tuple(max(series_at(b.ntc_max, t) - f[t], 0.0) for t in range(n))
            borders.append(MarketBorder(b.id, b.upstream, b.downstream, lo, hi, b.lossy_dc,
                                        b.loss))
        branches = []
        for cb in net.branches:
            total = {(z, t): sum(r.clearing.balance.get((z, t), 0.0) for r in done)
                     for z in net.zones for t in range(n)}
            ref = tuple(branch_flow(cb, total, net, t) for t in range(n))
            branches.append(dataclasses.replace(cb, q_ref=ref, balance_ref={}))
        return dataclasses.replace(net, borders=borders, branches=branches)

    def mc(self, day: int, market: str, t_ex: int, book: OrderBook) -> None:
        first = 0 if market == "DA" else t_ex + self.sc.gate
        network = self.network if market == "DA" else self.residual_network(day)
        cfg = dataclasses.replace(self.clearing, dump_lp=self._lp(f"mc_{market}_d{day}"))
        res = run_session(book, network, cfg, n_steps=self.sc.steps)
        if not res.clearing.ok:
            raise RuntimeError(f"clearing {res.clearing.status.value}: {res.clearing.message}")
        self.result.sessions[(market, day)] = res
        traded = {(o.zone, t) for o in book.orders
                  if res.clearing.quantity.get(o.id, 0.0) > self.sc.orders.tol
                  for t in range(o.t_start, o.t_end)}
        prices = {}
        for z in network.zones:
            prices[z] = [res.prices.get((z, t), math.nan)
                         if t >= first and (z, t) in traded else math.nan
                         for t in range(self.sc.steps)]
        cl = res.clearing
        self.ledger.record(SessionRecord(
            market, day, t_ex, list(book.orders), list(book.couplings), dict(cl.quantity),
            dict(cl.accepted), prices, cl.welfare,
            res.pricing.problem if res.pricing else "none"))
        self.rec.session(self, day, market, book, res, prices, network)
        if res.pricing is None or not res.pricing.ok:
            raise RuntimeError("pricing failed; quantities kept, prices missing")

    def reference_price(self, day: int, zone: str) -> np.ndarray:
        """Latest cleared price per step, falling back to earlier sessions and the forecast."""
        out = self._price(zone, day, self.sc.steps) if zone in self.sc.prices else \
            np.zeros(self.sc.steps)
        for p in self.ledger.known_prices(day, zone):
            out = np.where(np.isnan(p), out, p)
        return out

    def po(self, day: int, market: str, t_ex: int, views: dict, prices: dict | None = None,
           label: str = "po") -> dict:
        history = self.ledger.history(day)
        grid = self._grid(day)
        plans, problems = {}, []
        for p in self.sc.portfolios:
            units = [views[u] for u in p.unit_ids]
            targets = {u.id: [history.position(u.id, t) for t in grid.sim] for u in units}
            price = (prices or {}).get(p.zone)
            if price is None:
                price = self.reference_price(day, p.zone)
            cfg = dataclasses.replace(self.dispatch,
                                      dump_lp=self._lp(f"{label}_{p.id}_{market}_d{day}"))
            res = solve_portfolio(p, units, grid, targets, price, t_ex, cfg)
            if not res.ok:
                problems.append(f"portfolio {p.id}: {res.status.value} "
                                f"(units {', '.join(res.infeasible_units) or 'unknown'})")
                continue
            plans.update(res.plans)
            if label == "po":
                self.rec.dispatch(self, day, market, p.id, res)
        if problems:
            if label == "po":
                self.result.plans[(market, day)] = plans
            raise RuntimeError("; ".join(problems))
        return plans

    def id_prices(self, day: int, t_ex: int, views: dict) -> dict[str, np.ndarray]:
        """Expected intraday price per zone from the prices cleared so far today."""
        n = self.sc.steps
        sessions = self.ledger.day(day)
        t_prev = sessions[-1].t_ex if sessions else 0
        out = {}
        for z in self.network.zones:
            known = self.ledger.known_prices(day, z)
            if not known:
                out[z] = self.reference_price(day, z)
                continue
            base = known[0]
            filled = [base] + [np.where(np.isnan(k), base, k) for k in known[1:]]
            filled = [np.where(np.isnan(k), self.reference_price(day, z), k) for k in filled]
            agg = {kind: self._aggregate(views, z, kind, t_prev, t_ex, n)
                   for kind in ("load", "wind", "pv")}
            spec = self.sc.prices.get(z)
            if spec is not None and spec.has_sensitivity:
                off = day * n
                sl = slice(off, off + n)
                out[z] = intraday_price_forecast(filled, spec.high[sl], spec.low[sl],
                                                 spec.demand_high[sl], spec.demand_low[sl],
                                                 agg["load"], agg["wind"], agg["pv"], t_prev,
                                                 t_ex, n)
            else:
                out[z] = np.mean(filled, axis=0)
        return out

    @staticmethod
    def _aggregate(views, zone, kind, t_prev, t_now, n):
        units = [u for u in views.values() if u.zone == zone and (
            (kind == "load" and isinstance(u, LoadUnit))
            or (isinstance(u, RenewableUnit) and u.kind == kind))]
        if not units:
            return None
        cols = {t: sum(forecast_values(u.forecast, t, n, u.id) for u in units)
                for t in (t_prev, t_now)}
        return ForecastMatrix(np.zeros(n), cols)

    def ido(self, day: int, market: str, t_ex: int, views: dict) -> OrderBook:
        price = self.id_prices(day, t_ex, views)
        plans = {}
        try:
            plans = self.po(day, market, t_ex, views, price, label="ghost")
        except RuntimeError as exc:
            log.warning("intraday %s day %d: re-optimisation incomplete: %s", market, day, exc)
        history = self.ledger.history(day)
        grid = self._grid(day)
        imbalance = {p.id: p.imbalance for p in self.sc.portfolios}
        owner = {u: p.id for p in self.sc.portfolios for u in p.unit_ids}
        book = OrderBook(market)
        for u in views.values():
            lam = price[u.zone]
            imb = np.array([imbalance[owner[u.id]].large(x) for x in lam])
            book.extend(id_orders(u, grid, history, market, t_ex=t_ex, plan=plans.get(u.id),
                                  price=lam, imbalance_price=imb,
                                  zone=self.network.zones[u.zone], cfg=self.sc.orders))
        book = deliverable(book, t_ex + self.sc.gate)
        book.validate()
        return book

    # --- driver --------------------------------------------------------------------

    def run_day(self, day: int) -> None:
        views = self._views(day)
        book, skip, last_plans = None, None, None
        for step in self.sc.chain:
            if skip is not None and step.market == skip and step.module in (MC, PO):
                continue
            try:
                if step.module == FORECAST:
                    self.forecast(day, step.t_ex, views)
                elif step.module == DAO:
                    skip = None
                    book = self.dao(day, step.market, step.t_ex, views)
                    self.result.books[(step.market, day)] = book
                elif step.module == IDO:
                    skip = None
                    book = self.ido(day, step.market, step.t_ex, views)
                    self.result.books[(step.market, day)] = book
                elif step.module == MC:
                    self.mc(day, step.market, step.t_ex, book)
                elif step.module == PO:
                    last_plans = self.po(day, step.market, step.t_ex, views)
                    self.result.plans[(step.market, day)] = last_plans
            except (RuntimeError, ValueError, KeyError) as exc:
                err = ModuleError(step.module, step.market, day, step.t_ex,
                                  self._timestamp(day, step.t_ex), str(exc))
                log.error("%s", err)
                self.result.errors.append(err.report)
                if step.module in (DAO, IDO, MC):
                    skip = step.market
                if step.module == PO:
                    last_plans = self.result.plans.get((step.market, day))
        if last_plans:
            self.state = apply_results(self.ledger, self.state, last_plans,
                                       day * self.sc.steps, self.sc.steps, self.sc.delta_t)

    def run(self) -> RunResult:
        t0 = time.perf_counter()
        self.matrices, seeds = build_forecasts(self.sc, self.seed)
        for day in range(self.sc.days):
            self.run_day(day)
        self.result.units = dict(self.state)
        self.result.manifest = {
            "scenario": self.sc.name, "config_sha256": self.sc.digest, "seed": self.seed,
            "forecast_seeds": seeds, "days": self.sc.days, "steps": self.sc.steps,
            "delta_t": self.sc.delta_t, "network": self.network.mode,
            "chain": [dataclasses.asdict(s) for s in self.sc.chain],
            "errors": self.result.errors,
            "elapsed_s": round(time.perf_counter() - t0, 3),
        }
        if self.out is not None:
            self.rec.write(self.out, self.ledger, self.result.manifest)
        return self.result


def deliverable(book: OrderBook, first: int) -> OrderBook:
    """Orders delivering from step ``first`` on; couplings lose the dropped members."""
    keep = [o for o in book.orders if o.t_start >= first]
    ids = {o.id for o in keep}
    couplings = []
    for c in book.couplings:
        members = tuple(m for m in c.members if m in ids)
        if len(members) < 2 or (c.parent and c.parent not in ids):
            continue
        couplings.append(dataclasses.replace(c, members=members))
    return OrderBook(book.market, keep, couplings, dict(book.meta))


def run_chain(sc: Scenario, out: str | Path | None = None, **kw) -> RunResult:
    """Run every day of ``sc``; results go to ``out`` when given."""
    path = Path(out) if out is not None else None
    if path is not None:
        path.mkdir(parents=True, exist_ok=True)
    return ChainRunner(sc, path, **kw).run()
