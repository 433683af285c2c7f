"""Scenario files: JSON description of geography, units, forecasts and the module chain."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

from ..clearing import ATC, FLOW_BASED, ClearingConfig, Network
from ..core import (CriticalBranch, FlexibleLoad, HydroUnit, ImbalancePricing, LoadUnit,
                    MarketBorder, NonDispatchableUnit, Portfolio, ProcuredReserves,
                    RenewableUnit, StorageUnit, Strategy, ThermalUnit, Zone)
from ..dispatch import DispatchConfig
from ..forecast import read_series
from ..ordergen import OrderConfig

FORECAST, DAO, MC, PO, IDO = "forecast", "dao", "mc", "po", "ido"
MODULES = (FORECAST, DAO, MC, PO, IDO)

UNIT_TYPES = {
    "thermal": ThermalUnit,
    "storage": StorageUnit,
    "hydro": HydroUnit,
    "wind": RenewableUnit,
    "pv": RenewableUnit,
    "load": LoadUnit,
    "nondispatchable": NonDispatchableUnit,
    "flexload": FlexibleLoad,
}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Step:
    module: str
    t_ex: int = 0
    market: str = ""


@dataclass
class ForecastSpec:
    """A realization plus, optionally, an archive to learn forecast errors from."""

    name: str
    realization: np.ndarray
    archive: Path | None = None
    history: np.ndarray | None = None
    horizon: int | None = None
    history_start: datetime | None = None    # origin of archive and history timestamps
    columns: dict[int, np.ndarray] | None = None   # explicit forecasts by execution step


@dataclass
class PriceSpec:
    """Per-zone price expectations: day-ahead forecast and two demand scenarios."""

    day_ahead: np.ndarray
    high: np.ndarray | None = None
    low: np.ndarray | None = None
    demand_high: np.ndarray | None = None
    demand_low: np.ndarray | None = None

    @property
    def has_sensitivity(self) -> bool:
        return all(v is not None for v in (self.high, self.low, self.demand_high,
                                           self.demand_low))


@dataclass
class Scenario:
    name: str
    start: datetime
    delta_t: float
    steps: int
    network: Network
    units: list
    portfolios: list[Portfolio]
    chain: list[Step]
    days: int = 1
    seed: int = 0
    forecasts: dict[str, ForecastSpec] = field(default_factory=dict)
    prices: dict[str, PriceSpec] = field(default_factory=dict)
    clearing: ClearingConfig = field(default_factory=ClearingConfig)
    dispatch: DispatchConfig = field(default_factory=DispatchConfig)
    orders: OrderConfig = field(default_factory=OrderConfig)
    gate: int = 1                      # steps between intraday execution and first delivery
    output: str = "runs"
    digest: str = ""

    @property
    def total_steps(self) -> int:
        return self.steps * self.days

    def markets(self) -> list[str]:
        return [s.market for s in self.chain if s.module in (DAO, IDO)]

    def portfolio_units(self, pid: str) -> list:
        p = next(p for p in self.portfolios if p.id == pid)
        by_id = {u.id: u for u in self.units}
        return [by_id[u] for u in p.unit_ids]


# --- parsing ---------------------------------------------------------------------------

def _series(raw, base: Path, n: int | None, start: datetime, delta_t: float) -> np.ndarray:
    """List of numbers, scalar, or ``{"file": csv}`` with (timestamp or step, value) rows.

    Series shorter than ``n`` repeat cyclically.
    """
    if isinstance(raw, dict):
        path = base / raw["file"]
        if not path.exists():
            raise ScenarioError(f"series file {path} does not exist")
        try:
            v = read_series(path, start, delta_t) * float(raw.get("scale", 1.0))
        except ValueError as exc:
            raise ScenarioError(f"{path}: {exc}") from None
        if np.isnan(v).any() or v.size == 0:
            raise ScenarioError(f"{path}: gaps in the series")
    else:
        v = np.atleast_1d(np.asarray(raw, dtype=float))
    if n is not None and v.size < n:
        reps = -(-n // v.size)
        v = np.tile(v, reps)
    return v[:n] if n is not None else v


def _plain(raw):
    """JSON lists become tuples so unit dataclasses stay hashable-friendly."""
    return tuple(raw) if isinstance(raw, list) else raw


def _unit(raw: dict, forecasts: dict[str, ForecastSpec], series):
    kind = raw.get("type")
    if kind not in UNIT_TYPES:
        raise ScenarioError(f"unit {raw.get('id')}: unknown type {kind!r}")
    cls = UNIT_TYPES[kind]
    names = {f.name for f in dataclasses.fields(cls)}
    kw = {}
    for key, value in raw.items():
        if key == "type":
            continue
        if key not in names:
            raise ScenarioError(f"unit {raw.get('id')}: unknown field {key!r} for {kind}")
        kw[key] = _plain(value)
    if kind in ("wind", "pv"):
        kw["kind"] = kind
    if "reserves" in kw:
        kw["reserves"] = ProcuredReserves(**{k: _plain(v) for k, v in raw["reserves"].items()})
    if "strategy" in kw:
        kw["strategy"] = Strategy(kw["strategy"])
    if "forecast" in kw:
        ref = raw["forecast"]
        if isinstance(ref, str):
            if ref not in forecasts:
                raise ScenarioError(f"unit {raw['id']}: unknown forecast {ref!r}")
        else:
            name = f"_{raw['id']}"
            forecasts[name] = ForecastSpec(name, series(ref))
            ref = name
        kw["forecast"] = ref
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"unit {raw.get('id')}: {exc}") from None


def _network(raw: dict) -> Network:
    zones = {}
    for z in raw.get("zones", []):
        zones[z["id"]] = Zone(**z)
    borders = [MarketBorder(**{k: _plain(v) for k, v in b.items()})
               for b in raw.get("borders", [])]
    branches = [CriticalBranch(**{k: _plain(v) for k, v in b.items()})
                for b in raw.get("branches", [])]
    return Network(zones, borders, branches, raw.get("mode", ATC))


def _config(cls, raw: dict | None):
    if not raw:
        return cls()
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - names
    if unknown:
        raise ScenarioError(f"{cls.__name__}: unknown options {sorted(unknown)}")
    return cls(**raw)


def parse_scenario(raw: dict, base: Path | str = ".") -> Scenario:
    base = Path(base)
    try:
        start = datetime.fromisoformat(raw.get("start", "2000-01-01T00:00"))
        dt = float(raw.get("delta_t", 1.0))
        steps, days = int(raw["steps"]), int(raw.get("days", 1))
    except (KeyError, ValueError) as exc:
        raise ScenarioError(f"bad time settings: {exc}") from None
    n = steps * days

    def series(raw, length: int | None = n):
        return _series(raw, base, length, start, dt)

    try:
        network = _network(raw.get("network", {}))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"network: {exc}") from None
    forecasts = {}
    for name, spec in raw.get("forecasts", {}).items():
        real = series(spec.get("values", spec.get("realization")))
        archive = history = origin = None
        if "archive" in spec:
            archive = base / spec["archive"]
            try:
                origin = datetime.fromisoformat(spec.get("history_start", raw.get("start")))
            except (TypeError, ValueError) as exc:
                raise ScenarioError(f"forecast {name}: bad history_start: {exc}") from None
            if "history" in spec:
                history = _series(spec["history"], base, None, origin, dt)
        columns = None
        if "columns" in spec:
            if archive is not None:
                raise ScenarioError(f"forecast {name}: give either columns or an archive")
            columns = {int(k): series(v) for k, v in spec["columns"].items()}
        forecasts[name] = ForecastSpec(name, real, archive, history, spec.get("horizon"),
                                       origin, columns)
    units = [_unit(u, forecasts, series) for u in raw.get("units", [])]
    portfolios = _portfolios(raw.get("portfolios", []), units)
    prices = {}
    for zone, spec in raw.get("prices", {}).items():
        get = {k: (series(spec[k]) if k in spec else None)
               for k in ("high", "low", "demand_high", "demand_low")}
        prices[zone] = PriceSpec(series(spec["day_ahead"]), **get)
    chain = [Step(s["module"].lower(), int(s.get("t_ex", 0)), s.get("market", ""))
             for s in raw.get("chain", [])]
    chain = _name_markets(chain)
    return Scenario(
        name=raw.get("name", "scenario"), start=start, delta_t=dt, steps=steps,
        network=network, units=units, portfolios=portfolios, chain=chain, days=days,
        seed=int(raw.get("seed", 0)), forecasts=forecasts, prices=prices,
        clearing=_config(ClearingConfig, {"delta_t": dt, **raw.get("clearing", {})}),
        dispatch=_config(DispatchConfig, raw.get("dispatch")),
        orders=_config(OrderConfig, raw.get("orders")),
        gate=int(raw.get("gate", 1)), output=raw.get("output", "runs"))


def _portfolios(raw: list, units: list) -> list[Portfolio]:
    members: dict[str, list[str]] = {}
    for u in units:
        members.setdefault(u.portfolio or f"_{u.zone}", []).append(u.id)
    out, seen = [], set()
    for p in raw:
        kw = dict(p)
        if "imbalance" in kw:
            kw["imbalance"] = ImbalancePricing(**kw["imbalance"])
        listed = list(kw.pop("units", []))
        ids = tuple(dict.fromkeys(listed + members.get(kw["id"], [])))
        out.append(Portfolio(unit_ids=ids, **kw))
        seen.add(kw["id"])
    zone_of = {u.id: u.zone for u in units}
    for pid, ids in members.items():
        if pid not in seen:
            out.append(Portfolio(pid, zone_of[ids[0]], tuple(ids)))
    return out


def _name_markets(chain: list[Step]) -> list[Step]:
    """Order-generation steps name a market; clearing and dispatch steps inherit it."""
    out, market, t_ex, k = [], "", 0, 0
    for s in chain:
        if s.module in (DAO, IDO):
            if not s.market:
                k += s.module == IDO
                name = "DA" if s.module == DAO else f"ID{k}"
            else:
                name = s.market
            market, t_ex = name, s.t_ex
            out.append(Step(s.module, s.t_ex, name))
        elif s.module in (MC, PO):
            out.append(Step(s.module, t_ex, s.market or market))
        else:
            out.append(s)
    return out


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_bytes()
        raw = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from None
    sc = parse_scenario(raw, path.parent)
    sc.digest = hashlib.sha256(text).hexdigest()
    problems = scenario_problems(sc)
    if problems:
        raise ScenarioError("; ".join(problems))
    return sc


# --- validation ------------------------------------------------------------------------

def scenario_problems(sc: Scenario) -> list[str]:
    out = []
    if sc.steps < 1 or sc.days < 1 or sc.delta_t <= 0:
        out.append("steps, days and delta_t must be positive")
    ids = [u.id for u in sc.units]
    if len(set(ids)) != len(ids):
        out.append("duplicate unit ids")
    for u in sc.units:
        if u.zone not in sc.network.zones:
            out.append(f"unit {u.id}: unknown zone {u.zone}")
        ref = getattr(u, "forecast", None)
        if isinstance(u, (RenewableUnit, LoadUnit, NonDispatchableUnit)) and ref is None:
            out.append(f"unit {u.id}: needs a forecast")
    for p in sc.portfolios:
        if p.zone not in sc.network.zones:
            out.append(f"portfolio {p.id}: unknown zone {p.zone}")
        missing = set(p.unit_ids) - set(ids)
        if missing:
            out.append(f"portfolio {p.id}: unknown units {sorted(missing)}")
    for spec in sc.forecasts.values():
        if spec.realization.size < sc.total_steps:
            out.append(f"forecast {spec.name}: shorter than the simulated period")
        if spec.archive is not None and not spec.archive.exists():
            out.append(f"forecast {spec.name}: archive {spec.archive} does not exist")
        if spec.archive is not None and spec.history is None:
            out.append(f"forecast {spec.name}: archive given without history")
    for zone in sc.prices:
        if zone not in sc.network.zones:
            out.append(f"prices: unknown zone {zone}")
    out += _chain_problems(sc)
    return out


def _chain_problems(sc: Scenario) -> list[str]:
    out = []
    if not sc.chain:
        return ["empty chain"]
    last_t = last_session = None
    open_market, markets = None, []
    for i, s in enumerate(sc.chain):
        where = f"chain step {i} ({s.module})"
        if s.module not in MODULES:
            out.append(f"{where}: unknown module")
            continue
        if s.module in (FORECAST, DAO, IDO):
            if last_t is not None and s.t_ex < last_t:
                out.append(f"{where}: execution step {s.t_ex} before {last_t}")
            if s.module != FORECAST and last_session is not None and s.t_ex <= last_session:
                out.append(f"{where}: execution step {s.t_ex} not after {last_session}")
            if not 0 <= s.t_ex < sc.steps:
                out.append(f"{where}: execution step outside the day")
            last_t = s.t_ex
            if s.module != FORECAST:
                last_session = s.t_ex
        if s.module in (DAO, IDO):
            if s.market in markets:
                out.append(f"{where}: market {s.market} defined twice")
            markets.append(s.market)
            open_market = s.market
        if s.module == MC and open_market is None:
            out.append(f"{where}: clearing without an order book")
        if s.module == IDO and DAO not in [c.module for c in sc.chain[:i]]:
            out.append(f"{where}: intraday session before the day-ahead session")
    if sc.network.mode not in (ATC, FLOW_BASED):
        out.append(f"unknown network mode {sc.network.mode}")
    return out


def validate_scenario(path: str | Path) -> list[str]:
    """Problems found in a scenario file; empty when it can be run."""
    try:
        load_scenario(path)
    except ScenarioError as exc:
        return str(exc).split("; ")
    return []
