"""Append-only record of market sessions and the dispatch plans applied to units."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from ..core import (Coupling, CouplingKind, Divisibility, HydroUnit, Order, StorageUnit,
                    ThermalUnit, series_at)
from ..ordergen import ClearedHistory


class LedgerError(RuntimeError):
    pass


@dataclass
class SessionRecord:
    """One cleared market session of one day; steps are relative to the day start."""

    market: str
    day: int
    t_ex: int
    orders: list[Order]
    couplings: list[Coupling] = field(default_factory=list)
    quantity: dict[str, float] = field(default_factory=dict)
    accepted: dict[str, int] = field(default_factory=dict)
    prices: dict[str, list[float]] = field(default_factory=dict)   # zone -> per step, NaN unset
    welfare: float = float("nan")
    status: str = ""


@dataclass
class SessionLedger:
    sessions: list[SessionRecord] = field(default_factory=list)
    applied: dict[str, set[int]] = field(default_factory=dict)     # unit -> absolute steps

    def record(self, rec: SessionRecord) -> None:
        if any(s.market == rec.market and s.day == rec.day for s in self.sessions):
            raise LedgerError(f"session {rec.market} of day {rec.day} recorded twice")
        self.sessions.append(rec)

    def day(self, day: int) -> list[SessionRecord]:
        return [s for s in self.sessions if s.day == day]

    def history(self, day: int) -> ClearedHistory:
        """Cleared positions of ``day`` for the ``Qcleared`` lookups of order generation."""
        h = ClearedHistory()
        for s in self.day(day):
            h.add(s.orders, s.quantity)
        return h

    def known_prices(self, day: int, zone: str) -> list[np.ndarray]:
        return [np.asarray(s.prices[zone], float) for s in self.day(day) if zone in s.prices]

    def claim(self, unit: str, steps) -> None:
        """Reserve ``steps`` of ``unit`` for a single write of realised dispatch."""
        done = self.applied.setdefault(unit, set())
        clash = done.intersection(steps)
        if clash:
            raise LedgerError(f"unit {unit}: steps {sorted(clash)[:3]}... already applied")
        done.update(steps)

    # --- serialization -------------------------------------------------------------

    def to_dict(self) -> dict:
        def order(o):
            d = dataclasses.asdict(o)
            d["divisibility"] = o.divisibility.value
            return d

        def coupling(c):
            d = dataclasses.asdict(c)
            d["kind"] = c.kind.value
            d["members"] = list(c.members)
            return d

        return {
            "sessions": [{
                "market": s.market, "day": s.day, "t_ex": s.t_ex,
                "orders": [order(o) for o in s.orders],
                "couplings": [coupling(c) for c in s.couplings],
                "quantity": s.quantity, "accepted": s.accepted,
                "prices": {z: [None if np.isnan(p) else p for p in v]
                           for z, v in s.prices.items()},
                "welfare": None if np.isnan(s.welfare) else s.welfare, "status": s.status,
            } for s in self.sessions],
            "applied": {u: sorted(v) for u, v in self.applied.items()},
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "SessionLedger":
        led = cls()
        for s in raw.get("sessions", []):
            orders = [Order(**{**o, "divisibility": Divisibility(o["divisibility"])})
                      for o in s["orders"]]
            couplings = [Coupling(**{**c, "kind": CouplingKind(c["kind"]),
                                     "members": tuple(c["members"])}) for c in s["couplings"]]
            prices = {z: [np.nan if p is None else p for p in v] for z, v in s["prices"].items()}
            welfare = np.nan if s["welfare"] is None else s["welfare"]
            led.sessions.append(SessionRecord(s["market"], s["day"], s["t_ex"], orders,
                                              couplings, dict(s["quantity"]),
                                              dict(s["accepted"]), prices, welfare,
                                              s["status"]))
        led.applied = {u: set(v) for u, v in raw.get("applied", {}).items()}
        return led

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "SessionLedger":
        return cls.from_dict(json.loads(text))


def apply_results(ledger: SessionLedger, units: dict, plans: dict, offset: int, n: int,
                  delta_t: float, keep: int = 48) -> dict:
    """Units updated by the first ``n`` steps of ``plans`` (absolute steps from ``offset``).

    Thermal histories grow by the dispatched power, storage starts the next
    session at its planned final level and hydro reservoirs lose the energy
    produced net of inflows. Procured reserves are carried unchanged.
    """
    if not plans:
        return units
    out = dict(units)
    for uid, plan in plans.items():
        unit = units.get(uid)
        if unit is None:
            continue
        steps = range(offset, offset + n)
        power = np.asarray(plan.power[:n], float)
        if isinstance(unit, ThermalUnit):
            ledger.claim(uid, steps)
            hist = tuple(unit.history) + tuple(float(p) for p in power)
            out[uid] = dataclasses.replace(unit, history=hist[-keep:])
        elif isinstance(unit, StorageUnit):
            ledger.claim(uid, steps)
            level = float(plan.energy[n - 1])
            out[uid] = dataclasses.replace(unit, e_init=min(max(level, unit.e_min), unit.e_max))
        elif isinstance(unit, HydroUnit):
            ledger.claim(uid, steps)
            inflow = sum(series_at(unit.inflow, t) for t in range(n)) * delta_t
            level = unit.e_init + inflow - float(power.sum()) * delta_t
            out[uid] = dataclasses.replace(unit, e_init=min(max(level, 0.0), unit.e_max))
    return out
