"""Tabular outputs of a run: one CSV per artifact class plus JSON side files."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

HEADERS = {
    "forecasts": ["day", "t_ex", "forecast", "step", "timestamp", "value", "realization"],
    "orders": ["market", "day", "order", "unit", "zone", "side", "price", "q_min", "q_max",
               "start", "end", "divisibility"],
    "acceptances": ["market", "day", "order", "quantity", "accepted", "make_whole"],
    "prices": ["market", "day", "zone", "step", "timestamp", "price"],
    "flows": ["market", "day", "link", "kind", "step", "timestamp", "flow"],
    "rents": ["market", "day", "border", "step", "rent"],
    "welfare": ["market", "day", "welfare", "welfare_before_fixing", "pricing",
                "paradoxical", "make_whole_total"],
    "plans": ["market", "day", "portfolio", "unit", "step", "timestamp", "power", "state",
              "energy"],
    "imbalances": ["market", "day", "portfolio", "step", "timestamp", "total", "small_up",
                   "large_up", "small_down", "large_down", "target"],
}


def _num(x):
    """Stable text for floats: repr round-trips and NaN stays empty."""
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return x


@dataclass
class Recorder:
    tables: dict[str, list[list]] = field(default_factory=lambda: {k: [] for k in HEADERS})
    couplings: dict[str, list] = field(default_factory=dict)
    objectives: dict[str, dict] = field(default_factory=dict)

    @property
    def forecasts(self) -> list[list]:
        return self.tables["forecasts"]

    def session(self, runner, day: int, market: str, book, res, prices, network) -> None:
        ts = runner._timestamp
        for o in book.orders:
            self.tables["orders"].append([market, day, o.id, o.unit, o.zone,
                                          "sale" if o.is_sale else "purchase", o.price,
                                          o.q_min, o.q_max, ts(day, o.t_start),
                                          ts(day, o.t_end), o.divisibility.value])
        self.couplings[f"{market}:{day}"] = [
            {"id": c.id, "kind": c.kind.value, "members": list(c.members), "parent": c.parent}
            for c in book.couplings]
        cl, pr = res.clearing, res.pricing
        mw = pr.make_whole if pr else {}
        for o in book.orders:
            self.tables["acceptances"].append([market, day, o.id, cl.quantity.get(o.id, 0.0),
                                               cl.accepted.get(o.id, 0),
                                               mw.get(o.id, 0.0)])
        for z in sorted(prices):
            for t, p in enumerate(prices[z]):
                self.tables["prices"].append([market, day, z, t, ts(day, t), p])
        for (b, t), f in sorted(res.flows.items()):
            self.tables["flows"].append([market, day, b, "border", t, ts(day, t), f])
        for (b, t), f in sorted(cl.branch_flow.items()):
            self.tables["flows"].append([market, day, b, "branch", t, ts(day, t), f])
        for (b, t), r in sorted(res.rents.items()):
            self.tables["rents"].append([market, day, b, t, r])
        self.tables["welfare"].append([
            market, day, cl.welfare, res.welfare_before_fixing,
            pr.problem if pr else "none", " ".join(pr.paradoxical) if pr else "",
            sum(mw.values())])

    def dispatch(self, runner, day: int, market: str, portfolio: str, res) -> None:
        ts = runner._timestamp
        for uid, plan in sorted(res.plans.items()):
            for t, p in enumerate(plan.power[:runner.sc.steps]):
                state = plan.states[t] if plan.states else ""
                energy = float(plan.energy[t]) if plan.energy is not None else math.nan
                self.tables["plans"].append([market, day, portfolio, uid, t, ts(day, t),
                                             float(p), state, energy])
        imb = res.imbalance
        if imb:
            for t in range(runner.sc.steps):
                self.tables["imbalances"].append(
                    [market, day, portfolio, t, ts(day, t)]
                    + [float(imb[k][t]) for k in ("total", "small_up", "large_up",
                                                  "small_down", "large_down", "target")])
        self.objectives[f"{market}:{day}:{portfolio}"] = {
            "objective": res.objective, **{k: float(v) for k, v in res.pieces.items()}}

    def write(self, out: Path, ledger, manifest: dict) -> None:
        out.mkdir(parents=True, exist_ok=True)
        for name, header in HEADERS.items():
            with open(out / f"{name}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                w.writerows([_num(x) for x in row] for row in self.tables[name])
        dump = {"couplings.json": self.couplings, "dispatch.json": self.objectives,
                "manifest.json": manifest}
        for name, data in dump.items():
            (out / name).write_text(json.dumps(data, indent=1, sort_keys=True, default=str))
        (out / "ledger.json").write_text(ledger.dumps())
