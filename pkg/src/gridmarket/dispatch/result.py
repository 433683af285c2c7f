from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..optim import Status


@dataclass
class UnitPlan:
    unit: str
    power: np.ndarray                      # MW per optimisation step
    states: list[str] | None = None        # thermal only
    reserves: dict[str, np.ndarray] = field(default_factory=dict)
    energy: np.ndarray | None = None       # stored energy after each step (storage / hydro)
    spill: np.ndarray | None = None        # curtailed renewable power


@dataclass
class DispatchResult:
    status: Status
    plans: dict[str, UnitPlan] = field(default_factory=dict)
    objective: float = float("nan")
    pieces: dict[str, float] = field(default_factory=dict)   # cost decomposition
    imbalance: dict[str, np.ndarray] = field(default_factory=dict)
    infeasible_units: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.TIME_LIMIT) and bool(self.plans)

    def truncated(self, n: int) -> "DispatchResult":
        """Copy restricted to the first ``n`` steps."""
        plans = {}
        for uid, pl in self.plans.items():
            plans[uid] = UnitPlan(
                pl.unit, pl.power[:n], pl.states[:n] if pl.states else pl.states,
                {k: v[:n] for k, v in pl.reserves.items()},
                None if pl.energy is None else pl.energy[:n],
                None if pl.spill is None else pl.spill[:n])
        return DispatchResult(self.status, plans, self.objective, dict(self.pieces),
                              {k: v[:n] for k, v in self.imbalance.items()})
