from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ClearingConfig:
    """Objective weights and options of the four clearing phases.

    ``volume_bonus`` rewards accepted volume, ``flow_weight`` penalises border
    flows and ``to_max_weight``/``to_min_weight`` penalise the distance of a
    flow to its upper/lower limit. ``alpha`` and ``beta`` weight the sum of
    prices and of absolute prices in pricing; ``paradox_penalty`` replaces the
    hard in-the-money rows when the first pricing problem is infeasible.
    """

    volume_bonus: float = 0.0
    flow_weight: float = 1e-3
    to_max_weight: float = 1e-3
    to_min_weight: float = 1e-3
    alpha: float = 1e-3
    beta: float = 0.0
    paradox_penalty: float = 1e4
    delta_t: float = 1.0
    in_the_money: bool = True
    time_limit: float | None = None
    mip_gap: float | None = None
    dump_lp: str | None = None
    tol: float = 1e-6

    def __post_init__(self):
        for name in ("flow_weight", "to_max_weight", "to_min_weight", "alpha", "beta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.paradox_penalty <= 0:
            raise ValueError("paradox_penalty must be positive")
