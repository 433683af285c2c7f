from __future__ import annotations

from dataclasses import dataclass

from ..optim import DEFAULT_EQ_SLACK


@dataclass(frozen=True)
class DispatchConfig:
    """Solver and penalty settings shared by every dispatch problem."""

    eq_slack: float = DEFAULT_EQ_SLACK
    penalty_auto: float = 5000.0     # EUR per MW and hour of missing automated reserve
    penalty_manual: float = 2500.0
    strict_aux: bool = False         # declare auxiliary indicators binary
    time_limit: float | None = None
    mip_gap: float | None = None
    dump_lp: str | None = None
