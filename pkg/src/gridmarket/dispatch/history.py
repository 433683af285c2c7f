"""Reconstruction of thermal states and indicators over the traceback window."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from ..core import Durations, ThermalUnit, TimeGrid, series_at

log = logging.getLogger(__name__)

OFF, START, STOP, UP, DOWN, FLAT = "OFF", "START", "STOP", "UP", "DOWN", "FLAT"
ON_LABELS = (UP, DOWN, FLAT)
ALL_STATES = (OFF, START, STOP, UP, DOWN, FLAT)
# Placeholder for an online step whose direction label is still to be decided.
ON = "ON"

POWER_TOL = 1e-6


@dataclass
class History:
    """Known values over steps ``-traceback .. -1``; index 0 of each list is the oldest."""

    power: list[float]
    states: list[str]
    day_zero: bool
    turned_on: list[int] = field(default_factory=list)
    turned_off: list[int] = field(default_factory=list)
    entered_stable: list[int] = field(default_factory=list)
    entered_up: list[int] = field(default_factory=list)
    entered_down: list[int] = field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.power)

    def _idx(self, t: int) -> int:
        if not -self.length <= t <= -1:
            raise IndexError(f"step {t} outside the traceback window")
        return self.length + t

    def state(self, t: int) -> str:
        return self.states[self._idx(t)]

    def p(self, t: int) -> float:
        return self.power[self._idx(t)]

    def is_on(self, t: int) -> bool:
        return self.state(t) in ON_LABELS + (ON,)

    def indicator(self, name: str, t: int) -> int:
        return getattr(self, name)[self._idx(t)]


def _classify(p: float, p_prev: float, p_min: float, durations: Durations) -> str:
    has_stop, _, has_start = durations.case
    if p >= p_min - POWER_TOL and p > POWER_TOL:
        return ON
    if p > POWER_TOL:
        if p < p_prev - POWER_TOL:
            return STOP if has_stop else ON
        return START if has_start else ON
    return OFF


def _label(p: float, p_next: float, has_flat: bool) -> str:
    if p_next > p + POWER_TOL:
        return UP
    if p_next < p - POWER_TOL:
        return DOWN
    return FLAT if has_flat else UP


def _entries(flags: list[int]) -> list[int]:
    return [0] + [int(flags[i] == 1 and flags[i - 1] == 0) for i in range(1, len(flags))]


def init_from_history(unit: ThermalUnit, durations: Durations, grid: TimeGrid) -> History:
    """States and indicators implied by the unit's recorded power.

    Missing or stale records give the "day zero" start: everything OFF. The
    direction label of the last recorded step is left as :data:`ON` because it
    depends on the first decision of the new horizon.
    """
    tb = grid.traceback
    raw = list(unit.history)
    day_zero = False
    if not raw:
        log.warning("unit %s: no power history, starting from an all-OFF state", unit.id)
        day_zero = True
    elif any(math.isnan(v) for v in raw[-1:]):
        log.warning("unit %s: power history stops before the optimisation window; "
                    "starting from an all-OFF state", unit.id)
        day_zero = True
    if day_zero:
        zeros = [0] * tb
        return History([0.0] * tb, [OFF] * tb, True, zeros[:], zeros[:], zeros[:],
                       zeros[:], zeros[:])

    power = raw[-tb:]
    if len(power) < tb:
        power = [power[0]] * (tb - len(power)) + power
    has_stop, has_flat, has_start = durations.case
    states = []
    for i, p in enumerate(power):
        t = i - tb
        p_prev = power[i - 1] if i > 0 else p
        states.append(_classify(p, p_prev, series_at(unit.p_min, t), durations))
    for i in range(tb - 1):
        if states[i] == ON:
            states[i] = _label(power[i], power[i + 1], has_flat)

    is_off = [int(s == OFF) for s in states]
    on_entry = [0] + [int(is_off[i - 1] == 1 and is_off[i] == 0) for i in range(1, tb)]
    if has_stop:
        off_entry = _entries([int(s == STOP) for s in states])
    else:
        off_entry = _entries(is_off)
    return History(
        power=[float(p) for p in power],
        states=states,
        day_zero=False,
        turned_on=on_entry,
        turned_off=off_entry,
        entered_stable=_entries([int(s == FLAT) for s in states]),
        entered_up=_entries([int(s == UP) for s in states]),
        entered_down=_entries([int(s == DOWN) for s in states]),
    )
